#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drivemon/types.hpp"

namespace drivemon::features {

// One logged drive record: phase rms currents plus the 1-degC-quantized heat
// sink temperature.
struct RawRecord {
    double timestamp_s = 0.0;
    double i_a = 0.0, i_b = 0.0, i_c = 0.0;
    double t_hs = 0.0;
    Label label = Label::healthy;

    bool operator==(const RawRecord&) const = default;
};

struct WindowSpec {
    double sample_period_s = 10.0;
    int window_len = 180;  // 30 min at 10 s
};

inline double mean_rms_current(const RawRecord& r) { return (r.i_a + r.i_b + r.i_c) / 3.0; }

// Affine [min, max] -> [0, 1] maps for the two measured channels. Online
// training uses fixed physical ranges; offline baselines may fit ranges on
// their training split.
class Normalizer {
  public:
    enum class Mode : std::uint8_t { fixed_physical = 0, dataset_fitted = 1 };

    static Normalizer fixed_physical(double current_min = 0.0, double current_max = 15.0,
                                     double temp_min = 20.0, double temp_max = 120.0);
    static Normalizer fit(std::span<const RawRecord> records);

    double norm_current(double amps) const { return (amps - current_min_) / (current_max_ - current_min_); }
    double denorm_current(double u) const { return current_min_ + u * (current_max_ - current_min_); }
    double norm_temp(double deg_c) const { return (deg_c - temp_min_) / (temp_max_ - temp_min_); }
    double denorm_temp(double u) const { return temp_min_ + u * (temp_max_ - temp_min_); }

    Mode mode() const { return mode_; }

  private:
    Normalizer(Mode mode, double cmin, double cmax, double tmin, double tmax);
    Mode mode_;
    double current_min_, current_max_, temp_min_, temp_max_;
};

// A 10 s grid slot; nullopt marks a gap (no record within one period).
struct GridPoint {
    double timestamp_s = 0.0;
    std::optional<RawRecord> record;
};

// Latest record at each grid point, no interpolation. The grid is anchored
// at the first record's timestamp. Throws on decreasing timestamps.
std::vector<GridPoint> downsample(std::span<const RawRecord> records, double period_s = 10.0);

// Sliding windows over the gridded stream, stride 1. Columns of X hold the
// normalized mean-rms-current history; y is the normalized temperature at the
// window end; the window label is the final record's label. Windows touching
// a gap are skipped and counted.
struct WindowedData {
    Matrix X;  // window_len x n_windows
    Vector y;
    std::vector<Label> labels;
    std::vector<double> end_time_s;
    std::int64_t skipped_windows = 0;

    Eigen::Index size() const { return X.cols(); }
};

WindowedData make_windows(std::span<const GridPoint> stream, const WindowSpec& spec,
                          const Normalizer& norm);

Sample sample_at(const WindowedData& data, Eigen::Index i);

// Shortest decimal form that parses back to the same double; used by every
// text artifact so identical values always print identically.
std::string format_double(double v);

// CSV schema: timestamp_s,i_a,i_b,i_c,t_hs,label with label in {0,1}.
// write(read(f)) reproduces f byte for byte (shortest round-trip doubles).
std::vector<RawRecord> read_dataset(const std::string& path);
void write_dataset(const std::string& path, std::span<const RawRecord> records);

}  // namespace drivemon::features
