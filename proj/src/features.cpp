#include "drivemon/features.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace drivemon::features {

namespace {

constexpr std::string_view kHeader = "timestamp_s,i_a,i_b,i_c,t_hs,label";
constexpr const char* kFieldNames[6] = {"timestamp_s", "i_a", "i_b", "i_c", "t_hs", "label"};

[[noreturn]] void parse_fail(const std::string& path, int lineno, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
}

double parse_double(std::string_view field, const char* name, const std::string& path, int lineno) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        parse_fail(path, lineno, std::string("bad value for ") + name + ": '" + std::string(field) + "'");
    if (!std::isfinite(v))
        parse_fail(path, lineno, std::string("non-finite value for ") + name);
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("double formatting failed");
    return std::string(buf, end);
}

Normalizer::Normalizer(Mode mode, double cmin, double cmax, double tmin, double tmax)
    : mode_(mode), current_min_(cmin), current_max_(cmax), temp_min_(tmin), temp_max_(tmax) {
    if (!(cmax > cmin) || !(tmax > tmin))
        throw std::invalid_argument("normalizer range must have max > min");
}

Normalizer Normalizer::fixed_physical(double current_min, double current_max, double temp_min,
                                      double temp_max) {
    return Normalizer(Mode::fixed_physical, current_min, current_max, temp_min, temp_max);
}

Normalizer Normalizer::fit(std::span<const RawRecord> records) {
    if (records.empty()) throw std::invalid_argument("cannot fit normalizer on empty dataset");
    double cmin = mean_rms_current(records[0]), cmax = cmin;
    double tmin = records[0].t_hs, tmax = tmin;
    for (const auto& r : records) {
        const double c = mean_rms_current(r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
        tmin = std::min(tmin, r.t_hs);
        tmax = std::max(tmax, r.t_hs);
    }
    return Normalizer(Mode::dataset_fitted, cmin, cmax, tmin, tmax);
}

std::vector<GridPoint> downsample(std::span<const RawRecord> records, double period_s) {
    if (period_s <= 0.0) throw std::invalid_argument("sample period must be positive");
    std::vector<GridPoint> out;
    if (records.empty()) return out;
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].timestamp_s < records[i - 1].timestamp_s)
            throw std::invalid_argument("timestamps decrease at record " + std::to_string(i));

    const double t0 = records.front().timestamp_s;
    const double t_last = records.back().timestamp_s;
    const double tol = period_s * 1e-9;
    const auto n_grid =
        static_cast<std::int64_t>(std::floor((t_last - t0) / period_s + 1e-9)) + 1;
    out.reserve(static_cast<std::size_t>(n_grid));

    std::size_t idx = 0;  // latest record with timestamp <= current grid point
    for (std::int64_t k = 0; k < n_grid; ++k) {
        const double g = t0 + static_cast<double>(k) * period_s;
        while (idx + 1 < records.size() && records[idx + 1].timestamp_s <= g + tol) ++idx;
        GridPoint p{g, std::nullopt};
        if (records[idx].timestamp_s <= g + tol && records[idx].timestamp_s > g - period_s + tol)
            p.record = records[idx];
        out.push_back(std::move(p));
    }
    return out;
}

WindowedData make_windows(std::span<const GridPoint> stream, const WindowSpec& spec,
                          const Normalizer& norm) {
    if (spec.window_len <= 0) throw std::invalid_argument("window_len must be positive");
    const auto L = static_cast<Eigen::Index>(spec.window_len);
    const auto n = static_cast<Eigen::Index>(stream.size());

    // Prefix counts of gaps so each window test is O(1).
    std::vector<std::int64_t> missing(static_cast<std::size_t>(n) + 1, 0);
    std::vector<double> cur(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = stream[static_cast<std::size_t>(i)];
        missing[static_cast<std::size_t>(i) + 1] =
            missing[static_cast<std::size_t>(i)] + (p.record ? 0 : 1);
        if (p.record) cur[static_cast<std::size_t>(i)] = norm.norm_current(mean_rms_current(*p.record));
    }

    WindowedData out;
    Eigen::Index kept = 0;
    for (Eigen::Index end = L - 1; end < n; ++end) {
        const auto gaps = missing[static_cast<std::size_t>(end) + 1] -
                          missing[static_cast<std::size_t>(end - L + 1)];
        if (gaps > 0)
            ++out.skipped_windows;
        else
            ++kept;
    }

    out.X.resize(L, kept);
    out.y.resize(kept);
    out.labels.reserve(static_cast<std::size_t>(kept));
    out.end_time_s.reserve(static_cast<std::size_t>(kept));
    Eigen::Index col = 0;
    for (Eigen::Index end = L - 1; end < n; ++end) {
        const auto gaps = missing[static_cast<std::size_t>(end) + 1] -
                          missing[static_cast<std::size_t>(end - L + 1)];
        if (gaps > 0) continue;
        for (Eigen::Index j = 0; j < L; ++j)
            out.X(j, col) = cur[static_cast<std::size_t>(end - L + 1 + j)];
        const auto& last = stream[static_cast<std::size_t>(end)];
        out.y(col) = norm.norm_temp(last.record->t_hs);
        out.labels.push_back(last.record->label);
        out.end_time_s.push_back(last.timestamp_s);
        ++col;
    }
    return out;
}

Sample sample_at(const WindowedData& data, Eigen::Index i) {
    Sample s;
    s.x = data.X.col(i);
    s.y = data.y(i);
    s.t = static_cast<std::int64_t>(std::llround(data.end_time_s[static_cast<std::size_t>(i)]));
    s.label = data.labels[static_cast<std::size_t>(i)];
    return s;
}

std::vector<RawRecord> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open for reading");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ":1: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) {
        for (const char* name : kFieldNames)
            if (line.find(name) == std::string::npos)
                parse_fail(path, 1, std::string("header missing column '") + name + "'");
        parse_fail(path, 1, "malformed header '" + line + "', expected '" + std::string(kHeader) + "'");
    }

    std::vector<RawRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        std::string_view rest(line);
        std::string_view fields[6];
        int nf = 0;
        while (true) {
            const auto comma = rest.find(',');
            if (nf == 6) parse_fail(path, lineno, "expected 6 fields");
            fields[nf++] = rest.substr(0, comma);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (nf != 6) parse_fail(path, lineno, "expected 6 fields, got " + std::to_string(nf));

        RawRecord r;
        r.timestamp_s = parse_double(fields[0], "timestamp_s", path, lineno);
        r.i_a = parse_double(fields[1], "i_a", path, lineno);
        r.i_b = parse_double(fields[2], "i_b", path, lineno);
        r.i_c = parse_double(fields[3], "i_c", path, lineno);
        r.t_hs = parse_double(fields[4], "t_hs", path, lineno);
        if (fields[5] == "0")
            r.label = Label::healthy;
        else if (fields[5] == "1")
            r.label = Label::anomalous;
        else
            parse_fail(path, lineno, "bad value for label: '" + std::string(fields[5]) + "'");

        if (r.i_a < 0.0 || r.i_b < 0.0 || r.i_c < 0.0)
            parse_fail(path, lineno, "negative phase current");
        if (r.t_hs < 0.0 || r.t_hs > 120.0)
            parse_fail(path, lineno, "t_hs out of range [0, 120]");
        out.push_back(r);
    }
    return out;
}

void write_dataset(const std::string& path, std::span<const RawRecord> records) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error(tmp + ": cannot open for writing");
        os << kHeader << '\n';
        std::string row;
        for (const auto& r : records) {
            row.clear();
            row += format_double(r.timestamp_s);
            row += ',';
            row += format_double(r.i_a);
            row += ',';
            row += format_double(r.i_b);
            row += ',';
            row += format_double(r.i_c);
            row += ',';
            row += format_double(r.t_hs);
            row += ',';
            row += (r.label == Label::anomalous ? '1' : '0');
            row += '\n';
            os << row;
        }
        os.flush();
        if (!os) throw std::runtime_error(tmp + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace drivemon::features
