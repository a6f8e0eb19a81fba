#pragma once

#include <span>
#include <string>
#include <vector>

namespace drivemon::svg {

// Minimal deterministic SVG plotting: fixed layout, shortest round-trip
// number formatting, no timestamps or environment-dependent content, so
// byte-identical inputs give byte-identical files.

struct Series {
    std::string label;
    std::string color = "#1f77b4";
    bool dashed = false;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> band_lo;  // optional CI band, same length as x
    std::vector<double> band_hi;
};

struct Axes {
    std::string title;
    std::string x_label;
    std::string y_label;
};

std::string line_plot(const Axes& axes, std::span<const Series> series, int width = 960,
                      int height = 540);

struct BoxStats {
    std::string label;
    double whisker_lo = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double whisker_hi = 0.0;
};

// Quartiles by linear interpolation on the sorted sample; whiskers at the
// extreme values within 1.5 IQR of the box.
BoxStats box_stats(std::string label, std::vector<double> values);

std::string box_plot(const Axes& axes, std::span<const BoxStats> boxes, int width = 960,
                     int height = 540);

// Two stacked panels for the monitoring demo: temperature tracking on top,
// log10 squared error against the commissioned threshold below, with the
// anomalous span shaded and the commissioning instant marked.
struct MonitorPanelData {
    std::vector<double> time_h;
    std::vector<double> measured_c;
    std::vector<double> predicted_c;
    std::vector<double> sq_err;
    double threshold = 0.0;      // squared-error units; <= 0 means "not commissioned"
    double freeze_time_h = 0.0;  // vertical marker
    double anomaly_begin_h = 0.0;
    double anomaly_end_h = 0.0;  // <= begin means "no anomalous span"
};

std::string monitor_panels(const MonitorPanelData& data, int width = 960, int height = 720);

// Writes via temp file + rename.
void write_svg(const std::string& path, const std::string& content);

}  // namespace drivemon::svg
