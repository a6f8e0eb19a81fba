#include "drivemon/svg.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "drivemon/features.hpp"

namespace drivemon::svg {

namespace {

// Pixel coordinates rounded to 0.01 keep files compact and deterministic.
std::string px(double v) {
    const double r = std::round(v * 100.0) / 100.0;
    return features::format_double(r == 0.0 ? 0.0 : r);  // normalize -0
}

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

struct Range {
    double lo = 0.0, hi = 1.0;
    void absorb(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

Range make_range(std::span<const double> vs) {
    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (double v : vs) r.absorb(v);
    if (!(r.lo <= r.hi)) return {0.0, 1.0};
    return r;
}

// 1-2-5 tick spacing aiming for ~5 intervals; returns tick values and pads
// the range outward to tick boundaries.
std::vector<double> nice_ticks(double& lo, double& hi) {
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double step = (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
    lo = std::floor(lo / step) * step;
    hi = std::ceil(hi / step) * step;
    std::vector<double> ticks;
    for (double t = lo; t <= hi + step * 1e-9; t += step) {
        const double v = std::round(t / step) * step;
        ticks.push_back(v == 0.0 ? 0.0 : v);
    }
    return ticks;
}

struct Frame {
    double px0, py0, px1, py1;  // pixel box (py0 = top)
    double x0, x1, y0, y1;      // data ranges
    double sx(double x) const { return px0 + (x - x0) / (x1 - x0) * (px1 - px0); }
    double sy(double y) const { return py1 - (y - y0) / (y1 - y0) * (py1 - py0); }
};

void draw_frame(std::string& s, const Frame& f, const std::vector<double>& xticks,
                const std::vector<double>& yticks, const std::string& x_label,
                const std::string& y_label, bool x_tick_labels = true) {
    for (double t : xticks) {
        const auto x = px(f.sx(t));
        s += "<line x1='" + x + "' y1='" + px(f.py0) + "' x2='" + x + "' y2='" + px(f.py1) +
             "' stroke='#e0e0e0' stroke-width='1'/>\n";
        if (x_tick_labels)
            s += "<text x='" + x + "' y='" + px(f.py1 + 18) +
                 "' text-anchor='middle' font-size='12'>" + features::format_double(t) +
                 "</text>\n";
    }
    for (double t : yticks) {
        const auto y = px(f.sy(t));
        s += "<line x1='" + px(f.px0) + "' y1='" + y + "' x2='" + px(f.px1) + "' y2='" + y +
             "' stroke='#e0e0e0' stroke-width='1'/>\n";
        s += "<text x='" + px(f.px0 - 8) + "' y='" + px(f.sy(t) + 4) +
             "' text-anchor='end' font-size='12'>" + features::format_double(t) + "</text>\n";
    }
    s += "<rect x='" + px(f.px0) + "' y='" + px(f.py0) + "' width='" + px(f.px1 - f.px0) +
         "' height='" + px(f.py1 - f.py0) + "' fill='none' stroke='#404040' stroke-width='1'/>\n";
    if (!x_label.empty())
        s += "<text x='" + px((f.px0 + f.px1) / 2) + "' y='" + px(f.py1 + 38) +
             "' text-anchor='middle' font-size='13'>" + esc(x_label) + "</text>\n";
    if (!y_label.empty())
        s += "<text x='" + px(f.px0 - 48) + "' y='" + px((f.py0 + f.py1) / 2) +
             "' text-anchor='middle' font-size='13' transform='rotate(-90 " + px(f.px0 - 48) +
             " " + px((f.py0 + f.py1) / 2) + ")'>" + esc(y_label) + "</text>\n";
}

void draw_polyline(std::string& s, const Frame& f, std::span<const double> xs,
                   std::span<const double> ys, const std::string& color, bool dashed) {
    if (xs.empty()) return;
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) pts += ' ';
        pts += px(f.sx(xs[i])) + "," + px(f.sy(ys[i]));
    }
    s += "<polyline points='" + pts + "' fill='none' stroke='" + color +
         "' stroke-width='1.5'" + (dashed ? " stroke-dasharray='6 4'" : "") + "/>\n";
}

std::string svg_open(int width, int height) {
    return "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(width) +
           "' height='" + std::to_string(height) + "' viewBox='0 0 " + std::to_string(width) +
           " " + std::to_string(height) +
           "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
}

void draw_title(std::string& s, int width, const std::string& title) {
    if (title.empty()) return;
    s += "<text x='" + px(width / 2.0) +
         "' y='22' text-anchor='middle' font-size='16'>" + esc(title) + "</text>\n";
}

}  // namespace

std::string line_plot(const Axes& axes, std::span<const Series> series, int width, int height) {
    Range rx{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    Range ry = rx;
    for (const auto& se : series) {
        for (double v : se.x) rx.absorb(v);
        for (double v : se.y) ry.absorb(v);
        for (double v : se.band_lo) ry.absorb(v);
        for (double v : se.band_hi) ry.absorb(v);
    }
    if (!(rx.lo <= rx.hi)) rx = {0.0, 1.0};
    if (!(ry.lo <= ry.hi)) ry = {0.0, 1.0};

    double x0 = rx.lo, x1 = rx.hi, y0 = ry.lo, y1 = ry.hi;
    const auto xticks = nice_ticks(x0, x1);
    const auto yticks = nice_ticks(y0, y1);
    const Frame f{70, 40, width - 20.0, height - 55.0, x0, x1, y0, y1};

    std::string s = svg_open(width, height);
    draw_title(s, width, axes.title);
    draw_frame(s, f, xticks, yticks, axes.x_label, axes.y_label);

    for (const auto& se : series) {
        if (se.band_lo.size() == se.x.size() && se.band_hi.size() == se.x.size() &&
            !se.x.empty()) {
            std::string pts;
            for (std::size_t i = 0; i < se.x.size(); ++i)
                pts += px(f.sx(se.x[i])) + "," + px(f.sy(se.band_lo[i])) + " ";
            for (std::size_t i = se.x.size(); i-- > 0;)
                pts += px(f.sx(se.x[i])) + "," + px(f.sy(se.band_hi[i])) + " ";
            pts.pop_back();
            s += "<polygon points='" + pts + "' fill='" + se.color +
                 "' fill-opacity='0.15' stroke='none'/>\n";
        }
    }
    for (const auto& se : series) draw_polyline(s, f, se.x, se.y, se.color, se.dashed);

    double ly = f.py0 + 16;
    for (const auto& se : series) {
        const double lx = f.px1 - 170;
        s += "<line x1='" + px(lx) + "' y1='" + px(ly - 4) + "' x2='" + px(lx + 24) + "' y2='" +
             px(ly - 4) + "' stroke='" + se.color + "' stroke-width='2'" +
             (se.dashed ? " stroke-dasharray='6 4'" : "") + "/>\n";
        s += "<text x='" + px(lx + 30) + "' y='" + px(ly) + "' font-size='12'>" + esc(se.label) +
             "</text>\n";
        ly += 16;
    }
    s += "</svg>\n";
    return s;
}

BoxStats box_stats(std::string label, std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("box_stats: no values");
    std::sort(values.begin(), values.end());
    const auto q = [&](double p) {
        const double idx = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(idx));
        const double frac = idx - static_cast<double>(lo);
        if (lo + 1 >= values.size()) return values.back();
        return values[lo] + (values[lo + 1] - values[lo]) * frac;
    };
    BoxStats b;
    b.label = std::move(label);
    b.q1 = q(0.25);
    b.median = q(0.5);
    b.q3 = q(0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_lo = values.back();
    b.whisker_hi = values.front();
    for (double v : values) {
        if (v >= lo_fence) {
            b.whisker_lo = v;
            break;
        }
    }
    for (std::size_t i = values.size(); i-- > 0;) {
        if (values[i] <= hi_fence) {
            b.whisker_hi = values[i];
            break;
        }
    }
    return b;
}

std::string box_plot(const Axes& axes, std::span<const BoxStats> boxes, int width, int height) {
    Range ry{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& b : boxes) {
        ry.absorb(b.whisker_lo);
        ry.absorb(b.whisker_hi);
    }
    if (!(ry.lo <= ry.hi)) ry = {0.0, 1.0};
    double y0 = ry.lo, y1 = ry.hi;
    const auto yticks = nice_ticks(y0, y1);
    const double n = static_cast<double>(std::max<std::size_t>(1, boxes.size()));
    const Frame f{70, 40, width - 20.0, height - 55.0, 0.0, n, y0, y1};

    std::string s = svg_open(width, height);
    draw_title(s, width, axes.title);
    draw_frame(s, f, {}, yticks, axes.x_label, axes.y_label);

    double slot = 0.0;
    for (const auto& b : boxes) {
        const double cx = slot + 0.5;
        const double half = 0.3;
        const auto X = [&](double dx) { return px(f.sx(cx + dx)); };
        const auto Y = [&](double v) { return px(f.sy(v)); };
        s += "<line x1='" + X(0) + "' y1='" + Y(b.whisker_lo) + "' x2='" + X(0) + "' y2='" +
             Y(b.q1) + "' stroke='#404040' stroke-width='1'/>\n";
        s += "<line x1='" + X(0) + "' y1='" + Y(b.q3) + "' x2='" + X(0) + "' y2='" +
             Y(b.whisker_hi) + "' stroke='#404040' stroke-width='1'/>\n";
        for (double wv : {b.whisker_lo, b.whisker_hi})
            s += "<line x1='" + X(-half / 2) + "' y1='" + Y(wv) + "' x2='" + X(half / 2) +
                 "' y2='" + Y(wv) + "' stroke='#404040' stroke-width='1'/>\n";
        s += "<rect x='" + X(-half) + "' y='" + Y(b.q3) + "' width='" +
             px(f.sx(cx + half) - f.sx(cx - half)) + "' height='" +
             px(f.sy(b.q1) - f.sy(b.q3)) +
             "' fill='#1f77b4' fill-opacity='0.35' stroke='#1f77b4'/>\n";
        s += "<line x1='" + X(-half) + "' y1='" + Y(b.median) + "' x2='" + X(half) + "' y2='" +
             Y(b.median) + "' stroke='#d62728' stroke-width='2'/>\n";
        s += "<text x='" + X(0) + "' y='" + px(f.py1 + 18) +
             "' text-anchor='middle' font-size='12'>" + esc(b.label) + "</text>\n";
        slot += 1.0;
    }
    s += "</svg>\n";
    return s;
}

std::string monitor_panels(const MonitorPanelData& d, int width, int height) {
    if (d.time_h.size() != d.measured_c.size() || d.time_h.size() != d.predicted_c.size() ||
        d.time_h.size() != d.sq_err.size())
        throw std::invalid_argument("monitor_panels: mismatched series lengths");

    auto rx = make_range(d.time_h);
    double x0 = rx.lo, x1 = rx.hi;
    const auto xticks = nice_ticks(x0, x1);

    Range rt = make_range(d.measured_c);
    for (double v : d.predicted_c) rt.absorb(v);
    double t0 = rt.lo, t1 = rt.hi;
    const auto tticks = nice_ticks(t0, t1);

    std::vector<double> log_err(d.sq_err.size());
    for (std::size_t i = 0; i < d.sq_err.size(); ++i)
        log_err[i] = std::log10(std::max(d.sq_err[i], 1e-12));
    Range re = make_range(log_err);
    if (d.threshold > 0.0) re.absorb(std::log10(d.threshold));
    double e0 = re.lo, e1 = re.hi;
    const auto eticks = nice_ticks(e0, e1);

    const double mid = height / 2.0;
    const Frame top{70, 40, width - 20.0, mid - 30.0, x0, x1, t0, t1};
    const Frame bot{70, mid + 20.0, width - 20.0, height - 55.0, x0, x1, e0, e1};

    std::string s = svg_open(width, height);
    draw_title(s, width, "online monitor: temperature tracking and anomaly verdicts");

    const bool shade = d.anomaly_end_h > d.anomaly_begin_h;
    for (const Frame& f : {top, bot}) {
        if (shade) {
            const double ax0 = std::max(d.anomaly_begin_h, f.x0);
            const double ax1 = std::min(d.anomaly_end_h, f.x1);
            if (ax1 > ax0)
                s += "<rect x='" + px(f.sx(ax0)) + "' y='" + px(f.py0) + "' width='" +
                     px(f.sx(ax1) - f.sx(ax0)) + "' height='" + px(f.py1 - f.py0) +
                     "' fill='#d62728' fill-opacity='0.08'/>\n";
        }
    }

    draw_frame(s, top, xticks, tticks, "", "heat-sink temperature (degC)", false);
    draw_frame(s, bot, xticks, eticks, "time (h)", "log10 squared error");

    draw_polyline(s, top, d.time_h, d.measured_c, "#1f77b4", false);
    draw_polyline(s, top, d.time_h, d.predicted_c, "#ff7f0e", true);
    draw_polyline(s, bot, d.time_h, log_err, "#2ca02c", false);

    if (d.threshold > 0.0) {
        const auto y = px(bot.sy(std::log10(d.threshold)));
        s += "<line x1='" + px(bot.px0) + "' y1='" + y + "' x2='" + px(bot.px1) + "' y2='" + y +
             "' stroke='#d62728' stroke-width='1.5' stroke-dasharray='6 4'/>\n";
        s += "<text x='" + px(bot.px0 + 6) + "' y='" + px(bot.sy(std::log10(d.threshold)) - 6) +
             "' font-size='12' fill='#d62728'>threshold</text>\n";
    }
    for (const Frame& f : {top, bot}) {
        if (d.freeze_time_h > f.x0 && d.freeze_time_h < f.x1) {
            const auto x = px(f.sx(d.freeze_time_h));
            s += "<line x1='" + x + "' y1='" + px(f.py0) + "' x2='" + x + "' y2='" + px(f.py1) +
                 "' stroke='#2ca02c' stroke-width='1' stroke-dasharray='3 3'/>\n";
        }
    }
    s += "<text x='" + px(top.px1 - 170) + "' y='" + px(top.py0 + 16) +
         "' font-size='12' fill='#1f77b4'>measured</text>\n";
    s += "<text x='" + px(top.px1 - 170) + "' y='" + px(top.py0 + 32) +
         "' font-size='12' fill='#ff7f0e'>predicted</text>\n";
    s += "</svg>\n";
    return s;
}

void write_svg(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error(tmp + ": cannot open for writing");
        os << content;
        os.flush();
        if (!os) throw std::runtime_error(tmp + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace drivemon::svg
