#include "drivemon/plant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "drivemon/rng.hpp"

namespace drivemon::plant {

namespace {

void check_config(const PlantConfig& cfg) {
    if (!(cfg.tau_th_s > 0.0)) throw std::invalid_argument("tau_th_s must be positive");
    if (!(cfg.r_th_k_per_w > 0.0)) throw std::invalid_argument("r_th_k_per_w must be positive");
    if (!(cfg.anomaly_factor >= 1.0)) throw std::invalid_argument("anomaly_factor must be >= 1");
    if (!(cfg.hold_s > 0.0) || !(cfg.stop_s > 0.0))
        throw std::invalid_argument("hold_s and stop_s must be positive");
    if (!(cfg.p_stop >= 0.0 && cfg.p_stop <= 1.0))
        throw std::invalid_argument("p_stop must be in [0, 1]");
    if (!(cfg.emit_period_s > 0.0)) throw std::invalid_argument("emit_period_s must be positive");
    if (cfg.phase_noise_a < 0.0) throw std::invalid_argument("phase_noise_a must be >= 0");
}

}  // namespace

std::vector<Segment> generate_references(const PlantConfig& cfg, std::uint64_t seed,
                                         double total_duration_s) {
    check_config(cfg);
    if (!(total_duration_s > 0.0)) throw std::invalid_argument("duration must be positive");

    Rng rng(seed);
    std::vector<Segment> out;
    double t = 0.0;
    while (t < total_duration_s) {
        // Draw order is part of the output contract: one decision draw, then
        // omega and torque only when running.
        const bool stop = rng.next_double() < cfg.p_stop;
        Segment seg;
        seg.t_start_s = t;
        if (stop) {
            seg.duration_s = cfg.stop_s;
        } else {
            seg.duration_s = cfg.hold_s;
            seg.omega_rpm = rng.uniform(0.0, cfg.omega_max_rpm);
            seg.torque_nm = rng.uniform(0.0, cfg.torque_max_nm);
        }
        t += seg.duration_s;
        out.push_back(seg);
    }
    return out;
}

SimResult simulate(const PlantConfig& cfg, std::span<const Segment> schedule,
                   std::span<const Interval> anomaly, std::uint64_t noise_seed) {
    check_config(cfg);
    if (schedule.empty()) throw std::invalid_argument("empty reference schedule");

    const double t_begin = schedule.front().t_start_s;
    double t_end = t_begin;
    for (const auto& seg : schedule) {
        if (seg.t_start_s != t_end)
            throw std::invalid_argument("reference schedule has gaps or overlaps");
        t_end += seg.duration_s;
    }

    Rng noise(noise_seed);
    SimResult res;
    const auto in_anomaly = [&](double t) {
        for (const auto& iv : anomaly)
            if (iv.contains(t)) return true;
        return false;
    };

    constexpr double dt = 1.0;
    double T = cfg.t_amb_c;  // cold start at ambient
    std::size_t seg_idx = 0;
    double next_emit = t_begin;
    for (double t = t_begin; t <= t_end + 0.5 * dt; t += dt) {
        while (seg_idx + 1 < schedule.size() &&
               t >= schedule[seg_idx].t_start_s + schedule[seg_idx].duration_s)
            ++seg_idx;
        const auto& seg = schedule[seg_idx];
        const double i = rms_current(cfg, seg.omega_rpm, seg.torque_nm);

        if (t >= next_emit - 0.5 * dt) {
            features::RawRecord r;
            r.timestamp_s = t;
            r.i_a = std::max(0.0, i + noise.uniform(-cfg.phase_noise_a, cfg.phase_noise_a));
            r.i_b = std::max(0.0, i + noise.uniform(-cfg.phase_noise_a, cfg.phase_noise_a));
            r.i_c = std::max(0.0, i + noise.uniform(-cfg.phase_noise_a, cfg.phase_noise_a));
            r.t_hs = std::floor(T);
            r.label = in_anomaly(t) ? Label::anomalous : Label::healthy;
            res.records.push_back(r);
            res.t_hs_raw.push_back(T);
            next_emit += cfg.emit_period_s;
        }

        const double k = in_anomaly(t) ? cfg.anomaly_factor : 1.0;
        const double p = loss_power(cfg, i);
        T += dt * (p * cfg.r_th_k_per_w * k - (T - cfg.t_amb_c)) / cfg.tau_th_s;
    }
    return res;
}

void build_corpus(const PlantConfig& cfg, std::uint64_t seed, const std::string& train_path,
                  const std::string& test_path, double train_hours, double test_hours) {
    const double train_s = train_hours * 3600.0;
    const double test_s = test_hours * 3600.0;

    const auto train_sched = generate_references(cfg, derive_seed(seed, 0), train_s);
    auto train = simulate(cfg, train_sched, {}, derive_seed(seed, 1));
    // Trim the ragged last segment so the corpus covers the stated duration.
    while (!train.records.empty() && train.records.back().timestamp_s > train_s)
        train.records.pop_back();
    features::write_dataset(train_path, train.records);

    const auto test_sched = generate_references(cfg, derive_seed(seed, 2), test_s);
    const Interval whole{0.0, std::numeric_limits<double>::infinity()};
    auto test = simulate(cfg, test_sched, std::span<const Interval>(&whole, 1),
                         derive_seed(seed, 3));
    while (!test.records.empty() && test.records.back().timestamp_s > test_s)
        test.records.pop_back();
    features::write_dataset(test_path, test.records);
}

SimResult make_monitor_stream(const PlantConfig& cfg, std::uint64_t seed, double healthy_hours,
                              double anomalous_hours) {
    const double healthy_s = healthy_hours * 3600.0;
    const double total_s = healthy_s + anomalous_hours * 3600.0;
    const auto sched = generate_references(cfg, derive_seed(seed, 4), total_s);
    const Interval tail{healthy_s, std::numeric_limits<double>::infinity()};
    auto sim = simulate(cfg, sched, std::span<const Interval>(&tail, 1), derive_seed(seed, 5));
    while (!sim.records.empty() && sim.records.back().timestamp_s > total_s) {
        sim.records.pop_back();
        sim.t_hs_raw.pop_back();
    }
    return sim;
}

}  // namespace drivemon::plant
