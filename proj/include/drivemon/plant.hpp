#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drivemon/features.hpp"

namespace drivemon::plant {

// Synthetic variable-frequency drive with a lumped first-order heat-sink
// model. All values are configurable; the defaults give cold-start ambient
// 25 degC, healthy steady state <= 49 degC at rated load, and ~97 degC worst
// case with the blocked-outlet anomaly factor.
struct PlantConfig {
    double t_amb_c = 25.0;
    double r_th_k_per_w = 0.4;  // nominal heat-sink thermal resistance
    double tau_th_s = 600.0;    // thermal time constant
    double loss_a = 0.8;        // conduction-like loss term, W per A
    double loss_b = 0.35;       // resistive loss term, W per A^2
    double c1 = 0.15;           // torque -> current, A per N*m
    double c2 = 1.9e-4;         // speed*torque cross term, A per (r/min * N*m)
    double anomaly_factor = 3.0;  // R_th multiplier while the outlet is blocked
    double omega_max_rpm = 1465.0;
    double torque_max_nm = 28.0;
    double hold_s = 600.0;  // reference hold period
    double stop_s = 600.0;  // cool-down duration after a stop decision
    double p_stop = 0.5;
    double phase_noise_a = 0.02;  // per-phase uniform sensor noise amplitude
    double emit_period_s = 10.0;
};

// Piecewise-constant speed/torque reference.
struct Segment {
    double t_start_s = 0.0;
    double duration_s = 0.0;
    double omega_rpm = 0.0;
    double torque_nm = 0.0;
};

// Half-open [begin_s, end_s) wall-clock range.
struct Interval {
    double begin_s = 0.0;
    double end_s = 0.0;
    bool contains(double t) const { return t >= begin_s && t < end_s; }
};

inline double rms_current(const PlantConfig& cfg, double omega_rpm, double torque_nm) {
    return cfg.c1 * torque_nm + cfg.c2 * omega_rpm * torque_nm;
}

inline double loss_power(const PlantConfig& cfg, double i_rms) {
    return cfg.loss_a * i_rms + cfg.loss_b * i_rms * i_rms;
}

// Alternating hold/decide process: each hold_s slot either runs with freshly
// sampled uniform references (probability 1 - p_stop) or stops the drive for
// stop_s. Deterministic in the seed.
std::vector<Segment> generate_references(const PlantConfig& cfg, std::uint64_t seed,
                                         double total_duration_s);

struct SimResult {
    std::vector<features::RawRecord> records;
    std::vector<double> t_hs_raw;  // unquantized temperature at each record
};

// Explicit Euler at 1 s on dT/dt = (P*R_th*k - (T - T_amb)) / tau_th, emitted
// every emit_period_s with the temperature floor-quantized to integer degC.
// Records whose timestamps fall in an anomaly interval carry the blocked
// cooling factor and the anomalous label.
SimResult simulate(const PlantConfig& cfg, std::span<const Segment> schedule,
                   std::span<const Interval> anomaly, std::uint64_t noise_seed);

// Healthy training corpus plus fully anomalous test corpus, written as CSV.
void build_corpus(const PlantConfig& cfg, std::uint64_t seed, const std::string& train_path,
                  const std::string& test_path, double train_hours = 26.0,
                  double test_hours = 21.0);

// Single stream for the monitoring demo: healthy warm-up followed by a
// blocked-outlet tail.
SimResult make_monitor_stream(const PlantConfig& cfg, std::uint64_t seed, double healthy_hours,
                              double anomalous_hours);

}  // namespace drivemon::plant
