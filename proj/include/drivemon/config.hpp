#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "drivemon/features.hpp"
#include "drivemon/plant.hpp"
#include "drivemon/replay.hpp"

namespace drivemon::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value run configuration. Every field has a CLI-independent
// default; a config file plus --seed/--strategy/--out overrides win in that
// order. Unknown keys are rejected by name.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    plant::PlantConfig plant;
    double plant_train_hours = 26.0;
    double plant_test_hours = 21.0;

    features::WindowSpec window;
    double norm_current_min = 0.0;
    double norm_current_max = 15.0;
    double norm_temp_min = 20.0;
    double norm_temp_max = 120.0;

    std::vector<int> hidden = {16, 8};
    double eta = 1e-3;
    double mu = 0.9;

    replay::TrainerConfig trainer;

    double alpha = 0.99;
    double warmup_hours = 6.0;
    double fit_hours = 4.0;

    int n_parts = 8;
    int eval_every_steps = 180;
    int offline_epochs = 100;
    int offline_batch = 64;

    double monitor_healthy_hours = 12.0;
    double monitor_anomalous_hours = 6.0;

    features::Normalizer normalizer() const {
        return features::Normalizer::fixed_physical(norm_current_min, norm_current_max,
                                                    norm_temp_min, norm_temp_max);
    }
};

// Applies one `key = value` assignment; throws ConfigError naming the key on
// unknown keys or unparsable values.
void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);

// Parses a config file: blank lines and #-comments ignored, one assignment
// per line. Errors carry `path:line:`.
RunConfig load_config(const std::string& path);

// Emits every key in a fixed order; load_config(dump(cfg)) reproduces cfg
// exactly (doubles print in shortest round-trip form).
std::string dump_config(const RunConfig& cfg);

}  // namespace drivemon::config
