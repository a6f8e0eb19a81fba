#include "drivemon/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace drivemon::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end)
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
    std::int64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end)
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end)
        throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
    return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key + ": empty list element in '" + v + "'");
        out.push_back(static_cast<int>(to_int(key, item)));
    }
    if (out.empty()) throw ConfigError(key + ": expected a comma-separated integer list");
    return out;
}

std::string int_list_to_string(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

}  // namespace

void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto d = [&] { return to_double(key, value); };
    auto i = [&] { return static_cast<int>(to_int(key, value)); };
    auto i64 = [&] { return to_int(key, value); };

    if (key == "seed") cfg.seed = to_u64(key, value);
    else if (key == "out_dir") cfg.out_dir = value;

    else if (key == "plant.t_amb_c") cfg.plant.t_amb_c = d();
    else if (key == "plant.r_th_k_per_w") cfg.plant.r_th_k_per_w = d();
    else if (key == "plant.tau_th_s") cfg.plant.tau_th_s = d();
    else if (key == "plant.loss_a") cfg.plant.loss_a = d();
    else if (key == "plant.loss_b") cfg.plant.loss_b = d();
    else if (key == "plant.c1") cfg.plant.c1 = d();
    else if (key == "plant.c2") cfg.plant.c2 = d();
    else if (key == "plant.anomaly_factor") cfg.plant.anomaly_factor = d();
    else if (key == "plant.omega_max_rpm") cfg.plant.omega_max_rpm = d();
    else if (key == "plant.torque_max_nm") cfg.plant.torque_max_nm = d();
    else if (key == "plant.hold_s") cfg.plant.hold_s = d();
    else if (key == "plant.stop_s") cfg.plant.stop_s = d();
    else if (key == "plant.p_stop") cfg.plant.p_stop = d();
    else if (key == "plant.phase_noise_a") cfg.plant.phase_noise_a = d();
    else if (key == "plant.emit_period_s") cfg.plant.emit_period_s = d();
    else if (key == "plant.train_hours") cfg.plant_train_hours = d();
    else if (key == "plant.test_hours") cfg.plant_test_hours = d();

    else if (key == "features.sample_period_s") cfg.window.sample_period_s = d();
    else if (key == "features.window_len") cfg.window.window_len = i();
    else if (key == "features.current_min") cfg.norm_current_min = d();
    else if (key == "features.current_max") cfg.norm_current_max = d();
    else if (key == "features.temp_min") cfg.norm_temp_min = d();
    else if (key == "features.temp_max") cfg.norm_temp_max = d();

    else if (key == "model.hidden") cfg.hidden = to_int_list(key, value);
    else if (key == "model.eta") cfg.eta = d();
    else if (key == "model.mu") cfg.mu = d();

    else if (key == "train.strategy") cfg.trainer.strategy = replay::parse_strategy(value);
    else if (key == "train.buffer_capacity") cfg.trainer.buffer_capacity = i64();
    else if (key == "train.icarl_buffer_capacity") cfg.trainer.icarl_buffer_capacity = i64();
    else if (key == "train.icarl_exemplar_capacity") cfg.trainer.icarl_exemplar_capacity = i64();
    else if (key == "train.ewc_lambda") cfg.trainer.ewc_lambda = d();
    else if (key == "train.ewc_gamma") cfg.trainer.ewc_gamma = d();
    else if (key == "train.lwf_lambda") cfg.trainer.lwf_lambda = d();

    else if (key == "threshold.alpha") cfg.alpha = d();
    else if (key == "threshold.warmup_hours") cfg.warmup_hours = d();
    else if (key == "threshold.fit_hours") cfg.fit_hours = d();

    else if (key == "eval.n_parts") cfg.n_parts = i();
    else if (key == "eval.eval_every_steps") cfg.eval_every_steps = i();
    else if (key == "eval.offline_epochs") cfg.offline_epochs = i();
    else if (key == "eval.offline_batch") cfg.offline_batch = i();

    else if (key == "monitor.healthy_hours") cfg.monitor_healthy_hours = d();
    else if (key == "monitor.anomalous_hours") cfg.monitor_anomalous_hours = d();

    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path + ": cannot open config file");

    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": missing key");
        try {
            apply_key_value(cfg, key, value);
        } catch (const std::exception& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

std::string dump_config(const RunConfig& cfg) {
    using features::format_double;
    std::string s;
    auto put = [&](const std::string& key, const std::string& value) {
        s += key;
        s += " = ";
        s += value;
        s += '\n';
    };
    auto putd = [&](const std::string& key, double v) { put(key, format_double(v)); };
    auto puti = [&](const std::string& key, std::int64_t v) { put(key, std::to_string(v)); };

    put("seed", std::to_string(cfg.seed));
    put("out_dir", cfg.out_dir);

    putd("plant.t_amb_c", cfg.plant.t_amb_c);
    putd("plant.r_th_k_per_w", cfg.plant.r_th_k_per_w);
    putd("plant.tau_th_s", cfg.plant.tau_th_s);
    putd("plant.loss_a", cfg.plant.loss_a);
    putd("plant.loss_b", cfg.plant.loss_b);
    putd("plant.c1", cfg.plant.c1);
    putd("plant.c2", cfg.plant.c2);
    putd("plant.anomaly_factor", cfg.plant.anomaly_factor);
    putd("plant.omega_max_rpm", cfg.plant.omega_max_rpm);
    putd("plant.torque_max_nm", cfg.plant.torque_max_nm);
    putd("plant.hold_s", cfg.plant.hold_s);
    putd("plant.stop_s", cfg.plant.stop_s);
    putd("plant.p_stop", cfg.plant.p_stop);
    putd("plant.phase_noise_a", cfg.plant.phase_noise_a);
    putd("plant.emit_period_s", cfg.plant.emit_period_s);
    putd("plant.train_hours", cfg.plant_train_hours);
    putd("plant.test_hours", cfg.plant_test_hours);

    putd("features.sample_period_s", cfg.window.sample_period_s);
    puti("features.window_len", cfg.window.window_len);
    putd("features.current_min", cfg.norm_current_min);
    putd("features.current_max", cfg.norm_current_max);
    putd("features.temp_min", cfg.norm_temp_min);
    putd("features.temp_max", cfg.norm_temp_max);

    put("model.hidden", int_list_to_string(cfg.hidden));
    putd("model.eta", cfg.eta);
    putd("model.mu", cfg.mu);

    put("train.strategy", std::string(replay::strategy_name(cfg.trainer.strategy)));
    puti("train.buffer_capacity", cfg.trainer.buffer_capacity);
    puti("train.icarl_buffer_capacity", cfg.trainer.icarl_buffer_capacity);
    puti("train.icarl_exemplar_capacity", cfg.trainer.icarl_exemplar_capacity);
    putd("train.ewc_lambda", cfg.trainer.ewc_lambda);
    putd("train.ewc_gamma", cfg.trainer.ewc_gamma);
    putd("train.lwf_lambda", cfg.trainer.lwf_lambda);

    putd("threshold.alpha", cfg.alpha);
    putd("threshold.warmup_hours", cfg.warmup_hours);
    putd("threshold.fit_hours", cfg.fit_hours);

    puti("eval.n_parts", cfg.n_parts);
    puti("eval.eval_every_steps", cfg.eval_every_steps);
    puti("eval.offline_epochs", cfg.offline_epochs);
    puti("eval.offline_batch", cfg.offline_batch);

    putd("monitor.healthy_hours", cfg.monitor_healthy_hours);
    putd("monitor.anomalous_hours", cfg.monitor_anomalous_hours);
    return s;
}

}  // namespace drivemon::config
