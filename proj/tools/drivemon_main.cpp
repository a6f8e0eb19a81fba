#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "drivemon/config.hpp"
#include "drivemon/eval.hpp"
#include "drivemon/plant.hpp"
#include "drivemon/rng.hpp"
#include "drivemon/svg.hpp"

namespace fs = std::filesystem;
using namespace drivemon;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::string data_path;
    std::string strategy;
    std::string methods;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
    int bench_steps = 2000;
};

config::RunConfig make_run_config(const CliOptions& opt) {
    config::RunConfig cfg;
    if (!opt.config_path.empty()) cfg = config::load_config(opt.config_path);
    if (opt.seed_set) cfg.seed = opt.seed;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (!opt.strategy.empty()) cfg.trainer.strategy = replay::parse_strategy(opt.strategy);
    return cfg;
}

eval::ExperimentConfig make_experiment_config(const config::RunConfig& cfg) {
    eval::ExperimentConfig ec;
    ec.input_dim = cfg.window.window_len;
    ec.hidden = cfg.hidden;
    ec.eta = cfg.eta;
    ec.mu = cfg.mu;
    ec.trainer = cfg.trainer;
    ec.sample_period_s = cfg.window.sample_period_s;
    ec.eval_every_steps = cfg.eval_every_steps;
    ec.offline_epochs = cfg.offline_epochs;
    ec.offline_batch = cfg.offline_batch;
    ec.n_parts = cfg.n_parts;
    ec.seed = cfg.seed;
    return ec;
}

features::WindowedData load_windows(const std::string& path, const config::RunConfig& cfg) {
    const auto records = features::read_dataset(path);
    const auto grid = features::downsample(records, cfg.window.sample_period_s);
    return features::make_windows(grid, cfg.window, cfg.normalizer());
}

std::string method_color(const std::string& m) {
    static const std::map<std::string, std::string> colors = {
        {"incremental", "#7f7f7f"}, {"buffer", "#1f77b4"},
        {"selection", "#d62728"},   {"icarl", "#9467bd"},
        {"ewc", "#8c564b"},         {"lwf", "#e377c2"},
        {"offline_regressor", "#2ca02c"}, {"offline_classifier", "#ff7f0e"}};
    const auto it = colors.find(m);
    return it == colors.end() ? std::string("#17becf") : it->second;
}

int cmd_generate(const CliOptions& opt) {
    const auto cfg = make_run_config(opt);
    fs::create_directories(cfg.out_dir);
    const std::string train = cfg.out_dir + "/train.csv";
    const std::string test = cfg.out_dir + "/test.csv";
    const std::string mon = cfg.out_dir + "/monitor_demo.csv";

    plant::build_corpus(cfg.plant, cfg.seed, train, test, cfg.plant_train_hours,
                        cfg.plant_test_hours);
    const auto stream = plant::make_monitor_stream(cfg.plant, cfg.seed, cfg.monitor_healthy_hours,
                                                   cfg.monitor_anomalous_hours);
    features::write_dataset(mon, stream.records);

    const auto count = [](const std::string& p) {
        return features::read_dataset(p).size();
    };
    std::printf("wrote %s (%zu records, %.1f h healthy)\n", train.c_str(), count(train),
                cfg.plant_train_hours);
    std::printf("wrote %s (%zu records, %.1f h anomalous)\n", test.c_str(), count(test),
                cfg.plant_test_hours);
    std::printf("wrote %s (%zu records, %.1f h healthy + %.1f h anomalous)\n", mon.c_str(),
                stream.records.size(), cfg.monitor_healthy_hours, cfg.monitor_anomalous_hours);
    return 0;
}

int cmd_monitor(const CliOptions& opt) {
    const auto cfg = make_run_config(opt);
    const std::string data =
        opt.data_path.empty() ? cfg.out_dir + "/monitor_demo.csv" : opt.data_path;
    const auto windows = load_windows(data, cfg);

    eval::MonitorConfig mc;
    mc.strategy = cfg.trainer.strategy;
    mc.hidden = cfg.hidden;
    mc.eta = cfg.eta;
    mc.mu = cfg.mu;
    mc.trainer = cfg.trainer;
    mc.alpha = cfg.alpha;
    mc.sample_period_s = cfg.window.sample_period_s;
    mc.warmup_hours = cfg.warmup_hours;
    mc.fit_hours = cfg.fit_hours;
    mc.seed = cfg.seed;

    const auto res = eval::monitor_run(windows, mc);

    const auto norm = cfg.normalizer();
    svg::MonitorPanelData pd;
    pd.threshold = std::isfinite(res.threshold) ? res.threshold : 0.0;
    double anomaly_begin = 0.0, anomaly_end = 0.0;
    bool saw_anomaly = false;
    for (const auto& s : res.samples) {
        const double th = s.time_s / 3600.0;
        pd.time_h.push_back(th);
        pd.measured_c.push_back(norm.denorm_temp(s.y_true));
        pd.predicted_c.push_back(norm.denorm_temp(s.y_pred));
        pd.sq_err.push_back(s.sq_err);
        if (s.label == Label::anomalous) {
            if (!saw_anomaly) anomaly_begin = th;
            anomaly_end = th;
            saw_anomaly = true;
        }
    }
    pd.anomaly_begin_h = saw_anomaly ? anomaly_begin : 0.0;
    pd.anomaly_end_h = saw_anomaly ? anomaly_end : 0.0;
    if (res.freeze_index < res.samples.size())
        pd.freeze_time_h = res.samples[res.freeze_index].time_s / 3600.0;

    fs::create_directories(cfg.out_dir);
    const std::string svg_path = cfg.out_dir + "/monitor_demo.svg";
    svg::write_svg(svg_path, svg::monitor_panels(pd));

    std::printf("strategy            %s\n",
                std::string(replay::strategy_name(cfg.trainer.strategy)).c_str());
    std::printf("samples             %zu\n", res.samples.size());
    if (std::isfinite(res.threshold)) {
        std::printf("threshold           %.6g (alpha = %.4g)\n", res.threshold, cfg.alpha);
        std::printf("commissioned at     %.2f h\n", pd.freeze_time_h);
    } else {
        std::printf("threshold           not commissioned (stream shorter than warmup + fit)\n");
    }
    std::printf("healthy flag rate   %.2f%% (%lld samples)\n", 100.0 * res.healthy_flag_rate,
                static_cast<long long>(res.healthy_count));
    std::printf("anomalous flag rate %.2f%% (%lld samples)\n", 100.0 * res.anomalous_flag_rate,
                static_cast<long long>(res.anomalous_count));
    std::printf("wrote %s\n", svg_path.c_str());
    return 0;
}

std::vector<std::string> parse_methods(const std::string& arg) {
    if (arg.empty()) return eval::all_methods();
    const auto known = eval::all_methods();
    std::vector<std::string> out;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (std::find(known.begin(), known.end(), item) == known.end())
            throw config::ConfigError("unknown method '" + item + "'");
        out.push_back(item);
    }
    if (out.empty()) throw config::ConfigError("--methods: empty method list");
    return out;
}

void write_auc_vs_time_svg(const std::string& path, std::span<const eval::FoldResult> results,
                           std::span<const std::string> methods) {
    std::vector<svg::Series> series;
    double x_max = 0.0;
    for (const auto& r : results)
        for (const auto& tp : r.trace) x_max = std::max(x_max, tp.train_hours);

    for (const auto& m : methods) {
        std::vector<const eval::FoldResult*> rs;
        for (const auto& r : results)
            if (r.method == m) rs.push_back(&r);
        if (rs.empty()) continue;

        svg::Series se;
        se.label = m;
        se.color = method_color(m);
        if (eval::is_offline_method(m)) {
            double mean = 0.0;
            for (const auto* r : rs) mean += r->trace.back().auc;
            mean /= static_cast<double>(rs.size());
            se.dashed = true;
            se.x = {0.0, x_max};
            se.y = {mean, mean};
        } else {
            std::size_t len = rs.front()->trace.size();
            for (const auto* r : rs) len = std::min(len, r->trace.size());
            for (std::size_t k = 0; k < len; ++k) {
                double mx = 0.0, my = 0.0, ss = 0.0;
                for (const auto* r : rs) {
                    mx += r->trace[k].train_hours;
                    my += r->trace[k].auc;
                }
                const double n = static_cast<double>(rs.size());
                mx /= n;
                my /= n;
                for (const auto* r : rs) ss += (r->trace[k].auc - my) * (r->trace[k].auc - my);
                const double half = rs.size() > 1 ? 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n)
                                                  : 0.0;
                se.x.push_back(mx);
                se.y.push_back(my);
                se.band_lo.push_back(my - half);
                se.band_hi.push_back(my + half);
            }
        }
        series.push_back(std::move(se));
    }
    svg::Axes axes{"anomaly detection quality over the training stream", "training time (h)",
                   "ROC AUC (mean over folds)"};
    svg::write_svg(path, svg::line_plot(axes, series));
}

void write_boxplot_svg(const std::string& path, std::span<const eval::FoldResult> results,
                       std::span<const std::string> methods) {
    std::vector<svg::BoxStats> boxes;
    for (const auto& m : methods) {
        std::vector<double> finals;
        for (const auto& r : results)
            if (r.method == m) finals.push_back(r.trace.back().auc);
        if (!finals.empty()) boxes.push_back(svg::box_stats(m, std::move(finals)));
    }
    svg::Axes axes{"final ROC AUC per fold", "", "ROC AUC"};
    svg::write_svg(path, svg::box_plot(axes, boxes));
}

int cmd_compare(const CliOptions& opt) {
    const auto cfg = make_run_config(opt);
    const auto methods = parse_methods(opt.methods);

    const std::string train = cfg.out_dir + "/train.csv";
    const std::string test = cfg.out_dir + "/test.csv";
    if (!fs::exists(train) || !fs::exists(test))
        throw std::runtime_error(cfg.out_dir +
                                 ": missing train.csv/test.csv; run 'drivemon generate' first");

    const auto t0 = std::chrono::steady_clock::now();
    auto healthy = features::read_dataset(train);
    auto anomalous = features::read_dataset(test);
    const auto ctx = eval::prepare_context(std::move(healthy), std::move(anomalous), cfg.window,
                                           cfg.normalizer(), cfg.n_parts);
    const auto ec = make_experiment_config(cfg);

    int jobs = opt.jobs;
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::printf("running %zu methods x %zu folds (%d worker%s)\n", methods.size(),
                ctx.plan.folds.size(), jobs, jobs == 1 ? "" : "s");

    const auto results = eval::run_compare(ctx, ec, methods, jobs);
    const auto summaries = eval::summarize(results, ec);
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(cfg.out_dir);
    eval::write_results_csv(cfg.out_dir + "/results.csv", results);
    eval::write_summary_csv(cfg.out_dir + "/summary.csv", summaries);
    write_auc_vs_time_svg(cfg.out_dir + "/auc_vs_time.svg", results, methods);
    write_boxplot_svg(cfg.out_dir + "/auc_boxplot.svg", results, methods);

    std::printf("\n%-20s %10s %8s %12s %12s\n", "method", "mean AUC", "ci95", "runtime", "memory");
    for (const auto& s : summaries)
        std::printf("%-20s %10.4f %8.4f %12.3f %12lld\n", s.method.c_str(), s.mean_auc, s.ci95,
                    s.norm_runtime, static_cast<long long>(s.memory_params));
    std::printf("\ncompleted in %.1f s; wrote results.csv, summary.csv, auc_vs_time.svg, "
                "auc_boxplot.svg in %s\n",
                dt, cfg.out_dir.c_str());
    return 0;
}

int cmd_bench(const CliOptions& opt) {
    const auto cfg = make_run_config(opt);

    // Self-contained synthetic stream long enough for the requested steps.
    const double hours =
        (static_cast<double>(opt.bench_steps) + cfg.window.window_len + 10.0) *
        cfg.window.sample_period_s / 3600.0;
    const auto stream = plant::make_monitor_stream(cfg.plant, cfg.seed, hours, 0.0);
    const auto grid = features::downsample(stream.records, cfg.window.sample_period_s);
    const auto windows = features::make_windows(grid, cfg.window, cfg.normalizer());
    const auto n_steps = std::min<Eigen::Index>(opt.bench_steps, windows.size());
    if (n_steps < 10) throw std::runtime_error("bench: stream too short");

    const std::vector<replay::Strategy> strategies = {
        replay::Strategy::incremental, replay::Strategy::fifo_buffer,
        replay::Strategy::selection,   replay::Strategy::icarl,
        replay::Strategy::ewc,         replay::Strategy::lwf};

    std::printf("%-12s %12s %12s %10s  (%lld steps)\n", "strategy", "median us", "mean us",
                "ratio", static_cast<long long>(n_steps));
    double incremental_median = 0.0;
    for (const auto strat : strategies) {
        auto model = nn::make_mlp(cfg.window.window_len, cfg.hidden, 1,
                                  nn::OutputActivation::identity, derive_seed(cfg.seed, 10));
        auto optim = nn::make_sgd_momentum(model, cfg.eta, cfg.mu);
        replay::TrainerConfig tc = cfg.trainer;
        tc.strategy = strat;
        replay::OnlineTrainer trainer(std::move(model), std::move(optim), tc);

        std::vector<double> us(static_cast<std::size_t>(n_steps));
        double total = 0.0;
        for (Eigen::Index i = 0; i < n_steps; ++i) {
            Sample s = features::sample_at(windows, i);
            s.t = i;
            const auto a = std::chrono::steady_clock::now();
            trainer.step(s);
            const auto b = std::chrono::steady_clock::now();
            us[static_cast<std::size_t>(i)] =
                std::chrono::duration<double, std::micro>(b - a).count();
            total += us[static_cast<std::size_t>(i)];
        }
        std::sort(us.begin(), us.end());
        const double median = us[us.size() / 2];
        if (strat == replay::Strategy::incremental) incremental_median = median;
        std::printf("%-12s %12.1f %12.1f %10.2f\n",
                    std::string(replay::strategy_name(strat)).c_str(), median,
                    total / static_cast<double>(n_steps),
                    incremental_median > 0.0 ? median / incremental_median : 1.0);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"online anomaly detection for motor drives: replay-buffer training,\n"
                 "self-commissioning thresholds, and a strategy comparison harness"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions opt;
    app.add_option("--config", opt.config_path, "key = value config file");
    app.add_option("--seed", opt.seed, "master random seed")->each([&](const std::string&) {
        opt.seed_set = true;
    });
    app.add_option("--out", opt.out_dir, "output directory (default 'out')");
    app.add_option("--strategy", opt.strategy,
                   "training strategy: incremental|buffer|selection|icarl|ewc|lwf");

    auto* gen = app.add_subcommand("generate", "simulate the drive and write the CSV corpora");
    auto* mon = app.add_subcommand("monitor", "stream a dataset through the online monitor");
    mon->add_option("--data", opt.data_path, "input CSV (default <out>/monitor_demo.csv)");
    auto* cmp = app.add_subcommand("compare", "cross-validated comparison of training methods");
    cmp->add_option("--methods", opt.methods, "comma-separated method subset");
    cmp->add_option("--jobs", opt.jobs, "worker threads (default: hardware)");
    auto* ben = app.add_subcommand("bench", "measure per-step training cost per strategy");
    ben->add_option("--steps", opt.bench_steps, "timed steps per strategy");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(opt);
        if (mon->parsed()) return cmd_monitor(opt);
        if (cmp->parsed()) return cmd_compare(opt);
        if (ben->parsed()) return cmd_bench(opt);
    } catch (const config::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
