#include "drivemon/eval.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "drivemon/rng.hpp"

using namespace drivemon;
using namespace drivemon::eval;

namespace {

std::vector<features::RawRecord> synth_records(std::size_t n, Label label, double t0 = 0.0) {
    std::vector<features::RawRecord> out;
    for (std::size_t k = 0; k < n; ++k) {
        features::RawRecord r;
        r.timestamp_s = t0 + 10.0 * static_cast<double>(k);
        r.i_a = 1.0 + 0.1 * static_cast<double>(k % 17);
        r.i_b = 1.2 + 0.1 * static_cast<double>(k % 13);
        r.i_c = 0.9 + 0.1 * static_cast<double>(k % 11);
        r.t_hs = 30.0 + static_cast<double>(k % 20);
        r.label = label;
        out.push_back(r);
    }
    return out;
}

EvalContext tiny_context(std::size_t n_healthy = 90, std::size_t n_anomalous = 12,
                         int n_parts = 3) {
    features::WindowSpec spec;
    spec.sample_period_s = 10.0;
    spec.window_len = 3;
    return prepare_context(synth_records(n_healthy, Label::healthy),
                           synth_records(n_anomalous, Label::anomalous), spec,
                           features::Normalizer::fixed_physical(), n_parts);
}

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.input_dim = 3;
    cfg.hidden = {4};
    cfg.eval_every_steps = 10;
    cfg.offline_epochs = 5;
    cfg.offline_batch = 8;
    cfg.n_parts = 3;
    cfg.seed = 7;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cv plan: contiguous parts, remainder first, all pairs") {
    const auto plan = make_cv_plan(100, 8);
    REQUIRE(plan.part_bounds.size() == 8);
    std::size_t expect_begin = 0;
    for (std::size_t p = 0; p < 8; ++p) {
        CHECK(plan.part_bounds[p].first == expect_begin);
        const std::size_t len = plan.part_bounds[p].second - plan.part_bounds[p].first;
        CHECK(len == (p < 4 ? 13 : 12));
        expect_begin = plan.part_bounds[p].second;
    }
    CHECK(expect_begin == 100);

    REQUIRE(plan.folds.size() == 28);
    std::set<std::pair<int, int>> pairs;
    std::vector<int> uses(8, 0);
    for (const auto& f : plan.folds) {
        CHECK(f.test_a < f.test_b);
        pairs.insert({f.test_a, f.test_b});
        ++uses[static_cast<std::size_t>(f.test_a)];
        ++uses[static_cast<std::size_t>(f.test_b)];
    }
    CHECK(pairs.size() == 28);
    for (int u : uses) CHECK(u == 7);

    CHECK_THROWS_AS(make_cv_plan(100, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_cv_plan(5, 8), std::invalid_argument);
}

TEST_CASE("roc: hand-checked curves") {
    SUBCASE("separable") {
        const std::vector<double> h{0.1, 0.2}, a{0.9, 1.0};
        const auto r = roc(h, a);
        CHECK(r.auc == 1.0);
        CHECK(r.n_healthy == 2);
        CHECK(r.n_anomalous == 2);
        CHECK(r.points.front().fpr == 0.0);
        CHECK(r.points.front().tpr == 0.0);
        CHECK(r.points.back().fpr == 1.0);
        CHECK(r.points.back().tpr == 1.0);
    }
    SUBCASE("one tie across classes") {
        const std::vector<double> h{1.0, 2.0}, a{2.0, 3.0};
        // Pairs: (3>1), (3>2), (2>1), (2==2)/2 -> 3.5 / 4.
        CHECK(roc(h, a).auc == doctest::Approx(0.875).epsilon(1e-15));
    }
    SUBCASE("all scores identical") {
        const std::vector<double> h{5.0, 5.0, 5.0}, a{5.0, 5.0};
        const auto r = roc(h, a);
        CHECK(r.auc == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(r.points.size() == 2);  // one step flips everything
    }
    SUBCASE("perfectly inverted") {
        const std::vector<double> h{2.0, 3.0}, a{0.0, 1.0};
        CHECK(roc(h, a).auc == 0.0);
    }
    SUBCASE("points are monotone") {
        const std::vector<double> h{0.3, 0.1, 0.4, 0.1}, a{0.5, 0.1, 0.2};
        const auto r = roc(h, a);
        for (std::size_t k = 1; k < r.points.size(); ++k) {
            CHECK(r.points[k].fpr >= r.points[k - 1].fpr);
            CHECK(r.points[k].tpr >= r.points[k - 1].tpr);
        }
    }
}

TEST_CASE("roc equals the pairwise Mann-Whitney oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t nh = 1 + rng.next_u64() % 40;
        const std::size_t na = 1 + rng.next_u64() % 40;
        std::vector<double> h(nh), a(na);
        const bool gridded = trial < 100;  // integer grid forces heavy tying
        for (auto& v : h) v = gridded ? static_cast<double>(rng.next_u64() % 8) : rng.next_double();
        for (auto& v : a) v = gridded ? static_cast<double>(rng.next_u64() % 8) : rng.next_double();

        const double area = roc(h, a).auc;
        const double oracle = auc_pairwise_oracle(h, a);
        CHECK(std::abs(area - oracle) <= 1e-12);
        // Swapping class labels mirrors the statistic.
        CHECK(std::abs(roc(a, h).auc - (1.0 - area)) <= 1e-12);
    }
}

TEST_CASE("roc input validation") {
    const std::vector<double> ok{0.5, 0.25};
    CHECK_THROWS_AS(roc({}, ok), std::invalid_argument);
    CHECK_THROWS_AS(roc(ok, {}), std::invalid_argument);
    const std::vector<double> bad_nan{0.5, std::numeric_limits<double>::quiet_NaN()};
    const std::vector<double> bad_inf{std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(roc(bad_nan, ok), std::runtime_error);
    CHECK_THROWS_AS(roc(ok, bad_inf), std::runtime_error);
}

TEST_CASE("context windows each part separately") {
    features::WindowSpec spec;
    spec.sample_period_s = 10.0;
    spec.window_len = 3;
    const auto ctx = prepare_context(synth_records(20, Label::healthy),
                                     synth_records(6, Label::anomalous), spec,
                                     features::Normalizer::fixed_physical(), 2);

    REQUIRE(ctx.part_windows.size() == 2);
    CHECK(ctx.part_windows[0].size() == 8);  // 10 records -> 10 - 3 + 1 windows
    CHECK(ctx.part_windows[1].size() == 8);
    CHECK(ctx.anomalous_windows.size() == 4);
    CHECK(ctx.plan.folds.size() == 1);
    // Part 1 starts on record 10 (t = 100 s); its first window ends at 120 s.
    CHECK(ctx.part_windows[1].end_time_s.front() == doctest::Approx(120.0));
    // A whole-stream windowing would give 18 windows; the split gives 16, so
    // no window spans the part boundary.
    CHECK(ctx.part_windows[0].size() + ctx.part_windows[1].size() == 16);

    CHECK_THROWS_AS(prepare_context(synth_records(20, Label::healthy),
                                    synth_records(6, Label::anomalous), spec,
                                    features::Normalizer::fixed_physical(), 8),
                    std::invalid_argument);
    CHECK_THROWS_AS(prepare_context(synth_records(20, Label::healthy),
                                    synth_records(2, Label::anomalous), spec,
                                    features::Normalizer::fixed_physical(), 2),
                    std::invalid_argument);
}

TEST_CASE("online fold: trains on the non-test parts only, deterministically") {
    const auto ctx = tiny_context();
    const auto cfg = tiny_config();

    const auto r = run_fold_online(ctx, cfg, replay::Strategy::selection, 0);
    CHECK(r.method == "selection");
    CHECK(r.fold == 0);
    // Fold (0, 1) trains on part 2 alone: 30 records -> 28 windows.
    CHECK(r.train_steps == 28);
    REQUIRE(r.trace.size() == 3);  // evals at steps 10, 20, final at 28
    CHECK(r.trace[0].train_hours == doctest::Approx(10 * 10.0 / 3600.0));
    CHECK(r.trace.back().train_hours == doctest::Approx(28 * 10.0 / 3600.0));
    for (const auto& tp : r.trace) {
        CHECK(tp.auc >= 0.0);
        CHECK(tp.auc <= 1.0);
    }
    CHECK(r.train_macs > 0);

    const auto again = run_fold_online(ctx, cfg, replay::Strategy::selection, 0);
    REQUIRE(again.trace.size() == r.trace.size());
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
        CHECK(again.trace[k].train_hours == r.trace[k].train_hours);
        CHECK(again.trace[k].auc == r.trace[k].auc);
    }
    CHECK(again.train_macs == r.train_macs);
}

TEST_CASE("offline folds emit a single trace point") {
    const auto ctx = tiny_context();
    const auto cfg = tiny_config();

    const auto reg = run_fold_offline(ctx, cfg, false, 1);
    CHECK(reg.method == kOfflineRegressor);
    CHECK(reg.fold == 1);
    REQUIRE(reg.trace.size() == 1);
    CHECK(reg.train_steps == 28);
    CHECK(reg.trace[0].auc >= 0.0);
    CHECK(reg.trace[0].auc <= 1.0);
    CHECK(reg.train_macs > 0);

    const auto cls = run_fold_offline(ctx, cfg, true, 1);
    CHECK(cls.method == kOfflineClassifier);
    REQUIRE(cls.trace.size() == 1);
    CHECK(cls.train_steps == 28);
    CHECK(cls.trace[0].auc >= 0.0);
    CHECK(cls.trace[0].auc <= 1.0);
    // The classifier also consumes its anomalous training half.
    CHECK(cls.train_macs > reg.train_macs);

    const auto again = run_fold_offline(ctx, cfg, true, 1);
    CHECK(again.trace[0].auc == cls.trace[0].auc);
}

TEST_CASE("run_compare: method-major order, scheduling-independent") {
    const auto ctx = tiny_context();
    const auto cfg = tiny_config();
    const std::vector<std::string> methods{"incremental", "selection", kOfflineRegressor};

    const auto results = run_compare(ctx, cfg, methods, 4);
    REQUIRE(results.size() == 9);
    for (std::size_t k = 0; k < results.size(); ++k) {
        CHECK(results[k].method == methods[k / 3]);
        CHECK(results[k].fold == static_cast<int>(k % 3));
    }

    const auto serial = run_compare(ctx, cfg, methods, 1);
    REQUIRE(serial.size() == results.size());
    for (std::size_t k = 0; k < results.size(); ++k) {
        REQUIRE(serial[k].trace.size() == results[k].trace.size());
        for (std::size_t t = 0; t < serial[k].trace.size(); ++t)
            CHECK(serial[k].trace[t].auc == results[k].trace[t].auc);
        CHECK(serial[k].train_macs == results[k].train_macs);
    }

    const std::vector<std::string> bad{"incremental", "sgd"};
    CHECK_THROWS_AS(run_compare(ctx, cfg, bad, 2), std::invalid_argument);
}

TEST_CASE("summaries: mean, confidence band, runtime anchored to incremental") {
    ExperimentConfig cfg;
    cfg.input_dim = 5;
    cfg.hidden = {};  // dims [5, 1]: 10 backprop MACs per sample, 6 parameters

    auto mk = [](const char* m, int fold, double final_auc, std::int64_t macs) {
        FoldResult r;
        r.method = m;
        r.fold = fold;
        r.trace = {{0.1, 0.2}, {0.5, final_auc}};
        r.train_macs = macs;
        r.train_steps = 100;
        return r;
    };
    std::vector<FoldResult> results{
        mk("incremental", 0, 0.6, 1000), mk("incremental", 1, 0.8, 1000),
        mk("buffer", 0, 0.7, 3000),      mk("buffer", 1, 0.9, 3000),
        mk(kOfflineRegressor, 0, 0.95, 12345), mk(kOfflineRegressor, 1, 0.85, 12345),
    };

    const auto sums = summarize(results, cfg);
    REQUIRE(sums.size() == 3);

    CHECK(sums[0].method == "incremental");
    CHECK(sums[0].mean_auc == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(sums[0].ci95 == doctest::Approx(1.96 * 0.1).epsilon(1e-12));
    CHECK(sums[0].norm_runtime == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sums[0].memory_params == 6);

    CHECK(sums[1].method == "buffer");
    CHECK(sums[1].mean_auc == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(sums[1].norm_runtime == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(sums[1].memory_params == 6 + 50 * 6);  // default 50-sample buffer

    CHECK(sums[2].method == kOfflineRegressor);
    CHECK(sums[2].mean_auc == doctest::Approx(0.9).epsilon(1e-15));
    // Offline memory: parameters plus the mean training split.
    CHECK(sums[2].memory_params == 6 + 100 * 6);
}

TEST_CASE("csv writers produce exact stable bytes") {
    const auto dir = std::filesystem::temp_directory_path() / "drivemon_eval_csv";
    std::filesystem::create_directories(dir);

    FoldResult r;
    r.method = "selection";
    r.fold = 3;
    r.trace = {{0.5, 0.8125}};
    const auto results_path = dir / "results.csv";
    write_results_csv(results_path.string(), std::span<const FoldResult>(&r, 1));
    CHECK(slurp(results_path) == "method,fold,train_hours,auc\nselection,3,0.5,0.8125\n");

    MethodSummary s;
    s.method = "selection";
    s.mean_auc = 0.9;
    s.ci95 = 0.01;
    s.norm_runtime = 2.5;
    s.memory_params = 3341;
    const auto summary_path = dir / "summary.csv";
    write_summary_csv(summary_path.string(), std::span<const MethodSummary>(&s, 1));
    CHECK(slurp(summary_path) ==
          "method,mean_auc,ci95,normalized_runtime,memory_params\nselection,0.9,0.01,2.5,3341\n");

    write_results_csv(results_path.string(), std::span<const FoldResult>(&r, 1));
    CHECK(slurp(results_path) == "method,fold,train_hours,auc\nselection,3,0.5,0.8125\n");
    std::filesystem::remove_all(dir);
}

TEST_CASE("monitor: warmup, fit, freeze arithmetic and verdict gating") {
    const int dim = 4, n = 60;
    Rng rng(99);
    features::WindowedData wd;
    wd.X.resize(dim, n);
    wd.y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int r = 0; r < dim; ++r) wd.X(r, i) = rng.uniform(0.0, 1.0);
        wd.y(i) = rng.uniform(0.0, 1.0);
        wd.labels.push_back(i < 40 ? Label::healthy : Label::anomalous);
        wd.end_time_s.push_back(10.0 * (i + 3));
    }

    MonitorConfig cfg;
    cfg.hidden = {4};
    cfg.warmup_hours = 0.05;  // 18 samples at 10 s
    cfg.fit_hours = 0.05;     // 18 more; freeze at sample 36
    cfg.sample_period_s = 10.0;
    cfg.seed = 3;

    const auto res = monitor_run(wd, cfg);
    REQUIRE(res.samples.size() == 60);
    CHECK(res.freeze_index == 36);
    CHECK(std::isfinite(res.threshold));
    CHECK(res.threshold > 0.0);

    for (std::size_t i = 0; i < res.samples.size(); ++i) {
        const auto& ms = res.samples[i];
        if (i < res.freeze_index) {
            CHECK(!ms.flagged);
            CHECK(std::isinf(ms.threshold));
        } else {
            CHECK(ms.threshold == res.threshold);
        }
        CHECK(ms.time_s == wd.end_time_s[i]);
        CHECK(ms.sq_err == doctest::Approx((ms.y_true - ms.y_pred) * (ms.y_true - ms.y_pred)));
    }
    CHECK(res.healthy_count == 4);  // post-freeze healthy samples 36..39
    CHECK(res.anomalous_count == 20);

    const auto again = monitor_run(wd, cfg);
    CHECK(again.threshold == res.threshold);

    features::WindowedData empty;
    empty.X.resize(dim, 0);
    empty.y.resize(0);
    CHECK_THROWS_AS(monitor_run(empty, cfg), std::invalid_argument);
}
