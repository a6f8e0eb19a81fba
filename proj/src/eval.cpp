#include "drivemon/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "drivemon/rng.hpp"

namespace drivemon::eval {

namespace {

using features::format_double;

void atomic_write(const std::string& path, const std::string& content) {
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

}  // namespace

CvPlan make_cv_plan(std::size_t n_records, int n_parts) {
    if (n_parts < 2) throw std::invalid_argument("cross-validation needs at least 2 parts");
    if (n_records < static_cast<std::size_t>(n_parts))
        throw std::invalid_argument("corpus too short for " + std::to_string(n_parts) + " parts");

    CvPlan plan;
    const std::size_t base = n_records / static_cast<std::size_t>(n_parts);
    const std::size_t extra = n_records % static_cast<std::size_t>(n_parts);
    std::size_t begin = 0;
    for (int p = 0; p < n_parts; ++p) {
        const std::size_t len = base + (static_cast<std::size_t>(p) < extra ? 1 : 0);
        plan.part_bounds.emplace_back(begin, begin + len);
        begin += len;
    }
    for (int i = 0; i < n_parts; ++i)
        for (int j = i + 1; j < n_parts; ++j) plan.folds.push_back(Fold{i, j});
    return plan;
}

RocResult roc(std::span<const double> healthy_scores, std::span<const double> anomalous_scores) {
    if (healthy_scores.empty() || anomalous_scores.empty())
        throw std::invalid_argument("roc: both score lists must be nonempty");
    for (double s : healthy_scores)
        if (!std::isfinite(s)) throw std::runtime_error("roc: non-finite healthy score");
    for (double s : anomalous_scores)
        if (!std::isfinite(s)) throw std::runtime_error("roc: non-finite anomalous score");

    std::vector<double> hs(healthy_scores.begin(), healthy_scores.end());
    std::vector<double> as(anomalous_scores.begin(), anomalous_scores.end());
    std::sort(hs.begin(), hs.end(), std::greater<>());
    std::sort(as.begin(), as.end(), std::greater<>());

    RocResult res;
    res.n_healthy = hs.size();
    res.n_anomalous = as.size();
    const double nh = static_cast<double>(hs.size());
    const double na = static_cast<double>(as.size());

    res.points.push_back({0.0, 0.0});
    std::size_t i = 0, j = 0, ch = 0, ca = 0;
    while (i < hs.size() || j < as.size()) {
        // Next threshold step: the largest remaining score; all samples tied
        // at that value switch to positive together.
        double v;
        if (i < hs.size() && j < as.size())
            v = std::max(hs[i], as[j]);
        else
            v = (i < hs.size()) ? hs[i] : as[j];
        while (i < hs.size() && hs[i] == v) ++i, ++ch;
        while (j < as.size() && as[j] == v) ++j, ++ca;
        res.points.push_back({static_cast<double>(ch) / nh, static_cast<double>(ca) / na});
    }

    double auc = 0.0;
    for (std::size_t k = 1; k < res.points.size(); ++k)
        auc += (res.points[k].fpr - res.points[k - 1].fpr) *
               (res.points[k].tpr + res.points[k - 1].tpr) * 0.5;
    res.auc = auc;
    return res;
}

double auc_pairwise_oracle(std::span<const double> healthy_scores,
                           std::span<const double> anomalous_scores) {
    if (healthy_scores.empty() || anomalous_scores.empty())
        throw std::invalid_argument("auc oracle: both score lists must be nonempty");
    double wins = 0.0;
    for (double a : anomalous_scores)
        for (double h : healthy_scores) {
            if (a > h)
                wins += 1.0;
            else if (a == h)
                wins += 0.5;
        }
    return wins / (static_cast<double>(healthy_scores.size()) *
                   static_cast<double>(anomalous_scores.size()));
}

std::vector<std::string> all_methods() {
    return {"incremental", "buffer", "selection", "icarl",
            "ewc",         "lwf",    kOfflineRegressor, kOfflineClassifier};
}

bool is_offline_method(const std::string& id) {
    return id == kOfflineRegressor || id == kOfflineClassifier;
}

namespace {

features::WindowedData window_range(std::span<const features::RawRecord> records, std::size_t lo,
                                    std::size_t hi, const features::WindowSpec& spec,
                                    const features::Normalizer& norm) {
    const auto grid = features::downsample(records.subspan(lo, hi - lo), spec.sample_period_s);
    return features::make_windows(grid, spec, norm);
}

struct TestSet {
    Matrix X_healthy;
    Vector y_healthy;
    Matrix X_anomalous;
    Vector y_anomalous;
};

std::vector<double> squared_error_scores(const nn::MlpModel& model, const Matrix& X,
                                         const Vector& y) {
    const Matrix preds = nn::forward_batch(model, X);
    std::vector<double> scores(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const double d = preds(0, i) - y(i);
        scores[static_cast<std::size_t>(i)] = d * d;
    }
    return scores;
}

double auc_on(const nn::MlpModel& model, const TestSet& ts) {
    const auto sh = squared_error_scores(model, ts.X_healthy, ts.y_healthy);
    const auto sa = squared_error_scores(model, ts.X_anomalous, ts.y_anomalous);
    return roc(sh, sa).auc;
}

Matrix concat_cols(const Matrix& A, const Matrix& B) {
    Matrix out(A.rows(), A.cols() + B.cols());
    out.leftCols(A.cols()) = A;
    out.rightCols(B.cols()) = B;
    return out;
}

Vector concat(const Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out.head(a.size()) = a;
    out.tail(b.size()) = b;
    return out;
}

// Parameter-count layer dims for the configured architecture.
std::vector<int> layer_dims(const ExperimentConfig& cfg, int input_dim) {
    std::vector<int> dims{input_dim};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(1);
    return dims;
}

std::int64_t theta_count(std::span<const int> dims) {
    std::int64_t n = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        n += static_cast<std::int64_t>(dims[i] + 1) * dims[i + 1];
    return n;
}

std::int64_t backward_macs_per_sample(std::span<const int> dims) {
    std::int64_t fwd = 0, grads = 0, prop = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const auto w = static_cast<std::int64_t>(dims[i]) * dims[i + 1];
        fwd += w;
        grads += w;
        if (i > 0) prop += w;
    }
    return fwd + grads + prop;
}

}  // namespace

EvalContext prepare_context(std::vector<features::RawRecord> healthy,
                            std::vector<features::RawRecord> anomalous,
                            const features::WindowSpec& spec, const features::Normalizer& norm,
                            int n_parts) {
    EvalContext ctx;
    ctx.healthy_records = std::move(healthy);
    ctx.anomalous_records = std::move(anomalous);
    ctx.spec = spec;
    ctx.norm = norm;
    ctx.plan = make_cv_plan(ctx.healthy_records.size(), n_parts);

    for (const auto& [lo, hi] : ctx.plan.part_bounds) {
        ctx.part_windows.push_back(window_range(ctx.healthy_records, lo, hi, spec, norm));
        if (ctx.part_windows.back().size() == 0)
            throw std::invalid_argument("healthy corpus too short: a part yields no windows");
    }
    ctx.anomalous_windows =
        window_range(ctx.anomalous_records, 0, ctx.anomalous_records.size(), spec, norm);
    if (ctx.anomalous_windows.size() == 0)
        throw std::invalid_argument("anomalous corpus yields no windows");
    return ctx;
}

namespace {

TestSet make_online_test_set(const EvalContext& ctx, const Fold& fold) {
    const auto& a = ctx.part_windows[static_cast<std::size_t>(fold.test_a)];
    const auto& b = ctx.part_windows[static_cast<std::size_t>(fold.test_b)];
    TestSet ts;
    ts.X_healthy = concat_cols(a.X, b.X);
    ts.y_healthy = concat(a.y, b.y);
    ts.X_anomalous = ctx.anomalous_windows.X;
    ts.y_anomalous = ctx.anomalous_windows.y;
    return ts;
}

}  // namespace

FoldResult run_fold_online(const EvalContext& ctx, const ExperimentConfig& cfg,
                           replay::Strategy strategy, int fold_index) {
    const Fold& fold = ctx.plan.folds.at(static_cast<std::size_t>(fold_index));
    const int input_dim = ctx.spec.window_len;

    auto model = nn::make_mlp(input_dim, cfg.hidden, 1, nn::OutputActivation::identity,
                              derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(fold_index)));
    auto opt = nn::make_sgd_momentum(model, cfg.eta, cfg.mu);
    replay::TrainerConfig tc = cfg.trainer;
    tc.strategy = strategy;
    replay::OnlineTrainer trainer(std::move(model), std::move(opt), tc);

    const TestSet ts = make_online_test_set(ctx, fold);

    FoldResult res;
    res.method = std::string(replay::strategy_name(strategy));
    res.fold = fold_index;

    std::int64_t step = 0;
    const double hours_per_step = cfg.sample_period_s / 3600.0;
    for (int p = 0; p < static_cast<int>(ctx.part_windows.size()); ++p) {
        if (p == fold.test_a || p == fold.test_b) continue;
        const auto& wd = ctx.part_windows[static_cast<std::size_t>(p)];
        for (Eigen::Index i = 0; i < wd.size(); ++i) {
            Sample s = features::sample_at(wd, i);
            s.t = step;  // strictly increasing across the concatenated stream
            const auto rep = trainer.step(s);
            res.train_macs += rep.macs;
            ++step;
            if (step % cfg.eval_every_steps == 0)
                res.trace.push_back(
                    {static_cast<double>(step) * hours_per_step, auc_on(trainer.model(), ts)});
        }
    }
    if (res.trace.empty() || step % cfg.eval_every_steps != 0)
        res.trace.push_back(
            {static_cast<double>(step) * hours_per_step, auc_on(trainer.model(), ts)});
    res.train_steps = step;
    return res;
}

FoldResult run_fold_offline(const EvalContext& ctx, const ExperimentConfig& cfg, bool classifier,
                            int fold_index) {
    const Fold& fold = ctx.plan.folds.at(static_cast<std::size_t>(fold_index));
    const int input_dim = ctx.spec.window_len;

    // Per-fold min-max scaling fitted on the fold's healthy training records.
    std::vector<features::RawRecord> train_records;
    for (int p = 0; p < static_cast<int>(ctx.plan.part_bounds.size()); ++p) {
        if (p == fold.test_a || p == fold.test_b) continue;
        const auto& [lo, hi] = ctx.plan.part_bounds[static_cast<std::size_t>(p)];
        train_records.insert(train_records.end(), ctx.healthy_records.begin() + lo,
                             ctx.healthy_records.begin() + hi);
    }
    const auto norm = features::Normalizer::fit(train_records);

    // Training windows per part (windows never span part boundaries).
    Matrix X_train(input_dim, 0);
    Vector y_train(0);
    for (int p = 0; p < static_cast<int>(ctx.plan.part_bounds.size()); ++p) {
        if (p == fold.test_a || p == fold.test_b) continue;
        const auto& [lo, hi] = ctx.plan.part_bounds[static_cast<std::size_t>(p)];
        const auto wd = window_range(ctx.healthy_records, lo, hi, ctx.spec, norm);
        X_train = concat_cols(X_train, wd.X);
        y_train = concat(y_train, wd.y);
    }
    const std::int64_t healthy_train_count = X_train.cols();

    TestSet ts;
    {
        const auto& [la, ha] = ctx.plan.part_bounds[static_cast<std::size_t>(fold.test_a)];
        const auto& [lb, hb] = ctx.plan.part_bounds[static_cast<std::size_t>(fold.test_b)];
        const auto wa = window_range(ctx.healthy_records, la, ha, ctx.spec, norm);
        const auto wb = window_range(ctx.healthy_records, lb, hb, ctx.spec, norm);
        ts.X_healthy = concat_cols(wa.X, wb.X);
        ts.y_healthy = concat(wa.y, wb.y);
    }

    FoldResult res;
    res.fold = fold_index;

    nn::MlpModel model;
    Matrix X_all;
    Matrix Y_all(1, 0);
    if (classifier) {
        // Disjoint anomalous halves: the first trains the classifier, the
        // second stays in the test set.
        const std::size_t cut = ctx.anomalous_records.size() / 2;
        const auto wa_train = window_range(ctx.anomalous_records, 0, cut, ctx.spec, norm);
        const auto wa_test =
            window_range(ctx.anomalous_records, cut, ctx.anomalous_records.size(), ctx.spec, norm);
        ts.X_anomalous = wa_test.X;
        ts.y_anomalous = wa_test.y;

        res.method = kOfflineClassifier;
        model = nn::make_mlp(input_dim, cfg.hidden, 1, nn::OutputActivation::logistic,
                             derive_seed(cfg.seed, 300 + static_cast<std::uint64_t>(fold_index)));
        X_all = concat_cols(X_train, wa_train.X);
        Y_all.resize(1, X_all.cols());
        Y_all.setZero();
        Y_all.rightCols(wa_train.X.cols()).setOnes();
    } else {
        const auto wa = window_range(ctx.anomalous_records, 0, ctx.anomalous_records.size(),
                                     ctx.spec, norm);
        ts.X_anomalous = wa.X;
        ts.y_anomalous = wa.y;

        res.method = kOfflineRegressor;
        model = nn::make_mlp(input_dim, cfg.hidden, 1, nn::OutputActivation::identity,
                             derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(fold_index)));
        X_all = X_train;
        Y_all = y_train.transpose();
    }

    auto opt = nn::make_adam(model, 1e-3);
    Rng shuffle_rng(derive_seed(cfg.seed, (classifier ? 500 : 400) +
                                              static_cast<std::uint64_t>(fold_index)));

    const Eigen::Index n = X_all.cols();
    const Eigen::Index batch = std::max<Eigen::Index>(1, cfg.offline_batch);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Matrix Xb(input_dim, batch);
    Matrix Yb(1, batch);

    const auto dims = layer_dims(cfg, input_dim);
    const std::int64_t bwd = backward_macs_per_sample(dims);

    for (int epoch = 0; epoch < cfg.offline_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index b = std::min(batch, n - start);
            for (Eigen::Index k = 0; k < b; ++k) {
                Xb.col(k) = X_all.col(order[static_cast<std::size_t>(start + k)]);
                Yb(0, k) = Y_all(0, order[static_cast<std::size_t>(start + k)]);
            }
            const auto bwres = nn::backward(model, Xb.leftCols(b), Yb.leftCols(b));
            nn::adam_step(model, opt, bwres.grads);
            res.train_macs += bwd * b;
        }
    }

    double auc;
    if (classifier) {
        // Score is the predicted anomaly probability.
        const Matrix ph = nn::forward_batch(model, ts.X_healthy);
        const Matrix pa = nn::forward_batch(model, ts.X_anomalous);
        std::vector<double> sh(ph.data(), ph.data() + ph.size());
        std::vector<double> sa(pa.data(), pa.data() + pa.size());
        auc = roc(sh, sa).auc;
    } else {
        auc = auc_on(model, ts);
    }

    res.train_steps = healthy_train_count;  // stream length, for runtime normalization
    const double hours = static_cast<double>(healthy_train_count) * cfg.sample_period_s / 3600.0;
    res.trace.push_back({hours, auc});
    return res;
}

std::vector<FoldResult> run_compare(const EvalContext& ctx, const ExperimentConfig& cfg,
                                    std::span<const std::string> methods, int jobs) {
    struct Task {
        std::string method;
        int fold;
    };
    std::vector<Task> tasks;
    for (const auto& m : methods) {
        if (!is_offline_method(m)) replay::parse_strategy(m);  // validate early
        for (std::size_t f = 0; f < ctx.plan.folds.size(); ++f)
            tasks.push_back({m, static_cast<int>(f)});
    }

    std::vector<FoldResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                const auto& t = tasks[i];
                if (t.method == kOfflineRegressor)
                    results[i] = run_fold_offline(ctx, cfg, false, t.fold);
                else if (t.method == kOfflineClassifier)
                    results[i] = run_fold_offline(ctx, cfg, true, t.fold);
                else
                    results[i] = run_fold_online(ctx, cfg, replay::parse_strategy(t.method), t.fold);
            } catch (...) {
                std::scoped_lock lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

std::vector<MethodSummary> summarize(std::span<const FoldResult> results,
                                     const ExperimentConfig& cfg) {
    if (results.empty()) return {};

    // Per-fold common stream length (min over methods; the offline
    // classifier's combined stream is longer and never the minimum). An
    // incremental pass over that stream costs one backprop sample per step,
    // which gives a deterministic runtime anchor even when incremental is
    // not among the requested methods.
    std::vector<std::int64_t> fold_steps;
    for (const auto& r : results) {
        if (r.fold >= static_cast<int>(fold_steps.size()))
            fold_steps.resize(static_cast<std::size_t>(r.fold) + 1,
                              std::numeric_limits<std::int64_t>::max());
        auto& v = fold_steps[static_cast<std::size_t>(r.fold)];
        v = std::min(v, r.train_steps);
    }

    const auto dims = layer_dims(cfg, cfg.input_dim);
    const std::int64_t bwd = backward_macs_per_sample(dims);
    const std::int64_t theta = theta_count(dims);
    const std::int64_t sample_params = static_cast<std::int64_t>(cfg.input_dim) + 1;
    const std::int64_t buf = cfg.trainer.buffer_capacity * sample_params;
    const std::int64_t icarl_buf =
        (cfg.trainer.icarl_buffer_capacity + cfg.trainer.icarl_exemplar_capacity) * sample_params;

    std::vector<std::string> seen;
    for (const auto& r : results)
        if (std::find(seen.begin(), seen.end(), r.method) == seen.end()) seen.push_back(r.method);

    std::vector<MethodSummary> out;
    for (const auto& method : seen) {
        std::vector<double> finals;
        std::int64_t total_macs = 0;
        std::int64_t stream_steps = 0;
        int n_folds = 0;
        for (const auto& r : results) {
            if (r.method != method) continue;
            finals.push_back(r.trace.back().auc);
            total_macs += r.train_macs;
            stream_steps += fold_steps[static_cast<std::size_t>(r.fold)];
            ++n_folds;
        }

        MethodSummary s;
        s.method = method;
        const double n = static_cast<double>(finals.size());
        s.mean_auc = std::accumulate(finals.begin(), finals.end(), 0.0) / n;
        if (finals.size() > 1) {
            double ss = 0.0;
            for (double v : finals) ss += (v - s.mean_auc) * (v - s.mean_auc);
            s.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        }

        const std::int64_t anchor_macs = stream_steps * bwd;
        s.norm_runtime = anchor_macs > 0
                             ? static_cast<double>(total_macs) / static_cast<double>(anchor_macs)
                             : 0.0;

        if (method == "incremental")
            s.memory_params = theta;
        else if (method == "buffer" || method == "selection")
            s.memory_params = theta + buf;
        else if (method == "icarl")
            s.memory_params = theta + icarl_buf;
        else if (method == "ewc")
            s.memory_params = 3 * theta + buf;
        else if (method == "lwf")
            s.memory_params = 2 * theta + buf;
        else  // offline baselines hold the whole training split
            s.memory_params = theta + (stream_steps / std::max(1, n_folds)) * sample_params;
        out.push_back(std::move(s));
    }
    return out;
}

void write_results_csv(const std::string& path, std::span<const FoldResult> results) {
    std::string body = "method,fold,train_hours,auc\n";
    for (const auto& r : results)
        for (const auto& tp : r.trace) {
            body += r.method;
            body += ',';
            body += std::to_string(r.fold);
            body += ',';
            body += format_double(tp.train_hours);
            body += ',';
            body += format_double(tp.auc);
            body += '\n';
        }
    atomic_write(path, body);
}

void write_summary_csv(const std::string& path, std::span<const MethodSummary> summaries) {
    std::string body = "method,mean_auc,ci95,normalized_runtime,memory_params\n";
    for (const auto& s : summaries) {
        body += s.method;
        body += ',';
        body += format_double(s.mean_auc);
        body += ',';
        body += format_double(s.ci95);
        body += ',';
        body += format_double(s.norm_runtime);
        body += ',';
        body += std::to_string(s.memory_params);
        body += '\n';
    }
    atomic_write(path, body);
}

MonitorResult monitor_run(const features::WindowedData& windows, const MonitorConfig& cfg) {
    if (windows.size() == 0) throw std::invalid_argument("monitor: empty window stream");

    auto model = nn::make_mlp(static_cast<int>(windows.X.rows()), cfg.hidden, 1,
                              nn::OutputActivation::identity, derive_seed(cfg.seed, 10));
    auto opt = nn::make_sgd_momentum(model, cfg.eta, cfg.mu);
    replay::TrainerConfig tc = cfg.trainer;
    tc.strategy = cfg.strategy;
    replay::OnlineTrainer trainer(std::move(model), std::move(opt), tc);

    threshold::ThresholdEstimator est(cfg.alpha);
    const auto warmup =
        static_cast<std::int64_t>(cfg.warmup_hours * 3600.0 / cfg.sample_period_s);
    const auto fit_end =
        warmup + static_cast<std::int64_t>(cfg.fit_hours * 3600.0 / cfg.sample_period_s);

    MonitorResult res;
    res.freeze_index = static_cast<std::size_t>(fit_end);
    std::int64_t flagged_h = 0, flagged_a = 0;

    for (Eigen::Index i = 0; i < windows.size(); ++i) {
        Sample s = features::sample_at(windows, i);
        s.t = i;
        const double pred = nn::forward(trainer.model(), s.x)(0);
        const double resid = s.y - pred;
        const double sq = resid * resid;

        if (i >= warmup && i < fit_end) est.update(resid);
        if (i == fit_end && est.state() == threshold::ThresholdEstimator::State::fitting)
            est.freeze();

        MonitorSample ms;
        ms.time_s = windows.end_time_s[static_cast<std::size_t>(i)];
        ms.y_true = s.y;
        ms.y_pred = pred;
        ms.sq_err = sq;
        ms.threshold = est.state() == threshold::ThresholdEstimator::State::frozen
                           ? est.threshold()
                           : std::numeric_limits<double>::infinity();
        ms.label = s.label;
        if (est.state() == threshold::ThresholdEstimator::State::frozen) {
            ms.flagged = est.classify(sq);
            if (s.label == Label::healthy) {
                ++res.healthy_count;
                flagged_h += ms.flagged ? 1 : 0;
            } else {
                ++res.anomalous_count;
                flagged_a += ms.flagged ? 1 : 0;
            }
        }
        res.samples.push_back(ms);

        trainer.step(s);  // training sees the sample only after the verdict
    }

    res.threshold = est.state() == threshold::ThresholdEstimator::State::frozen
                        ? est.threshold()
                        : std::numeric_limits<double>::infinity();
    if (res.healthy_count > 0)
        res.healthy_flag_rate = static_cast<double>(flagged_h) / static_cast<double>(res.healthy_count);
    if (res.anomalous_count > 0)
        res.anomalous_flag_rate =
            static_cast<double>(flagged_a) / static_cast<double>(res.anomalous_count);
    return res;
}

}  // namespace drivemon::eval
