#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drivemon/features.hpp"
#include "drivemon/replay.hpp"
#include "drivemon/threshold.hpp"
#include "drivemon/types.hpp"

namespace drivemon::eval {

// Contiguous-time split of the healthy corpus into n parts; folds are all
// unordered part pairs (test = the pair, train = the rest). The anomalous
// corpus is appended to every fold's test set.
struct Fold {
    int test_a = 0, test_b = 1;  // test part indices, test_a < test_b
};

struct CvPlan {
    std::vector<std::pair<std::size_t, std::size_t>> part_bounds;  // [begin, end) record ranges
    std::vector<Fold> folds;  // canonical (i < j) order
};

CvPlan make_cv_plan(std::size_t n_records, int n_parts = 8);

struct RocPoint {
    double fpr = 0.0, tpr = 0.0;
};

// Threshold sweep with tied scores grouped into single steps; positives are
// scores strictly greater than the threshold; auc is the trapezoidal area.
struct RocResult {
    std::vector<RocPoint> points;  // (0,0) ... (1,1), monotone
    double auc = 0.0;
    std::size_t n_healthy = 0, n_anomalous = 0;
};

RocResult roc(std::span<const double> healthy_scores, std::span<const double> anomalous_scores);

// Mean over all cross-pairs of [anomalous > healthy] + 0.5 [equal]; the
// Mann-Whitney identity makes this an independent oracle for roc().
double auc_pairwise_oracle(std::span<const double> healthy_scores,
                           std::span<const double> anomalous_scores);

// Everything a comparison run needs besides the strategy id.
struct ExperimentConfig {
    int input_dim = 180;  // window length
    std::vector<int> hidden = {16, 8};
    double eta = 1e-3;
    double mu = 0.9;
    replay::TrainerConfig trainer;     // strategy field overridden per run
    double sample_period_s = 10.0;
    int eval_every_steps = 180;        // 30 simulated minutes
    int offline_epochs = 100;
    int offline_batch = 64;
    double anomalous_train_fraction = 0.5;  // offline classifier's training slice
    int n_parts = 8;
    std::uint64_t seed = 1;
};

// Method identifiers: the six strategy ids plus the two offline baselines.
inline constexpr const char* kOfflineRegressor = "offline_regressor";
inline constexpr const char* kOfflineClassifier = "offline_classifier";
std::vector<std::string> all_methods();
bool is_offline_method(const std::string& id);

// Pre-windowed corpora shared by every fold of a comparison run. Online
// methods use the fixed-physical normalizer; offline baselines re-fit
// normalization on their fold's training split.
struct EvalContext {
    std::vector<features::RawRecord> healthy_records;
    std::vector<features::RawRecord> anomalous_records;
    features::WindowSpec spec;
    features::Normalizer norm = features::Normalizer::fixed_physical();
    CvPlan plan;
    std::vector<features::WindowedData> part_windows;
    features::WindowedData anomalous_windows;
};

EvalContext prepare_context(std::vector<features::RawRecord> healthy,
                            std::vector<features::RawRecord> anomalous,
                            const features::WindowSpec& spec, const features::Normalizer& norm,
                            int n_parts);

struct TracePoint {
    double train_hours = 0.0;
    double auc = 0.0;
};

struct FoldResult {
    std::string method;
    int fold = 0;
    std::vector<TracePoint> trace;  // offline methods emit a single point
    std::int64_t train_macs = 0;    // cost-model training work (evaluation excluded)
    std::int64_t train_steps = 0;
};

FoldResult run_fold_online(const EvalContext& ctx, const ExperimentConfig& cfg,
                           replay::Strategy strategy, int fold_index);
FoldResult run_fold_offline(const EvalContext& ctx, const ExperimentConfig& cfg, bool classifier,
                            int fold_index);

// All requested methods x all folds; `jobs` worker threads; results are
// ordered (method-major, fold-minor) and independent of scheduling.
std::vector<FoldResult> run_compare(const EvalContext& ctx, const ExperimentConfig& cfg,
                                    std::span<const std::string> methods, int jobs);

struct MethodSummary {
    std::string method;
    double mean_auc = 0.0;
    double ci95 = 0.0;            // 1.96 * sd / sqrt(n_folds)
    double norm_runtime = 0.0;    // cost-model MACs relative to incremental
    std::int64_t memory_params = 0;  // parameter-equivalent memory footprint
};

std::vector<MethodSummary> summarize(std::span<const FoldResult> results,
                                     const ExperimentConfig& cfg);

void write_results_csv(const std::string& path, std::span<const FoldResult> results);
void write_summary_csv(const std::string& path, std::span<const MethodSummary> summaries);

// Streaming monitor: per-sample prediction, residual tracking, chi-squared
// threshold commissioning, then frozen-threshold verdicts while training
// continues online.
struct MonitorConfig {
    replay::Strategy strategy = replay::Strategy::selection;
    std::vector<int> hidden = {16, 8};
    double eta = 1e-3;
    double mu = 0.9;
    replay::TrainerConfig trainer;
    double alpha = 0.99;
    double sample_period_s = 10.0;
    double warmup_hours = 6.0;  // residuals ignored while early training settles
    double fit_hours = 4.0;     // residual-variance fit window, then freeze
    std::uint64_t seed = 1;
};

struct MonitorSample {
    double time_s = 0.0;
    double y_true = 0.0;     // normalized
    double y_pred = 0.0;     // normalized, pre-update prediction
    double sq_err = 0.0;
    double threshold = 0.0;  // +inf until frozen
    bool flagged = false;
    Label label = Label::healthy;
};

struct MonitorResult {
    std::vector<MonitorSample> samples;
    double threshold = 0.0;
    std::size_t freeze_index = 0;       // first sample index with a frozen verdict
    double healthy_flag_rate = 0.0;     // post-freeze, healthy-labeled samples
    double anomalous_flag_rate = 0.0;   // post-freeze, anomalous-labeled samples
    std::int64_t healthy_count = 0;
    std::int64_t anomalous_count = 0;
};

MonitorResult monitor_run(const features::WindowedData& windows, const MonitorConfig& cfg);

}  // namespace drivemon::eval
