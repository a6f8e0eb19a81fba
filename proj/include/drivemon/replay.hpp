#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drivemon/nn.hpp"
#include "drivemon/types.hpp"

namespace drivemon::replay {

// The six online training methods. String ids (config/CLI):
// incremental, buffer, selection, icarl, ewc, lwf.
enum class Strategy : std::uint8_t {
    incremental = 0,
    fifo_buffer = 1,
    selection = 2,
    icarl = 3,
    ewc = 4,
    lwf = 5,
};

Strategy parse_strategy(std::string_view name);  // throws std::invalid_argument
std::string_view strategy_name(Strategy s);

std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Fixed-capacity sample store, columnar so the whole buffer doubles as a
// training batch (columns = samples, zero-copy views).
class ReplayBuffer {
  public:
    ReplayBuffer(Eigen::Index input_dim, Eigen::Index capacity);

    Eigen::Index capacity() const { return capacity_; }
    Eigen::Index size() const { return size_; }
    Eigen::Index input_dim() const { return X_.rows(); }
    bool full() const { return size_ == capacity_; }

    // Oldest sample (minimum arrival index) is overwritten once full.
    // Returns the evicted sample, if any.
    std::optional<Sample> insert_fifo(const Sample& s);

    struct MinLossInsert {
        std::optional<Sample> evicted;
        Vector slot_losses;       // per-slot loss under the pre-insert model; empty in fill phase
        Eigen::Index slot = -1;   // where the incoming sample landed
    };

    // Fill phase (size < capacity): store in the next empty slot, no loss
    // evaluation. Full: evaluate every slot's loss under `model` (which must
    // not yet have seen this step's update), replace the argmin slot, ties
    // broken by lowest index.
    MinLossInsert insert_min_loss(const Sample& s, const nn::MlpModel& model);

    // Per-slot loss of each stored sample under `model` (mean squared error
    // over outputs, Alg. loss l).
    Vector slot_losses(const nn::MlpModel& model) const;

    auto X() const { return X_.leftCols(size_); }         // input_dim x size
    auto targets() const { return y_.head(size_); }       // 1 target per sample
    const std::vector<std::int64_t>& arrival() const { return t_; }
    Sample sample(Eigen::Index slot) const;

    // FNV-1a over the stored features, targets and arrival indices.
    std::uint64_t content_hash() const;

  private:
    void write_slot(Eigen::Index slot, const Sample& s);

    Eigen::Index capacity_ = 0;
    Eigen::Index size_ = 0;
    Matrix X_;   // input_dim x capacity
    Vector y_;   // capacity
    std::vector<std::int64_t> t_;
    std::vector<Label> labels_;
};

// iCaRL-style exemplar store: admissions are periodic (every `period` steps),
// eviction is first-in-first-out over admissions.
class ExemplarBuffer {
  public:
    ExemplarBuffer(Eigen::Index input_dim, Eigen::Index capacity, std::int64_t period);

    Eigen::Index capacity() const { return capacity_; }
    Eigen::Index size() const { return size_; }

    // Advances the admission countdown; true exactly every `period` calls.
    bool tick();

    void admit(const Sample& s);

    auto X() const { return X_.leftCols(size_); }
    auto targets() const { return y_.head(size_); }

  private:
    Eigen::Index capacity_ = 0;
    Eigen::Index size_ = 0;
    Eigen::Index next_ = 0;  // ring position of the oldest admission
    std::int64_t period_ = 1;
    std::int64_t countdown_ = 1;
    Matrix X_;
    Vector y_;
};

// Mean feature vector over the buffer, then the slot closest to it in l2
// distance (ties -> lowest index).
Eigen::Index icarl_exemplar_slot(const ReplayBuffer& buf);

struct EwcState {
    double lambda = 0.0;  // penalty weight
    double gamma = 0.8;   // sensitivity discount
    nn::Gradients fisher;
    std::vector<nn::LayerParams> theta_prev;
};

EwcState make_ewc_state(const nn::MlpModel& model, double lambda, double gamma);

struct PenaltyTerm {
    double value = 0.0;
    nn::Gradients grads;
};

// (lambda/2) * sum_i F_i (theta_i - theta_prev_i)^2 and its gradient
// lambda * F . (theta - theta_prev).
PenaltyTerm ewc_penalty(const EwcState& state, const nn::MlpModel& model);

// F <- gamma F + g^2 entrywise (g = gradient of the base loss);
// theta_prev <- current parameters (call before the optimizer step).
void ewc_update_fisher(EwcState& state, const nn::Gradients& base_grads, const nn::MlpModel& model);

struct LwfState {
    double lambda = 0.0;
    std::optional<nn::MlpModel> prev_model;  // lags the live model by one update
};

// (lambda/N) * sum_i ||f(x_i, theta) - f(x_i, theta_prev)||^2 over the buffer
// inputs X; gradients flow through the live model only.
PenaltyTerm lwf_penalty(const LwfState& state, const nn::MlpModel& model, const MatrixRef& X);

struct TrainerConfig {
    Strategy strategy = Strategy::selection;
    Eigen::Index buffer_capacity = 50;
    Eigen::Index icarl_buffer_capacity = 25;
    Eigen::Index icarl_exemplar_capacity = 25;
    double ewc_lambda = 22.5;
    double ewc_gamma = 0.8;
    double lwf_lambda = 0.1;
};

struct StepReport {
    double loss = 0.0;       // objective minimized this step (base + penalty)
    double base_loss = 0.0;  // buffer mean squared error
    std::uint64_t buffer_hash = 0;
    std::int64_t forward_samples = 0;   // samples through forward-only passes
    std::int64_t backward_samples = 0;  // samples through backprop
    std::int64_t macs = 0;              // cost-model multiply-accumulates
};

// One buffer update + one model update per incoming sample, dispatched by
// strategy. Single-owner, single-threaded; independent instances may run in
// parallel freely.
class OnlineTrainer {
  public:
    OnlineTrainer(nn::MlpModel model, nn::OptimizerState opt, const TrainerConfig& cfg);

    StepReport step(const Sample& incoming);

    const nn::MlpModel& model() const { return model_; }
    const nn::OptimizerState& optimizer() const { return opt_; }
    const TrainerConfig& config() const { return cfg_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    const ExemplarBuffer& exemplars() const { return exemplars_; }
    std::int64_t steps() const { return steps_; }

  private:
    StepReport train_on(const MatrixRef& X, const MatrixRef& Y);  // backward + penalties + update

    TrainerConfig cfg_;
    nn::MlpModel model_;
    nn::OptimizerState opt_;
    ReplayBuffer buffer_;
    ExemplarBuffer exemplars_;
    EwcState ewc_;
    LwfState lwf_;
    Matrix union_X_;  // icarl scratch: rolling buffer plus exemplars
    Matrix union_Y_;
    std::int64_t steps_ = 0;
    std::size_t fwd_macs_ = 0;
    std::size_t bwd_macs_ = 0;
};

}  // namespace drivemon::replay
