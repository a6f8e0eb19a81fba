#include "drivemon/replay.hpp"

#include <cstring>
#include <limits>
#include <stdexcept>

namespace drivemon::replay {

Strategy parse_strategy(std::string_view name) {
    if (name == "incremental") return Strategy::incremental;
    if (name == "buffer") return Strategy::fifo_buffer;
    if (name == "selection") return Strategy::selection;
    if (name == "icarl") return Strategy::icarl;
    if (name == "ewc") return Strategy::ewc;
    if (name == "lwf") return Strategy::lwf;
    throw std::invalid_argument("unknown strategy '" + std::string(name) +
                                "' (expected incremental|buffer|selection|icarl|ewc|lwf)");
}

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::incremental: return "incremental";
        case Strategy::fifo_buffer: return "buffer";
        case Strategy::selection: return "selection";
        case Strategy::icarl: return "icarl";
        case Strategy::ewc: return "ewc";
        case Strategy::lwf: return "lwf";
    }
    throw std::invalid_argument("unknown strategy tag");
}

std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

ReplayBuffer::ReplayBuffer(Eigen::Index input_dim, Eigen::Index capacity)
    : capacity_(capacity),
      X_(input_dim, capacity),
      y_(capacity),
      t_(static_cast<std::size_t>(capacity), 0),
      labels_(static_cast<std::size_t>(capacity), Label::healthy) {
    if (input_dim <= 0) throw std::invalid_argument("buffer input_dim must be positive");
    if (capacity <= 0) throw std::invalid_argument("buffer capacity must be positive");
    X_.setZero();
    y_.setZero();
}

void ReplayBuffer::write_slot(Eigen::Index slot, const Sample& s) {
    if (s.x.size() != X_.rows())
        throw std::invalid_argument("sample feature size mismatch");
    X_.col(slot) = s.x;
    y_(slot) = s.y;
    t_[static_cast<std::size_t>(slot)] = s.t;
    labels_[static_cast<std::size_t>(slot)] = s.label;
}

Sample ReplayBuffer::sample(Eigen::Index slot) const {
    if (slot < 0 || slot >= size_) throw std::out_of_range("buffer slot out of range");
    Sample s;
    s.x = X_.col(slot);
    s.y = y_(slot);
    s.t = t_[static_cast<std::size_t>(slot)];
    s.label = labels_[static_cast<std::size_t>(slot)];
    return s;
}

std::optional<Sample> ReplayBuffer::insert_fifo(const Sample& s) {
    if (!full()) {
        write_slot(size_++, s);
        return std::nullopt;
    }
    Eigen::Index oldest = 0;
    for (Eigen::Index i = 1; i < capacity_; ++i)
        if (t_[static_cast<std::size_t>(i)] < t_[static_cast<std::size_t>(oldest)]) oldest = i;
    Sample evicted = sample(oldest);
    write_slot(oldest, s);
    return evicted;
}

Vector ReplayBuffer::slot_losses(const nn::MlpModel& model) const {
    if (model.output_dim() != 1)
        throw std::invalid_argument("slot_losses: scalar-target models only");
    const Matrix preds = nn::forward_batch(model, X());
    return (preds.row(0).transpose() - targets()).array().square();
}

ReplayBuffer::MinLossInsert ReplayBuffer::insert_min_loss(const Sample& s,
                                                          const nn::MlpModel& model) {
    MinLossInsert result;
    if (!full()) {
        result.slot = size_;
        write_slot(size_++, s);
        return result;
    }
    result.slot_losses = slot_losses(model);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < capacity_; ++i)
        if (result.slot_losses(i) < result.slot_losses(best)) best = i;
    result.slot = best;
    result.evicted = sample(best);
    write_slot(best, s);
    return result;
}

std::uint64_t ReplayBuffer::content_hash() const {
    std::uint64_t h = hash_bytes(&size_, sizeof(size_));
    h = hash_bytes(X_.data(), sizeof(double) * static_cast<std::size_t>(X_.rows() * size_), h);
    h = hash_bytes(y_.data(), sizeof(double) * static_cast<std::size_t>(size_), h);
    h = hash_bytes(t_.data(), sizeof(std::int64_t) * static_cast<std::size_t>(size_), h);
    return h;
}

ExemplarBuffer::ExemplarBuffer(Eigen::Index input_dim, Eigen::Index capacity, std::int64_t period)
    : capacity_(capacity), period_(period), countdown_(period), X_(input_dim, capacity), y_(capacity) {
    if (input_dim <= 0) throw std::invalid_argument("exemplar input_dim must be positive");
    if (capacity < 0) throw std::invalid_argument("exemplar capacity must be >= 0");
    if (period < 1) throw std::invalid_argument("exemplar admission period must be >= 1");
    X_.setZero();
    y_.setZero();
}

bool ExemplarBuffer::tick() {
    if (--countdown_ > 0) return false;
    countdown_ = period_;
    return true;
}

void ExemplarBuffer::admit(const Sample& s) {
    if (capacity_ == 0) return;
    if (s.x.size() != X_.rows()) throw std::invalid_argument("exemplar feature size mismatch");
    Eigen::Index slot;
    if (size_ < capacity_) {
        slot = size_++;
    } else {
        slot = next_;
        next_ = (next_ + 1) % capacity_;
    }
    X_.col(slot) = s.x;
    y_(slot) = s.y;
}

Eigen::Index icarl_exemplar_slot(const ReplayBuffer& buf) {
    if (buf.size() == 0) throw std::invalid_argument("exemplar selection from empty buffer");
    const Vector mean = buf.X().rowwise().mean();
    Eigen::Index best = 0;
    double best_d = (buf.X().col(0) - mean).squaredNorm();
    for (Eigen::Index i = 1; i < buf.size(); ++i) {
        const double d = (buf.X().col(i) - mean).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

EwcState make_ewc_state(const nn::MlpModel& model, double lambda, double gamma) {
    if (lambda < 0.0) throw std::invalid_argument("ewc lambda must be >= 0");
    if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("ewc gamma must be in [0, 1]");
    EwcState st;
    st.lambda = lambda;
    st.gamma = gamma;
    st.fisher = nn::zero_gradients(model);
    st.theta_prev = model.layers;
    return st;
}

PenaltyTerm ewc_penalty(const EwcState& state, const nn::MlpModel& model) {
    PenaltyTerm p;
    p.grads = nn::zero_gradients(model);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Matrix dW = model.layers[l].W - state.theta_prev[l].W;
        const Vector db = model.layers[l].b - state.theta_prev[l].b;
        p.value += 0.5 * state.lambda *
                   ((state.fisher[l].W.array() * dW.array().square()).sum() +
                    (state.fisher[l].b.array() * db.array().square()).sum());
        p.grads[l].W = state.lambda * state.fisher[l].W.cwiseProduct(dW);
        p.grads[l].b = state.lambda * state.fisher[l].b.cwiseProduct(db);
    }
    return p;
}

void ewc_update_fisher(EwcState& state, const nn::Gradients& base_grads,
                       const nn::MlpModel& model) {
    if (base_grads.size() != state.fisher.size())
        throw std::invalid_argument("fisher/gradient layer count mismatch");
    for (std::size_t l = 0; l < state.fisher.size(); ++l) {
        state.fisher[l].W =
            (state.gamma * state.fisher[l].W.array() + base_grads[l].W.array().square()).matrix();
        state.fisher[l].b =
            (state.gamma * state.fisher[l].b.array() + base_grads[l].b.array().square()).matrix();
    }
    state.theta_prev = model.layers;
}

PenaltyTerm lwf_penalty(const LwfState& state, const nn::MlpModel& model, const MatrixRef& X) {
    if (!state.prev_model) throw std::logic_error("lwf penalty requires a previous model");
    const double n = static_cast<double>(X.cols());
    const Matrix cur = nn::forward_batch(model, X);
    const Matrix prev = nn::forward_batch(*state.prev_model, X);
    const Matrix diff = cur - prev;
    PenaltyTerm p;
    p.value = state.lambda / n * diff.squaredNorm();
    p.grads = nn::backward_given_output_grad(model, X, (2.0 * state.lambda / n) * diff);
    return p;
}

namespace {

Eigen::Index rolling_capacity(const TrainerConfig& cfg) {
    switch (cfg.strategy) {
        case Strategy::incremental: return 1;
        case Strategy::icarl: return cfg.icarl_buffer_capacity;
        default: return cfg.buffer_capacity;
    }
}

// Per-sample cost of one backprop pass: forward, weight/bias gradients, and
// the delta propagation through every hidden layer.
std::size_t backward_macs(const nn::MlpModel& model) {
    std::size_t m = nn::forward_macs(model);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        m += static_cast<std::size_t>(model.layers[l].W.size());  // dZ * A^T
        if (l > 0) m += static_cast<std::size_t>(model.layers[l].W.size());  // W^T * dZ
    }
    return m;
}

void add_grads(nn::Gradients& acc, const nn::Gradients& extra) {
    for (std::size_t l = 0; l < acc.size(); ++l) {
        acc[l].W += extra[l].W;
        acc[l].b += extra[l].b;
    }
}

}  // namespace

OnlineTrainer::OnlineTrainer(nn::MlpModel model, nn::OptimizerState opt, const TrainerConfig& cfg)
    : cfg_(cfg),
      model_(std::move(model)),
      opt_(std::move(opt)),
      buffer_(model_.input_dim(), rolling_capacity(cfg)),
      exemplars_(model_.input_dim(),
                 cfg.strategy == Strategy::icarl ? cfg.icarl_exemplar_capacity : 0,
                 cfg.strategy == Strategy::icarl ? cfg.icarl_buffer_capacity : 1),
      fwd_macs_(nn::forward_macs(model_)),
      bwd_macs_(backward_macs(model_)) {
    if (model_.output_dim() != 1)
        throw std::invalid_argument("online training expects a scalar-output model");
    if (cfg_.strategy == Strategy::ewc)
        ewc_ = make_ewc_state(model_, cfg_.ewc_lambda, cfg_.ewc_gamma);
    if (cfg_.strategy == Strategy::lwf) {
        if (cfg_.lwf_lambda < 0.0) throw std::invalid_argument("lwf lambda must be >= 0");
        lwf_.lambda = cfg_.lwf_lambda;
    }
    if (cfg_.strategy == Strategy::icarl) {
        const Eigen::Index cols = cfg_.icarl_buffer_capacity + cfg_.icarl_exemplar_capacity;
        union_X_.resize(model_.input_dim(), cols);
        union_Y_.resize(1, cols);
    }
}

StepReport OnlineTrainer::train_on(const MatrixRef& X, const MatrixRef& Y) {
    StepReport rep;
    const auto n = X.cols();
    auto bw = nn::backward(model_, X, Y);
    rep.base_loss = bw.loss;
    rep.loss = bw.loss;
    rep.backward_samples = n;
    rep.macs = static_cast<std::int64_t>(bwd_macs_) * n;

    // lambda = 0 disables a penalty entirely; its bookkeeping is skipped so
    // the degenerate configurations run the plain fifo path bit for bit.
    if (cfg_.strategy == Strategy::ewc && ewc_.lambda > 0.0) {
        const auto pen = ewc_penalty(ewc_, model_);  // uses F and theta from the previous step
        rep.loss += pen.value;
        ewc_update_fisher(ewc_, bw.grads, model_);  // base-loss grads, pre-update parameters
        add_grads(bw.grads, pen.grads);
        rep.macs += static_cast<std::int64_t>(8 * model_.parameter_count());
    } else if (cfg_.strategy == Strategy::lwf && lwf_.lambda > 0.0) {
        if (lwf_.prev_model) {
            const auto pen = lwf_penalty(lwf_, model_, X);
            rep.loss += pen.value;
            add_grads(bw.grads, pen.grads);
            rep.forward_samples += 2 * n;
            rep.macs += static_cast<std::int64_t>(2 * fwd_macs_ + bwd_macs_) * n;
        }
        lwf_.prev_model = model_;  // snapshot before the update: lags by one step
    }

    if (opt_.mode == nn::OptimizerMode::sgd_momentum)
        nn::sgd_momentum_step(model_, opt_, bw.grads);
    else
        nn::adam_step(model_, opt_, bw.grads);
    return rep;
}

StepReport OnlineTrainer::step(const Sample& incoming) {
    ++steps_;
    StepReport rep;
    Matrix Y;

    switch (cfg_.strategy) {
        case Strategy::incremental:
        case Strategy::fifo_buffer:
        case Strategy::ewc:
        case Strategy::lwf: {
            buffer_.insert_fifo(incoming);
            Y = buffer_.targets().transpose();
            rep = train_on(buffer_.X(), Y);
            break;
        }
        case Strategy::selection: {
            const bool was_full = buffer_.full();
            buffer_.insert_min_loss(incoming, model_);
            Y = buffer_.targets().transpose();
            rep = train_on(buffer_.X(), Y);
            if (was_full) {
                rep.forward_samples += buffer_.capacity();
                rep.macs += static_cast<std::int64_t>(fwd_macs_) * buffer_.capacity();
            }
            break;
        }
        case Strategy::icarl: {
            buffer_.insert_fifo(incoming);
            if (exemplars_.tick()) exemplars_.admit(buffer_.sample(icarl_exemplar_slot(buffer_)));
            const Eigen::Index nb = buffer_.size(), ne = exemplars_.size();
            union_X_.leftCols(nb) = buffer_.X();
            union_X_.middleCols(nb, ne) = exemplars_.X();
            union_Y_.leftCols(nb) = buffer_.targets().transpose();
            union_Y_.middleCols(nb, ne) = exemplars_.targets().transpose();
            rep = train_on(union_X_.leftCols(nb + ne), union_Y_.leftCols(nb + ne));
            break;
        }
        default:
            throw std::invalid_argument("unknown strategy tag");
    }

    rep.buffer_hash = buffer_.content_hash();
    return rep;
}

}  // namespace drivemon::replay
