#include "drivemon/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "drivemon/rng.hpp"

namespace drivemon::nn {

namespace {

void check_shapes(const MlpModel& model, const Gradients& grads) {
    if (grads.size() != model.layers.size())
        throw std::invalid_argument("gradient/model layer count mismatch");
    for (std::size_t l = 0; l < grads.size(); ++l) {
        if (grads[l].W.rows() != model.layers[l].W.rows() ||
            grads[l].W.cols() != model.layers[l].W.cols() ||
            grads[l].b.size() != model.layers[l].b.size())
            throw std::invalid_argument("gradient/model shape mismatch at layer " +
                                        std::to_string(l));
    }
}

Matrix logistic(const Matrix& Z) {
    return (1.0 / (1.0 + (-Z.array()).exp())).matrix();
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
}

MlpModel make_mlp(int input_dim, std::span<const int> hidden_sizes, int output_dim,
                  OutputActivation output_activation, std::uint64_t seed) {
    if (input_dim <= 0 || output_dim <= 0)
        throw std::invalid_argument("make_mlp: dimensions must be positive");
    for (int h : hidden_sizes)
        if (h <= 0) throw std::invalid_argument("make_mlp: hidden sizes must be positive");

    MlpModel model;
    model.output_activation = output_activation;
    Rng rng(seed);
    int fan_in = input_dim;
    auto add_layer = [&](int out) {
        LayerParams lp;
        lp.W.resize(out, fan_in);
        double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (Eigen::Index r = 0; r < lp.W.rows(); ++r)
            for (Eigen::Index c = 0; c < lp.W.cols(); ++c)
                lp.W(r, c) = rng.uniform(-bound, bound);
        lp.b = Vector::Zero(out);
        model.layers.push_back(std::move(lp));
        fan_in = out;
    };
    for (int h : hidden_sizes) add_layer(h);
    add_layer(output_dim);
    return model;
}

Gradients zero_gradients(const MlpModel& model) {
    Gradients g;
    g.reserve(model.layers.size());
    for (const auto& l : model.layers)
        g.push_back({Matrix::Zero(l.W.rows(), l.W.cols()), Vector::Zero(l.b.size())});
    return g;
}

std::size_t forward_macs(const MlpModel& model) {
    std::size_t n = 0;
    for (const auto& l : model.layers) n += static_cast<std::size_t>(l.W.size());
    return n;
}

Matrix forward_batch(const MlpModel& model, const MatrixRef& X) {
    if (X.rows() != model.input_dim())
        throw std::invalid_argument("forward: input has " + std::to_string(X.rows()) +
                                    " rows, model expects " + std::to_string(model.input_dim()));
    if (!X.allFinite()) throw std::invalid_argument("forward: non-finite input");

    Matrix A = X;
    const std::size_t n_layers = model.layers.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        Matrix Z = model.layers[l].W * A;
        Z.colwise() += model.layers[l].b;
        if (l + 1 < n_layers) {
            A = Z.cwiseMax(0.0);  // ReLU, derivative at 0 taken as 0
        } else if (model.output_activation == OutputActivation::logistic) {
            A = logistic(Z);
        } else {
            A = std::move(Z);
        }
    }
    return A;
}

Vector forward(const MlpModel& model, const Vector& x) {
    return forward_batch(model, x);
}

double loss_mse(double y, double y_hat) {
    double d = y - y_hat;
    return d * d;
}

double loss_bce(double y, double p) {
    p = std::clamp(p, 1e-7, 1.0 - 1e-7);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

BackwardResult backward(const MlpModel& model, const MatrixRef& X, const MatrixRef& Y) {
    if (X.cols() == 0) throw std::invalid_argument("backward: empty batch");
    if (Y.rows() != model.output_dim() || Y.cols() != X.cols())
        throw std::invalid_argument("backward: target shape mismatch");

    const std::size_t n_layers = model.layers.size();
    const double n = static_cast<double>(X.cols());
    const double n_out = static_cast<double>(model.output_dim());

    // Forward pass, caching post-activation values per layer.
    std::vector<Matrix> acts(n_layers + 1);
    acts[0] = X;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Matrix Z = model.layers[l].W * acts[l];
        Z.colwise() += model.layers[l].b;
        if (l + 1 < n_layers)
            acts[l + 1] = Z.cwiseMax(0.0);
        else if (model.output_activation == OutputActivation::logistic)
            acts[l + 1] = logistic(Z);
        else
            acts[l + 1] = std::move(Z);
    }

    const Matrix& out = acts[n_layers];
    BackwardResult res;
    res.grads.resize(n_layers);

    // Gradient at the output pre-activation. For logistic + BCE the two
    // derivative factors cancel into (p - y) / n.
    Matrix dZ;
    if (model.output_activation == OutputActivation::logistic) {
        double total = 0.0;
        for (Eigen::Index c = 0; c < out.cols(); ++c)
            for (Eigen::Index r = 0; r < out.rows(); ++r)
                total += loss_bce(Y(r, c), out(r, c));
        res.loss = total / n;
        dZ = (out - Y) / n;
    } else {
        Matrix diff = out - Y;
        res.loss = diff.squaredNorm() / (n * n_out);
        dZ = (2.0 / (n * n_out)) * diff;
    }

    for (std::size_t l = n_layers; l-- > 0;) {
        res.grads[l].W.noalias() = dZ * acts[l].transpose();
        res.grads[l].b = dZ.rowwise().sum();
        if (l > 0) {
            Matrix dA = model.layers[l].W.transpose() * dZ;
            // ReLU mask: acts[l] > 0 iff pre-activation > 0
            dZ = dA.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return res;
}

BackwardResult backward(const MlpModel& model, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("backward: empty batch");
    Matrix X(model.input_dim(), static_cast<Eigen::Index>(batch.size()));
    Matrix Y(model.output_dim(), static_cast<Eigen::Index>(batch.size()));
    if (model.output_dim() != 1)
        throw std::invalid_argument("backward(Sample): scalar-target models only");
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].x.size() != model.input_dim())
            throw std::invalid_argument("backward: sample dimension mismatch");
        X.col(static_cast<Eigen::Index>(i)) = batch[i].x;
        Y(0, static_cast<Eigen::Index>(i)) = batch[i].y;
    }
    return backward(model, X, Y);
}

Gradients backward_given_output_grad(const MlpModel& model, const MatrixRef& X,
                                      const MatrixRef& G) {
    if (model.output_activation != OutputActivation::identity)
        throw std::invalid_argument("backward_given_output_grad: identity output required");
    if (G.cols() != X.cols() || G.rows() != model.output_dim())
        throw std::invalid_argument("backward_given_output_grad: shape mismatch");

    const std::size_t n_layers = model.layers.size();
    std::vector<Matrix> acts(n_layers + 1);
    acts[0] = X;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Matrix Z = model.layers[l].W * acts[l];
        Z.colwise() += model.layers[l].b;
        acts[l + 1] = (l + 1 < n_layers) ? Z.cwiseMax(0.0) : std::move(Z);
    }

    Gradients grads(n_layers);
    Matrix dZ = G;
    for (std::size_t l = n_layers; l-- > 0;) {
        grads[l].W.noalias() = dZ * acts[l].transpose();
        grads[l].b = dZ.rowwise().sum();
        if (l > 0) {
            Matrix dA = model.layers[l].W.transpose() * dZ;
            dZ = dA.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return grads;
}

namespace {

std::vector<LayerParams> zero_like_layers(const MlpModel& model) {
    std::vector<LayerParams> v;
    v.reserve(model.layers.size());
    for (const auto& l : model.layers)
        v.push_back({Matrix::Zero(l.W.rows(), l.W.cols()), Vector::Zero(l.b.size())});
    return v;
}

}  // namespace

OptimizerState make_sgd_momentum(const MlpModel& model, double eta, double mu) {
    if (!(eta > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (!(mu >= 0.0 && mu < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
    OptimizerState opt;
    opt.mode = OptimizerMode::sgd_momentum;
    opt.eta = eta;
    opt.mu = mu;
    opt.prev_delta = zero_like_layers(model);
    return opt;
}

OptimizerState make_adam(const MlpModel& model, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    OptimizerState opt;
    opt.mode = OptimizerMode::adam;
    opt.eta = eta;
    opt.m = zero_like_layers(model);
    opt.v = zero_like_layers(model);
    return opt;
}

void sgd_momentum_step(MlpModel& model, OptimizerState& opt, const Gradients& grads) {
    if (opt.mode != OptimizerMode::sgd_momentum)
        throw std::invalid_argument("optimizer mode is not sgd_momentum");
    check_shapes(model, grads);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Matrix dW = -opt.eta * grads[l].W + opt.mu * opt.prev_delta[l].W;
        Vector db = -opt.eta * grads[l].b + opt.mu * opt.prev_delta[l].b;
        model.layers[l].W += dW;
        model.layers[l].b += db;
        opt.prev_delta[l].W = std::move(dW);
        opt.prev_delta[l].b = std::move(db);
    }
    ++opt.step_count;
}

void adam_step(MlpModel& model, OptimizerState& opt, const Gradients& grads) {
    if (opt.mode != OptimizerMode::adam)
        throw std::invalid_argument("optimizer mode is not adam");
    check_shapes(model, grads);
    ++opt.step_count;
    const double t = static_cast<double>(opt.step_count);
    const double bc1 = 1.0 - std::pow(opt.beta1, t);
    const double bc2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto update = [&]<typename T>(T& m, T& v, const T& g, T& p) {
            m = opt.beta1 * m + (1.0 - opt.beta1) * g;
            v = (opt.beta2 * v.array() + (1.0 - opt.beta2) * g.array().square()).matrix();
            p.array() -= opt.eta * (m.array() / bc1) / ((v.array() / bc2).sqrt() + opt.eps);
        };
        update(opt.m[l].W, opt.v[l].W, grads[l].W, model.layers[l].W);
        update(opt.m[l].b, opt.v[l].b, grads[l].b, model.layers[l].b);
    }
}

namespace {

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void put_matrix(std::ostream& os, const Matrix& M) {
    for (Eigen::Index r = 0; r < M.rows(); ++r)
        for (Eigen::Index c = 0; c < M.cols(); ++c) put(os, M(r, c));
}

void get_matrix(std::istream& is, Matrix& M) {
    for (Eigen::Index r = 0; r < M.rows(); ++r)
        for (Eigen::Index c = 0; c < M.cols(); ++c) M(r, c) = get<double>(is);
}

void put_vector(std::ostream& os, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put(os, v(i));
}

void get_vector(std::istream& is, Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = get<double>(is);
}

constexpr char kMagic[4] = {'D', 'M', 'L', 'P'};

}  // namespace

void save_checkpoint(const MlpModel& model, const OptimizerState& opt, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, 4);
    put<std::uint32_t>(os, 1);  // version
    put<std::uint32_t>(os, static_cast<std::uint32_t>(model.layers.size()));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(model.output_activation));
    for (const auto& l : model.layers) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.rows()));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.cols()));
        put_matrix(os, l.W);
        put_vector(os, l.b);
    }
    put<std::uint8_t>(os, static_cast<std::uint8_t>(opt.mode));
    put(os, opt.eta);
    put(os, opt.mu);
    put(os, opt.beta1);
    put(os, opt.beta2);
    put(os, opt.eps);
    put<std::int64_t>(os, opt.step_count);
    auto put_layers = [&](const std::vector<LayerParams>& ls) {
        for (const auto& l : ls) {
            put_matrix(os, l.W);
            put_vector(os, l.b);
        }
    };
    if (opt.mode == OptimizerMode::sgd_momentum) {
        put_layers(opt.prev_delta);
    } else {
        put_layers(opt.m);
        put_layers(opt.v);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed on " + path);
}

std::pair<MlpModel, OptimizerState> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    if (get<std::uint32_t>(is) != 1) throw std::runtime_error("checkpoint: unsupported version");

    MlpModel model;
    auto n_layers = get<std::uint32_t>(is);
    model.output_activation = static_cast<OutputActivation>(get<std::uint8_t>(is));
    model.layers.resize(n_layers);
    for (auto& l : model.layers) {
        auto rows = get<std::uint32_t>(is);
        auto cols = get<std::uint32_t>(is);
        l.W.resize(rows, cols);
        l.b.resize(rows);
        get_matrix(is, l.W);
        get_vector(is, l.b);
    }

    OptimizerState opt;
    opt.mode = static_cast<OptimizerMode>(get<std::uint8_t>(is));
    opt.eta = get<double>(is);
    opt.mu = get<double>(is);
    opt.beta1 = get<double>(is);
    opt.beta2 = get<double>(is);
    opt.eps = get<double>(is);
    opt.step_count = get<std::int64_t>(is);
    auto get_layers = [&](std::vector<LayerParams>& ls) {
        ls.resize(model.layers.size());
        for (std::size_t l = 0; l < ls.size(); ++l) {
            ls[l].W.resize(model.layers[l].W.rows(), model.layers[l].W.cols());
            ls[l].b.resize(model.layers[l].b.size());
            get_matrix(is, ls[l].W);
            get_vector(is, ls[l].b);
        }
    };
    if (opt.mode == OptimizerMode::sgd_momentum) {
        get_layers(opt.prev_delta);
    } else {
        get_layers(opt.m);
        get_layers(opt.v);
    }
    return {std::move(model), std::move(opt)};
}

}  // namespace drivemon::nn
