#include "drivemon/threshold.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace drivemon::threshold {

namespace {

// erf^-1: Winitzki's closed-form approximation (few-1e-3 accurate) as the
// starting point, then Newton on std::erf down to machine precision.
double erf_inv(double x) {
    double sign = x < 0.0 ? -1.0 : 1.0;
    double ax = std::abs(x);
    if (ax >= 1.0) throw std::domain_error("erf_inv: |x| must be < 1");

    constexpr double a = 0.147;
    constexpr double pi = 3.14159265358979323846;
    double ln1mx2 = std::log1p(-ax * ax);
    double u = 2.0 / (pi * a) + 0.5 * ln1mx2;
    double y = std::sqrt(std::sqrt(u * u - ln1mx2 / a) - u);

    constexpr double two_over_sqrt_pi = 1.1283791670955125739;
    for (int i = 0; i < 6; ++i) {
        double err = std::erf(y) - ax;
        if (err == 0.0) break;
        y -= err / (two_over_sqrt_pi * std::exp(-y * y));
    }
    return sign * y;
}

double chi2_cdf_1(double x) { return std::erf(std::sqrt(0.5 * x)); }

}  // namespace

double chi2_quantile(double alpha, int k) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("chi2_quantile: alpha must be in (0, 1)");
    if (k != 1) throw std::invalid_argument("chi2_quantile: only k = 1 is supported");
    double z = erf_inv(alpha);
    double q = 2.0 * z * z;
    if (!std::isfinite(q)) return chi2_quantile_bisect(alpha);
    return q;
}

double chi2_quantile_bisect(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("chi2_quantile_bisect: alpha must be in (0, 1)");
    double lo = 0.0, hi = 1.0;
    while (chi2_cdf_1(hi) < alpha) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-13 * (1.0 + hi); ++i) {
        double mid = 0.5 * (lo + hi);
        (chi2_cdf_1(mid) < alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ThresholdEstimator::ThresholdEstimator(double alpha)
    : alpha_(alpha),
      chi2_crit_(chi2_quantile(alpha, 1)),
      t_(std::numeric_limits<double>::infinity()) {}

double ThresholdEstimator::variance() const {
    if (n_ < 2) return std::numeric_limits<double>::infinity();
    return s_ / static_cast<double>(n_ - 1);
}

void ThresholdEstimator::recompute_threshold() {
    if (n_ < 2) {
        t_ = std::numeric_limits<double>::infinity();  // never flags
    } else {
        t_ = variance() * chi2_crit_;
    }
}

void ThresholdEstimator::update(double residual) {
    if (state_ == State::frozen)
        throw std::logic_error("ThresholdEstimator: update after freeze");
    ++n_;
    double delta = residual - mean_;
    mean_ += delta / static_cast<double>(n_);
    s_ += delta * (residual - mean_);
    recompute_threshold();
}

void ThresholdEstimator::freeze() {
    if (n_ < 2)
        throw std::logic_error("ThresholdEstimator: freeze requires at least 2 residuals");
    state_ = State::frozen;
}

bool ThresholdEstimator::classify(double squared_error) const {
    if (state_ != State::frozen) return false;
    return squared_error > t_;
}

void ThresholdEstimator::serialize(std::ostream& os) const {
    os.write(reinterpret_cast<const char*>(&alpha_), sizeof alpha_);
    os.write(reinterpret_cast<const char*>(&n_), sizeof n_);
    os.write(reinterpret_cast<const char*>(&mean_), sizeof mean_);
    os.write(reinterpret_cast<const char*>(&s_), sizeof s_);
    os.write(reinterpret_cast<const char*>(&t_), sizeof t_);
    auto st = static_cast<std::uint8_t>(state_);
    os.write(reinterpret_cast<const char*>(&st), sizeof st);
}

ThresholdEstimator ThresholdEstimator::deserialize(std::istream& is) {
    double alpha;
    is.read(reinterpret_cast<char*>(&alpha), sizeof alpha);
    if (!is) throw std::runtime_error("ThresholdEstimator: truncated state");
    ThresholdEstimator est(alpha);
    is.read(reinterpret_cast<char*>(&est.n_), sizeof est.n_);
    is.read(reinterpret_cast<char*>(&est.mean_), sizeof est.mean_);
    is.read(reinterpret_cast<char*>(&est.s_), sizeof est.s_);
    is.read(reinterpret_cast<char*>(&est.t_), sizeof est.t_);
    std::uint8_t st;
    is.read(reinterpret_cast<char*>(&st), sizeof st);
    if (!is) throw std::runtime_error("ThresholdEstimator: truncated state");
    est.state_ = static_cast<State>(st);
    return est;
}

}  // namespace drivemon::threshold
