#pragma once

#include <cstdint>
#include <iosfwd>

namespace drivemon::threshold {

// Critical value q with P(chi2_k <= q) = alpha. Only k = 1 is needed here;
// it reduces to the squared inverse standard-normal quantile at (1+alpha)/2.
double chi2_quantile(double alpha, int k = 1);

// Bisection on the chi-square(1) CDF, kept as an independent fallback route.
double chi2_quantile_bisect(double alpha);

// Self-commissioning anomaly threshold: Welford running variance of
// prediction residuals while fitting, then a frozen T = s^2 * chi2_alpha(1)
// compared against squared errors.
class ThresholdEstimator {
  public:
    enum class State : std::uint8_t { fitting = 0, frozen = 1 };

    explicit ThresholdEstimator(double alpha = 0.99);

    void update(double residual);  // throws std::logic_error once frozen
    void freeze();                 // requires n >= 2

    // Strictly-greater comparison; equality and the fitting state are negative.
    bool classify(double squared_error) const;

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double sum_sq_dev() const { return s_; }
    double variance() const;  // unbiased; +inf sentinel while n < 2
    double threshold() const { return t_; }
    double alpha() const { return alpha_; }
    State state() const { return state_; }

    void serialize(std::ostream& os) const;
    static ThresholdEstimator deserialize(std::istream& is);

  private:
    void recompute_threshold();

    double alpha_;
    double chi2_crit_;
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double s_ = 0.0;
    double t_;
    State state_ = State::fitting;
};

}  // namespace drivemon::threshold
