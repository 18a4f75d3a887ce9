#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "switchheat/errors.hpp"

namespace switchheat::stats {

/// A Monte Carlo estimate standardized against a closed-form target.
struct StatReport {
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t n = 0;
    double target = 0.0;
    double z = 0.0;
    bool pass = false;
};

/// Fill in z = (estimate - target) / std_error and pass = |z| <= threshold.
/// A zero standard error passes only on an exact match.
[[nodiscard]] StatReport make_stat_report(double estimate, double std_error,
                                          std::int64_t n, double target,
                                          double threshold = 3.0);

/// Kolmogorov-Smirnov outcome at a declared significance level.
struct KSReport {
    double statistic = 0.0;
    std::int64_t n = 0;
    double critical = 0.0;
    bool pass = false;
};

/// Streaming mean/variance accumulator with exact pairwise merge, so
/// parallel partial reductions give the same result as a serial pass.
class RunningStats {
public:
    void add(double x);
    void merge(const RunningStats& other);

    [[nodiscard]] std::int64_t count() const { return n_; }
    [[nodiscard]] double mean() const;
    [[nodiscard]] double variance() const; ///< sample variance, n-1 denominator
    [[nodiscard]] double std_error() const;

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Asymptotic one-sample KS critical value k_alpha / sqrt(n);
/// alpha must be 0.01 or 0.05.
[[nodiscard]] double ks_critical(double alpha, std::int64_t n);

/// Two-sample analogue k_alpha sqrt((n+m)/(nm)).
[[nodiscard]] double ks_critical_two_sample(double alpha, std::int64_t n,
                                            std::int64_t m);

/// One-sample KS test of values against a CDF (values are copied and sorted).
[[nodiscard]] KSReport ks_one_sample(std::vector<double> values,
                                     const std::function<double(double)>& cdf,
                                     double alpha);

/// Two-sample KS test; the report's n is the first sample's size.
[[nodiscard]] KSReport ks_two_sample(std::vector<double> a, std::vector<double> b,
                                     double alpha);

/// I_x(a, b) by Lentz continued fraction, accurate to about 1e-12.
[[nodiscard]] double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Beta(a, b) at x, clamped to [0, 1] outside the support.
[[nodiscard]] double beta_cdf(double x, double a, double b);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y ~ slope * x + intercept.
[[nodiscard]] LineFit fit_line(const std::vector<double>& xs,
                               const std::vector<double>& ys);

} // namespace switchheat::stats
