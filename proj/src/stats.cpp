#include "switchheat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace switchheat::stats {

namespace {

double ks_coefficient(double alpha) {
    if (alpha == 0.01) return 1.62762;
    if (alpha == 0.05) return 1.35810;
    throw config_error("KS tests support alpha = 0.01 or 0.05 only");
}

} // namespace

StatReport make_stat_report(double estimate, double std_error, std::int64_t n,
                            double target, double threshold) {
    StatReport r;
    r.estimate = estimate;
    r.std_error = std_error;
    r.n = n;
    r.target = target;
    if (std_error > 0.0) {
        r.z = (estimate - target) / std_error;
    } else {
        r.z = (estimate == target) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    r.pass = std::abs(r.z) <= threshold;
    return r;
}

void RunningStats::add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / double(n_);
    m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = double(n_);
    const double nb = double(other.n_);
    const double delta = other.mean_ - mean_;
    const double total = na + nb;
    mean_ += delta * nb / total;
    m2_ += other.m2_ + delta * delta * na * nb / total;
    n_ += other.n_;
}

double RunningStats::mean() const {
    if (n_ == 0) throw std::logic_error("RunningStats::mean: no samples");
    return mean_;
}

double RunningStats::variance() const {
    if (n_ < 2) throw std::logic_error("RunningStats::variance: needs n >= 2");
    return m2_ / double(n_ - 1);
}

double RunningStats::std_error() const {
    return std::sqrt(variance() / double(n_));
}

double ks_critical(double alpha, std::int64_t n) {
    if (n < 1) throw config_error("ks_critical: n must be positive");
    return ks_coefficient(alpha) / std::sqrt(double(n));
}

double ks_critical_two_sample(double alpha, std::int64_t n, std::int64_t m) {
    if (n < 1 || m < 1) throw config_error("ks_critical_two_sample: empty sample");
    return ks_coefficient(alpha) * std::sqrt(double(n + m) / (double(n) * double(m)));
}

KSReport ks_one_sample(std::vector<double> values,
                       const std::function<double(double)>& cdf, double alpha) {
    if (values.empty()) throw config_error("ks_one_sample: empty sample");
    std::sort(values.begin(), values.end());
    const double n = double(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = cdf(values[i]);
        if (!(f >= 0.0 && f <= 1.0))
            throw std::invalid_argument("ks_one_sample: CDF left [0, 1]");
        d = std::max(d, (double(i) + 1.0) / n - f);
        d = std::max(d, f - double(i) / n);
    }
    KSReport r;
    r.statistic = d;
    r.n = std::int64_t(values.size());
    r.critical = ks_critical(alpha, r.n);
    r.pass = d <= r.critical;
    return r;
}

KSReport ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha) {
    if (a.empty() || b.empty()) throw config_error("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size());
    const double nb = double(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(double(i) / na - double(j) / nb));
    }
    KSReport r;
    r.statistic = d;
    r.n = std::int64_t(a.size());
    r.critical = ks_critical_two_sample(alpha, std::int64_t(a.size()),
                                        std::int64_t(b.size()));
    r.pass = d <= r.critical;
    return r;
}

namespace {

/// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr double eps = 1e-14;
    constexpr double tiny = 1e-300;
    constexpr int max_iter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw convergence_error("regularized_incomplete_beta: continued fraction stalled",
                            {h});
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("regularized_incomplete_beta: shapes must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(log_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double beta_cdf(double x, double a, double b) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return regularized_incomplete_beta(a, b, x);
}

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("fit_line: mismatched lengths");
    if (xs.size() < 2) throw std::invalid_argument("fit_line: needs at least 2 points");
    const double n = double(xs.size());
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

} // namespace switchheat::stats
