#include "switchheat/switching.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace switchheat {

namespace {

constexpr std::size_t kBlock = 1024;
constexpr double kInvertTol = 1e-12;

double bisect_increasing(const std::function<double(double)>& f, double target,
                         double lo, double hi, double tol, const char* what) {
    for (int i = 0; i < 400 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    if (hi - lo > tol)
        throw convergence_error(std::string(what) + ": bisection stalled", {hi - lo});
    return 0.5 * (lo + hi);
}

} // namespace

// ---------------------------------------------------------------------------
// SwitchLaw
// ---------------------------------------------------------------------------

SwitchLaw SwitchLaw::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw config_error("SwitchLaw: rate must be positive and finite");
    SwitchLaw law;
    law.kind_ = Kind::exponential;
    law.rate_ = rate;
    law.mean_ = 1.0 / rate;
    return law;
}

SwitchLaw SwitchLaw::general(double mean, std::function<double(double)> cdf,
                             std::function<double(double)> inverse_cdf) {
    if (!(mean > 0.0) || !std::isfinite(mean))
        throw config_error("SwitchLaw: mean must be positive and finite");
    if (!cdf)
        throw config_error("SwitchLaw: general law requires a cdf");
    if (std::abs(cdf(0.0)) > 1e-12)
        throw config_error("SwitchLaw: cdf(0) must be 0");

    // Continuity proxies on a coarse grid around the mean.
    double prev = 0.0;
    for (double m = 0.125; m <= 64.0; m *= 2.0) {
        const double v = cdf(mean * m);
        if (v < prev - 1e-12 || v < 0.0 || v > 1.0 + 1e-12)
            throw config_error("SwitchLaw: cdf must be nondecreasing into [0,1]");
        prev = std::max(prev, v);
    }
    if (cdf(mean * 4096.0) < 0.999)
        throw config_error("SwitchLaw: cdf does not approach 1");

    SwitchLaw law;
    law.kind_ = Kind::general_continuous;
    law.mean_ = mean;
    law.cdf_ = std::move(cdf);
    law.inverse_cdf_ = std::move(inverse_cdf);

    if (law.inverse_cdf_) {
        for (double m : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            const double x = mean * m;
            if (std::abs(law.inverse_cdf_(law.cdf_(x)) - x) > 1e-9 * (1.0 + x))
                throw config_error("SwitchLaw: inverse_cdf does not invert cdf");
        }
    }
    return law;
}

double SwitchLaw::rate() const {
    if (kind_ != Kind::exponential)
        throw config_error("SwitchLaw: rate() is only defined for the exponential kind");
    return rate_;
}

double SwitchLaw::cdf(double x) const {
    if (x <= 0.0)
        return 0.0;
    if (kind_ == Kind::exponential)
        return -std::expm1(-rate_ * x);
    return std::clamp(cdf_(x), 0.0, 1.0);
}

double SwitchLaw::inverse_cdf(double u) const {
    if (u < 0.0 || u >= 1.0)
        throw config_error("SwitchLaw: quantile level must lie in [0, 1)");
    if (u == 0.0)
        return 0.0;
    if (kind_ == Kind::exponential)
        return -std::log1p(-u) / rate_;
    if (inverse_cdf_)
        return inverse_cdf_(u);

    double hi = 2.0 * mean_;
    while (cdf_(hi) < u) {
        hi *= 2.0;
        if (!std::isfinite(hi))
            throw convergence_error("SwitchLaw: cdf bracket did not reach the level", {u});
    }
    return bisect_increasing(cdf_, u, 0.0, hi, kInvertTol * std::max(1.0, hi),
                             "SwitchLaw::inverse_cdf");
}

double SwitchLaw::sample(RngStream& rng) const {
    if (kind_ == Kind::exponential)
        return rng.exponential(rate_);
    return inverse_cdf(rng.uniform());
}

double occupancy_p(const SwitchLawPair& laws) {
    return laws.state1.mean() / (laws.state0.mean() + laws.state1.mean());
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

Environment::Environment(SwitchLawPair laws, RngStream base)
    : laws_(std::move(laws)), base_(base) {
    cumsum_.push_back(0.0);
}

Environment Environment::from_pairs(std::vector<std::array<double, 2>> pairs) {
    Environment env(exponential_laws(1.0, 1.0), RngStream(0));
    env.base_.reset();
    env.cumsum_.reserve(pairs.size() + 1);
    for (const auto& p : pairs) {
        if (!(p[0] > 0.0) || !(p[1] > 0.0))
            throw config_error("Environment: holding times must be positive");
        env.pairs_.push_back(p);
        env.cumsum_.push_back(env.cumsum_.back() + p[0] + p[1]);
    }
    return env;
}

void Environment::extend_block() {
    if (!base_)
        throw config_error("Environment: fixed environment exhausted");
    const std::size_t start = pairs_.size();
    pairs_.reserve(start + kBlock);
    cumsum_.reserve(start + kBlock + 1);
    for (std::size_t k = start; k < start + kBlock; ++k) {
        RngStream s = base_->substream(k);
        const double t0 = laws_.state0.sample(s);
        const double t1 = laws_.state1.sample(s);
        pairs_.push_back({t0, t1});
        cumsum_.push_back(cumsum_.back() + t0 + t1);
    }
}

void Environment::materialize(std::size_t count) {
    while (pairs_.size() < count)
        extend_block();
}

std::array<double, 2> Environment::pair(std::size_t k) {
    materialize(k + 1);
    return pairs_[k];
}

double Environment::cycle_end(std::size_t n) {
    if (n > 0)
        materialize(n);
    return cumsum_[n];
}

double Environment::mid_switch(std::size_t n) {
    materialize(n + 1);
    return cumsum_[n] + pairs_[n][0];
}

std::string Environment::dump_json(std::size_t count) {
    materialize(count);
    std::ostringstream out;
    out.precision(17);
    out << "[";
    for (std::size_t k = 0; k < count; ++k) {
        if (k)
            out << ",";
        out << "[" << pairs_[k][0] << "," << pairs_[k][1] << "]";
    }
    out << "]";
    return out.str();
}

Environment sample_environment(const SwitchLawPair& laws, std::uint64_t seed,
                               std::size_t count) {
    Environment env(laws, seed);
    env.materialize(count);
    return env;
}

// ---------------------------------------------------------------------------
// Timeline queries
// ---------------------------------------------------------------------------

TimelinePoint locate(Environment& env, double t) {
    if (t < 0.0)
        throw std::invalid_argument("locate: t must be nonnegative");
    while (env.cycle_end(env.size()) <= t)
        env.materialize(env.size() + 1);

    // Largest n with S_n <= t; cumsum is strictly increasing.
    std::size_t lo = 0, hi = env.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (env.cycle_end(mid) <= t)
            lo = mid;
        else
            hi = mid - 1;
    }

    TimelinePoint pt;
    pt.n = lo;
    pt.s_n = env.cycle_end(lo);
    pt.s_prime = env.mid_switch(lo);
    pt.state = (t >= pt.s_prime) ? 1 : 0; // left-closed at the epoch itself
    pt.age = pt.state ? t - pt.s_prime : t - pt.s_n;
    return pt;
}

std::size_t switch_count(Environment& env, double s, double t) {
    if (!(s > 0.0) || s > t)
        throw std::invalid_argument("switch_count: requires 0 < s <= t");

    // Epochs alternate S'_1 < S_1 < S'_2 < S_2 < ...; count both families
    // inside the open interval.
    std::size_t count = 0;
    for (std::size_t n = 0;; ++n) {
        const double sp = env.mid_switch(n);   // S'_{n+1}
        const double se = env.cycle_end(n + 1); // S_{n+1}
        if (sp >= t)
            break;
        if (sp > s)
            ++count;
        if (se >= t)
            break;
        if (se > s)
            ++count;
    }
    return count;
}

// ---------------------------------------------------------------------------
// Stationary ages
// ---------------------------------------------------------------------------

namespace {

/// integral_0^x (1 - F(s)) ds by composite Simpson with fixed fine panels.
double survival_integral(const SwitchLaw& law, double x) {
    const int panels = 4096;
    const double h = x / panels;
    double acc = 0.0;
    for (int i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * (1.0 - law.cdf(i * h));
    }
    return acc * h / 3.0;
}

} // namespace

double stationary_age_cdf(const SwitchLawPair& laws, int state, double x) {
    if (x < 0.0)
        throw std::invalid_argument("stationary_age_cdf: x must be nonnegative");
    const SwitchLaw& law = laws[state];
    if (x == 0.0)
        return 0.0;
    if (law.is_exponential())
        return -std::expm1(-law.rate() * x);
    return std::min(1.0, survival_integral(law, x) / law.mean());
}

double sample_stationary_age(const SwitchLawPair& laws, int state, RngStream& rng) {
    const SwitchLaw& law = laws[state];
    if (law.is_exponential())
        return rng.exponential(law.rate());

    const double u = rng.uniform();
    if (u == 0.0)
        return 0.0;
    double hi = 2.0 * law.mean();
    while (stationary_age_cdf(laws, state, hi) < u) {
        hi *= 2.0;
        if (!std::isfinite(hi))
            throw convergence_error("sample_stationary_age: bracket growth failed", {u});
    }
    auto g = [&](double x) { return stationary_age_cdf(laws, state, x); };
    return bisect_increasing(g, u, 0.0, hi, kInvertTol * std::max(1.0, hi),
                             "sample_stationary_age");
}

} // namespace switchheat
