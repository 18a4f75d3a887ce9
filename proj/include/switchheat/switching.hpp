#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "switchheat/errors.hpp"
#include "switchheat/rng.hpp"

namespace switchheat {

// ============================================================================
// Holding-time laws
// ============================================================================

/// Distribution of the holding time spent in one of the two boundary states.
///
/// Either exponential with a given rate, or a general continuous law supplied
/// as (mean, cdf) with an optional inverse cdf. When no inverse is supplied,
/// sampling inverts the cdf by bisection on a bracket grown geometrically
/// from the mean. Lattice-supported laws are not representable here and are
/// outside the model's hypotheses; the constructor validates only continuity
/// proxies (cdf(0)=0, monotone on a test grid, cdf -> 1).
class SwitchLaw {
public:
    enum class Kind { exponential, general_continuous };

    static SwitchLaw exponential(double rate);
    static SwitchLaw general(double mean,
                             std::function<double(double)> cdf,
                             std::function<double(double)> inverse_cdf = {});

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool is_exponential() const { return kind_ == Kind::exponential; }

    /// Rate parameter; only meaningful for the exponential kind.
    [[nodiscard]] double rate() const;

    /// Mean holding time (1/rate for the exponential kind).
    [[nodiscard]] double mean() const { return mean_; }

    [[nodiscard]] double cdf(double x) const;

    /// Quantile; bisection to 1e-12 when no analytic inverse was supplied.
    [[nodiscard]] double inverse_cdf(double u) const;

    double sample(RngStream& rng) const;

private:
    SwitchLaw() = default;

    Kind kind_ = Kind::exponential;
    double rate_ = 1.0;
    double mean_ = 1.0;
    std::function<double(double)> cdf_;
    std::function<double(double)> inverse_cdf_;
};

/// The pair of holding-time laws: index 0 drives the forcing phase, index 1
/// the relaxation phase.
struct SwitchLawPair {
    SwitchLaw state0;
    SwitchLaw state1;

    [[nodiscard]] const SwitchLaw& operator[](int state) const {
        return state == 0 ? state0 : state1;
    }
};

[[nodiscard]] inline SwitchLawPair exponential_laws(double r0, double r1) {
    return {SwitchLaw::exponential(r0), SwitchLaw::exponential(r1)};
}

/// Long-run probability of finding the jump component in state 1:
/// E[tau1] / (E[tau0] + E[tau1]); r0/(r0+r1) for exponential laws.
[[nodiscard]] double occupancy_p(const SwitchLawPair& laws);

// ============================================================================
// Environments and the renewal timeline
// ============================================================================

/// One realization of the switching environment: the i.i.d. sequence of
/// holding-time pairs (tau0_k, tau1_k), k = 1, 2, ...
///
/// Pairs are materialized lazily in blocks of 1024; pair k is drawn from a
/// substream keyed by (seed, k), so the sequence is bit-identical for a given
/// seed no matter in what order or how far it is extended. Extension mutates
/// internal buffers and is not synchronized: share an Environment across
/// threads only after materialize() has covered the range every reader needs.
class Environment {
public:
    Environment(SwitchLawPair laws, RngStream base);
    Environment(SwitchLawPair laws, std::uint64_t seed)
        : Environment(std::move(laws), RngStream(seed)) {}

    /// Fixed, non-extendable environment for tests and replay.
    static Environment from_pairs(std::vector<std::array<double, 2>> pairs);

    /// Number of pairs materialized so far.
    [[nodiscard]] std::size_t size() const { return pairs_.size(); }

    /// Ensure at least `count` pairs exist.
    void materialize(std::size_t count);

    /// k-th pair, 0-based; extends on demand.
    [[nodiscard]] std::array<double, 2> pair(std::size_t k);
    [[nodiscard]] double tau0(std::size_t k) { return pair(k)[0]; }
    [[nodiscard]] double tau1(std::size_t k) { return pair(k)[1]; }

    /// Cycle boundary S_n = sum of the first n full pairs (S_0 = 0).
    [[nodiscard]] double cycle_end(std::size_t n);

    /// Mid-cycle switch S'_{n+1} = S_n + tau0_{n+1}, the forcing->relaxation
    /// epoch inside cycle n+1.
    [[nodiscard]] double mid_switch(std::size_t n);

    /// JSON debug dump of the first `count` pairs: [[tau0, tau1], ...].
    [[nodiscard]] std::string dump_json(std::size_t count);

private:
    void extend_block();

    SwitchLawPair laws_;
    std::optional<RngStream> base_;
    std::vector<std::array<double, 2>> pairs_;
    std::vector<double> cumsum_; // cumsum_[n] = S_n, size = pairs_.size() + 1
};

[[nodiscard]] Environment sample_environment(const SwitchLawPair& laws,
                                             std::uint64_t seed,
                                             std::size_t count);

/// Where time t falls on the renewal timeline of an environment.
struct TimelinePoint {
    std::size_t n = 0;  ///< completed full cycles N_t
    int state = 0;      ///< jump state J_t
    double age = 0.0;   ///< time a_t since the last switch
    double s_n = 0.0;   ///< S_{N_t}
    double s_prime = 0.0; ///< S'_{N_t + 1}
};

/// Locate t >= 0; extends the environment as needed. At an epoch exactly,
/// the state is the one just entered (J = 1 at t = S'_k, J = 0 at t = S_k).
[[nodiscard]] TimelinePoint locate(Environment& env, double t);

/// Number of switching epochs strictly inside the open interval (s, t).
/// Requires 0 < s <= t.
[[nodiscard]] std::size_t switch_count(Environment& env, double s, double t);

// ============================================================================
// Stationary age laws
// ============================================================================

/// CDF of the stationary age in the given state: E[min(tau, x)] / E[tau];
/// closed form 1 - e^{-rx} for an exponential law, numeric integral of the
/// survival function otherwise.
[[nodiscard]] double stationary_age_cdf(const SwitchLawPair& laws, int state, double x);

/// Draw from the stationary age law (direct for exponential, numeric CDF
/// inversion otherwise).
[[nodiscard]] double sample_stationary_age(const SwitchLawPair& laws, int state,
                                           RngStream& rng);

} // namespace switchheat
