#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "switchheat/errors.hpp"
#include "switchheat/rng.hpp"
#include "switchheat/switching.hpp"

namespace switchheat::hybrid {

// ============================================================================
// Flow abstraction
// ============================================================================

/// One solution semigroup. `apply(t, x)` advances x by time t under this
/// flow; apply(0, x) must be the identity. `contraction_modulus(t)` bounds
/// the Lipschitz constant of apply(t, .). When the modulus has the exact
/// form e^{-lambda t}, `modulus_rate` holds lambda (negative otherwise);
/// certification then uses the closed form of its expectation under an
/// exponential holding law.
template <class State>
struct Flow {
    std::function<State(double, const State&)> apply;
    std::function<double(double)> contraction_modulus;
    double modulus_rate = -1.0;
};

/// The two flows of the hybrid system plus the norm the engine contracts in.
/// States need only support subtraction and this norm; all structure lives
/// in the flows.
template <class State>
struct FlowPair {
    Flow<State> phi0; ///< active while the jump component is in state 0
    Flow<State> phi1; ///< active while the jump component is in state 1
    std::function<double(const State&)> norm;
};

enum class OrbitVariant {
    phi,  ///< cycle map G_k = phi1_{tau1_k} o phi0_{tau0_k}
    gamma ///< cycle map F_k = phi0_{tau0_k} o phi1_{tau1_k}
};

/// Which phase-end attractor a pullback run converges to: Y1 is the almost
/// sure limit of backward phi-orbits (state ends a relaxation phase), Y0 of
/// backward gamma-orbits (state ends a forcing phase).
enum class PullbackTarget { Y0, Y1 };

template <class State>
struct PullbackSample {
    State value;
    std::size_t depth = 0;
    double residual = 0.0; ///< norm gap between the two deepest iterates
};

// ============================================================================
// Orbits
// ============================================================================

namespace detail {

template <class State>
State cycle_map(const FlowPair<State>& pair, OrbitVariant variant,
                double tau0, double tau1, State x) {
    if (variant == OrbitVariant::phi)
        return pair.phi1.apply(tau1, pair.phi0.apply(tau0, x));
    return pair.phi0.apply(tau0, pair.phi1.apply(tau1, x));
}

} // namespace detail

/// n-fold forward composition G_n o ... o G_1 (variant phi) or
/// F_n o ... o F_1 (variant gamma); n = 0 returns x unchanged.
template <class State>
[[nodiscard]] State forward_orbit(const FlowPair<State>& pair, Environment& env,
                                  State x, std::size_t n, OrbitVariant variant) {
    for (std::size_t k = 0; k < n; ++k) {
        const auto p = env.pair(k);
        x = detail::cycle_map(pair, variant, p[0], p[1], std::move(x));
    }
    return x;
}

/// n-fold backward composition G_1 o ... o G_n: the same factors applied in
/// reversed index order, so deeper factors act first.
template <class State>
[[nodiscard]] State backward_orbit(const FlowPair<State>& pair, Environment& env,
                                   State x, std::size_t n, OrbitVariant variant) {
    for (std::size_t k = n; k-- > 0;) {
        const auto p = env.pair(k);
        x = detail::cycle_map(pair, variant, p[0], p[1], std::move(x));
    }
    return x;
}

// ============================================================================
// Pullback sampling
// ============================================================================

/// Deepen the backward orbit until successive iterates agree to `tol` in the
/// pair's norm. The limit is the attractor sample; under contraction on
/// average it exists almost surely and does not depend on x0.
template <class State>
[[nodiscard]] PullbackSample<State> pullback_sample(const FlowPair<State>& pair,
                                                    Environment& env, State x0,
                                                    double tol, std::size_t max_depth,
                                                    PullbackTarget target) {
    if (!(tol > 0.0))
        throw config_error("pullback_sample: tol must be positive");
    const OrbitVariant variant =
        target == PullbackTarget::Y1 ? OrbitVariant::phi : OrbitVariant::gamma;

    std::vector<double> history;
    State prev = x0;
    for (std::size_t n = 1; n <= max_depth; ++n) {
        State cur = backward_orbit(pair, env, x0, n, variant);
        const double residual = pair.norm(cur - prev);
        history.push_back(residual);
        if (residual <= tol)
            return {std::move(cur), n, residual};
        prev = std::move(cur);
    }
    throw convergence_error("pullback_sample: residual above tol at max depth",
                            std::move(history));
}

// ============================================================================
// The continuous-time process
// ============================================================================

/// Value of the switching process at time t: complete cycles are composed
/// forward, then the partial cycle in progress is applied (the forcing flow
/// for the elapsed age, or the full forcing phase followed by the relaxation
/// flow for the elapsed age).
template <class State>
[[nodiscard]] State process_at(const FlowPair<State>& pair, Environment& env,
                               State u0, double t) {
    const TimelinePoint pt = locate(env, t);
    State x = forward_orbit(pair, env, std::move(u0), pt.n, OrbitVariant::phi);
    if (pt.state == 1) {
        const auto p = env.pair(pt.n);
        return pair.phi1.apply(pt.age, pair.phi0.apply(p[0], x));
    }
    return pair.phi0.apply(pt.age, x);
}

// ============================================================================
// Stationary sampling
// ============================================================================

/// One draw from the stationary law of the process.
///
/// Draws xi ~ Bernoulli(p) for the phase, then returns the matching
/// phase-end attractor advanced by a stationary age. For exponential laws
/// the age composition is redundant in distribution and the attractor is
/// returned directly. The environment, xi, the age, and the pullback run are
/// driven by disjoint substreams of `rng`, so they are mutually independent;
/// every call consumes a fresh environment.
template <class State>
[[nodiscard]] State stationary_sample(const FlowPair<State>& pair,
                                      const SwitchLawPair& laws, RngStream rng,
                                      const State& x0, double tol,
                                      std::size_t max_depth) {
    Environment env(laws, rng.substream(0));
    RngStream xi_rng = rng.substream(1);
    const bool relaxing = xi_rng.bernoulli(occupancy_p(laws));

    if (laws.state0.is_exponential() && laws.state1.is_exponential()) {
        // Memorylessness: the attractor advanced by a stationary age equals
        // the opposite attractor in distribution, so return that directly.
        const auto target = relaxing ? PullbackTarget::Y1 : PullbackTarget::Y0;
        return pullback_sample(pair, env, x0, tol, max_depth, target).value;
    }

    RngStream age_rng = rng.substream(2);
    if (relaxing) {
        auto y0 = pullback_sample(pair, env, x0, tol, max_depth, PullbackTarget::Y0);
        const double age = sample_stationary_age(laws, 1, age_rng);
        return pair.phi1.apply(age, y0.value);
    }
    auto y1 = pullback_sample(pair, env, x0, tol, max_depth, PullbackTarget::Y1);
    const double age = sample_stationary_age(laws, 0, age_rng);
    return pair.phi0.apply(age, y1.value);
}

// ============================================================================
// Contraction certification
// ============================================================================

struct ContractionCertificate {
    double product = 0.0;
    double std_error = 0.0;
    bool pass = false;
};

/// Estimate E[K0(tau0)] * E[K1(tau1)] and certify that it is below 1 with a
/// 3-sigma margin. Uses the closed form r/(r + lambda) when a flow declares
/// an exponential-decay modulus and its holding law is exponential; falls
/// back to Monte Carlo otherwise.
template <class State>
[[nodiscard]] ContractionCertificate certify_contraction(const FlowPair<State>& pair,
                                                         const SwitchLawPair& laws,
                                                         std::size_t n_mc,
                                                         RngStream rng) {
    if (n_mc < 100)
        throw config_error("certify_contraction: n_mc must be at least 100");

    auto factor = [&](const Flow<State>& flow, const SwitchLaw& law,
                      RngStream r) -> std::pair<double, double> {
        if (flow.modulus_rate >= 0.0 && law.is_exponential())
            return {law.rate() / (law.rate() + flow.modulus_rate), 0.0};
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = 0; i < n_mc; ++i) {
            RngStream s = r.substream(i);
            const double k = flow.contraction_modulus(law.sample(s));
            sum += k;
            sumsq += k * k;
        }
        const double mean = sum / static_cast<double>(n_mc);
        const double var =
            std::max(0.0, (sumsq - sum * mean) / static_cast<double>(n_mc - 1));
        return {mean, std::sqrt(var / static_cast<double>(n_mc))};
    };

    const auto [m0, se0] = factor(pair.phi0, laws.state0, rng.substream(0));
    const auto [m1, se1] = factor(pair.phi1, laws.state1, rng.substream(1));

    ContractionCertificate cert;
    cert.product = m0 * m1;
    cert.std_error = std::sqrt(m1 * m1 * se0 * se0 + m0 * m0 * se1 * se1 +
                               se0 * se0 * se1 * se1);
    cert.pass = cert.product + 3.0 * cert.std_error < 1.0;
    return cert;
}

// ============================================================================
// Invariance sample sets
// ============================================================================

template <class State>
struct InvariancePairs {
    std::vector<State> direct; ///< attractor samples of the chosen family
    std::vector<State> mapped; ///< other family pushed through one holding time
};

/// Independent sample sets realizing both sides of the one-step invariance:
/// for target Y0 the sets are {Y0} and {phi0_{tau0}(Y1)}; for target Y1 they
/// are {Y1} and {phi1_{tau1}(Y0)}. Downstream two-sample tests compare them.
template <class State>
[[nodiscard]] InvariancePairs<State> invariance_pairs(const FlowPair<State>& pair,
                                                      const SwitchLawPair& laws,
                                                      RngStream rng, std::size_t n,
                                                      const State& x0, double tol,
                                                      std::size_t max_depth,
                                                      PullbackTarget target) {
    if (n < 1)
        throw config_error("invariance_pairs: n must be at least 1");

    InvariancePairs<State> out;
    out.direct.reserve(n);
    out.mapped.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream per = rng.substream(i);
        Environment env_a(laws, per.substream(0));
        Environment env_b(laws, per.substream(1));
        RngStream tau_rng = per.substream(2);

        if (target == PullbackTarget::Y0) {
            out.direct.push_back(
                pullback_sample(pair, env_a, x0, tol, max_depth, PullbackTarget::Y0)
                    .value);
            auto y1 =
                pullback_sample(pair, env_b, x0, tol, max_depth, PullbackTarget::Y1);
            out.mapped.push_back(
                pair.phi0.apply(laws.state0.sample(tau_rng), y1.value));
        } else {
            out.direct.push_back(
                pullback_sample(pair, env_a, x0, tol, max_depth, PullbackTarget::Y1)
                    .value);
            auto y0 =
                pullback_sample(pair, env_b, x0, tol, max_depth, PullbackTarget::Y0);
            out.mapped.push_back(
                pair.phi1.apply(laws.state1.sample(tau_rng), y0.value));
        }
    }
    return out;
}

} // namespace switchheat::hybrid
