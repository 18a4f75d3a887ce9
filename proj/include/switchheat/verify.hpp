#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "switchheat/closed_forms.hpp"
#include "switchheat/hybrid.hpp"
#include "switchheat/oracles.hpp"
#include "switchheat/spectral.hpp"
#include "switchheat/stats.hpp"

namespace switchheat::verify {

using spectral::Coeffs;
using spectral::Example;
using spectral::Params;

/// Sizing, seeding, and convergence policy for one Monte Carlo estimator run.
struct McOptions {
    std::int64_t n_samples = 10000;
    std::uint64_t seed = 1;
    double tol = 1e-10;        ///< pullback residual tolerance
    std::size_t max_depth = 512;
    int threads = 0;           ///< worker cap; 0 means hardware concurrency
};

namespace detail {

/// Deterministic parallel sample loop: indices are processed in fixed-size
/// blocks, each block fills its own accumulator slot, and the slots are
/// returned in block order. Results are bit-identical for any worker count
/// as long as the body is a pure function of the index.
template <class Acc, class Body>
std::vector<Acc> run_blocks(std::int64_t n, int threads, std::int64_t block_size,
                            const Acc& proto, Body&& body) {
    if (n < 0) throw config_error("run_blocks: negative sample count");
    const std::int64_t n_blocks = (n + block_size - 1) / block_size;
    std::vector<Acc> slots(std::size_t(n_blocks), proto);
    if (n == 0) return slots;

    int workers = threads > 0 ? threads : int(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = int(std::min<std::int64_t>(workers, n_blocks));

    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&]() {
        for (;;) {
            const std::int64_t blk = next.fetch_add(1);
            if (blk >= n_blocks) return;
            const std::int64_t lo = blk * block_size;
            const std::int64_t hi = std::min(n, lo + block_size);
            try {
                for (std::int64_t i = lo; i < hi; ++i) body(i, slots[std::size_t(blk)]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return slots;
}

constexpr std::int64_t kBlock = 64;

} // namespace detail

/// Bundles one example's model with its switching laws and a master stream;
/// sample i is a pure function of (seed, i).
class StationarySampler {
public:
    StationarySampler(Example example, const Params& params, int K,
                      const McOptions& opts);

    /// Draw i from the stationary law of the process (phase mixture).
    [[nodiscard]] Coeffs stationary(std::int64_t i) const;

    /// Draw i of the chosen phase-end attractor.
    [[nodiscard]] Coeffs attractor(std::int64_t i, hybrid::PullbackTarget target) const;

    /// The environment that drives attractor draw i (for regressors that
    /// need the holding times themselves).
    [[nodiscard]] Environment environment(std::int64_t i) const;

    [[nodiscard]] const spectral::HeatModel& model() const { return model_; }
    [[nodiscard]] const SwitchLawPair& laws() const { return laws_; }

private:
    spectral::HeatModel model_;
    SwitchLawPair laws_;
    RngStream master_;
    double tol_;
    std::size_t max_depth_;
};

// ============================================================================
// Moment estimators
// ============================================================================

struct MeanFieldPoint {
    double x = 0.0;
    stats::StatReport report;
};

struct MeanFieldReport {
    std::vector<MeanFieldPoint> points;
    double max_abs_z = 0.0;
    std::int64_t failures = 0; ///< non-converged pullbacks (skipped samples)

    /// Fraction of grid points with |z| at or below the given threshold.
    [[nodiscard]] double fraction_within(double z_threshold) const;
};

/// Average stationary fields on the interior grid and standardize each grid
/// point against the closed-form mean profile.
[[nodiscard]] MeanFieldReport estimate_mean_field(Example example, const Params& params,
                                                  int K, int grid,
                                                  const McOptions& opts);

/// Least-squares slope of the stationary profile over interior grid points
/// with x <= x_max, computed per sample so the standard error is honest.
/// Target is the closed-form Dirichlet/Neumann slope.
[[nodiscard]] stats::StatReport estimate_dn_slope(const Params& params, int K, int grid,
                                                  double x_max, const McOptions& opts);

/// Monte Carlo L2 variance of the stationary field against the closed form.
[[nodiscard]] stats::StatReport estimate_l2_variance(Example example,
                                                     const Params& params, int K,
                                                     const McOptions& opts);

/// Monte Carlo cross-moment E<Y0, b_n><Y0, b_m> against the closed form.
[[nodiscard]] stats::StatReport estimate_joint_moment(const Params& params, int K,
                                                      int n, int m,
                                                      const McOptions& opts);

// ============================================================================
// Distributional tests
// ============================================================================

/// One-sample KS of normalized attractor coefficients against their Beta
/// law. `shapes_override` substitutes a deliberately wrong target for power
/// checks. Normalized samples must lie in [0,1] within 1e-9 or the run
/// aborts: that indicates a flow bug, not statistical noise.
[[nodiscard]] stats::KSReport ks_beta_marginal(
    const Params& params, int K, int k, closedform::Family which, double alpha,
    const McOptions& opts,
    std::optional<std::pair<double, double>> shapes_override = std::nullopt);

struct InvarianceOptions {
    Example example = Example::dd;
    int k = 1;              ///< coefficient index for the scalar statistic
    bool midpoint = false;  ///< use the field value at x = L/2 instead
    double shift = 0.0;     ///< added to the mapped set (negative control)
};

/// Two-sample KS between {Y0} and {phi0_tau0(Y1)} through a scalar statistic.
[[nodiscard]] stats::KSReport invariance_two_sample(const Params& params, int K,
                                                    const InvarianceOptions& inv,
                                                    double alpha,
                                                    const McOptions& opts);

struct AgeTestReport {
    stats::KSReport age_state0;
    stats::KSReport age_state1;
    stats::StatReport occupancy; ///< empirical P(J=1) vs p, 3 sigma
};

/// Simulate the renewal timeline to t_large and compare conditional ages
/// against the stationary age law. Requires t_large >= 20 max(E tau0, E tau1).
[[nodiscard]] AgeTestReport age_distribution_test(const SwitchLawPair& laws,
                                                  double t_large, double alpha,
                                                  const McOptions& opts);

// ============================================================================
// Weak-form PDE tests
// ============================================================================

/// Cubic B-spline bump supported on [L/4, 3L/4] projected onto the
/// Dirichlet/Dirichlet basis; smooth enough that its projection tail is
/// negligible against statistical noise.
struct BumpTestFunction {
    double L = 1.0;
    Eigen::VectorXd phi_k; ///< <phi, b_k>

    [[nodiscard]] double eval(double x) const;
    [[nodiscard]] double second_derivative(double x) const;
};

[[nodiscard]] BumpTestFunction make_bump(const spectral::Basis& dd_basis);

/// Central-difference residual of d/dt<phi, E u(t)> = <D phi'', E u(t)>,
/// averaged over sample paths; pass needs |estimate| <= 3 se + O(dt^2) budget.
[[nodiscard]] stats::StatReport weak_mean_pde_residual(Example example,
                                                       const Params& params, int K,
                                                       double t, double dt,
                                                       const McOptions& opts);

/// Stationary counterpart: <D phi'', E u_bar> standardized against 0.
[[nodiscard]] stats::StatReport stationary_weak_pde(Example example,
                                                    const Params& params, int K,
                                                    const McOptions& opts);

// ============================================================================
// Oracle cross-checks
// ============================================================================

/// Sup over modes of |RK4 oracle - spectral flow| at t_end on one path.
[[nodiscard]] double rk4_vs_spectral_gap(const Params& params, int K,
                                         Environment& env, double t_end, double dt);

/// Composite-Simpson projection of grid values onto the first basis.K modes;
/// x must be the closed uniform node grid with an even panel count.
[[nodiscard]] Eigen::VectorXd project_onto_modes(const spectral::Basis& basis,
                                                 const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& u);

/// Interior sup-norm gap between the finite-difference oracle and the
/// spectral solution at t_end on one path, both truncated to K modes.
[[nodiscard]] double cn_vs_spectral_gap(Example example, const Params& params, int K,
                                        Environment& env, double t_end, int cells,
                                        double dt);

/// Error ratio under two mesh halvings against the finest grid as reference;
/// a second-order scheme gives about (1 - 1/16)/(1/4 - 1/16) = 5.
[[nodiscard]] double cn_convergence_ratio(Example example, const Params& params,
                                          Environment& env, double t_end, int cells,
                                          double dt);

// ============================================================================
// Pathwise structure checks
// ============================================================================

struct SandwichReport {
    double fraction = 0.0;
    std::int64_t violations = 0;
    std::int64_t n = 0;
};

/// Fraction of stationary samples whose normalized mode pairs satisfy the
/// sandwich bounds within the given slack.
[[nodiscard]] SandwichReport sandwich_pathwise_check(
    const Params& params, int K, const std::vector<std::pair<int, int>>& mode_pairs,
    double slack, const McOptions& opts);

/// Sup over the interior grid of |truncated ramp - exact ramp|: the
/// truncation budget eps_K for pointwise box checks.
[[nodiscard]] double ramp_truncation_sup(const spectral::Basis& basis, double b,
                                         int grid);

struct BoxReport {
    double fraction = 0.0;
    double eps_k = 0.0;
    std::int64_t n = 0;
};

/// Fraction of stationary samples with all grid values in [-eps_K, b+eps_K].
[[nodiscard]] BoxReport sup_norm_box_check(const Params& params, int K, int grid,
                                           const McOptions& opts);

struct DecayReport {
    double ratio_mean = 0.0;
    double ratio_se = 0.0;
    std::int64_t n_ratios = 0;
    double target = 0.0;   ///< E[K0] E[K1]
    double init_gap = 0.0; ///< attractor gap from two distinct seeds values
    double init_tol = 0.0; ///< acceptance bound on init_gap (2 tol)
};

/// Per-layer decay of backward-orbit residuals, normalized by each layer's
/// own entry size so the ratios estimate the mean contraction factor, plus
/// an initial-condition independence check.
[[nodiscard]] DecayReport pullback_decay_report(Example example, const Params& params,
                                                int K, int layers,
                                                const McOptions& opts);

struct RegressionReport {
    double slope = 0.0;
    double intercept = 0.0;
    std::int64_t n_points = 0;
    std::int64_t filtered = 0; ///< points dropped for underflowing regressors
};

/// Pooled regression of log |Y1_k / c_k| on -beta_k tau1_1 across samples
/// and modes k in [k_lo, k_hi]; slope near 1 confirms that high modes are
/// dominated by the single most recent relaxation time.
[[nodiscard]] RegressionReport regularity_regression(const Params& params, int K,
                                                     int k_lo, int k_hi,
                                                     const McOptions& opts);

/// Smallest envelope constant M covering normalized attractor samples for
/// modes 1..k_max at exponent r.
[[nodiscard]] double fitted_envelope_M(const Params& params, int K, int k_max,
                                       double r, closedform::Family which,
                                       const McOptions& opts);

// ============================================================================
// Report serialization
// ============================================================================

[[nodiscard]] std::string report_line(const std::string& suite, const std::string& test,
                                      const stats::StatReport& r, bool smoke = false);
[[nodiscard]] std::string report_line(const std::string& suite, const std::string& test,
                                      const stats::KSReport& r, bool smoke = false);

/// CSV grid comparison: header x,value_a,value_b,diff.
[[nodiscard]] std::string grid_comparison_csv(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& a,
                                              const Eigen::VectorXd& b);

} // namespace switchheat::verify
