#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "switchheat/closed_forms.hpp"
#include "switchheat/spectral.hpp"
#include "switchheat/switching.hpp"
#include "switchheat/verify.hpp"

// Full-size statistical acceptance run: one pass/fail line per criterion,
// nonzero exit if any criterion fails. Seeds are pinned; every tolerance is
// stated inline next to the check it guards.

using namespace switchheat;
using spectral::Example;
using spectral::Params;
using verify::McOptions;

namespace {

int g_failures = 0;

McOptions mc(std::int64_t n, std::uint64_t seed) {
    McOptions opts;
    opts.n_samples = n;
    opts.seed = seed;
    return opts;
}

void line(int idx, bool pass, const std::string& detail) {
    std::printf("C%02d %s %s\n", idx, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void guarded(int idx, const char* name, bool (*body)(std::string&)) {
    std::string detail = name;
    bool pass = false;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail += std::string(" threw: ") + e.what();
    }
    line(idx, pass, detail);
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), format, a, b, c);
    return buf;
}

// Rates with r0/r1 = 0.1 summing to the given total.
Params rho_params(double total) {
    Params p;
    p.r1 = total / 1.1;
    p.r0 = total - p.r1;
    return p;
}

// ----------------------------------------------------------------------------

bool c01_dn_slope(std::string& detail) {
    const Params unit;
    const double closed = closedform::dn_slope(unit);
    const double series = closedform::dn_slope_series(unit, 100000);
    const auto mc_fit = verify::estimate_dn_slope(unit, 64, 64, 0.9375, mc(100000, 12));

    const bool value_ok = std::abs(closed - 0.6141814038136612) <= 1e-6;
    const double series_rel = std::abs(series - closed) / closed;
    const double mc_rel = (mc_fit.estimate - closed) / closed;
    detail = fmt("dn slope: closed=%.9f series_rel=%.2e mc_rel=%+.4f%%", closed,
                 series_rel, 100.0 * mc_rel);
    return value_ok && series_rel <= 1e-4 && std::abs(mc_rel) <= 0.01;
}

bool c02_slope_limits(std::string& detail) {
    const Params slow = rho_params(1e-3);
    const Params fast = rho_params(1e3);
    const double slow_limit = (1.0 - slow.occupancy()) * slow.b / slow.L;
    const double fast_limit = fast.b / fast.L;
    const double slow_rel = std::abs(closedform::dn_slope(slow) - slow_limit) / slow_limit;
    const double fast_rel = std::abs(closedform::dn_slope(fast) - fast_limit) / fast_limit;
    detail = fmt("slope limits at rho=0.1: slow_rel=%.2e fast_rel=%.2e", slow_rel,
                 fast_rel);
    return slow_rel <= 5e-3 && fast_rel <= 5e-3;
}

bool c03_mean_field(std::string& detail) {
    const Params unit;
    const auto rep = verify::estimate_mean_field(Example::dd, unit, 16384, 64,
                                                 mc(10000, 1));
    detail = fmt("dd mean field: max|z|=%.3f frac2=%.4f failures=%.0f", rep.max_abs_z,
                 rep.fraction_within(2.0), double(rep.failures));
    return rep.failures == 0 && rep.max_abs_z <= 3.0 && rep.fraction_within(2.0) >= 0.95;
}

bool c04_beta_marginals(std::string& detail) {
    Params p;
    p.r0 = 4.0;
    p.r1 = 4.0;
    const McOptions opts = mc(10000, 1);
    double worst = 0.0;
    bool all = true;
    for (int k = 1; k <= 4; ++k) {
        for (auto fam : {closedform::Family::Y0, closedform::Family::Y1}) {
            const auto r = verify::ks_beta_marginal(p, 8, k, fam, 0.01, opts);
            worst = std::max(worst, r.statistic / r.critical);
            all = all && r.pass;
        }
    }
    const auto wrong = verify::ks_beta_marginal(p, 8, 1, closedform::Family::Y0, 0.01,
                                                opts, std::make_pair(1.0, 1.0));
    detail = fmt("beta marginals k=1..4: worst stat/crit=%.3f negative_control_fails=%.0f",
                 worst, wrong.pass ? 0.0 : 1.0);
    return all && !wrong.pass;
}

bool c05_l2_variance(std::string& detail) {
    const Params unit;
    const double closed = closedform::dd_l2_variance(unit);
    const auto rep = verify::estimate_l2_variance(Example::dd, unit, 1024, mc(100000, 1));
    detail = fmt("dd L2 variance: closed=%.7f z=%+.3f", closed, rep.z);
    return std::abs(closed - 0.07398645694006092) <= 1e-9 && rep.pass;
}

bool c06_joint_moments(std::string& detail) {
    const Params unit;
    bool all = true;
    double worst_z = 0.0;
    for (auto [n, m] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 3}}) {
        const auto r = verify::estimate_joint_moment(unit, 4, n, m, mc(100000, 5));
        all = all && r.pass;
        if (std::abs(r.z) > std::abs(worst_z)) worst_z = r.z;
    }
    double diag_gap = 0.0;
    for (int k = 1; k <= 3; ++k) {
        const auto marg = closedform::beta_marginal(unit, k, closedform::Family::Y0);
        const double direct = marg.scale * marg.scale * marg.second_moment();
        diag_gap = std::max(diag_gap,
                            std::abs(closedform::dd_joint_second_moment(unit, k, k) -
                                     direct));
    }
    detail = fmt("joint moments: worst_z=%+.3f diag_identity_gap=%.2e", worst_z, diag_gap);
    return all && diag_gap <= 1e-12;
}

bool c07_invariance(std::string& detail) {
    const Params unit;
    bool all = true;
    double worst = 0.0;
    for (int k : {1, 2}) {
        verify::InvarianceOptions inv;
        inv.k = k;
        const auto r = verify::invariance_two_sample(unit, 16, inv, 0.01, mc(5000, 101));
        all = all && r.pass;
        worst = std::max(worst, r.statistic / r.critical);
    }
    detail = fmt("distributional invariance k=1,2: worst stat/crit=%.3f", worst);
    return all;
}

bool c08_contraction(std::string& detail) {
    const Params unit;
    const auto rep = verify::pullback_decay_report(Example::dd, unit, 16, 6, mc(100, 29));
    const bool target_ok = std::abs(rep.target - 0.008463938976579034) <= 1e-6;
    const bool band = rep.ratio_mean >= 0.5 * rep.target &&
                      rep.ratio_mean <= 2.0 * rep.target;
    detail = fmt("pullback contraction: ratio=%.5f target=%.5f init_gap=%.2e",
                 rep.ratio_mean, rep.target, rep.init_gap);
    return target_ok && band && rep.init_gap <= rep.init_tol;
}

bool c09_pathwise(std::string& detail) {
    const Params unit;
    const auto sw = verify::sandwich_pathwise_check(unit, 16, {{1, 2}, {1, 3}, {2, 4}},
                                                    1e-12, mc(10000, 41));
    const auto box = verify::sup_norm_box_check(unit, 16384, 256, mc(10000, 41));
    detail = fmt("pathwise structure: sandwich_frac=%.4f box_frac=%.4f eps_K=%.2e",
                 sw.fraction, box.fraction, box.eps_k);
    return sw.fraction == 1.0 && box.fraction == 1.0;
}

bool c10_age(std::string& detail) {
    const auto rep = verify::age_distribution_test(exponential_laws(1.0, 1.0), 50.0,
                                                   0.01, mc(10000, 1));
    detail = fmt("age/renewal: ks0=%.0f ks1=%.0f occupancy_z=%+.3f",
                 rep.age_state0.pass ? 1.0 : 0.0, rep.age_state1.pass ? 1.0 : 0.0,
                 rep.occupancy.z);
    return rep.age_state0.pass && rep.age_state1.pass && rep.occupancy.pass;
}

bool c11_weak_pde(std::string& detail) {
    const Params unit;
    const auto trans = verify::weak_mean_pde_residual(Example::dd, unit, 256, 0.5, 1e-3,
                                                      mc(100000, 13));
    const auto stat = verify::stationary_weak_pde(Example::dd, unit, 256, mc(100000, 13));
    detail = fmt("weak mean PDE: transient_z=%+.3f stationary_z=%+.3f", trans.z, stat.z);
    return trans.pass && stat.pass;
}

bool c12_oracles(std::string& detail) {
    const Params unit;
    const auto laws = exponential_laws(1.0, 1.0);

    Environment rk_env(laws, 7u);
    const double t_end = rk_env.cycle_end(1) + 0.5 * rk_env.tau0(1);
    const double rk_gap = verify::rk4_vs_spectral_gap(unit, 8, rk_env, t_end, 1e-4);

    Environment cn_env(laws, 1u);
    const double cn_gap =
        verify::cn_vs_spectral_gap(Example::dn, unit, 64, cn_env, 1.0, 512, 1e-4);
    Environment ratio_env(laws, 1u);
    const double ratio =
        verify::cn_convergence_ratio(Example::dn, unit, ratio_env, 1.0, 512, 1e-4);

    detail = fmt("oracle triangle: rk4_gap=%.2e cn_gap=%.2e order_ratio=%.3f", rk_gap,
                 cn_gap, ratio);
    return rk_gap <= 1e-8 && cn_gap <= 5e-3 * unit.b && ratio >= 3.0 && ratio <= 5.5;
}

bool c13_regression(std::string& detail) {
    const Params unit;
    const auto rep = verify::regularity_regression(unit, 64, 16, 32, mc(1000, 17));
    detail = fmt("high-mode regression: slope=%.5f intercept=%+.4f", rep.slope,
                 rep.intercept);
    return rep.slope >= 0.95 && rep.slope <= 1.05;
}

} // namespace

int main() {
    guarded(1, "dn slope", c01_dn_slope);
    guarded(2, "slope limits", c02_slope_limits);
    guarded(3, "dd mean field", c03_mean_field);
    guarded(4, "beta marginals", c04_beta_marginals);
    guarded(5, "dd L2 variance", c05_l2_variance);
    guarded(6, "joint moments", c06_joint_moments);
    guarded(7, "distributional invariance", c07_invariance);
    guarded(8, "pullback contraction", c08_contraction);
    guarded(9, "pathwise structure", c09_pathwise);
    guarded(10, "age/renewal", c10_age);
    guarded(11, "weak mean PDE", c11_weak_pde);
    guarded(12, "oracle triangle", c12_oracles);
    guarded(13, "high-mode regression", c13_regression);

    if (g_failures > 0) {
        std::printf("%d of 13 criteria failed\n", g_failures);
        return 1;
    }
    std::printf("all 13 criteria passed\n");
    return 0;
}
