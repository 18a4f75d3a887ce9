#include <doctest.h>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "switchheat/closed_forms.hpp"
#include "switchheat/errors.hpp"
#include "switchheat/spectral.hpp"
#include "switchheat/stats.hpp"
#include "switchheat/switching.hpp"
#include "switchheat/verify.hpp"

using namespace switchheat;
using spectral::Example;
using spectral::Params;
using verify::McOptions;

namespace {

McOptions mc(std::int64_t n, std::uint64_t seed) {
    McOptions opts;
    opts.n_samples = n;
    opts.seed = seed;
    return opts;
}

} // namespace

// ============================================================================
// Sampler determinism
// ============================================================================

TEST_CASE("stationary sampler is a pure function of seed and index") {
    const Params unit;
    verify::StationarySampler a(Example::dd, unit, 8, mc(100, 42));
    verify::StationarySampler b(Example::dd, unit, 8, mc(100, 42));

    CHECK((a.stationary(17) - b.stationary(17)).norm() == 0.0);
    CHECK((a.attractor(5, hybrid::PullbackTarget::Y0) -
           b.attractor(5, hybrid::PullbackTarget::Y0))
              .norm() == 0.0);
    CHECK(a.environment(17).tau0(1) == b.environment(17).tau0(1));

    verify::StationarySampler c(Example::dd, unit, 8, mc(100, 43));
    CHECK((a.stationary(17) - c.stationary(17)).norm() > 0.0);

    CHECK((a.attractor(5, hybrid::PullbackTarget::Y0) -
           a.attractor(5, hybrid::PullbackTarget::Y1))
              .norm() > 0.0);
}

TEST_CASE("parallel estimators are bit-identical across worker counts") {
    const Params unit;
    McOptions t1 = mc(2000, 33);
    McOptions t2 = t1;
    McOptions t4 = t1;
    t1.threads = 1;
    t2.threads = 2;
    t4.threads = 4;
    const auto a = verify::estimate_l2_variance(Example::dd, unit, 16, t1);
    const auto b = verify::estimate_l2_variance(Example::dd, unit, 16, t2);
    const auto c = verify::estimate_l2_variance(Example::dd, unit, 16, t4);
    CHECK(a.estimate == b.estimate);
    CHECK(b.estimate == c.estimate);
    CHECK(a.std_error == c.std_error);
    CHECK(a.n == 2000);
}

// ============================================================================
// Moment estimators
// ============================================================================

TEST_CASE("stationary mean field matches the closed-form profile") {
    const Params unit;

    SUBCASE("absorbing example") {
        const auto rep = verify::estimate_mean_field(Example::dd, unit, 128, 16,
                                                     mc(2000, 21));
        CHECK(rep.failures == 0);
        CHECK(rep.max_abs_z <= 3.5);
        CHECK(rep.fraction_within(2.0) >= 0.9);
        CHECK(rep.fraction_within(rep.max_abs_z) == 1.0);
        REQUIRE(rep.points.size() == 15); // interior nodes of a 16-cell grid
        double prev = 0.0;
        for (const auto& pt : rep.points) {
            CHECK(pt.x > prev);
            CHECK(pt.x < unit.L);
            CHECK(pt.report.n == 2000);
            prev = pt.x;
        }
    }

    SUBCASE("reflecting example") {
        const auto rep = verify::estimate_mean_field(Example::dn, unit, 128, 16,
                                                     mc(1000, 21));
        CHECK(rep.failures == 0);
        CHECK(rep.max_abs_z <= 3.5);
        CHECK(rep.fraction_within(2.0) >= 0.9);
    }

    SUBCASE("aborts when pullbacks stop converging") {
        McOptions bad = mc(200, 9);
        bad.tol = 1e-300;
        bad.max_depth = 1;
        CHECK_THROWS_AS((void)verify::estimate_mean_field(Example::dd, unit, 8, 8, bad),
                        convergence_error);
    }
}

TEST_CASE("least-squares slope estimator recovers the flux closed form") {
    const Params unit;
    const auto rep = verify::estimate_dn_slope(unit, 64, 64, 0.9375, mc(3000, 2));
    const double target = closedform::dn_slope(unit);
    CHECK(rep.target == doctest::Approx(target).epsilon(1e-12));
    CHECK(rep.pass);
    CHECK(std::abs(rep.estimate - target) / target <= 0.03);
    CHECK(rep.std_error > 0.0);
    CHECK(rep.n == 3000);
}

TEST_CASE("L2 variance estimator matches the series closed form") {
    const Params unit;

    SUBCASE("truncation moves the estimate by at most the series tail") {
        const auto lo = verify::estimate_l2_variance(Example::dd, unit, 16, mc(2000, 33));
        const auto hi = verify::estimate_l2_variance(Example::dd, unit, 64, mc(2000, 33));
        const double tail = closedform::dd_l2_variance(unit) -
                            closedform::dd_l2_variance_series(unit, 16);
        CHECK(tail > 0.0);
        CHECK(std::abs(hi.estimate - lo.estimate) <= tail);
        CHECK(hi.pass);
        CHECK(hi.target == doctest::Approx(closedform::dd_l2_variance(unit)));
    }

    SUBCASE("zero forcing gives an exactly degenerate field") {
        Params nob;
        nob.b = 0.0;
        const auto rep = verify::estimate_l2_variance(Example::dd, nob, 16, mc(2000, 33));
        CHECK(rep.estimate == 0.0);
        CHECK(rep.std_error == 0.0);
        CHECK(rep.pass);
    }
}

TEST_CASE("joint second moments match the resolvent formula") {
    const Params unit;
    const McOptions opts = mc(2000, 5);
    for (auto [n, m] : {std::pair{1, 2}, std::pair{1, 1}, std::pair{2, 3}}) {
        const auto rep = verify::estimate_joint_moment(unit, 4, n, m, opts);
        CAPTURE(n);
        CAPTURE(m);
        CHECK(rep.pass);
        CHECK(rep.target ==
              doctest::Approx(closedform::dd_joint_second_moment(unit, n, m)));
        CHECK(rep.std_error > 0.0);
    }
}

// ============================================================================
// Distributional tests
// ============================================================================

TEST_CASE("attractor coefficients follow their Beta marginals") {
    const Params unit;
    const McOptions opts = mc(2000, 1);

    for (int k : {1, 2}) {
        for (auto fam : {closedform::Family::Y0, closedform::Family::Y1}) {
            CAPTURE(k);
            const auto rep = verify::ks_beta_marginal(unit, 32, k, fam, 0.01, opts);
            CHECK(rep.pass);
            CHECK(rep.n == 2000);
            CHECK(rep.statistic < rep.critical);
        }
    }

    SUBCASE("a deliberately wrong target law is rejected") {
        const auto rep = verify::ks_beta_marginal(unit, 32, 1, closedform::Family::Y0,
                                                  0.01, opts, std::make_pair(1.0, 1.0));
        CHECK_FALSE(rep.pass);
    }

    SUBCASE("mode index beyond the truncation is rejected") {
        CHECK_THROWS_AS((void)verify::ks_beta_marginal(unit, 8, 9,
                                                       closedform::Family::Y0, 0.01,
                                                       opts),
                        config_error);
    }
}

TEST_CASE("invariance two-sample test accepts the fixed point and rejects shifts") {
    const Params unit;

    SUBCASE("first coefficient statistic") {
        verify::InvarianceOptions inv;
        inv.example = Example::dd;
        inv.k = 1;
        const auto rep = verify::invariance_two_sample(unit, 16, inv, 0.01, mc(1500, 101));
        CHECK(rep.pass);
    }

    SUBCASE("midpoint field statistic on the reflecting example") {
        verify::InvarianceOptions inv;
        inv.example = Example::dn;
        inv.midpoint = true;
        const auto rep = verify::invariance_two_sample(unit, 16, inv, 0.01, mc(1000, 101));
        CHECK(rep.pass);
    }

    SUBCASE("a shifted comparison set is rejected") {
        verify::InvarianceOptions inv;
        inv.shift = 0.1;
        const auto rep = verify::invariance_two_sample(unit, 16, inv, 0.01, mc(1000, 101));
        CHECK_FALSE(rep.pass);
    }

    SUBCASE("coefficient index beyond the truncation is rejected") {
        verify::InvarianceOptions inv;
        inv.k = 20;
        CHECK_THROWS_AS((void)verify::invariance_two_sample(unit, 8, inv, 0.01,
                                                            mc(100, 1)),
                        config_error);
    }
}

TEST_CASE("simulated ages match the stationary age law") {
    const McOptions opts = mc(2000, 1);

    SUBCASE("symmetric rates") {
        const auto rep =
            verify::age_distribution_test(exponential_laws(1.0, 1.0), 50.0, 0.01, opts);
        CHECK(rep.age_state0.pass);
        CHECK(rep.age_state1.pass);
        CHECK(rep.occupancy.pass);
        CHECK(rep.occupancy.target == doctest::Approx(0.5));
        CHECK(rep.occupancy.n == 2000);
    }

    SUBCASE("asymmetric rates") {
        const auto rep =
            verify::age_distribution_test(exponential_laws(2.0, 1.0), 50.0, 0.01, opts);
        CHECK(rep.age_state0.pass);
        CHECK(rep.age_state1.pass);
        CHECK(rep.occupancy.pass);
        CHECK(rep.occupancy.target == doctest::Approx(2.0 / 3.0));
    }

    SUBCASE("horizon must dominate the holding means") {
        CHECK_THROWS_AS((void)verify::age_distribution_test(exponential_laws(1.0, 1.0),
                                                            5.0, 0.01, opts),
                        config_error);
    }
}

// ============================================================================
// Weak-form PDE tests
// ============================================================================

TEST_CASE("bump test function is a compactly supported cubic spline") {
    const spectral::Basis dd(spectral::BasisKind::dd, 2.0, 1.0, 32);
    const auto bump = verify::make_bump(dd);

    CHECK(bump.L == 2.0);
    CHECK(bump.eval(0.5) == doctest::Approx(0.0).scale(1.0));
    CHECK(bump.eval(1.5) == doctest::Approx(0.0).scale(1.0));
    CHECK(bump.eval(0.1) == 0.0);
    CHECK(bump.eval(1.9) == 0.0);
    CHECK(bump.eval(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

    const double h = 1e-5;
    const double fd =
        (bump.eval(1.1 + h) - 2.0 * bump.eval(1.1) + bump.eval(1.1 - h)) / (h * h);
    CHECK(bump.second_derivative(1.1) == doctest::Approx(fd).epsilon(1e-5));

    CHECK(bump.phi_k.size() == 32);

    const spectral::Basis dn(spectral::BasisKind::dn, 2.0, 1.0, 32);
    CHECK_THROWS_AS((void)verify::make_bump(dn), config_error);
}

TEST_CASE("weak-form residual of the mean PDE vanishes") {
    const Params unit;

    SUBCASE("zero forcing collapses the residual exactly") {
        Params nob;
        nob.b = 0.0;
        const auto rep = verify::weak_mean_pde_residual(Example::dd, nob, 32, 0.5, 1e-3,
                                                        mc(400, 13));
        CHECK(rep.estimate == 0.0);
        CHECK(rep.std_error == 0.0);
        CHECK(rep.pass);
    }

    SUBCASE("transient residual is statistical noise") {
        const auto dd = verify::weak_mean_pde_residual(Example::dd, unit, 64, 0.4, 0.05,
                                                       mc(1000, 13));
        CHECK(dd.pass);
        CHECK(dd.n == 1000);
        const auto dn = verify::weak_mean_pde_residual(Example::dn, unit, 64, 0.4, 0.05,
                                                       mc(1000, 13));
        CHECK(dn.pass);
    }

    SUBCASE("stationary residual is statistical noise") {
        const auto rep = verify::stationary_weak_pde(Example::dd, unit, 32, mc(400, 13));
        CHECK(rep.pass);
        CHECK(rep.target == 0.0);
    }

    SUBCASE("step and horizon are validated") {
        CHECK_THROWS_AS((void)verify::weak_mean_pde_residual(Example::dd, unit, 8, 0.5,
                                                             0.0, mc(100, 1)),
                        config_error);
        CHECK_THROWS_AS((void)verify::weak_mean_pde_residual(Example::dd, unit, 8, 1e-4,
                                                             1e-3, mc(100, 1)),
                        config_error);
    }
}

// ============================================================================
// Oracle cross-checks
// ============================================================================

TEST_CASE("RK4 oracle tracks the spectral flow through switches") {
    const Params unit;
    Environment env(exponential_laws(1.0, 2.0), 7u);
    const double t_end = env.cycle_end(1) + 0.5 * env.tau0(1);
    const double gap = verify::rk4_vs_spectral_gap(unit, 8, env, t_end, 1e-4);
    CHECK(gap <= 1e-8);
}

TEST_CASE("Simpson projection recovers known mode coefficients") {
    const spectral::Basis dd(spectral::BasisKind::dd, 1.0, 1.0, 8);

    SUBCASE("smooth synthesis round-trips through the quadrature") {
        spectral::Coeffs truth(8);
        truth << 0.9, -0.4, 0.2, 0.05, -0.3, 0.11, 0.0, -0.07;
        const int nodes = 257;
        Eigen::VectorXd x(nodes), u(nodes);
        for (int i = 0; i < nodes; ++i) {
            x[i] = double(i) / double(nodes - 1);
            u[i] = spectral::evaluate({dd, truth}, x[i]);
        }
        const Eigen::VectorXd got = verify::project_onto_modes(dd, x, u);
        CHECK((got - truth).norm() <= 1e-12);
    }

    SUBCASE("odd panel counts are rejected") {
        Eigen::VectorXd x(4), u(4);
        x << 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0;
        u.setZero();
        CHECK_THROWS_AS(
            (void)verify::project_onto_modes(
                spectral::Basis(spectral::BasisKind::dd, 1.0, 1.0, 2), x, u),
            config_error);
    }
}

TEST_CASE("Crank-Nicolson oracle agrees with the spectral solution") {
    const Params unit;

    SUBCASE("absorbing example across a mid-path switch") {
        Environment env(exponential_laws(1.0, 1.0), 5u);
        const double gap =
            verify::cn_vs_spectral_gap(Example::dd, unit, 64, env, 0.8, 512, 1e-4);
        CHECK(gap <= 5e-4);
    }

    SUBCASE("reflecting example") {
        Environment env(exponential_laws(1.0, 1.0), 7u);
        const double gap =
            verify::cn_vs_spectral_gap(Example::dn, unit, 64, env, 1.0, 512, 1e-4);
        CHECK(gap <= 5e-4);
    }

    SUBCASE("mesh refinement shows second-order decay") {
        Environment env(exponential_laws(1.0, 1.0), 4u);
        const double ratio =
            verify::cn_convergence_ratio(Example::dd, unit, env, 0.5, 128, 4e-4);
        CHECK(ratio >= 3.0);
        CHECK(ratio <= 5.5);
    }
}

// ============================================================================
// Pathwise structure checks
// ============================================================================

TEST_CASE("pathwise sandwich bounds hold with tiny slack") {
    const Params unit;
    const auto rep =
        verify::sandwich_pathwise_check(unit, 16, {{1, 2}, {1, 3}}, 1e-9, mc(1000, 41));
    CHECK(rep.fraction == 1.0);
    CHECK(rep.violations == 0);
    CHECK(rep.n == 1000);

    SUBCASE("an impossible negative slack flags every sample") {
        const auto neg =
            verify::sandwich_pathwise_check(unit, 16, {{1, 2}}, -0.5, mc(1000, 41));
        CHECK(neg.violations == 1000);
        CHECK(neg.fraction == 0.0);
    }

    SUBCASE("mode pairs must be strictly ordered") {
        CHECK_THROWS_AS(
            (void)verify::sandwich_pathwise_check(unit, 8, {{2, 2}}, 0.0, mc(100, 1)),
            config_error);
    }
}

TEST_CASE("sup-norm box check uses the ramp truncation budget") {
    const Params unit;
    const spectral::Basis k32(spectral::BasisKind::dd, 1.0, 1.0, 32);
    const spectral::Basis k64(spectral::BasisKind::dd, 1.0, 1.0, 64);
    const double e32 = verify::ramp_truncation_sup(k32, 1.0, 64);
    const double e64 = verify::ramp_truncation_sup(k64, 1.0, 64);

    // The overshoot near the forced endpoint plateaus rather than shrinking
    // with K, so the budget is checked as a band, not a monotone sequence.
    CHECK(e32 > 0.1);
    CHECK(e32 < 0.3);
    CHECK(e64 > 0.1);
    CHECK(e64 < 0.3);

    const auto box = verify::sup_norm_box_check(unit, 32, 64, mc(500, 41));
    CHECK(box.eps_k == e32);
    CHECK(box.fraction == 1.0);
    CHECK(box.n == 500);
}

TEST_CASE("backward residual decay matches the contraction certificate") {
    const Params unit;
    const auto rep = verify::pullback_decay_report(Example::dd, unit, 8, 6, mc(100, 3));

    CHECK(rep.target == doctest::Approx(0.008463938976579034).epsilon(1e-12));
    CHECK(rep.ratio_mean >= 0.5 * rep.target);
    CHECK(rep.ratio_mean <= 2.0 * rep.target);
    CHECK(rep.ratio_se > 0.0);
    CHECK(rep.n_ratios >= 200);
    CHECK(rep.init_gap <= rep.init_tol);
    CHECK(rep.init_tol == 2e-10);

    CHECK_THROWS_AS((void)verify::pullback_decay_report(Example::dd, unit, 8, 0,
                                                        mc(100, 3)),
                    config_error);
}

TEST_CASE("high-mode regression recovers unit slope") {
    const Params unit;
    const auto rep = verify::regularity_regression(unit, 64, 16, 32, mc(300, 17));
    CHECK(rep.slope >= 0.95);
    CHECK(rep.slope <= 1.05);
    CHECK(std::abs(rep.intercept) <= 0.1);
    CHECK(rep.n_points >= 100);

    CHECK_THROWS_AS((void)verify::regularity_regression(unit, 8, 4, 9, mc(100, 1)),
                    config_error);
}

TEST_CASE("fitted envelope constants are moderate") {
    const Params unit;
    const double m0 =
        verify::fitted_envelope_M(unit, 64, 32, 0.25, closedform::Family::Y0, mc(200, 17));
    const double m1 =
        verify::fitted_envelope_M(unit, 64, 32, 0.25, closedform::Family::Y1, mc(200, 17));
    CHECK(std::isfinite(m0));
    CHECK(std::isfinite(m1));
    CHECK(m0 > 0.2);
    CHECK(m0 < 5.0);
    CHECK(m1 > 0.2);
    CHECK(m1 < 5.0);
}

// ============================================================================
// Report serialization
// ============================================================================

TEST_CASE("report lines serialize as single-line ordered JSON") {
    const auto sr = stats::make_stat_report(1.1, 0.05, 7, 1.0);
    const std::string line = verify::report_line("suite", "z_test", sr);
    CHECK(line ==
          R"({"suite":"suite","test":"z_test","estimate":1.1,"target":1.0,"z":2.0000000000000018,"pass":true})");
    CHECK(line.find('\n') == std::string::npos);

    stats::KSReport kr;
    kr.statistic = 0.02;
    kr.n = 100;
    kr.critical = 0.162;
    kr.pass = true;
    const std::string ks_line = verify::report_line("suite", "ks_test", kr, true);
    CHECK(ks_line ==
          R"({"suite":"suite","test":"ks_test","estimate":0.02,"target":0.162,"ks":0.02,"pass":true,"smoke":true})");

    const auto parsed = nlohmann::json::parse(ks_line);
    CHECK(parsed.at("smoke").get<bool>());
    CHECK(parsed.at("ks").get<double>() == 0.02);

    const std::string plain = verify::report_line("s", "t", kr);
    CHECK(nlohmann::json::parse(plain).count("smoke") == 0);
}

TEST_CASE("grid comparison CSV is %.17g formatted") {
    Eigen::VectorXd x(2), a(2), b(2);
    x << 0.25, 0.5;
    a << 1.0, 2.0;
    b << 1.5, 2.5;
    CHECK(verify::grid_comparison_csv(x, a, b) ==
          "x,value_a,value_b,diff\n0.25,1,1.5,-0.5\n0.5,2,2.5,-0.5\n");

    Eigen::VectorXd short_b(1);
    short_b << 1.0;
    CHECK_THROWS_AS((void)verify::grid_comparison_csv(x, a, short_b),
                    std::invalid_argument);
}
