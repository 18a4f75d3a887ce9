#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "switchheat/rng.hpp"
#include "switchheat/stats.hpp"

using namespace switchheat;
using namespace switchheat::stats;

// ============================================================================
// Reports and accumulators
// ============================================================================

TEST_CASE("make_stat_report standardizes against the target") {
    const StatReport r = make_stat_report(1.2, 0.1, 50, 1.0);
    CHECK(r.z == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.pass);
    CHECK_FALSE(make_stat_report(1.5, 0.1, 50, 1.0).pass);

    const StatReport exact = make_stat_report(3.0, 0.0, 10, 3.0);
    CHECK(exact.pass);
    CHECK_FALSE(make_stat_report(3.0, 0.0, 10, 3.1).pass);
}

TEST_CASE("running stats match direct formulas and merge consistently") {
    const std::vector<double> xs{1.0, 2.0, 4.0, 8.0, 16.0};
    RunningStats all;
    for (double x : xs) all.add(x);
    CHECK(all.count() == 5);
    CHECK(all.mean() == doctest::Approx(6.2).epsilon(1e-14));
    CHECK(all.variance() == doctest::Approx(37.2).epsilon(1e-12));
    CHECK(all.std_error() == doctest::Approx(std::sqrt(37.2 / 5.0)).epsilon(1e-12));

    RunningStats left, right;
    left.add(xs[0]);
    left.add(xs[1]);
    for (std::size_t i = 2; i < xs.size(); ++i) right.add(xs[i]);
    left.merge(right);
    CHECK(left.count() == 5);
    CHECK(left.mean() == doctest::Approx(all.mean()).epsilon(1e-14));
    CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-13));

    RunningStats empty;
    CHECK_THROWS_AS(empty.mean(), std::logic_error);
    empty.merge(all);
    CHECK(empty.count() == 5);
}

// ============================================================================
// Kolmogorov-Smirnov
// ============================================================================

TEST_CASE("ks critical values") {
    CHECK(ks_critical(0.01, 100) == doctest::Approx(1.62762 / 10.0).epsilon(1e-6));
    CHECK(ks_critical(0.05, 400) == doctest::Approx(1.35810 / 20.0).epsilon(1e-6));
    CHECK(ks_critical_two_sample(0.01, 100, 100) ==
          doctest::Approx(1.62762 * std::sqrt(0.02)).epsilon(1e-6));
    CHECK_THROWS_AS(ks_critical(0.1, 100), config_error);
    CHECK_THROWS_AS(ks_critical(0.01, 0), config_error);
}

TEST_CASE("one-sample ks meta-test calibration on uniforms") {
    RngStream rng(101);
    int passes = 0;
    for (int rep = 0; rep < 100; ++rep) {
        RngStream sub = rng.substream(std::uint64_t(rep));
        std::vector<double> u;
        u.reserve(200);
        for (int i = 0; i < 200; ++i) u.push_back(sub.uniform());
        const auto r = ks_one_sample(
            std::move(u), [](double x) { return x; }, 0.01);
        passes += r.pass ? 1 : 0;
        CHECK(r.statistic >= 0.0);
        CHECK(r.statistic <= 1.0);
    }
    CHECK(passes >= 99);
}

TEST_CASE("one-sample ks rejects a wrong cdf") {
    RngStream rng(7);
    std::vector<double> u;
    for (int i = 0; i < 2000; ++i) u.push_back(0.5 * rng.uniform());
    const auto r = ks_one_sample(
        std::move(u), [](double x) { return x; }, 0.01);
    CHECK_FALSE(r.pass);
    CHECK_THROWS_AS(ks_one_sample({}, [](double x) { return x; }, 0.01), config_error);
    CHECK_THROWS_AS(ks_one_sample(
                        {0.5}, [](double) { return 1.5; }, 0.01),
                    std::invalid_argument);
}

TEST_CASE("two-sample ks accepts equal laws and rejects a shift") {
    RngStream rng(13);
    std::vector<double> a, b;
    for (int i = 0; i < 1500; ++i) a.push_back(rng.uniform());
    for (int i = 0; i < 1500; ++i) b.push_back(rng.uniform());
    CHECK(ks_two_sample(a, b, 0.01).pass);

    for (double& x : b) x += 0.1;
    CHECK_FALSE(ks_two_sample(a, b, 0.01).pass);
    CHECK_THROWS_AS(ks_two_sample({}, {0.1}, 0.01), config_error);
}

// ============================================================================
// Regularized incomplete beta
// ============================================================================

TEST_CASE("beta cdf against independently computed references") {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    CHECK(beta_cdf(0.3, 2.5, 1.5) ==
          doctest::Approx(0.088943723170665599).epsilon(1e-10));
    CHECK(beta_cdf(0.75, 0.5, 3.0) ==
          doctest::Approx(0.99457604965869126).epsilon(1e-10));
    CHECK(beta_cdf(0.2, 1.0 + 1.0 / pi2, 1.0 / pi2) ==
          doctest::Approx(0.017583197790296885).epsilon(1e-10));
    CHECK(beta_cdf(0.9, 8.0, 2.0) == doctest::Approx(0.774840978).epsilon(1e-10));
    CHECK(beta_cdf(1e-4, 0.25, 0.75) ==
          doctest::Approx(0.090032081789499989).epsilon(1e-10));
}

TEST_CASE("beta cdf normalization, monotonicity, and symmetry") {
    for (double a : {0.0253, 0.5, 1.0, 2.0, 8.0})
        for (double b : {0.0253, 0.5, 1.0, 2.0, 8.0}) {
            CHECK(beta_cdf(1.0, a, b) == 1.0);
            CHECK(beta_cdf(0.0, a, b) == 0.0);
            for (double x : {0.1, 0.37, 0.62, 0.9})
                CHECK(std::abs(regularized_incomplete_beta(a, b, x) -
                               (1.0 - regularized_incomplete_beta(b, a, 1.0 - x))) <=
                      1e-12);
        }

    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double v = beta_cdf(double(i) / 1000.0, 1.101321, 0.101321);
        CHECK(v >= prev);
        prev = v;
    }

    CHECK(beta_cdf(-0.1, 1.0, 1.0) == 0.0);
    CHECK(beta_cdf(1.2, 1.0, 1.0) == 1.0);
    CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), std::invalid_argument);
}

// ============================================================================
// Least squares
// ============================================================================

TEST_CASE("fit_line recovers exact and noisy lines") {
    const std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(2.5 * x - 1.0);
    const LineFit exact = fit_line(xs, ys);
    CHECK(exact.slope == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(exact.intercept == doctest::Approx(-1.0).epsilon(1e-13));

    const LineFit mean_only = fit_line({1.0, 1.0, 2.0}, {3.0, 5.0, 4.0});
    CHECK(mean_only.slope == doctest::Approx(0.0).epsilon(1e-14));

    CHECK_THROWS_AS(fit_line({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_line({1.0, 2.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_line({1.0, 1.0}, {1.0, 2.0}), std::invalid_argument);
}
