#include <cmath>

#include <doctest.h>

#include "enroll/errors.hpp"
#include "enroll/model.hpp"
#include "oracles.hpp"

using namespace enroll;

namespace {

// K identical sites (alpha 1.5, beta 150) with activation days set so the
// exposures at time t land on round(i * 300 / K).
CountryPlan grid_country(int k_sites, double t_ref = 300.0) {
    CountryPlan c;
    c.id = "G";
    for (int i = 1; i <= k_sites; ++i) {
        SitePlan s;
        s.id = "s" + std::to_string(i);
        auto v = static_cast<int>(std::llround(i * 300.0 / k_sites));
        s.activation_day = static_cast<int>(t_ref) - v;
        s.prior = RatePrior{1.5, 150.0};
        c.sites.push_back(s);
    }
    return c;
}

double sup_norm_error(const CountryPlan& c, double t) {
    std::size_t n = c.sites.size();
    Eigen::ArrayXd exact = pg_pmf_vector(
        PGParams(exposure(t, c.sites[0].activation_day), c.sites[0].prior.alpha,
                 c.sites[0].prior.beta),
        51);
    for (std::size_t i = 1; i < n; ++i) {
        Eigen::ArrayXd next = pg_pmf_vector(
            PGParams(exposure(t, c.sites[i].activation_day), c.sites[i].prior.alpha,
                     c.sites[i].prior.beta),
            51);
        exact = oracles::direct_convolve(exact, next);
    }
    Eigen::ArrayXd approx = pg_pmf_vector(aggregate_pg(country_rate_moments(c, t)).pg(), 51);
    double dif = 0.0;
    for (int k = 0; k <= 50; ++k) dif = std::max(dif, std::abs(exact[k] - approx[k]));
    return dif;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("country rate moments") {
    CountryPlan c;
    c.id = "A";
    c.sites.push_back({"s1", 0, RatePrior::from_mean_var(0.5, 0.25)});
    CHECK(country_rate_moments(c, 10).mean == doctest::Approx(5.0));

    CountryPlan eq;
    eq.id = "B";
    for (int i = 0; i < 3; ++i) eq.sites.push_back({"s" + std::to_string(i), 0, {1.5, 150.0}});
    RateMoments m = country_rate_moments(eq, 10);
    CHECK(m.mean == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(m.var == doctest::Approx(0.02).epsilon(1e-12));

    // exposures (100, 200, 300)
    RateMoments g = country_rate_moments(grid_country(3), 300.0);
    CHECK(g.mean == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(g.var == doctest::Approx((1.5 / (150.0 * 150.0)) * (100.0 * 100 + 200.0 * 200 + 300.0 * 300))
                       .epsilon(1e-12));
    CHECK(g.var == doctest::Approx(9.3333333333).epsilon(1e-9));
}

TEST_CASE("zero-exposure sites contribute nothing") {
    CountryPlan c = grid_country(3);
    RateMoments before = country_rate_moments(c, 300.0);
    c.sites.push_back({"late", 400, {1.5, 150.0}});
    RateMoments after = country_rate_moments(c, 300.0);
    CHECK(before.mean == after.mean);
    CHECK(before.var == after.var);
}

TEST_CASE("aggregation") {
    // K equal sites, equal exposure v: A = K alpha, B = beta / v
    CountryPlan eq;
    eq.id = "B";
    for (int i = 0; i < 4; ++i) eq.sites.push_back({"s" + std::to_string(i), 0, {1.5, 150.0}});
    AggregatedPG ab = aggregate_pg(country_rate_moments(eq, 25.0));
    CHECK(ab.a == doctest::Approx(4 * 1.5).epsilon(1e-12));
    CHECK(ab.b == doctest::Approx(150.0 / 25.0).epsilon(1e-12));

    AggregatedPG g = aggregate_pg(country_rate_moments(grid_country(3), 300.0));
    CHECK(g.a == doctest::Approx(6.0 * 6.0 / 9.3333333333).epsilon(1e-9));
    CHECK(g.b == doctest::Approx(6.0 / 9.3333333333).epsilon(1e-9));

    // a single site recovers its own parameters
    CountryPlan single;
    single.id = "S";
    single.sites.push_back({"s", 0, {1.5, 150.0}});
    AggregatedPG one = aggregate_pg(country_rate_moments(single, 300.0));
    CHECK(one.a == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(one.b == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(aggregate_pg(RateMoments{1.0, 0.0}), degenerate_moments_error);
}

TEST_CASE("aggregation matches mean and variance exactly") {
    RateMoments m = country_rate_moments(grid_country(5), 300.0);
    PGParams pg = aggregate_pg(m).pg();
    std::int64_t hi = pg_quantile(pg, 1.0 - 1e-13);
    Eigen::ArrayXd pmf = pg_pmf_vector(pg, hi + 1);
    double mean = oracles::moment_sum(pmf, 1);
    double second = oracles::moment_sum(pmf, 2);
    CHECK(mean == doctest::Approx(m.mean).epsilon(1e-9));
    // Var = E + S^2: the Poisson layer plus the rate variance
    CHECK(second - mean * mean == doctest::Approx(m.mean + m.var).epsilon(1e-7));
}

TEST_CASE("country count distribution") {
    CountryPlan inactive;
    inactive.id = "I";
    inactive.sites.push_back({"s", 500, {1.5, 150.0}});
    DiscreteDist d = country_count_dist(inactive, 100.0);
    CHECK(d.size() == 1);
    CHECK(d.pmf[0] == 1.0);

    // single-site country equals the site pmf
    CountryPlan single;
    single.id = "S";
    single.sites.push_back({"s", 0, {1.5, 150.0}});
    DiscreteDist sd = country_count_dist(single, 300.0);
    PGParams site(300.0, 1.5, 150.0);
    for (std::int64_t k = 0; k + 1 < sd.size(); ++k)
        CHECK(sd.pmf[k] == doctest::Approx(pg_pmf(site, k)).epsilon(1e-10));
    CHECK(sd.pmf.sum() == doctest::Approx(1.0).epsilon(1e-15));

    // K = 3 grid family: sup-norm error vs the exact convolution
    CHECK(sup_norm_error(grid_country(3), 300.0) <= 0.0017 + 2e-4);
}

TEST_CASE("aggregation error is nonincreasing in the site count") {
    double prev = 1.0;
    for (int k : {2, 3, 5, 8, 10, 15, 20}) {
        double dif = sup_norm_error(grid_country(k), 300.0);
        CHECK(dif <= prev + 1e-12);
        prev = dif;
    }
}

TEST_CASE("degenerate moments fall back to a Poisson") {
    RateMoments m{4.0, 0.0};
    DiscreteDist d = count_dist_from_moments(m, 1e-9);
    Eigen::ArrayXd ref = poisson_pmf_vector(4.0, d.size());
    for (std::int64_t k = 0; k + 1 < d.size(); ++k)
        CHECK(d.pmf[k] == doctest::Approx(ref[k]).epsilon(1e-12));
    CHECK(d.pmf.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("time to target") {
    CountryPlan single;
    single.id = "S";
    single.sites.push_back({"s", 0, {1.5, 150.0}});
    CHECK(time_to_target_cdf(single, 5, 0.0) == 0.0);
    // L = 1: P(at least one arrival) = 1 - (beta/(beta+t))^alpha
    double t = 120.0;
    CHECK(time_to_target_cdf(single, 1, t) ==
          doctest::Approx(1.0 - std::pow(150.0 / (150.0 + t), 1.5)).epsilon(1e-12));
    // monotone in t, antitone in the target
    double prev = 0.0;
    for (double tt : {10.0, 50.0, 200.0, 500.0}) {
        double v = time_to_target_cdf(single, 3, tt);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(time_to_target_cdf(single, 4, 200.0) <= time_to_target_cdf(single, 3, 200.0));
}

TEST_CASE("activation grid") {
    auto days = activation_grid(0, 300, 3);
    CHECK(days == std::vector<int>{50, 150, 250});
    auto shifted = activation_grid(30, 210, 4);
    CHECK(shifted == std::vector<int>{53, 98, 143, 188});
    // the midpoint rule centers the grid for any count
    for (int n : {1, 2, 5, 9}) {
        auto g = activation_grid(30, 210, n);
        double mean = 0.0;
        for (int u : g) mean += u;
        CHECK(mean / n == doctest::Approx(120.0).epsilon(0.01));
    }
    CHECK(activation_grid(5, 5, 2) == std::vector<int>{5, 5});
    CHECK(activation_grid(0, 10, 0).empty());
}

TEST_CASE("plan validation") {
    StudyPlan plan;
    plan.target_n = 10;
    plan.t_plan_days = 100;
    plan.countries.push_back(grid_country(2));
    plan.countries.push_back(grid_country(2));  // duplicate id
    CHECK_THROWS_AS(validate_plan(plan), config_error);
    plan.countries.pop_back();
    CHECK_NOTHROW(validate_plan(plan));
    plan.countries[0].cap = -1;
    CHECK_THROWS_AS(validate_plan(plan), config_error);
}

TEST_CASE("max attainable") {
    StudyPlan plan;
    plan.target_n = 10;
    plan.t_plan_days = 100;
    plan.countries.push_back(grid_country(2));
    CHECK(!max_attainable(plan).has_value());
    plan.countries[0].cap = 7;
    CHECK(max_attainable(plan) == 7);
    CountryPlan empty;
    empty.id = "E";
    plan.countries.push_back(empty);  // uncapped but no sites: contributes 0
    CHECK(max_attainable(plan) == 7);
}

}  // TEST_SUITE
