#include <cmath>

#include <doctest.h>

#include "enroll/capped.hpp"
#include "enroll/oracle.hpp"
#include "oracles.hpp"

using namespace enroll;

namespace {

CountryPlan grid_country(int k_sites) {
    CountryPlan c;
    c.id = "G";
    for (int i = 1; i <= k_sites; ++i) {
        auto v = static_cast<int>(std::llround(i * 300.0 / k_sites));
        c.sites.push_back({"s" + std::to_string(i), 300 - v, RatePrior{1.5, 150.0}});
    }
    return c;
}

}  // namespace

TEST_SUITE("capped") {

TEST_CASE("capped site distribution") {
    SitePlan site{"s", 0, RatePrior{1.5, 150.0}};
    CappedDist zero = capped_site_dist(site, 100.0, 0);
    CHECK(zero.pmf.size() == 1);
    CHECK(zero.pmf[0] == 1.0);

    CappedDist inactive = capped_site_dist({"s", 200, RatePrior{1.5, 150.0}}, 100.0, 5);
    CHECK(inactive.pmf[0] == 1.0);
    CHECK(inactive.pmf.tail(5).sum() == 0.0);

    CappedDist d = capped_site_dist(site, 300.0, 50);
    PGParams p(300.0, 1.5, 150.0);
    for (std::int64_t k = 0; k < 50; ++k)
        CHECK(d.pmf[k] == doctest::Approx(pg_pmf(p, k)).epsilon(1e-12));
    CHECK(d.pmf[50] < 1e-4);
    CHECK(d.pmf[50] == doctest::Approx(1.0 - pg_cdf(p, 49)).epsilon(1e-12));
    CHECK(d.pmf.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("closed-form capped moments match brute sums on the grid") {
    // the executable check of the telescoping identities behind the
    // closed forms, over the full parameter grid
    for (double alpha : {0.3, 1.0, 1.5, 4.0}) {
        for (double beta : {10.0, 150.0}) {
            for (double t : {1.0, 30.0, 300.0}) {
                for (std::int64_t cap : {0, 1, 2, 3, 10, 50}) {
                    PGParams p(t, alpha, beta);
                    auto [bm, bs] = brute_capped_moments(p, cap);
                    double cm = capped_mean(p, cap);
                    double cs = capped_second_moment(p, cap);
                    CHECK(std::abs(cm - bm) / std::max(1.0, std::abs(bm)) < 1e-10);
                    CHECK(std::abs(cs - bs) / std::max(1.0, std::abs(bs)) < 1e-10);
                }
            }
        }
    }
}

TEST_CASE("capped moment edge cases") {
    PGParams p(300.0, 1.5, 150.0);
    // L = 1: E[min(N,1)] = E[min(N,1)^2] = P(N >= 1)
    double p_ge1 = 1.0 - std::pow(150.0 / 450.0, 1.5);
    CHECK(capped_mean(p, 1) == doctest::Approx(p_ge1).epsilon(1e-12));
    CHECK(capped_second_moment(p, 1) == doctest::Approx(p_ge1).epsilon(1e-12));

    // a cap beyond the far tail leaves the unrestricted moments
    std::int64_t huge = pg_quantile(p, 1.0 - 1e-13) + 10;
    CHECK(capped_mean(p, huge) == doctest::Approx(p.mean()).epsilon(1e-9));
    double second_unres = p.variance() + p.mean() * p.mean();
    CHECK(capped_second_moment(p, huge) == doctest::Approx(second_unres).epsilon(1e-9));

    // L = 5 against the summation oracle
    auto [bm5, bs5] = brute_capped_moments(p, 5);
    CHECK(capped_mean(p, 5) == doctest::Approx(bm5).epsilon(1e-12));
    CHECK(capped_second_moment(p, 5) == doctest::Approx(bs5).epsilon(1e-12));
}

TEST_CASE("capped mean bounds and monotonicity") {
    PGParams p(300.0, 1.5, 150.0);
    double prev_t = -1.0;
    for (double t : {0.0, 10.0, 100.0, 400.0, 2000.0}) {
        double m = capped_mean(PGParams(t, 1.5, 150.0), 4);
        CHECK(m <= 4.0 + 1e-12);
        CHECK(m <= PGParams(t, 1.5, 150.0).mean() + 1e-12);
        CHECK(m >= prev_t - 1e-12);
        prev_t = m;
    }
    double prev_l = -1.0;
    for (std::int64_t cap : {0, 1, 2, 5, 10, 30}) {
        double m = capped_mean(p, cap);
        CHECK(m >= prev_l - 1e-12);
        prev_l = m;
    }
}

TEST_CASE("capped country distribution") {
    CountryPlan c = grid_country(3);
    c.cap = 0;
    CappedDist zero = capped_country_dist(c, 150.0);
    CHECK(zero.pmf.size() == 1);
    CHECK(zero.pmf[0] == 1.0);

    // a single-site country equals the capped site distribution
    CountryPlan single;
    single.id = "S";
    single.sites.push_back({"s", 0, RatePrior{1.5, 150.0}});
    single.cap = 6;
    CappedDist cd = capped_country_dist(single, 200.0);
    CappedDist sd = capped_site_dist(single.sites[0], 200.0, 6);
    for (std::int64_t k = 0; k <= 6; ++k)
        CHECK(cd.pmf[k] == doctest::Approx(sd.pmf[k]).epsilon(1e-9));

    c.cap = 8;
    CappedDist d = capped_country_dist(c, 150.0);
    CHECK(d.pmf.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.pmf.minCoeff() >= 0.0);
    CHECK(d.pmf.maxCoeff() <= 1.0);
}

TEST_CASE("capped country moments against the distribution") {
    CountryPlan c = grid_country(3);
    c.cap = 8;
    for (double t : {50.0, 150.0, 400.0}) {
        CappedDist d = capped_country_dist(c, t);
        MeanVar mv = capped_country_mean_var(c, t);
        double bm = oracles::moment_sum(d.pmf, 1);
        double bs = oracles::moment_sum(d.pmf, 2);
        CHECK(mv.mean == doctest::Approx(bm).epsilon(1e-10));
        CHECK(mv.var == doctest::Approx(bs - bm * bm).epsilon(1e-8));
    }
    c.cap = 0;
    MeanVar z = capped_country_mean_var(c, 100.0);
    CHECK(z.mean == 0.0);
    CHECK(z.var == 0.0);

    // cap far above the tail: unrestricted moments (E, E + S^2)
    c.cap = 100000;
    RateMoments m = country_rate_moments(c, 150.0);
    MeanVar far = capped_country_mean_var(c, 150.0);
    CHECK(far.mean == doctest::Approx(m.mean).epsilon(1e-9));
    CHECK(far.var == doctest::Approx(m.mean + m.var).epsilon(1e-9));
}

TEST_CASE("time to cap") {
    CountryPlan c = grid_country(3);
    c.cap = 8;
    CHECK(time_to_cap_cdf(c, 0.0) == 0.0);
    double prev = 0.0;
    for (double t : {50.0, 150.0, 400.0, 2000.0}) {
        double v = time_to_cap_cdf(c, t);
        CHECK(v >= prev);
        prev = v;
    }
    CountryPlan single;
    single.id = "S";
    single.sites.push_back({"s", 40, RatePrior{1.5, 150.0}});
    single.cap = 1;
    double t = 160.0;
    CHECK(time_to_cap_cdf(single, t) ==
          doctest::Approx(1.0 - std::pow(150.0 / (150.0 + (t - 40.0)), 1.5)).epsilon(1e-12));
}

TEST_CASE("asymptotic regimes") {
    CountryPlan c = grid_country(5);
    c.cap = 8;
    AsymptoticReport rep = asymptotic_suite(c);
    CHECK(rep.mean_converges_in_t);
    CHECK(rep.var_converges_in_t);
    CHECK(rep.var_decreases_in_sites);
    CHECK(std::abs(rep.by_time.back().mean - 8.0) < 1e-6);
    CHECK(rep.by_time.back().var < rep.by_time.front().var);

    c.cap = 0;
    AsymptoticReport zero = asymptotic_suite(c);
    CHECK(zero.mean_converges_in_t);
    CHECK(zero.by_time.back().mean == 0.0);
}

}  // TEST_SUITE
