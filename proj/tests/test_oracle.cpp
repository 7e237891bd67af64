#include <cmath>
#include <cstdlib>

#include <doctest.h>

#include "enroll/capped.hpp"
#include "enroll/oracle.hpp"

using namespace enroll;

namespace {

StudyPlan one_site_plan(double alpha, double beta, int t_plan) {
    StudyPlan plan;
    plan.target_n = 5;
    plan.t_plan_days = t_plan;
    CountryPlan c;
    c.id = "A";
    c.sites.push_back({"s1", 0, RatePrior{alpha, beta}});
    plan.countries.push_back(std::move(c));
    return plan;
}

bool summaries_equal(const SimSummary& a, const SimSummary& b) {
    if (a.day_mean != b.day_mean || a.day_q05 != b.day_q05 || a.day_q95 != b.day_q95)
        return false;
    if (a.pos_at_tplan != b.pos_at_tplan) return false;
    if (a.completion_day_hist != b.completion_day_hist) return false;
    for (std::size_t k = 0; k < a.cap_stats.size(); ++k)
        if (a.cap_stats[k].hit_day_hist != b.cap_stats[k].hit_day_hist) return false;
    return true;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("brute capped moments") {
    PGParams p(300.0, 1.5, 150.0);
    auto [m0, s0] = brute_capped_moments(p, 0);
    CHECK(m0 == 0.0);
    CHECK(s0 == 0.0);

    std::int64_t huge = pg_quantile(p, 1.0 - 1e-13) + 5;
    auto [mh, sh] = brute_capped_moments(p, huge);
    CHECK(mh == doctest::Approx(p.mean()).epsilon(1e-9));
    CHECK(sh == doctest::Approx(p.mean() * p.mean() + p.variance()).epsilon(1e-9));

    auto [m5, s5] = brute_capped_moments(p, 5);
    CHECK(capped_mean(p, 5) == doctest::Approx(m5).epsilon(1e-10));
    CHECK(capped_second_moment(p, 5) == doctest::Approx(s5).epsilon(1e-10));
}

TEST_CASE("simulation reproducibility") {
    StudyPlan plan = one_site_plan(1.5, 150.0, 200);
    plan.countries[0].cap = 3;
    SimConfig cfg{2000, 99, 250};
    SimSummary a = simulate(plan, cfg);
    SimSummary b = simulate(plan, cfg);
    CHECK(summaries_equal(a, b));
}

TEST_CASE("worker split does not change pooled estimates") {
    StudyPlan plan = one_site_plan(1.5, 150.0, 200);
    plan.countries[0].cap = 4;
    SimConfig cfg{3000, 7, 220};
    setenv("ENROLL_OPT_THREADS", "1", 1);
    SimSummary serial = simulate(plan, cfg);
    setenv("ENROLL_OPT_THREADS", "4", 1);
    SimSummary parallel = simulate(plan, cfg);
    unsetenv("ENROLL_OPT_THREADS");
    CHECK(summaries_equal(serial, parallel));
}

TEST_CASE("empirical mean of an uncapped site matches the analytic value") {
    StudyPlan plan = one_site_plan(1.5, 150.0, 300);
    SimConfig cfg{40000, 11, 300};
    SimSummary sum = simulate(plan, cfg);
    for (int day : {100, 200, 300}) {
        double analytic = 1.5 * day / 150.0;
        double sd = sum.day_sd[static_cast<std::size_t>(day - 1)];
        double se = sd / std::sqrt(static_cast<double>(cfg.replications));
        CHECK(std::abs(sum.day_mean[static_cast<std::size_t>(day - 1)] - analytic) <= 3.0 * se);
    }
}

TEST_CASE("a zero cap freezes the country at zero") {
    StudyPlan plan = one_site_plan(2.0, 50.0, 150);
    plan.countries[0].cap = 0;
    SimConfig cfg{500, 3, 150};
    SimSummary sum = simulate(plan, cfg);
    CHECK(sum.day_mean.back() == 0.0);
    CHECK(sum.pos_at_tplan == 0.0);
    CHECK(sum.cap_stats[0].hit_prob_by(150) == 1.0);  // frozen from day zero
}

TEST_CASE("a near-degenerate prior behaves like a fixed-rate Poisson") {
    double m = 0.2;
    StudyPlan plan = one_site_plan(1e6, 1e6 / m, 60);
    SimConfig cfg{60000, 17, 60};
    SimSummary sum = simulate(plan, cfg);
    // daily counts are Poisson(m): the day-1 variance is close to m
    double var1 = sum.day_sd[0] * sum.day_sd[0];
    CHECK(var1 == doctest::Approx(m).epsilon(0.05));
}

TEST_CASE("capped country statistics agree with the analytic pipeline") {
    StudyPlan plan;
    plan.target_n = 12;
    plan.t_plan_days = 250;
    CountryPlan c;
    c.id = "A";
    for (int i = 0; i < 3; ++i) c.sites.push_back({"s" + std::to_string(i), 20 * i, RatePrior{1.5, 150.0}});
    c.cap = 8;
    plan.countries.push_back(std::move(c));
    SimConfig cfg{60000, 23, 600};
    SimSummary sum = simulate(plan, cfg);

    // capped mean within 3 standard errors
    for (int day : {100, 250, 500}) {
        MeanVar mv = capped_country_mean_var(plan.countries[0], day);
        double se = sum.day_sd[static_cast<std::size_t>(day - 1)] /
                    std::sqrt(static_cast<double>(cfg.replications));
        double err = std::abs(sum.day_mean[static_cast<std::size_t>(day - 1)] - mv.mean);
        CHECK(err <= 3.0 * se + 2e-3);  // aggregation bias stays below the noise floor
    }

    // hitting-time cdf within binomial noise
    for (int day : {150, 300}) {
        double analytic = time_to_cap_cdf(plan.countries[0], day);
        double emp = sum.cap_stats[0].hit_prob_by(day);
        double se = std::sqrt(analytic * (1.0 - analytic) / static_cast<double>(cfg.replications));
        CHECK(std::abs(emp - analytic) <= 3.0 * se + 2e-3);
    }
}

}  // TEST_SUITE
