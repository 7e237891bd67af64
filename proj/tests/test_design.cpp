#include <cmath>
#include <random>

#include <doctest.h>

#include "enroll/design.hpp"
#include "enroll/errors.hpp"
#include "enroll/forecast.hpp"

using namespace enroll;

namespace {

struct Instance {
    AllocationBounds bounds;
    std::vector<CountryKinetics> kin;
    CostModel costs;
    Caps caps;
    std::int64_t n = 0;
    double horizon = 0.0;
};

Instance random_instance(unsigned seed, int s_count, bool capped) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> rate_m(0.15, 0.6);   // per month
    std::uniform_real_distribution<double> patient(9000, 17000);
    std::uniform_int_distribution<int> hi(3, 7);
    Instance inst;
    inst.horizon = 540.0;
    for (int s = 0; s < s_count; ++s) {
        int h = hi(rng);
        inst.bounds.low.push_back(static_cast<int>(rng() % 2));
        inst.bounds.high.push_back(h);
        double m = rate_m(rng) / 30.0;
        double sd = 1.2 * m;
        inst.kin.push_back(make_kinetics(m, sd * sd, 30, 180, inst.horizon));
        inst.costs.site_cost.push_back(5000.0);
        inst.costs.patient_cost.push_back(patient(rng));
        inst.costs.country_cost.push_back(0.0);
        inst.caps.push_back(std::nullopt);
    }
    // target near 55% of the expected reach so mid-range P levels are feasible
    Eigen::VectorXi upper(s_count);
    double reach = 0.0;
    for (int s = 0; s < s_count; ++s) {
        upper[s] = inst.bounds.high[static_cast<std::size_t>(s)];
        reach += upper[s] * inst.kin[static_cast<std::size_t>(s)].rate_mean *
                 inst.kin[static_cast<std::size_t>(s)].mean_time;
    }
    inst.n = std::max<std::int64_t>(10, static_cast<std::int64_t>(0.55 * reach));
    if (capped) {
        for (int s = 0; s < s_count; ++s) {
            double e_up = upper[s] * inst.kin[static_cast<std::size_t>(s)].rate_mean *
                          inst.kin[static_cast<std::size_t>(s)].mean_time;
            // caps around the country means: some bind, some do not
            inst.caps[static_cast<std::size_t>(s)] =
                static_cast<std::int64_t>(std::ceil(e_up * (0.7 + 0.15 * (s % 3))));
        }
    }
    return inst;
}

}  // namespace

TEST_SUITE("design") {

TEST_CASE("kinetics") {
    CountryKinetics k = make_kinetics(0.42 / 30.0, std::pow(1.2 * 0.42 / 30.0, 2), 30, 210, 720);
    CHECK(k.mean_time == doctest::Approx(600.0));
    CHECK(k.mean_sq_time == doctest::Approx(362700.0));
    CHECK_THROWS_AS(make_kinetics(0.01, 1e-4, 30, 800, 720), std::invalid_argument);

    // grid values approach the continuous ones
    CountryKinetics g = grid_kinetics(k, 200, 720);
    CHECK(g.mean_time == doctest::Approx(600.0).epsilon(0.01));
    CHECK(g.mean_sq_time == doctest::Approx(362700.0).epsilon(0.01));
    CountryKinetics none = grid_kinetics(k, 0, 720);
    CHECK(none.mean_time == 0.0);
}

TEST_CASE("total cost") {
    std::vector<CountryKinetics> kin{make_kinetics(0.05, 1e-4, 0, 200, 400)};
    // one country, N = 2, site 5000, patient cost tuned so m R = 10 per site
    kin[0].mean_time = 10.0 / kin[0].rate_mean;
    CostModel costs{{5000.0}, {100.0}, {0.0}};
    Eigen::VectorXi alloc(1);
    alloc << 2;
    CHECK(total_cost(alloc, kin, costs) == doctest::Approx(12000.0));
    alloc << 0;
    CHECK(total_cost(alloc, kin, costs) == 0.0);
    // country cost charged only when sites are present
    costs.country_cost[0] = 777.0;
    CHECK(total_cost(alloc, kin, costs) == 0.0);
    alloc << 1;
    CHECK(total_cost(alloc, kin, costs) == doctest::Approx(5000.0 + 1000.0 + 777.0));
}

TEST_CASE("total cost is additive and linear off the inclusion pattern") {
    Instance inst = random_instance(3, 4, false);
    inst.costs.country_cost = {100.0, 0.0, 250.0, 0.0};
    Eigen::VectorXi n(4);
    n << 2, 0, 3, 1;
    for (int s = 0; s < 4; ++s) {
        Eigen::VectorXi up = n;
        up[s] += 1;
        double marginal = total_cost(up, inst.kin, inst.costs) - total_cost(n, inst.kin, inst.costs);
        double lin = inst.costs.site_cost[static_cast<std::size_t>(s)] +
                     inst.costs.patient_cost[static_cast<std::size_t>(s)] *
                         inst.kin[static_cast<std::size_t>(s)].rate_mean *
                         inst.kin[static_cast<std::size_t>(s)].mean_time;
        if (n[s] > 0)
            CHECK(marginal == doctest::Approx(lin));  // indicator pattern fixed
        else
            CHECK(marginal == doctest::Approx(lin + inst.costs.country_cost[static_cast<std::size_t>(s)]));
    }
}

TEST_CASE("pos evaluators") {
    Instance inst = random_instance(5, 4, false);
    Eigen::VectorXi upper(4), zero(4);
    for (int s = 0; s < 4; ++s) {
        upper[s] = inst.bounds.high[static_cast<std::size_t>(s)];
        zero[s] = 0;
    }
    // zero allocation: deterministic zero enrollment
    CHECK(design_pos(zero, inst.kin, {}, inst.n, PosEval::pg) == 0.0);
    CHECK(design_pos(zero, inst.kin, {}, inst.n, PosEval::normal) == 0.0);
    // huge expected enrollment vs n = 1
    CHECK(design_pos(upper, inst.kin, {}, 1, PosEval::pg) > 0.999);
    // E = n exactly -> one half under the normal evaluation
    double e_up = 0.0;
    for (int s = 0; s < 4; ++s)
        e_up += upper[s] * inst.kin[static_cast<std::size_t>(s)].rate_mean *
                inst.kin[static_cast<std::size_t>(s)].mean_time;
    CHECK(design_pos(upper, inst.kin, {}, static_cast<std::int64_t>(e_up), PosEval::normal) ==
          doctest::Approx(0.5).epsilon(0.01));
    // pg and normal agree loosely at a mid-range target
    double pg_v = design_pos(upper, inst.kin, {}, inst.n, PosEval::pg);
    double no_v = design_pos(upper, inst.kin, {}, inst.n, PosEval::normal);
    CHECK(std::abs(pg_v - no_v) < 0.05);
    // capped evaluation with loose caps approaches the uncapped one
    Caps loose(4, std::optional<std::int64_t>(100000));
    CHECK(design_pos(upper, inst.kin, loose, inst.n, PosEval::capped_normal) ==
          doctest::Approx(no_v).epsilon(1e-9));
}

TEST_CASE("feasibility") {
    Instance inst = random_instance(7, 4, false);
    CHECK(check_feasibility(inst.bounds, inst.kin, {}, inst.n, 0.8, PosEval::normal));
    CHECK(!check_feasibility(inst.bounds, inst.kin, {}, inst.n, 0.999999, PosEval::normal));
    // low bounds already feasible when P is small enough
    Eigen::VectorXi low(4);
    for (int s = 0; s < 4; ++s) low[s] = inst.bounds.low[static_cast<std::size_t>(s)];
    double p_low = design_pos(low, inst.kin, {}, inst.n, PosEval::normal);
    if (p_low > 0.01)
        CHECK(check_feasibility(inst.bounds, inst.kin, {}, inst.n, p_low * 0.9, PosEval::normal));
}

TEST_CASE("one-dimensional stepwise iterates follow the explicit recurrence") {
    std::vector<CountryKinetics> kin{make_kinetics(0.015, std::pow(1.2 * 0.015, 2), 0, 360, 360)};
    AllocationBounds bounds{{0}, {60}};
    CostModel costs{{5000.0}, {12000.0}, {0.0}};
    std::int64_t n = 60;
    double prob = 0.9;
    StepwiseTrace trace;
    AllocationResult res = optimize_stepwise_lp(bounds, kin, costs, n, prob, &trace);
    REQUIRE(trace.iterates.size() >= 2);
    double e1 = kin[0].rate_mean * kin[0].mean_time;
    double v1 = normal_quantile(prob) *
                std::sqrt(e1 + kin[0].rate_var * kin[0].mean_sq_time);
    double prev = 0.0;
    for (std::size_t k = 0; k < trace.iterates.size(); ++k) {
        double expected = static_cast<double>(n) / e1 + v1 / e1 * std::sqrt(prev);
        CHECK(trace.iterates[k][0] == doctest::Approx(expected).epsilon(1e-9));
        CHECK(trace.iterates[k][0] >= prev - 1e-12);  // monotone increasing
        CHECK(trace.iterates[k][0] <= 60.0 + 1e-9);   // bounded by U
        prev = trace.iterates[k][0];
    }
    CHECK(res.pos_achieved >= prob);
    CHECK(res.iterations <= 15);
}

TEST_CASE("stepwise at P = 0.5 solves a single linear program") {
    Instance inst = random_instance(11, 5, false);
    StepwiseTrace trace;
    AllocationResult res =
        optimize_stepwise_lp(inst.bounds, inst.kin, inst.costs, inst.n, 0.5, &trace);
    CHECK(trace.iterates.size() == 1);
    CHECK(res.iterations == 1);
    CHECK(res.pos_achieved >= 0.5);
}

TEST_CASE("stepwise raises an infeasibility error") {
    Instance inst = random_instance(13, 3, false);
    CHECK_THROWS_AS(
        optimize_stepwise_lp(inst.bounds, inst.kin, inst.costs, inst.n * 50, 0.9),
        infeasible_error);
}

TEST_CASE("direct search equals brute force on a 3x3 grid") {
    Instance inst = random_instance(17, 2, false);
    inst.bounds.low = {0, 0};
    inst.bounds.high = {2, 2};
    inst.n = 10;
    AllocationResult res = optimize_direct(inst.bounds, inst.kin, inst.costs, inst.n, 0.4);
    // independent enumeration
    double best_cost = 1e300;
    Eigen::VectorXi best(2);
    for (int a = 2; a >= 0; --a) {
        for (int b = 2; b >= 0; --b) {
            Eigen::VectorXi cand(2);
            cand << a, b;
            if (design_pos(cand, inst.kin, {}, inst.n, PosEval::pg) < 0.4) continue;
            double c = total_cost(cand, inst.kin, inst.costs);
            if (c < best_cost) {
                best_cost = c;
                best = cand;
            }
        }
    }
    CHECK(res.total_cost == doctest::Approx(best_cost));
    CHECK(res.alloc == best);
    CHECK(res.pos_achieved >= 0.4);
}

TEST_CASE("direct search is a grid minimum and beats the rounded lp") {
    for (unsigned seed : {29u, 31u, 37u}) {
        Instance inst = random_instance(seed, 4, false);
        double prob = 0.75;
        if (!check_feasibility(inst.bounds, inst.kin, {}, inst.n, prob, PosEval::normal)) continue;
        AllocationResult direct =
            optimize_direct(inst.bounds, inst.kin, inst.costs, inst.n, prob);
        AllocationResult lp =
            optimize_stepwise_lp(inst.bounds, inst.kin, inst.costs, inst.n, prob);
        CHECK(direct.total_cost <= lp.total_cost + 1e-6);
        CHECK(lp.total_cost <= direct.total_cost * 1.05);
        // no single-coordinate perturbation inside bounds is feasible and cheaper
        for (int s = 0; s < 4; ++s) {
            for (int d : {-1, 1}) {
                Eigen::VectorXi cand = direct.alloc;
                cand[s] += d;
                if (cand[s] < inst.bounds.low[static_cast<std::size_t>(s)] ||
                    cand[s] > inst.bounds.high[static_cast<std::size_t>(s)])
                    continue;
                if (design_pos(cand, inst.kin, {}, inst.n, PosEval::pg) < prob) continue;
                CHECK(total_cost(cand, inst.kin, inst.costs) >= direct.total_cost - 1e-9);
            }
        }
    }
}

TEST_CASE("direct search corner cases") {
    Instance inst = random_instance(41, 3, false);
    // H = U: a single candidate
    AllocationBounds pinned{inst.bounds.high, inst.bounds.high};
    AllocationResult res =
        optimize_direct(pinned, inst.kin, inst.costs, inst.n, 0.5);
    for (int s = 0; s < 3; ++s) CHECK(res.alloc[s] == inst.bounds.high[static_cast<std::size_t>(s)]);
    CHECK_THROWS_AS(optimize_direct(pinned, inst.kin, inst.costs, inst.n * 50, 0.99),
                    infeasible_error);
    // dimension ceiling
    AllocationBounds wide{{0, 0, 0}, {1000, 1000, 1000}};
    CHECK_THROWS_AS(
        optimize_direct(wide, inst.kin, inst.costs, inst.n, 0.5, {}, 1e6),
        dimension_ceiling_error);
}

TEST_CASE("differential evolution matches direct search on capped instances") {
    for (unsigned seed : {43u, 47u}) {
        Instance inst = random_instance(seed, 3, true);
        double prob = 0.7;
        if (!check_feasibility(inst.bounds, inst.kin, inst.caps, inst.n, prob,
                               PosEval::capped_normal))
            continue;
        AllocationResult direct =
            optimize_direct(inst.bounds, inst.kin, inst.costs, inst.n, prob, inst.caps);
        DeConfig cfg;
        cfg.seed = 1234 + seed;
        AllocationResult de =
            optimize_de(inst.bounds, inst.kin, inst.costs, inst.caps, inst.n, prob, cfg);
        CHECK(de.total_cost == doctest::Approx(direct.total_cost).epsilon(1e-9));
        CHECK(de.pos_achieved >= prob);
    }
}

TEST_CASE("de with non-binding caps matches the stepwise cost") {
    Instance inst = random_instance(53, 4, false);
    Caps loose(4, std::optional<std::int64_t>(100000));
    double prob = 0.8;
    AllocationResult lp = optimize_stepwise_lp(inst.bounds, inst.kin, inst.costs, inst.n, prob);
    AllocationResult de =
        optimize_de(inst.bounds, inst.kin, inst.costs, loose, inst.n, prob, DeConfig{});
    CHECK(de.total_cost <= lp.total_cost * 1.01);
    CHECK(de.total_cost >= lp.total_cost * 0.9);  // same neighborhood
}

TEST_CASE("de reports when no member is feasible") {
    Instance inst = random_instance(59, 3, true);
    DeConfig cfg;
    cfg.generations = 20;
    CHECK_THROWS_AS(
        optimize_de(inst.bounds, inst.kin, inst.costs, inst.caps, inst.n * 100, 0.999, cfg),
        no_feasible_member_error);
}

TEST_CASE("de is deterministic under a fixed seed") {
    Instance inst = random_instance(61, 3, true);
    DeConfig cfg;
    cfg.seed = 777;
    AllocationResult a = optimize_de(inst.bounds, inst.kin, inst.costs, inst.caps, inst.n, 0.6, cfg);
    AllocationResult b = optimize_de(inst.bounds, inst.kin, inst.costs, inst.caps, inst.n, 0.6, cfg);
    CHECK(a.alloc == b.alloc);
    CHECK(a.total_cost == b.total_cost);
}

TEST_CASE("optimizer results satisfy the constraint when re-checked independently") {
    Instance inst = random_instance(67, 3, true);
    double prob = 0.7;
    AllocationResult res =
        optimize_direct(inst.bounds, inst.kin, inst.costs, inst.n, prob, inst.caps);
    StudyPlan plan = realize_plan(res.alloc, inst.kin, inst.caps, inst.n,
                                  static_cast<int>(inst.horizon));
    double re = pos(plan, inst.horizon, PosMethod::convolution);
    CHECK(re >= prob - 0.02);
}

TEST_CASE("realize plan") {
    Instance inst = random_instance(71, 2, true);
    Eigen::VectorXi alloc(2);
    alloc << 3, 0;
    StudyPlan plan = realize_plan(alloc, inst.kin, inst.caps, inst.n, 540);
    REQUIRE(plan.countries.size() == 2);
    CHECK(plan.countries[0].sites.size() == 3);
    CHECK(plan.countries[1].sites.empty());
    CHECK(plan.countries[0].cap == inst.caps[0]);
    CHECK(plan.countries[0].sites[0].prior.mean() ==
          doctest::Approx(inst.kin[0].rate_mean).epsilon(1e-12));
}

}  // TEST_SUITE
