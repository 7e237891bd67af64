#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "enroll/pgdist.hpp"

namespace enroll {

/// One clinical site: activation day (days from study start) and the gamma
/// prior of its enrollment rate.
struct SitePlan {
    std::string id;
    int activation_day = 0;
    RatePrior prior;
};

/// A country and its sites; `cap` is the optional upper enrollment
/// restriction at which the country's enrollment freezes.
struct CountryPlan {
    std::string id;
    std::vector<SitePlan> sites;
    std::optional<std::int64_t> cap;
};

struct StudyPlan {
    std::vector<CountryPlan> countries;
    std::int64_t target_n = 1;
    int t_plan_days = 1;
};

/// Active-enrollment duration x(t,u) = max(0, t - u).
inline double exposure(double t, double u) { return t > u ? t - u : 0.0; }

/// Planned activation days on the midpoint uniform grid over [a, b]:
/// u_i = a + round((i - 1/2)(b-a)/N), i = 1..N. The grid mean is (a+b)/2
/// for every N, matching the continuous-uniform window expectations.
std::vector<int> activation_grid(int a, int b, int n_sites);

/// Structural validation (unique ids, nonnegative caps, positive target).
/// Throws config_error naming the offending entity.
void validate_plan(const StudyPlan& plan);

/// Largest patient count the plan can ever produce; nullopt when unbounded
/// (some uncapped country has at least one site).
std::optional<std::int64_t> max_attainable(const StudyPlan& plan);

}  // namespace enroll
