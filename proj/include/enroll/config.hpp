#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "enroll/design.hpp"
#include "enroll/plan.hpp"

namespace enroll {

/// One country entry of the study config file. Exactly one of
/// (rate mean+cv) or per-site (alpha,beta) site lists describes the rates;
/// monthly means are converted at 30 days/month during parsing.
struct CountryConfig {
    std::string id;
    std::optional<std::int64_t> cap;
    double cost_site = 0.0;
    double cost_patient = 0.0;
    double cost_country = 0.0;
    std::optional<int> bound_low;
    std::optional<int> bound_high;
    std::optional<double> rate_mean_per_day;
    std::optional<double> rate_cv;
    std::optional<std::pair<int, int>> window_days;
    std::vector<int> explicit_days;
    std::vector<SitePlan> sites;  // resolved per-site entries, if given
};

struct StudyConfig {
    std::int64_t target_n = 1;
    int t_plan_days = 1;
    std::vector<CountryConfig> countries;

    /// Concrete plan for forecasting/simulation. Every country must carry
    /// site-level activation detail (sites[] or activation.explicit_days).
    StudyPlan to_plan() const;

    /// Optimizer inputs; every country must carry rate, bounds and an
    /// activation window.
    void design_inputs(AllocationBounds& bounds, std::vector<CountryKinetics>& kin,
                       CostModel& costs, Caps& caps) const;

    std::vector<std::string> country_ids() const;
};

StudyConfig parse_study_config(const std::string& json_text);
StudyConfig load_study_config(const std::string& path);

constexpr double kDaysPerMonth = 30.0;

}  // namespace enroll
