#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "enroll/capped.hpp"

namespace enroll {

enum class PosMethod { convolution, normal };

/// Distribution of the global enrollment count at day t: convolution of the
/// capped country distributions (capped countries) and the aggregated PG
/// distributions (uncapped ones).
DiscreteDist global_dist(const StudyPlan& plan, double t, double tail_eps = 1e-9);

/// Sum of analytic per-country means/variances at day t (capped closed forms
/// where a cap is present).
MeanVar global_moments(const StudyPlan& plan, double t);

/// Probability of reaching target_n by day t. The normal method evaluates
/// Phi((E - n)/G); when the plan is deterministic at t (G = 0) both methods
/// return the indicator 1{E >= n}.
double pos(const StudyPlan& plan, double t, PosMethod method = PosMethod::convolution);

/// Smallest day t with pos(plan, t) >= q (exponential bracket + bisection on
/// the day grid). Throws unreachable_target_error when every enrolling
/// country is capped and the caps sum below target_n.
int completion_time_quantile(const StudyPlan& plan, double q,
                             PosMethod method = PosMethod::convolution);

struct ForecastSeries {
    std::vector<int> days;
    std::vector<double> mean;
    std::vector<std::int64_t> median;
    std::vector<std::int64_t> lo;
    std::vector<std::int64_t> hi;
    std::vector<double> pos_by_day;
    int t95 = 0;  // forecasting horizon: first day with pos >= 0.95
};

/// Per-day forecast over 1..T_0.95: analytic mean, median and
/// (1-q_level)/2 .. 1-(1-q_level)/2 count bounds, and completion probability.
/// One method is used throughout the series.
ForecastSeries forecast_series(const StudyPlan& plan, double q_level = 0.9,
                               PosMethod method = PosMethod::convolution);

struct CapImpactEntry {
    std::string country_id;
    std::int64_t cap = 0;
    double p_cap_by_tplan = 0.0;  // P(T, I_j, L(j))
    int time_to_cap_q = 0;        // S(q, j, L(j))
    bool flagged = false;         // increase-cap recommendation
};

struct CapImpactReport {
    double q = 0.9;
    double global_pos = 0.0;  // P(T_plan)
    int global_time_q = 0;    // S(q, n)
    std::vector<CapImpactEntry> entries;
};

/// Cap-impact diagnostics: a capped country is flagged when its cap is likely
/// to bind before the global enrollment stops, by either the probability or
/// the quantile comparison.
CapImpactReport cap_impact_report(const StudyPlan& plan, double q = 0.9);

}  // namespace enroll
