#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "enroll/plan.hpp"

namespace enroll {

struct SimConfig {
    std::int64_t replications = 100000;
    std::uint64_t seed = 1;
    int horizon = 0;  // 0 -> plan.t_plan_days
};

/// Empirical day-hitting distribution: counts per day 1..horizon plus a
/// censored bucket at horizon+1.
struct DayHitStats {
    std::string country_id;
    std::int64_t cap = 0;
    std::vector<std::uint32_t> hit_day_hist;  // size horizon+2
    std::int64_t replications = 0;

    double hit_prob_by(int day) const;
    /// Smallest day with empirical hit fraction >= q; horizon+1 if censored.
    int hit_day_quantile(double q) const;
};

struct SimSummary {
    int horizon = 0;
    int t_plan = 0;
    std::int64_t replications = 0;

    std::vector<double> day_mean;  // index day-1
    std::vector<double> day_sd;
    std::vector<std::int64_t> day_q05;
    std::vector<std::int64_t> day_q50;
    std::vector<std::int64_t> day_q95;

    double pos_at_tplan = 0.0;
    double pos_se = 0.0;

    std::vector<std::uint32_t> completion_day_hist;  // size horizon+2
    std::vector<DayHitStats> cap_stats;

    /// Empirical count quantile on a given day (1-based).
    std::int64_t day_quantile(int day, double q) const;
    /// Smallest day with empirical completion fraction >= q; horizon+1 if censored.
    int completion_day_quantile(double q) const;

    // per-day count histograms (index day-1), kept for quantile queries
    std::vector<std::vector<std::uint32_t>> day_hist;
};

/// Simulates the full generative model at day granularity: gamma rate draws
/// per site, Poisson arrivals from activation, country freezes at its cap on
/// the hitting day (overshoot that day is discarded), global stopping
/// recorded at target_n. Replications are split across threads on
/// per-replication derived RNG streams; all summary statistics come from
/// integer accumulators, so results are bitwise identical for any worker
/// count.
SimSummary simulate(const StudyPlan& plan, const SimConfig& cfg);

/// Direct summation of the first two moments over the capped pmf vector; the
/// independent route against the closed-form capped moments.
std::pair<double, double> brute_capped_moments(const PGParams& params, std::int64_t cap);

}  // namespace enroll
