#pragma once

#include <cstdint>
#include <vector>

#include "enroll/model.hpp"

namespace enroll {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

/// Distribution of one site's enrollment frozen at cap L:
/// pmf[k] = P(k) for k < L, atom pmf[L] = 1 - cdf(L-1).
CappedDist capped_site_dist(const SitePlan& site, double t, std::int64_t cap);

/// Capped distribution of a PG count (exposure/shape/rate form).
CappedDist capped_pg_dist(const PGParams& params, std::int64_t cap);

/// E[min(N, L)] = (alpha t / beta) P(PG(t, alpha+1, beta) <= L-2)
///              + L (1 - P(PG(t, alpha, beta) <= L-1)).
double capped_mean(const PGParams& params, std::int64_t cap);

/// E[min(N, L)^2] = alpha(alpha+1) t^2/beta^2 P(PG(t, alpha+2, beta) <= L-3)
///                + alpha t/beta P(PG(t, alpha+1, beta) <= L-2)
///                + L^2 (1 - P(PG(t, alpha, beta) <= L-1)).
double capped_second_moment(const PGParams& params, std::int64_t cap);

/// Capped mean/variance from aggregated rate moments (A = E^2/S^2, B = E/S^2,
/// exposure 1); the degenerate limits (E = 0, or S^2 = 0 with E > 0) are
/// evaluated by direct summation over the capped vector. Variance is clamped
/// at zero against cancellation in the saturated regime.
MeanVar capped_moments_from_rate(const RateMoments& moments, std::int64_t cap);

/// Country-level capped distribution via the PG aggregation; requires a cap.
CappedDist capped_country_dist(const CountryPlan& country, double t);

MeanVar capped_country_mean_var(const CountryPlan& country, double t);

/// P(time to reach the country cap <= t) = 1 - P(PG(A,B) <= L-1).
double time_to_cap_cdf(const CountryPlan& country, double t);

/// Convergence diagnostics for the capped process: moments along a geometric
/// time grid and along a site-doubling grid, with the knee-restricted
/// monotonicity checks of the two limit regimes.
struct AsymptoticReport {
    std::vector<double> t_grid;
    std::vector<MeanVar> by_time;
    std::vector<int> site_counts;
    std::vector<MeanVar> by_sites;
    bool mean_converges_in_t = false;  // mean -> L monotonically beyond the knee
    bool var_converges_in_t = false;   // var -> 0 monotonically beyond the knee
    bool var_decreases_in_sites = false;
};

AsymptoticReport asymptotic_suite(const CountryPlan& country);

}  // namespace enroll
