#pragma once

#include <cstdint>

#include "enroll/dist.hpp"
#include "enroll/plan.hpp"

namespace enroll {

/// Mean and variance of a country's cumulative enrollment rate at a given day.
struct RateMoments {
    double mean = 0.0;  // E(I_s,t) = sum m_i x(t,u_i)
    double var = 0.0;   // S^2(I_s,t) = sum s_i^2 x(t,u_i)^2
};

/// Gamma parameters matching the first two moments of the cumulative rate;
/// the country count is then approximately PG(A,B) (exposure 1).
struct AggregatedPG {
    double a = 0.0;
    double b = 0.0;

    PGParams pg() const { return PGParams(1.0, a, b); }
};

RateMoments country_rate_moments(const CountryPlan& country, double t);

/// A = E^2/S^2, B = E/S^2. Throws degenerate_moments_error when S^2 = 0;
/// callers fall back to the Poisson / point-mass limit.
AggregatedPG aggregate_pg(const RateMoments& moments);

/// Count distribution implied by rate moments, truncated at the smallest K
/// with tail < tail_eps; the final entry absorbs the remaining tail. Handles
/// the degenerate limits: E = 0 is a point mass at 0, S^2 = 0 with E > 0 a
/// pure Poisson with mean E.
DiscreteDist count_dist_from_moments(const RateMoments& moments, double tail_eps);

DiscreteDist country_count_dist(const CountryPlan& country, double t, double tail_eps = 1e-9);

/// P(time to reach `target` patients in this country <= t)
///   = 1 - P(PG(A(I_s,t), B(I_s,t)) <= target-1).
double time_to_target_cdf(const CountryPlan& country, std::int64_t target, double t);

/// Unrestricted count cdf / survival implied by rate moments (aggregation or
/// its degenerate limits).
double count_cdf_from_moments(const RateMoments& moments, std::int64_t k);
double count_sf_from_moments(const RateMoments& moments, std::int64_t k);

}  // namespace enroll
