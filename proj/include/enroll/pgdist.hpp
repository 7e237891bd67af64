#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace enroll {

/// Gamma prior of a site's latent enrollment rate (patients/day).
/// shape alpha, rate beta (1/day).
struct RatePrior {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const { return alpha / beta; }
    double variance() const { return alpha / (beta * beta); }
    double cv() const;

    /// Gamma prior with the requested mean and coefficient of variation:
    /// alpha = 1/cv^2, beta = alpha/mean.
    static RatePrior from_mean_cv(double mean, double cv);
    static RatePrior from_mean_var(double mean, double var);
};

/// Parameters of a Poisson count whose rate is Gamma(alpha, beta) scaled by
/// an exposure of t days. The count is negative binomial with size alpha and
/// success probability beta/(beta+t); t = 0 is a point mass at zero.
struct PGParams {
    double t = 0.0;
    double alpha = 1.0;
    double beta = 1.0;

    PGParams() = default;
    PGParams(double t_, double alpha_, double beta_);

    double mean() const { return alpha * t / beta; }
    double variance() const { return alpha * t / beta + alpha * t * t / (beta * beta); }
};

/// ln Gamma(x) for x > 0 (Lanczos approximation, ~1e-14 relative).
double log_gamma(double x);

double pg_log_pmf(const PGParams& params, std::int64_t k);
double pg_pmf(const PGParams& params, std::int64_t k);

/// P(count <= k). Negative k yields exactly 0 (the moment formulas below rely
/// on that convention). Computed by a scaled forward recurrence on the pmf
/// with compensated summation.
double pg_cdf(const PGParams& params, std::int64_t k);

/// P(count > k), computed by direct tail summation when k sits above the
/// mean so the deep upper tail keeps full relative precision (the capped
/// moment formulas multiply it by cap^2).
double pg_sf(const PGParams& params, std::int64_t k);

/// Smallest k with pg_cdf(k) >= q, for q in (0,1).
std::int64_t pg_quantile(const PGParams& params, double q);

/// pmf values at counts 0..len-1 (no tail absorption).
Eigen::ArrayXd pg_pmf_vector(const PGParams& params, std::int64_t len);

/// Smallest K with 1 - pg_cdf(K) < tail_eps.
std::int64_t pg_tail_cutoff(const PGParams& params, double tail_eps);

/// Poisson helpers for the zero-rate-variance limit of the aggregation.
double poisson_cdf(double mean, std::int64_t k);
double poisson_sf(double mean, std::int64_t k);
Eigen::ArrayXd poisson_pmf_vector(double mean, std::int64_t len);
std::int64_t poisson_tail_cutoff(double mean, double tail_eps);

/// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace enroll
