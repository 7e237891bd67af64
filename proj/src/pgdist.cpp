#include "enroll/pgdist.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "enroll/errors.hpp"

namespace enroll {

namespace {

void require_prior(double alpha, double beta) {
    if (!(std::isfinite(alpha) && alpha > 0.0) || !(std::isfinite(beta) && beta > 0.0))
        throw std::domain_error("gamma parameters must be finite and positive");
}

// Terms with log-pmf below this are skipped while scanning a cdf; they are
// below 1e-300 and cannot move any probability at double precision.
constexpr double kLogTiny = -695.0;

// Kahan accumulator.
struct CompSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double x) {
        double y = x - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

double RatePrior::cv() const { return 1.0 / std::sqrt(alpha); }

RatePrior RatePrior::from_mean_cv(double mean, double cv) {
    if (!(mean > 0.0) || !(cv > 0.0))
        throw std::domain_error("rate mean and cv must be positive");
    double alpha = 1.0 / (cv * cv);
    return RatePrior{alpha, alpha / mean};
}

RatePrior RatePrior::from_mean_var(double mean, double var) {
    if (!(mean > 0.0) || !(var > 0.0))
        throw std::domain_error("rate mean and variance must be positive");
    return RatePrior{mean * mean / var, mean / var};
}

PGParams::PGParams(double t_, double alpha_, double beta_) : t(t_), alpha(alpha_), beta(beta_) {
    require_prior(alpha, beta);
    if (!(std::isfinite(t) && t >= 0.0)) throw std::domain_error("exposure t must be >= 0");
}

double log_gamma(double x) {
    // Lanczos, g = 7, 9 coefficients (Godfrey's set).
    static const double coef[9] = {
        0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,    12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6,  1.5056327351493116e-7};
    if (!(x > 0.0)) throw std::domain_error("log_gamma requires x > 0");
    if (x < 0.5) {
        // reflection; sin(pi x) > 0 on (0, 0.5)
        return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
    }
    double z = x - 1.0;
    double a = coef[0];
    for (int i = 1; i < 9; ++i) a += coef[i] / (z + i);
    double tmp = z + 7.5;
    return 0.918938533204672742 /* ln sqrt(2 pi) */ + (z + 0.5) * std::log(tmp) - tmp +
           std::log(a);
}

double pg_log_pmf(const PGParams& p, std::int64_t k) {
    require_prior(p.alpha, p.beta);
    if (k < 0) return -std::numeric_limits<double>::infinity();
    if (p.t == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    double kk = static_cast<double>(k);
    return log_gamma(p.alpha + kk) - log_gamma(kk + 1.0) - log_gamma(p.alpha) +
           kk * std::log(p.t) + p.alpha * std::log(p.beta) -
           (p.alpha + kk) * std::log(p.beta + p.t);
}

double pg_pmf(const PGParams& p, std::int64_t k) {
    double lp = pg_log_pmf(p, k);
    return std::isinf(lp) ? 0.0 : std::exp(lp);
}

double pg_cdf(const PGParams& p, std::int64_t k) {
    require_prior(p.alpha, p.beta);
    if (k < 0) return 0.0;
    if (p.t == 0.0) return 1.0;

    // pmf(j+1) = pmf(j) * t (alpha+j) / ((j+1)(beta+t)).
    // The first representable term is located in log space so that a deep
    // left tail (pmf(0) underflowing) does not zero out the whole recurrence.
    const double log_ratio_base = std::log(p.t) - std::log(p.beta + p.t);
    double log_term = p.alpha * (std::log(p.beta) - std::log(p.beta + p.t));
    std::int64_t j = 0;
    while (j <= k && log_term < kLogTiny) {
        log_term += log_ratio_base + std::log(p.alpha + static_cast<double>(j)) -
                    std::log(static_cast<double>(j + 1));
        ++j;
    }
    if (j > k) return 0.0;

    double term = std::exp(log_term);
    CompSum acc;
    for (;;) {
        acc.add(term);
        if (j == k) break;
        double ratio = p.t * (p.alpha + static_cast<double>(j)) /
                       (static_cast<double>(j + 1) * (p.beta + p.t));
        term *= ratio;
        ++j;
        // Past the mode the remaining tail is bounded by term/(1-ratio).
        if (ratio < 1.0 && term < acc.sum * (1.0 - ratio) * 1e-17) break;
    }
    return acc.sum < 1.0 ? acc.sum : 1.0;
}

double pg_sf(const PGParams& p, std::int64_t k) {
    require_prior(p.alpha, p.beta);
    if (k < 0) return 1.0;
    if (p.t == 0.0) return 0.0;
    if (static_cast<double>(k) < p.mean()) return 1.0 - pg_cdf(p, k);

    // above the mean the term ratio is < 1, so the sum telescopes quickly
    double log_term = pg_log_pmf(p, k + 1);
    if (log_term < kLogTiny) return 0.0;  // the whole tail is below 1e-300
    double term = std::exp(log_term);
    CompSum acc;
    std::int64_t j = k + 1;
    const std::int64_t hard_stop =
        k + static_cast<std::int64_t>(60.0 * std::sqrt(p.variance())) + 4096;
    for (;;) {
        acc.add(term);
        double ratio = p.t * (p.alpha + static_cast<double>(j)) /
                       (static_cast<double>(j + 1) * (p.beta + p.t));
        if (ratio < 1.0 && term * ratio / (1.0 - ratio) < acc.sum * 1e-17) break;
        if (j > hard_stop) throw nonconvergence_error("pg_sf: tail scan exceeded its bound");
        term *= ratio;
        ++j;
    }
    return acc.sum < 1.0 ? acc.sum : 1.0;
}

std::int64_t pg_quantile(const PGParams& p, double q) {
    require_prior(p.alpha, p.beta);
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("quantile level must be in (0,1)");
    if (p.t == 0.0) return 0;

    const double log_ratio_base = std::log(p.t) - std::log(p.beta + p.t);
    double log_term = p.alpha * (std::log(p.beta) - std::log(p.beta + p.t));
    std::int64_t j = 0;
    while (log_term < kLogTiny) {
        log_term += log_ratio_base + std::log(p.alpha + static_cast<double>(j)) -
                    std::log(static_cast<double>(j + 1));
        ++j;
    }
    double term = std::exp(log_term);
    CompSum acc;
    // Far-tail safety stop: mean + 60 sd + slack always covers q < 1 - 1e-14.
    const std::int64_t hard_stop =
        static_cast<std::int64_t>(p.mean() + 60.0 * std::sqrt(p.variance())) + 2048;
    for (;;) {
        acc.add(term);
        if (acc.sum >= q) return j;
        if (j > hard_stop)
            throw nonconvergence_error("pg_quantile: scan exceeded the far-tail bound");
        term *= p.t * (p.alpha + static_cast<double>(j)) /
                (static_cast<double>(j + 1) * (p.beta + p.t));
        ++j;
    }
}

Eigen::ArrayXd pg_pmf_vector(const PGParams& p, std::int64_t len) {
    require_prior(p.alpha, p.beta);
    if (len <= 0) return Eigen::ArrayXd();
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(len);
    if (p.t == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const double log_ratio_base = std::log(p.t) - std::log(p.beta + p.t);
    double log_term = p.alpha * (std::log(p.beta) - std::log(p.beta + p.t));
    std::int64_t j = 0;
    while (j < len && log_term < kLogTiny) {
        log_term += log_ratio_base + std::log(p.alpha + static_cast<double>(j)) -
                    std::log(static_cast<double>(j + 1));
        ++j;
    }
    double term = std::exp(log_term);
    for (; j < len; ++j) {
        out[j] = term;
        term *= p.t * (p.alpha + static_cast<double>(j)) /
                (static_cast<double>(j + 1) * (p.beta + p.t));
    }
    return out;
}

std::int64_t pg_tail_cutoff(const PGParams& p, double tail_eps) {
    require_prior(p.alpha, p.beta);
    if (!(tail_eps > 0.0)) throw std::domain_error("tail_eps must be positive");
    if (p.t == 0.0) return 0;

    const double log_ratio_base = std::log(p.t) - std::log(p.beta + p.t);
    double log_term = p.alpha * (std::log(p.beta) - std::log(p.beta + p.t));
    std::int64_t j = 0;
    while (log_term < kLogTiny) {
        log_term += log_ratio_base + std::log(p.alpha + static_cast<double>(j)) -
                    std::log(static_cast<double>(j + 1));
        ++j;
    }
    double term = std::exp(log_term);
    CompSum acc;
    const std::int64_t hard_stop =
        static_cast<std::int64_t>(p.mean() + 60.0 * std::sqrt(p.variance())) + 2048;
    for (;;) {
        acc.add(term);
        if (1.0 - acc.sum < tail_eps) return j;
        if (j > hard_stop)
            throw nonconvergence_error("pg_tail_cutoff: scan exceeded the far-tail bound");
        term *= p.t * (p.alpha + static_cast<double>(j)) /
                (static_cast<double>(j + 1) * (p.beta + p.t));
        ++j;
    }
}

double poisson_cdf(double mean, std::int64_t k) {
    if (!(std::isfinite(mean) && mean >= 0.0)) throw std::domain_error("poisson mean must be >= 0");
    if (k < 0) return 0.0;
    if (mean == 0.0) return 1.0;
    double log_term = -mean;
    std::int64_t j = 0;
    while (j <= k && log_term < kLogTiny) {
        log_term += std::log(mean) - std::log(static_cast<double>(j + 1));
        ++j;
    }
    if (j > k) return 0.0;
    double term = std::exp(log_term);
    CompSum acc;
    for (;;) {
        acc.add(term);
        if (j == k) break;
        term *= mean / static_cast<double>(j + 1);
        ++j;
    }
    return acc.sum < 1.0 ? acc.sum : 1.0;
}

double poisson_sf(double mean, std::int64_t k) {
    if (!(std::isfinite(mean) && mean >= 0.0)) throw std::domain_error("poisson mean must be >= 0");
    if (k < 0) return 1.0;
    if (mean == 0.0) return 0.0;
    if (static_cast<double>(k) < mean) return 1.0 - poisson_cdf(mean, k);
    double log_term = -mean + static_cast<double>(k + 1) * std::log(mean) -
                      log_gamma(static_cast<double>(k + 2));
    if (log_term < kLogTiny) return 0.0;
    double term = std::exp(log_term);
    CompSum acc;
    std::int64_t j = k + 1;
    const std::int64_t hard_stop =
        k + static_cast<std::int64_t>(60.0 * std::sqrt(mean)) + 4096;
    for (;;) {
        acc.add(term);
        double ratio = mean / static_cast<double>(j + 1);
        if (ratio < 1.0 && term * ratio / (1.0 - ratio) < acc.sum * 1e-17) break;
        if (j > hard_stop) throw nonconvergence_error("poisson_sf: tail scan exceeded its bound");
        term *= ratio;
        ++j;
    }
    return acc.sum < 1.0 ? acc.sum : 1.0;
}

Eigen::ArrayXd poisson_pmf_vector(double mean, std::int64_t len) {
    if (!(std::isfinite(mean) && mean >= 0.0)) throw std::domain_error("poisson mean must be >= 0");
    if (len <= 0) return Eigen::ArrayXd();
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(len);
    if (mean == 0.0) {
        out[0] = 1.0;
        return out;
    }
    double log_term = -mean;
    std::int64_t j = 0;
    while (j < len && log_term < kLogTiny) {
        log_term += std::log(mean) - std::log(static_cast<double>(j + 1));
        ++j;
    }
    double term = std::exp(log_term);
    for (; j < len; ++j) {
        out[j] = term;
        term *= mean / static_cast<double>(j + 1);
    }
    return out;
}

std::int64_t poisson_tail_cutoff(double mean, double tail_eps) {
    if (!(std::isfinite(mean) && mean >= 0.0)) throw std::domain_error("poisson mean must be >= 0");
    if (!(tail_eps > 0.0)) throw std::domain_error("tail_eps must be positive");
    if (mean == 0.0) return 0;
    std::int64_t k = 0;
    double term = std::exp(-mean);
    CompSum acc;
    const std::int64_t hard_stop = static_cast<std::int64_t>(mean + 60.0 * std::sqrt(mean)) + 2048;
    for (;;) {
        acc.add(term);
        if (1.0 - acc.sum < tail_eps) return k;
        if (k > hard_stop)
            throw nonconvergence_error("poisson_tail_cutoff: scan exceeded the far-tail bound");
        term *= mean / static_cast<double>(k + 1);
        ++k;
    }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal quantile level must be in (0,1)");
    // Acklam's rational approximation, then one Halley step on erfc.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace enroll
