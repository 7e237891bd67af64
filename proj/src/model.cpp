#include "enroll/model.hpp"

#include <cmath>

#include "enroll/errors.hpp"

namespace enroll {

RateMoments country_rate_moments(const CountryPlan& country, double t) {
    if (!(t >= 0.0)) throw std::domain_error("t must be >= 0");
    RateMoments m;
    for (const auto& site : country.sites) {
        double v = exposure(t, site.activation_day);
        if (v <= 0.0) continue;
        m.mean += site.prior.mean() * v;
        m.var += site.prior.variance() * v * v;
    }
    return m;
}

AggregatedPG aggregate_pg(const RateMoments& m) {
    if (!(m.var > 0.0))
        throw degenerate_moments_error(
            "cumulative rate has zero variance; use the Poisson/point-mass fallback");
    return AggregatedPG{m.mean * m.mean / m.var, m.mean / m.var};
}

DiscreteDist count_dist_from_moments(const RateMoments& m, double tail_eps) {
    if (m.mean <= 0.0) return DiscreteDist::point_mass(0);
    std::int64_t cut;
    Eigen::ArrayXd pmf;
    if (m.var > 0.0) {
        PGParams pg = aggregate_pg(m).pg();
        cut = pg_tail_cutoff(pg, tail_eps);
        pmf = pg_pmf_vector(pg, cut + 1);
    } else {
        cut = poisson_tail_cutoff(m.mean, tail_eps);
        pmf = poisson_pmf_vector(m.mean, cut + 1);
    }
    // absorb the remaining tail so the vector sums to 1 exactly
    double head = pmf.head(cut).sum();
    pmf[cut] = 1.0 - head;
    return DiscreteDist{std::move(pmf)};
}

DiscreteDist country_count_dist(const CountryPlan& country, double t, double tail_eps) {
    return count_dist_from_moments(country_rate_moments(country, t), tail_eps);
}

double count_cdf_from_moments(const RateMoments& m, std::int64_t k) {
    if (k < 0) return 0.0;
    if (m.mean <= 0.0) return 1.0;
    if (m.var > 0.0) return pg_cdf(aggregate_pg(m).pg(), k);
    return poisson_cdf(m.mean, k);
}

double count_sf_from_moments(const RateMoments& m, std::int64_t k) {
    if (k < 0) return 1.0;
    if (m.mean <= 0.0) return 0.0;
    if (m.var > 0.0) return pg_sf(aggregate_pg(m).pg(), k);
    return poisson_sf(m.mean, k);
}

double time_to_target_cdf(const CountryPlan& country, std::int64_t target, double t) {
    if (target < 1) throw std::domain_error("target must be >= 1");
    if (!(t >= 0.0)) throw std::domain_error("t must be >= 0");
    RateMoments m = country_rate_moments(country, t);
    return count_sf_from_moments(m, target - 1);
}

}  // namespace enroll
