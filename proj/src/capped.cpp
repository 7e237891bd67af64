#include "enroll/capped.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "enroll/errors.hpp"

namespace enroll {

namespace {

void require_cap(std::int64_t cap) {
    if (cap < 0) throw std::domain_error("cap must be >= 0");
}

CappedDist cap_with_atom(Eigen::ArrayXd head, std::int64_t cap, double atom) {
    Eigen::ArrayXd pmf = Eigen::ArrayXd::Zero(cap + 1);
    pmf.head(cap) = head.head(cap);
    pmf[cap] = atom;
    return CappedDist{std::move(pmf), cap};
}

MeanVar brute_mean_var(const CappedDist& d) {
    double m = 0.0, m2 = 0.0;
    for (std::int64_t k = 1; k <= d.cap; ++k) {
        double kk = static_cast<double>(k);
        m += kk * d.pmf[k];
        m2 += kk * kk * d.pmf[k];
    }
    return MeanVar{m, std::max(0.0, m2 - m * m)};
}

}  // namespace

CappedDist capped_pg_dist(const PGParams& params, std::int64_t cap) {
    require_cap(cap);
    if (cap == 0) return CappedDist{Eigen::ArrayXd::Ones(1), 0};
    Eigen::ArrayXd head = pg_pmf_vector(params, cap);
    double atom = pg_sf(params, cap - 1);
    Eigen::ArrayXd pmf = Eigen::ArrayXd::Zero(cap + 1);
    pmf.head(cap) = head.head(cap);
    pmf[cap] = atom;
    return CappedDist{std::move(pmf), cap};
}

CappedDist capped_site_dist(const SitePlan& site, double t, std::int64_t cap) {
    double v = exposure(t, site.activation_day);
    return capped_pg_dist(PGParams(v, site.prior.alpha, site.prior.beta), cap);
}

double capped_mean(const PGParams& p, std::int64_t cap) {
    require_cap(cap);
    if (cap == 0 || p.t == 0.0) return 0.0;
    double mean = p.alpha * p.t / p.beta;
    return mean * pg_cdf(PGParams(p.t, p.alpha + 1.0, p.beta), cap - 2) +
           static_cast<double>(cap) * pg_sf(p, cap - 1);
}

double capped_second_moment(const PGParams& p, std::int64_t cap) {
    require_cap(cap);
    if (cap == 0 || p.t == 0.0) return 0.0;
    double mean = p.alpha * p.t / p.beta;
    double capd = static_cast<double>(cap);
    return mean * (p.alpha + 1.0) * p.t / p.beta *
               pg_cdf(PGParams(p.t, p.alpha + 2.0, p.beta), cap - 3) +
           mean * pg_cdf(PGParams(p.t, p.alpha + 1.0, p.beta), cap - 2) +
           capd * capd * pg_sf(p, cap - 1);
}

MeanVar capped_moments_from_rate(const RateMoments& m, std::int64_t cap) {
    require_cap(cap);
    if (cap == 0 || m.mean <= 0.0) return MeanVar{0.0, 0.0};
    if (!(m.var > 0.0)) {
        // Poisson limit of the aggregation: sum over the capped vector.
        Eigen::ArrayXd head = poisson_pmf_vector(m.mean, cap);
        return brute_mean_var(cap_with_atom(std::move(head), cap, poisson_sf(m.mean, cap - 1)));
    }
    AggregatedPG ab = aggregate_pg(m);
    double capd = static_cast<double>(cap);
    double tail = pg_sf(PGParams(1.0, ab.a, ab.b), cap - 1);
    double mean = m.mean * pg_cdf(PGParams(1.0, ab.a + 1.0, ab.b), cap - 2) + capd * tail;
    double m2 = (m.mean * m.mean + m.var) * pg_cdf(PGParams(1.0, ab.a + 2.0, ab.b), cap - 3) +
                m.mean * pg_cdf(PGParams(1.0, ab.a + 1.0, ab.b), cap - 2) + capd * capd * tail;
    return MeanVar{mean, std::max(0.0, m2 - mean * mean)};
}

CappedDist capped_country_dist(const CountryPlan& country, double t) {
    if (!country.cap) throw std::invalid_argument("country '" + country.id + "' has no cap");
    std::int64_t cap = *country.cap;
    require_cap(cap);
    if (cap == 0) return CappedDist{Eigen::ArrayXd::Ones(1), 0};
    RateMoments m = country_rate_moments(country, t);
    if (m.mean <= 0.0) {
        Eigen::ArrayXd pmf = Eigen::ArrayXd::Zero(cap + 1);
        pmf[0] = 1.0;
        return CappedDist{std::move(pmf), cap};
    }
    if (!(m.var > 0.0)) {
        Eigen::ArrayXd head = poisson_pmf_vector(m.mean, cap);
        return cap_with_atom(std::move(head), cap, poisson_sf(m.mean, cap - 1));
    }
    return capped_pg_dist(aggregate_pg(m).pg(), cap);
}

MeanVar capped_country_mean_var(const CountryPlan& country, double t) {
    if (!country.cap) throw std::invalid_argument("country '" + country.id + "' has no cap");
    return capped_moments_from_rate(country_rate_moments(country, t), *country.cap);
}

double time_to_cap_cdf(const CountryPlan& country, double t) {
    if (!country.cap || *country.cap < 1)
        throw std::invalid_argument("time_to_cap_cdf requires a cap >= 1");
    return time_to_target_cdf(country, *country.cap, t);
}

AsymptoticReport asymptotic_suite(const CountryPlan& country) {
    if (!country.cap) throw std::invalid_argument("country '" + country.id + "' has no cap");
    const std::int64_t cap = *country.cap;
    AsymptoticReport rep;
    rep.t_grid = {1e2, 1e3, 1e4};
    for (double t : rep.t_grid) rep.by_time.push_back(capped_country_mean_var(country, t));

    // site-doubling grid: clone the country's sites, evaluated at the time
    // the base country is about half saturated so more sites still move it
    rep.site_counts = {static_cast<int>(country.sites.size())};
    while (rep.site_counts.size() < 3) rep.site_counts.push_back(rep.site_counts.back() * 10);
    double t_fixed = 1.0;
    while (t_fixed < 1e7 &&
           capped_country_mean_var(country, t_fixed).mean < 0.5 * static_cast<double>(cap))
        t_fixed *= 2.0;
    for (int n : rep.site_counts) {
        CountryPlan grown;
        grown.cap = cap;
        for (int i = 0; i < n && !country.sites.empty(); ++i) {
            SitePlan s = country.sites[static_cast<std::size_t>(i) % country.sites.size()];
            grown.sites.push_back(std::move(s));
        }
        rep.by_sites.push_back(capped_country_mean_var(grown, t_fixed));
    }

    const double capd = static_cast<double>(cap);
    if (cap == 0) {
        rep.mean_converges_in_t = rep.var_converges_in_t = rep.var_decreases_in_sites = true;
        return rep;
    }
    rep.mean_converges_in_t = true;
    rep.var_converges_in_t = true;
    for (std::size_t i = 1; i < rep.by_time.size(); ++i) {
        if (capd - rep.by_time[i].mean > capd - rep.by_time[i - 1].mean + 1e-12)
            rep.mean_converges_in_t = false;
        if (rep.by_time[i].var > rep.by_time[i - 1].var + 1e-12) rep.var_converges_in_t = false;
    }
    if (std::abs(rep.by_time.back().mean - capd) > 1e-6) rep.mean_converges_in_t = false;
    rep.var_decreases_in_sites = true;
    for (std::size_t i = 1; i < rep.by_sites.size(); ++i)
        if (rep.by_sites[i].var >= rep.by_sites[i - 1].var) rep.var_decreases_in_sites = false;
    return rep;
}

}  // namespace enroll
