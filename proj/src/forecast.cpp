#include "enroll/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "enroll/errors.hpp"
#include "enroll/parallel.hpp"

namespace enroll {

namespace {

void require_reachable(const StudyPlan& plan) {
    auto bound = max_attainable(plan);
    if (bound && *bound < plan.target_n)
        throw unreachable_target_error("target " + std::to_string(plan.target_n) +
                                       " exceeds the capped maximum " + std::to_string(*bound));
}

std::int64_t quantile_from_moments(const MeanVar& mv, double q) {
    // smallest integer k with Phi((k - E)/G) >= q
    if (mv.var <= 0.0) return static_cast<std::int64_t>(std::ceil(mv.mean));
    double x = mv.mean + normal_quantile(q) * std::sqrt(mv.var);
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(x - 1e-9)));
}

}  // namespace

DiscreteDist global_dist(const StudyPlan& plan, double t, double tail_eps) {
    std::vector<DiscreteDist> parts;
    parts.reserve(plan.countries.size());
    for (const auto& c : plan.countries) {
        if (c.cap)
            parts.push_back(capped_country_dist(c, t).as_discrete());
        else
            parts.push_back(country_count_dist(c, t, tail_eps));
    }
    return convolve_all(std::move(parts));
}

MeanVar global_moments(const StudyPlan& plan, double t) {
    MeanVar total;
    for (const auto& c : plan.countries) {
        if (c.cap) {
            MeanVar mv = capped_country_mean_var(c, t);
            total.mean += mv.mean;
            total.var += mv.var;
        } else {
            RateMoments m = country_rate_moments(c, t);
            total.mean += m.mean;
            total.var += m.mean + m.var;  // Poisson layer + rate variance
        }
    }
    return total;
}

double pos(const StudyPlan& plan, double t, PosMethod method) {
    if (!(t >= 0.0)) throw std::domain_error("t must be >= 0");
    if (method == PosMethod::convolution)
        return global_dist(plan, t).sf(plan.target_n - 1);
    MeanVar mv = global_moments(plan, t);
    if (mv.var <= 0.0) return mv.mean >= static_cast<double>(plan.target_n) ? 1.0 : 0.0;
    return normal_cdf((mv.mean - static_cast<double>(plan.target_n)) / std::sqrt(mv.var));
}

int completion_time_quantile(const StudyPlan& plan, double q, PosMethod method) {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("q must be in (0,1)");
    require_reachable(plan);

    // exponential bracket on the day grid
    int hi = 1;
    const int t_max = 1 << 24;
    while (pos(plan, hi, method) < q) {
        if (hi >= t_max)
            throw nonconvergence_error("completion time bracket exceeded " +
                                       std::to_string(t_max) + " days");
        hi *= 2;
    }
    int lo = hi / 2;  // pos(lo) < q or lo == 0
    while (lo + 1 < hi) {
        int mid = lo + (hi - lo) / 2;
        if (pos(plan, mid, method) >= q)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

ForecastSeries forecast_series(const StudyPlan& plan, double q_level, PosMethod method) {
    if (!(q_level >= 0.5 && q_level < 1.0))
        throw std::domain_error("q_level must be in [0.5, 1)");
    ForecastSeries series;
    series.t95 = completion_time_quantile(plan, 0.95, method);
    const double q_lo = (1.0 - q_level) / 2.0;
    const double q_hi = 1.0 - q_lo;

    const int n_days = series.t95;
    series.days.resize(n_days);
    series.mean.resize(n_days);
    series.median.resize(n_days);
    series.lo.resize(n_days);
    series.hi.resize(n_days);
    series.pos_by_day.resize(n_days);

    parallel_for(0, n_days, [&](std::int64_t i) {
        const int day = static_cast<int>(i) + 1;
        series.days[i] = day;
        series.mean[i] = global_moments(plan, day).mean;
        if (method == PosMethod::convolution) {
            DiscreteDist d = global_dist(plan, day);
            series.median[i] = d.quantile(0.5);
            series.lo[i] = d.quantile(q_lo);
            series.hi[i] = d.quantile(q_hi);
            series.pos_by_day[i] = d.sf(plan.target_n - 1);
        } else {
            MeanVar mv = global_moments(plan, day);
            series.median[i] = quantile_from_moments(mv, 0.5);
            series.lo[i] = quantile_from_moments(mv, q_lo);
            series.hi[i] = quantile_from_moments(mv, q_hi);
            series.pos_by_day[i] =
                mv.var > 0.0
                    ? normal_cdf((mv.mean - static_cast<double>(plan.target_n)) / std::sqrt(mv.var))
                    : (mv.mean >= static_cast<double>(plan.target_n) ? 1.0 : 0.0);
        }
    });
    return series;
}

CapImpactReport cap_impact_report(const StudyPlan& plan, double q) {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("q must be in (0,1)");
    bool any_cap = false;
    for (const auto& c : plan.countries) any_cap = any_cap || c.cap.has_value();
    if (!any_cap) throw std::invalid_argument("cap_impact_report: no capped countries");

    CapImpactReport rep;
    rep.q = q;
    rep.global_pos = pos(plan, plan.t_plan_days, PosMethod::convolution);
    rep.global_time_q = completion_time_quantile(plan, q, PosMethod::convolution);

    for (const auto& c : plan.countries) {
        if (!c.cap || *c.cap < 1) continue;
        CapImpactEntry e;
        e.country_id = c.id;
        e.cap = *c.cap;
        e.p_cap_by_tplan = time_to_cap_cdf(c, plan.t_plan_days);

        // q-quantile of the cap-hitting time, on the day grid
        int hi = 1;
        const int t_max = 1 << 24;
        while (time_to_cap_cdf(c, hi) < q && hi < t_max) hi *= 2;
        int lo = hi / 2;
        while (lo + 1 < hi) {
            int mid = lo + (hi - lo) / 2;
            if (time_to_cap_cdf(c, mid) >= q)
                hi = mid;
            else
                lo = mid;
        }
        e.time_to_cap_q = hi;
        // either criterion recommends raising the cap
        e.flagged = e.p_cap_by_tplan > rep.global_pos || e.time_to_cap_q < rep.global_time_q;
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

}  // namespace enroll
