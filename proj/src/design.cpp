#include "enroll/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "enroll/capped.hpp"
#include "enroll/errors.hpp"
#include "enroll/parallel.hpp"
#include "enroll/simplex.hpp"

namespace enroll {

namespace {

void require_inputs(const AllocationBounds& bounds, const std::vector<CountryKinetics>& kin,
                    const CostModel* costs, const Caps* caps) {
    const std::size_t s = kin.size();
    if (s == 0) throw std::invalid_argument("no countries");
    if (bounds.low.size() != s || bounds.high.size() != s)
        throw std::invalid_argument("bounds size mismatch");
    for (std::size_t i = 0; i < s; ++i) {
        if (bounds.low[i] < 0 || bounds.low[i] > bounds.high[i])
            throw std::invalid_argument("bounds must satisfy 0 <= low <= high");
    }
    if (costs && (costs->site_cost.size() != s || costs->patient_cost.size() != s ||
                  costs->country_cost.size() != s))
        throw std::invalid_argument("cost model size mismatch");
    if (caps && !caps->empty() && caps->size() != s)
        throw std::invalid_argument("caps size mismatch");
}

// E(T,N) and S^2(T,N) in the frozen linear forms.
void rate_sums(const Eigen::VectorXi& alloc, const std::vector<CountryKinetics>& kin,
               double& mean, double& var) {
    mean = 0.0;
    var = 0.0;
    for (std::size_t s = 0; s < kin.size(); ++s) {
        double ns = alloc[static_cast<Eigen::Index>(s)];
        mean += ns * kin[s].rate_mean * kin[s].mean_time;
        var += ns * kin[s].rate_var * kin[s].mean_sq_time;
    }
}

std::optional<std::int64_t> cap_of(const Caps& caps, std::size_t s) {
    return caps.empty() ? std::nullopt : caps[s];
}

}  // namespace

CountryKinetics make_kinetics(double rate_mean, double rate_var, double window_a,
                              double window_b, double horizon) {
    if (!(rate_mean > 0.0) || !(rate_var >= 0.0))
        throw std::invalid_argument("rate mean must be positive, variance nonnegative");
    if (!(window_a >= 0.0) || window_b < window_a)
        throw std::invalid_argument("activation window must satisfy 0 <= a <= b");
    if (window_b > horizon)
        throw std::invalid_argument("activation window must close before the horizon");
    CountryKinetics k;
    k.rate_mean = rate_mean;
    k.rate_var = rate_var;
    k.window_a = window_a;
    k.window_b = window_b;
    k.mean_time = horizon - 0.5 * (window_a + window_b);
    double ta = horizon - window_a, tb = horizon - window_b;
    k.mean_sq_time = window_b > window_a
                         ? (ta * ta * ta - tb * tb * tb) / (3.0 * (window_b - window_a))
                         : ta * ta;
    return k;
}

CountryKinetics grid_kinetics(const CountryKinetics& kin, int n_sites, double horizon) {
    CountryKinetics k = kin;
    if (n_sites <= 0) {
        k.mean_time = 0.0;
        k.mean_sq_time = 0.0;
        return k;
    }
    auto days = activation_grid(static_cast<int>(kin.window_a), static_cast<int>(kin.window_b),
                                n_sites);
    double r = 0.0, v = 0.0;
    for (int u : days) {
        double e = exposure(horizon, u);
        r += e;
        v += e * e;
    }
    k.mean_time = r / n_sites;
    k.mean_sq_time = v / n_sites;
    return k;
}

double total_cost(const Eigen::VectorXi& alloc, const std::vector<CountryKinetics>& kin,
                  const CostModel& costs) {
    double c = 0.0;
    for (std::size_t s = 0; s < kin.size(); ++s) {
        double ns = alloc[static_cast<Eigen::Index>(s)];
        c += costs.site_cost[s] * ns;
        c += costs.patient_cost[s] * kin[s].rate_mean * kin[s].mean_time * ns;
        if (ns > 0) c += costs.country_cost[s];
    }
    return c;
}

double design_pos(const Eigen::VectorXi& alloc, const std::vector<CountryKinetics>& kin,
                  const Caps& caps, std::int64_t n, PosEval eval) {
    if (n < 1) throw std::invalid_argument("target n must be >= 1");
    double nd = static_cast<double>(n);

    if (eval == PosEval::capped_normal) {
        MeanVar total;
        for (std::size_t s = 0; s < kin.size(); ++s) {
            double ns = alloc[static_cast<Eigen::Index>(s)];
            RateMoments m{ns * kin[s].rate_mean * kin[s].mean_time,
                          ns * kin[s].rate_var * kin[s].mean_sq_time};
            if (auto cap = cap_of(caps, s)) {
                MeanVar mv = capped_moments_from_rate(m, *cap);
                total.mean += mv.mean;
                total.var += mv.var;
            } else {
                total.mean += m.mean;
                total.var += m.mean + m.var;
            }
        }
        if (total.var <= 0.0) return total.mean >= nd ? 1.0 : 0.0;
        return normal_cdf((total.mean - nd) / std::sqrt(total.var));
    }

    double mean, var;
    rate_sums(alloc, kin, mean, var);
    if (eval == PosEval::normal) {
        double g2 = mean + var;
        if (g2 <= 0.0) return mean >= nd ? 1.0 : 0.0;
        return normal_cdf((mean - nd) / std::sqrt(g2));
    }
    // pg: aggregated negative-binomial tail
    if (var <= 0.0) {
        if (mean <= 0.0) return 0.0;
        return poisson_sf(mean, n - 1);
    }
    return pg_sf(PGParams(1.0, mean * mean / var, mean / var), n - 1);
}

bool check_feasibility(const AllocationBounds& bounds, const std::vector<CountryKinetics>& kin,
                       const Caps& caps, std::int64_t n, double prob, PosEval eval) {
    require_inputs(bounds, kin, nullptr, &caps);
    Eigen::VectorXi upper(static_cast<Eigen::Index>(bounds.high.size()));
    for (std::size_t s = 0; s < bounds.high.size(); ++s)
        upper[static_cast<Eigen::Index>(s)] = bounds.high[s];
    return design_pos(upper, kin, caps, n, eval) >= prob;
}

// ---------------------------------------------------------------------------
// step-wise linearized optimization

AllocationResult optimize_stepwise_lp(const AllocationBounds& bounds,
                                      const std::vector<CountryKinetics>& kin,
                                      const CostModel& costs, std::int64_t n, double prob,
                                      StepwiseTrace* trace) {
    require_inputs(bounds, kin, &costs, nullptr);
    if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("prob must be in (0,1)");
    if (!check_feasibility(bounds, kin, {}, n, prob, PosEval::normal))
        throw infeasible_error("requested probability unattainable at the upper bounds");

    const int s_count = static_cast<int>(kin.size());
    const double z = normal_quantile(prob);

    Eigen::VectorXi low(s_count);
    Eigen::VectorXd ub(s_count), w(s_count), lin_cost(s_count), gvar(s_count);
    double const_cost = 0.0;
    for (int s = 0; s < s_count; ++s) {
        low[s] = bounds.low[static_cast<std::size_t>(s)];
        ub[s] = bounds.high[static_cast<std::size_t>(s)] - low[s];
        w[s] = kin[static_cast<std::size_t>(s)].rate_mean *
               kin[static_cast<std::size_t>(s)].mean_time;
        gvar[s] = w[s] + kin[static_cast<std::size_t>(s)].rate_var *
                             kin[static_cast<std::size_t>(s)].mean_sq_time;
        lin_cost[s] = costs.site_cost[static_cast<std::size_t>(s)] +
                      costs.patient_cost[static_cast<std::size_t>(s)] * w[s];
        const_cost += lin_cost[s] * low[s];
        // country inclusion cost enters the LP only for countries already
        // forced in by the lower bound; the discrete paths handle it exactly
        if (low[s] > 0) const_cost += costs.country_cost[static_cast<std::size_t>(s)];
    }
    const double e_low = (low.cast<double>().array() * w.array()).sum();

    LinearProgram lp;
    lp.objective = lin_cost;
    lp.constraints = Eigen::MatrixXd::Zero(1, s_count);
    lp.constraints.row(0) = w.transpose();
    lp.rhs = Eigen::VectorXd::Zero(1);
    lp.relations = {'>'};
    lp.lower = Eigen::VectorXd::Zero(s_count);
    lp.upper = ub;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(s_count);
    double prev_cost = 0.0;
    std::int64_t iters = 0;
    const int max_iters = 15;
    bool stabilized = false;
    const Eigen::VectorXd sig2v = gvar - w;  // per-site sigma^2(s) V(s)
    for (int k = 0; k < max_iters; ++k) {
        ++iters;
        double e_xh = e_low + (x.array() * w.array()).sum();
        double s2_xh = ((x + low.cast<double>()).array() * sig2v.array()).sum();
        double g2 = e_xh + s2_xh;
        double rhs = static_cast<double>(n) + z * std::sqrt(std::max(0.0, g2)) - e_low;
        if (rhs <= 0.0) {
            x.setZero();
        } else {
            lp.rhs[0] = rhs;
            LpSolution sol = solve_lp(lp);
            if (!sol.feasible)
                throw infeasible_error("linearized constraint infeasible within the bounds");
            x = sol.x;
        }
        double cost = const_cost + lin_cost.dot(x);
        if (trace) {
            trace->iterates.push_back(x);
            trace->costs.push_back(cost);
        }
        if (z <= 0.0) {  // the constraint is already linear; one solve is exact
            stabilized = true;
            break;
        }
        if (k > 0 && std::abs(cost - prev_cost) < 0.5) {
            stabilized = true;
            break;
        }
        prev_cost = cost;
    }
    if (!stabilized)
        throw nonconvergence_error("stepwise optimization did not stabilize within 15 steps");

    // rounding: neighbor search over the fractional coordinates
    auto crit_ok = [&](const Eigen::VectorXi& alloc) {
        double mean, var;
        rate_sums(alloc, kin, mean, var);
        return mean - z * std::sqrt(std::max(0.0, mean + var)) >=
               static_cast<double>(n) - 1e-9;
    };

    std::vector<int> frac;
    Eigen::VectorXi base(s_count);
    for (int s = 0; s < s_count; ++s) {
        double r = std::floor(x[s] + 1e-7);
        base[s] = low[s] + static_cast<int>(r);
        if (x[s] - r > 1e-7) frac.push_back(s);
    }

    Eigen::VectorXi best;
    double best_cost = 0.0;
    auto consider = [&](const Eigen::VectorXi& cand) {
        if (!crit_ok(cand)) return;
        double c = total_cost(cand, kin, costs);
        if (best.size() == 0 || c < best_cost) {
            best = cand;
            best_cost = c;
        }
    };

    if (frac.size() <= 20) {
        const std::size_t combos = std::size_t{1} << frac.size();
        for (std::size_t mask = 0; mask < combos; ++mask) {
            Eigen::VectorXi cand = base;
            for (std::size_t j = 0; j < frac.size(); ++j)
                if (mask & (std::size_t{1} << j)) cand[frac[j]] += 1;
            for (int s = 0; s < s_count; ++s)
                cand[s] = std::min(cand[s], bounds.high[static_cast<std::size_t>(s)]);
            consider(cand);
        }
    } else {
        // cheapest-neighbor greedy: raise fractional coordinates by unit cost
        Eigen::VectorXi cand = base;
        std::vector<int> order(frac);
        std::sort(order.begin(), order.end(),
                  [&](int a2, int b2) { return lin_cost[a2] < lin_cost[b2]; });
        consider(cand);
        for (int s : order) {
            if (best.size() != 0) break;
            cand[s] = std::min(cand[s] + 1, bounds.high[static_cast<std::size_t>(s)]);
            consider(cand);
        }
    }
    if (best.size() == 0) {
        // climb toward the (feasible) upper bounds, cheapest constraint gain first
        Eigen::VectorXi cand = base;
        std::vector<int> order(static_cast<std::size_t>(s_count));
        for (int s = 0; s < s_count; ++s) order[static_cast<std::size_t>(s)] = s;
        std::sort(order.begin(), order.end(),
                  [&](int a2, int b2) { return lin_cost[a2] / w[a2] < lin_cost[b2] / w[b2]; });
        bool progress = true;
        while (best.size() == 0 && progress) {
            progress = false;
            for (int s : order) {
                if (cand[s] < bounds.high[static_cast<std::size_t>(s)]) {
                    cand[s] += 1;
                    progress = true;
                    consider(cand);
                    if (best.size() != 0) break;
                }
            }
        }
        if (best.size() == 0)
            throw infeasible_error("no integer allocation satisfies the criterion");
    }

    AllocationResult res;
    res.alloc = best;
    res.total_cost = best_cost;
    res.pos_achieved = design_pos(best, kin, {}, n, PosEval::normal);
    res.method = "stepwise-lp";
    res.iterations = iters;
    return res;
}

// ---------------------------------------------------------------------------
// exhaustive direct search

double allocation_dim(const AllocationBounds& bounds) {
    double dim = 1.0;
    for (std::size_t s = 0; s < bounds.low.size(); ++s)
        dim *= static_cast<double>(bounds.high[s] - bounds.low[s] + 1);
    return dim;
}

AllocationResult optimize_direct(const AllocationBounds& bounds,
                                 const std::vector<CountryKinetics>& kin, const CostModel& costs,
                                 std::int64_t n, double prob, const Caps& caps,
                                 double dim_ceiling) {
    require_inputs(bounds, kin, &costs, &caps);
    if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("prob must be in (0,1)");
    const double dim = allocation_dim(bounds);
    if (dim > dim_ceiling)
        throw dimension_ceiling_error("allocation grid has " + std::to_string(dim) +
                                      " points, above the ceiling " +
                                      std::to_string(dim_ceiling));

    bool any_cap = false;
    for (const auto& c : caps) any_cap = any_cap || c.has_value();
    const PosEval eval = any_cap ? PosEval::capped_normal : PosEval::pg;
    if (!check_feasibility(bounds, kin, caps, n, prob, eval))
        throw infeasible_error("requested probability unattainable at the upper bounds");

    const int s_count = static_cast<int>(kin.size());
    std::vector<std::int64_t> range(static_cast<std::size_t>(s_count));
    for (int s = 0; s < s_count; ++s)
        range[static_cast<std::size_t>(s)] =
            bounds.high[static_cast<std::size_t>(s)] - bounds.low[static_cast<std::size_t>(s)] + 1;
    const auto total = static_cast<std::int64_t>(dim);

    auto decode = [&](std::int64_t idx, Eigen::VectorXi& out) {
        for (int s = 0; s < s_count; ++s) {
            out[s] = bounds.low[static_cast<std::size_t>(s)] +
                     static_cast<int>(idx % range[static_cast<std::size_t>(s)]);
            idx /= range[static_cast<std::size_t>(s)];
        }
    };

    Eigen::VectorXi upper(s_count);
    for (int s = 0; s < s_count; ++s) upper[s] = bounds.high[static_cast<std::size_t>(s)];
    const double cost_upper = total_cost(upper, kin, costs);

    struct Best {
        double cost;
        std::int64_t idx;
    };
    const auto max_chunks =
        static_cast<std::size_t>(std::min<std::int64_t>(thread_count(), total));
    std::vector<Best> local(std::max<std::size_t>(1, max_chunks), Best{cost_upper, total - 1});
    parallel_chunks(total, [&](std::int64_t lo, std::int64_t hi, unsigned chunk) {
        Eigen::VectorXi cand(s_count);
        Best b{cost_upper, total - 1};
        for (std::int64_t idx = lo; idx < hi; ++idx) {
            decode(idx, cand);
            double c = total_cost(cand, kin, costs);
            if (c >= b.cost) continue;
            if (design_pos(cand, kin, caps, n, eval) >= prob) {
                b.cost = c;
                b.idx = idx;
            }
        }
        local[chunk] = b;
    });

    Best best = local[0];
    for (const Best& b : local)
        if (b.cost < best.cost - 1e-12 || (std::abs(b.cost - best.cost) <= 1e-12 && b.idx < best.idx))
            best = b;

    AllocationResult res;
    res.alloc.resize(s_count);
    decode(best.idx, res.alloc);
    res.total_cost = total_cost(res.alloc, kin, costs);
    res.pos_achieved = design_pos(res.alloc, kin, caps, n, eval);
    res.method = "direct";
    res.iterations = total;
    return res;
}

// ---------------------------------------------------------------------------
// differential evolution (rand/1/bin)

AllocationResult optimize_de(const AllocationBounds& bounds,
                             const std::vector<CountryKinetics>& kin, const CostModel& costs,
                             const Caps& caps, std::int64_t n, double prob,
                             const DeConfig& cfg) {
    require_inputs(bounds, kin, &costs, &caps);
    if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("prob must be in (0,1)");

    const int s_count = static_cast<int>(kin.size());
    const int np = cfg.population > 0 ? std::max(4, cfg.population) : std::max(4, 10 * s_count);
    Eigen::VectorXi upper(s_count), lower(s_count);
    for (int s = 0; s < s_count; ++s) {
        lower[s] = bounds.low[static_cast<std::size_t>(s)];
        upper[s] = bounds.high[static_cast<std::size_t>(s)];
    }
    const double penalty = cfg.penalty > 0.0 ? cfg.penalty : 10.0 * total_cost(upper, kin, costs);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    struct Member {
        Eigen::VectorXd x;
        Eigen::VectorXi alloc;
        double cost = 0.0;
        double pos = 0.0;
        double score = 0.0;
    };

    auto evaluate = [&](Member& mem) {
        mem.alloc.resize(s_count);
        for (int s = 0; s < s_count; ++s) {
            auto r = static_cast<int>(std::llround(mem.x[s]));
            mem.alloc[s] = std::clamp(r, lower[s], upper[s]);
        }
        mem.cost = total_cost(mem.alloc, kin, costs);
        mem.pos = design_pos(mem.alloc, kin, caps, n, PosEval::capped_normal);
        mem.score = mem.cost + penalty * std::max(0.0, prob - mem.pos);
    };

    // best constraint-satisfying candidate seen anywhere in the run; the
    // population itself may hover on the infeasible side of the boundary
    Member best_feasible;
    bool have_feasible = false;
    auto archive = [&](const Member& mem) {
        if (mem.pos < prob) return;
        if (!have_feasible || mem.cost < best_feasible.cost) {
            best_feasible = mem;
            have_feasible = true;
        }
    };

    std::vector<Member> pop(static_cast<std::size_t>(np));
    for (int i = 0; i < np; ++i) {
        Member& mem = pop[static_cast<std::size_t>(i)];
        mem.x.resize(s_count);
        for (int s = 0; s < s_count; ++s) {
            if (i == 0)
                mem.x[s] = upper[s];
            else if (i == 1)
                mem.x[s] = lower[s];
            else
                mem.x[s] = lower[s] + unif(rng) * (upper[s] - lower[s]);
        }
        evaluate(mem);
        archive(mem);
    }

    Member trial;
    trial.x.resize(s_count);
    // the integer projection makes the landscape piecewise constant, so a
    // collapsed population freezes; restart around the incumbent when the
    // best score stalls
    const int restart_after = 25;
    int stall = 0;
    double last_best = std::numeric_limits<double>::infinity();
    for (int gen = 0; gen < cfg.generations; ++gen) {
        for (int i = 0; i < np; ++i) {
            int r1, r2, r3;
            do r1 = static_cast<int>(rng() % np); while (r1 == i);
            do r2 = static_cast<int>(rng() % np); while (r2 == i || r2 == r1);
            do r3 = static_cast<int>(rng() % np); while (r3 == i || r3 == r1 || r3 == r2);
            const int jrand = static_cast<int>(rng() % s_count);
            for (int s = 0; s < s_count; ++s) {
                if (s == jrand || unif(rng) < cfg.crossover) {
                    double v = pop[static_cast<std::size_t>(r1)].x[s] +
                               cfg.weight * (pop[static_cast<std::size_t>(r2)].x[s] -
                                             pop[static_cast<std::size_t>(r3)].x[s]);
                    trial.x[s] = std::clamp(v, static_cast<double>(lower[s]),
                                            static_cast<double>(upper[s]));
                } else {
                    trial.x[s] = pop[static_cast<std::size_t>(i)].x[s];
                }
            }
            evaluate(trial);
            archive(trial);
            if (trial.score <= pop[static_cast<std::size_t>(i)].score)
                std::swap(pop[static_cast<std::size_t>(i)], trial);
        }
        double cur = have_feasible ? best_feasible.cost : pop[0].score;
        for (const Member& mem : pop) cur = std::min(cur, mem.score);
        if (cur < last_best - 1e-9) {
            last_best = cur;
            stall = 0;
        } else if (++stall >= restart_after && gen + 1 < cfg.generations) {
            stall = 0;
            for (int i = 0; i < np; ++i) {
                Member& mem = pop[static_cast<std::size_t>(i)];
                if (i == 0 && have_feasible) {
                    mem.x = best_feasible.x;
                } else {
                    for (int s = 0; s < s_count; ++s)
                        mem.x[s] = lower[s] + unif(rng) * (upper[s] - lower[s]);
                }
                evaluate(mem);
                archive(mem);
            }
        }
    }

    if (!have_feasible)
        throw no_feasible_member_error(
            "differential evolution finished without a feasible member");

    AllocationResult res;
    res.alloc = best_feasible.alloc;
    res.total_cost = best_feasible.cost;
    res.pos_achieved = best_feasible.pos;
    res.method = "de";
    res.iterations = cfg.generations;
    return res;
}

StudyPlan realize_plan(const Eigen::VectorXi& alloc, const std::vector<CountryKinetics>& kin,
                       const Caps& caps, std::int64_t n, int t_plan_days,
                       const std::vector<std::string>& ids) {
    StudyPlan plan;
    plan.target_n = n;
    plan.t_plan_days = t_plan_days;
    for (std::size_t s = 0; s < kin.size(); ++s) {
        CountryPlan c;
        c.id = s < ids.size() ? ids[s] : "C" + std::to_string(s + 1);
        if (auto cap = cap_of(caps, s)) c.cap = *cap;
        int ns = alloc[static_cast<Eigen::Index>(s)];
        auto days = activation_grid(static_cast<int>(kin[s].window_a),
                                    static_cast<int>(kin[s].window_b), ns);
        RatePrior prior = RatePrior::from_mean_var(kin[s].rate_mean, kin[s].rate_var);
        for (int i = 0; i < ns; ++i) {
            SitePlan site;
            site.id = c.id + "-s" + std::to_string(i + 1);
            site.activation_day = days[static_cast<std::size_t>(i)];
            site.prior = prior;
            c.sites.push_back(std::move(site));
        }
        plan.countries.push_back(std::move(c));
    }
    return plan;
}

}  // namespace enroll
