#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "enroll/plan.hpp"

namespace enroll {

/// Per-country cost coefficients: per selected site, per enrolled patient,
/// and per country with a non-zero number of sites.
struct CostModel {
    std::vector<double> site_cost;
    std::vector<double> patient_cost;
    std::vector<double> country_cost;
};

/// Box bounds on the number of sites per country.
struct AllocationBounds {
    std::vector<int> low;
    std::vector<int> high;
};

/// Country-level enrollment kinetics used by the optimizers. mean_time R(s)
/// and mean_sq_time V(s) are frozen at the continuous-uniform activation
/// expectations over [a, b], which keeps E and G^2 linear in the allocation:
///   R(s) = T - (a+b)/2,  V(s) = ((T-a)^3 - (T-b)^3) / (3 (b-a)).
struct CountryKinetics {
    double rate_mean = 0.0;  // m(s), patients/day/site
    double rate_var = 0.0;   // sigma^2(s)
    double window_a = 0.0;
    double window_b = 0.0;
    double mean_time = 0.0;     // R(s)
    double mean_sq_time = 0.0;  // V(s)
};

CountryKinetics make_kinetics(double rate_mean, double rate_var, double window_a,
                              double window_b, double horizon);

/// R(s), V(s) recomputed from the realized uniform activation grid for a
/// specific site count (the exact values behind the frozen ones above).
CountryKinetics grid_kinetics(const CountryKinetics& kin, int n_sites, double horizon);

using Caps = std::vector<std::optional<std::int64_t>>;

enum class PosEval {
    pg,             // aggregated PG tail of the unrestricted global process
    normal,         // normal approximation of the unrestricted global process
    capped_normal,  // normal approximation with per-country capped moments
};

/// Probability of reaching n by the horizon already folded into the
/// kinetics, under the chosen evaluation. caps may be empty (treated as
/// uncapped) and is only consulted by capped_normal. Deterministic
/// degenerate limits return the indicator.
double design_pos(const Eigen::VectorXi& alloc, const std::vector<CountryKinetics>& kin,
                  const Caps& caps, std::int64_t n, PosEval eval);

double total_cost(const Eigen::VectorXi& alloc, const std::vector<CountryKinetics>& kin,
                  const CostModel& costs);

/// Feasibility: the upper-bound allocation meets P under the evaluation the
/// optimizer will use.
bool check_feasibility(const AllocationBounds& bounds, const std::vector<CountryKinetics>& kin,
                       const Caps& caps, std::int64_t n, double prob, PosEval eval);

struct AllocationResult {
    Eigen::VectorXi alloc;
    double total_cost = 0.0;
    double pos_achieved = 0.0;
    std::string method;
    std::int64_t iterations = 0;
};

struct StepwiseTrace {
    std::vector<Eigen::VectorXd> iterates;  // continuous x per iteration
    std::vector<double> costs;
};

/// Step-wise linearization: repeatedly solve the LP
///   min cost . x   s.t.  sum x_s m(s) R(s) >= n + z_P G(x_prev + H) - E(H),
///   0 <= x <= U - H,
/// until successive total costs differ by < 0.5, then round the fractional
/// coordinates by the lower/upper neighbor search that keeps the criterion.
AllocationResult optimize_stepwise_lp(const AllocationBounds& bounds,
                                      const std::vector<CountryKinetics>& kin,
                                      const CostModel& costs, std::int64_t n, double prob,
                                      StepwiseTrace* trace = nullptr);

/// Exhaustive odometer search over the allocation box. PoS per candidate is
/// the pg evaluation when no caps are present, otherwise the capped normal
/// pipeline. Refuses grids larger than dim_ceiling.
AllocationResult optimize_direct(const AllocationBounds& bounds,
                                 const std::vector<CountryKinetics>& kin, const CostModel& costs,
                                 std::int64_t n, double prob, const Caps& caps = {},
                                 double dim_ceiling = 1e8);

struct DeConfig {
    int population = 0;     // 0 -> 10 * countries
    int generations = 300;
    double weight = 0.8;    // F
    double crossover = 0.9; // CR
    double penalty = 0.0;   // 0 -> 10 * total_cost(U)
    std::uint64_t seed = 12345;
};

/// rand/1/bin differential evolution over the real-coded box [H, U]^S with
/// integer projection at evaluation and a penalty on the PoS shortfall.
/// Deterministic for a fixed seed.
AllocationResult optimize_de(const AllocationBounds& bounds,
                             const std::vector<CountryKinetics>& kin, const CostModel& costs,
                             const Caps& caps, std::int64_t n, double prob,
                             const DeConfig& cfg = {});

/// Number of grid points of the allocation box.
double allocation_dim(const AllocationBounds& bounds);

/// Concrete StudyPlan realizing an allocation: activation days on the uniform
/// grid over each country's window, site priors from the country kinetics.
StudyPlan realize_plan(const Eigen::VectorXi& alloc, const std::vector<CountryKinetics>& kin,
                       const Caps& caps, std::int64_t n, int t_plan_days,
                       const std::vector<std::string>& ids = {});

}  // namespace enroll
