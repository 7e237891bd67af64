#pragma once

#include <vector>

#include <Eigen/Core>

namespace enroll {

/// min objective . x  subject to  constraints x (relation) rhs  and
/// lower <= x <= upper, all bounds finite. relations entries are '<', '>'
/// or '=' (componentwise).
struct LinearProgram {
    Eigen::VectorXd objective;
    Eigen::MatrixXd constraints;
    Eigen::VectorXd rhs;
    std::vector<char> relations;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct LpSolution {
    bool feasible = false;
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
};

/// Two-phase primal simplex with bounded variables (dense tableau). Intended
/// for small, well-scaled problems; ties in pricing and in the ratio test
/// break toward the lowest index, which also keeps runs deterministic.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace enroll
