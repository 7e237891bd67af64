#include "enroll/simplex.hpp"

#include <cmath>
#include <stdexcept>

#include "enroll/errors.hpp"

namespace enroll {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-9;
constexpr double kFeasEps = 1e-7;

enum class Status : char { AtLower, AtUpper, Basic };

struct Tableau {
    Eigen::MatrixXd w;       // m x n, current B^{-1} A
    Eigen::VectorXd xb;      // basic values by row
    std::vector<int> basis;  // column basic in each row
    std::vector<Status> status;
    Eigen::VectorXd lower, upper;

    int rows() const { return static_cast<int>(w.rows()); }
    int cols() const { return static_cast<int>(w.cols()); }

    double nonbasic_value(int j) const {
        return status[static_cast<std::size_t>(j)] == Status::AtUpper ? upper[j] : lower[j];
    }

    // Dantzig pricing with lowest-index ties; returns -1 at optimality.
    int entering(const Eigen::VectorXd& cost) const {
        Eigen::VectorXd rc = cost;
        for (int i = 0; i < rows(); ++i) rc -= cost[basis[static_cast<std::size_t>(i)]] * w.row(i);
        int best = -1;
        double best_score = kCostEps;
        for (int j = 0; j < cols(); ++j) {
            if (status[static_cast<std::size_t>(j)] == Status::Basic) continue;
            double score = 0.0;
            if (status[static_cast<std::size_t>(j)] == Status::AtLower && rc[j] < -kCostEps)
                score = -rc[j];
            else if (status[static_cast<std::size_t>(j)] == Status::AtUpper && rc[j] > kCostEps)
                score = rc[j];
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        return best;
    }

    // Row-reduces w so column `col` becomes the unit vector of `row`.
    // xb holds variable VALUES (updated separately), so it is not touched.
    void pivot(int row, int col) {
        double piv = w(row, col);
        w.row(row) /= piv;
        for (int i = 0; i < rows(); ++i) {
            if (i == row) continue;
            double f = w(i, col);
            if (f != 0.0) w.row(i) -= f * w.row(row);
        }
        basis[static_cast<std::size_t>(row)] = col;
        status[static_cast<std::size_t>(col)] = Status::Basic;
    }

    // One bounded-simplex step for entering column j.
    void step(int j) {
        const double dir =
            status[static_cast<std::size_t>(j)] == Status::AtLower ? 1.0 : -1.0;
        double theta = upper[j] - lower[j];  // bound-flip distance
        int leave_row = -1;
        Status leave_status = Status::AtLower;
        for (int i = 0; i < rows(); ++i) {
            double wi = w(i, j) * dir;  // rate at which basic i decreases
            int k = basis[static_cast<std::size_t>(i)];
            double t;
            Status hit;
            if (wi > kPivotEps) {
                t = (xb[i] - lower[k]) / wi;
                hit = Status::AtLower;
            } else if (wi < -kPivotEps) {
                t = (xb[i] - upper[k]) / wi;
                hit = Status::AtUpper;
            } else {
                continue;
            }
            t = std::max(0.0, t);
            bool better = t < theta - 1e-12;
            bool tie = !better && t < theta + 1e-12 && leave_row >= 0 &&
                       k < basis[static_cast<std::size_t>(leave_row)];
            if (better || tie) {
                theta = std::min(theta, t);
                leave_row = i;
                leave_status = hit;
            }
        }
        for (int i = 0; i < rows(); ++i) xb[i] -= w(i, j) * dir * theta;
        if (leave_row < 0) {
            status[static_cast<std::size_t>(j)] = dir > 0 ? Status::AtUpper : Status::AtLower;
            return;
        }
        int leaving = basis[static_cast<std::size_t>(leave_row)];
        double enter_value = nonbasic_value(j) + dir * theta;
        pivot(leave_row, j);
        xb[leave_row] = enter_value;
        status[static_cast<std::size_t>(leaving)] = leave_status;
    }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    const int n = static_cast<int>(lp.objective.size());
    const int m = static_cast<int>(lp.rhs.size());
    if (lp.constraints.rows() != m || lp.constraints.cols() != n ||
        static_cast<int>(lp.relations.size()) != m || lp.lower.size() != n ||
        lp.upper.size() != n)
        throw std::invalid_argument("solve_lp: inconsistent problem dimensions");
    for (int j = 0; j < n; ++j) {
        if (!(lp.lower[j] <= lp.upper[j]) || !std::isfinite(lp.lower[j]) ||
            !std::isfinite(lp.upper[j]))
            throw std::invalid_argument("solve_lp: bounds must be finite with lower <= upper");
    }

    // n structural + m slack + m artificial columns
    const int total = n + 2 * m;
    Tableau t;
    t.w = Eigen::MatrixXd::Zero(m, total);
    t.lower = Eigen::VectorXd::Zero(total);
    t.upper = Eigen::VectorXd::Zero(total);
    t.status.assign(static_cast<std::size_t>(total), Status::AtLower);
    t.basis.assign(static_cast<std::size_t>(m), -1);
    t.xb = Eigen::VectorXd::Zero(m);

    t.w.leftCols(n) = lp.constraints;
    t.lower.head(n) = lp.lower;
    t.upper.head(n) = lp.upper;

    for (int i = 0; i < m; ++i) {
        // slack bound: the largest surplus/deficit the box allows
        double reach_min = 0.0, reach_max = 0.0;
        for (int j = 0; j < n; ++j) {
            double a = lp.constraints(i, j);
            reach_min += std::min(a * lp.lower[j], a * lp.upper[j]);
            reach_max += std::max(a * lp.lower[j], a * lp.upper[j]);
        }
        int sj = n + i;
        switch (lp.relations[static_cast<std::size_t>(i)]) {
            case '<':
                t.w(i, sj) = 1.0;
                t.upper[sj] = std::max(0.0, lp.rhs[i] - reach_min);
                break;
            case '>':
                t.w(i, sj) = -1.0;
                t.upper[sj] = std::max(0.0, reach_max - lp.rhs[i]);
                break;
            case '=':
                t.upper[sj] = 0.0;
                break;
            default:
                throw std::invalid_argument("solve_lp: relation must be '<', '>' or '='");
        }
    }

    // start: structurals and slacks at lower bound, artificials absorb the residual
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(total);
    for (int j = 0; j < n + m; ++j) x0[j] = t.lower[j];
    Eigen::VectorXd resid = lp.rhs - t.w.leftCols(n + m) * x0.head(n + m);
    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(total);
    for (int i = 0; i < m; ++i) {
        int aj = n + m + i;
        // keep the basic (artificial) column a unit vector: flip rows whose
        // residual is negative
        if (resid[i] < 0.0) t.w.row(i) *= -1.0;
        t.w(i, aj) = 1.0;
        t.upper[aj] = std::abs(resid[i]);
        t.basis[static_cast<std::size_t>(i)] = aj;
        t.status[static_cast<std::size_t>(aj)] = Status::Basic;
        t.xb[i] = std::abs(resid[i]);
        phase1_cost[aj] = 1.0;
    }

    LpSolution sol;
    const int iter_cap = 200 * (total + 1);

    auto run = [&](const Eigen::VectorXd& cost) {
        for (;;) {
            int j = t.entering(cost);
            if (j < 0) return;
            t.step(j);
            if (++sol.iterations > iter_cap)
                throw nonconvergence_error("solve_lp: iteration limit hit");
        }
    };

    run(phase1_cost);
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
        if (t.basis[static_cast<std::size_t>(i)] >= n + m) infeas += t.xb[i];
    for (int j = n + m; j < total; ++j)
        if (t.status[static_cast<std::size_t>(j)] == Status::AtUpper) infeas += t.upper[j];
    if (infeas > kFeasEps * (1.0 + lp.rhs.cwiseAbs().maxCoeff())) {
        sol.feasible = false;
        return sol;
    }
    // lock artificials at zero for phase 2
    for (int j = n + m; j < total; ++j) {
        t.upper[j] = 0.0;
        if (t.status[static_cast<std::size_t>(j)] == Status::AtUpper)
            t.status[static_cast<std::size_t>(j)] = Status::AtLower;
    }

    Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(total);
    phase2_cost.head(n) = lp.objective;
    run(phase2_cost);

    sol.feasible = true;
    sol.x = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j)
        if (t.status[static_cast<std::size_t>(j)] != Status::Basic)
            sol.x[j] = t.nonbasic_value(j);
    for (int i = 0; i < m; ++i) {
        int k = t.basis[static_cast<std::size_t>(i)];
        if (k < n) sol.x[k] = t.xb[i];
    }
    // clamp round-off into the box
    for (int j = 0; j < n; ++j) sol.x[j] = std::min(lp.upper[j], std::max(lp.lower[j], sol.x[j]));
    sol.objective = lp.objective.dot(sol.x);
    return sol;
}

}  // namespace enroll
