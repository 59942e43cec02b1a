#pragma once

/// @file lp.hpp
/// Dense revised simplex for min c'y s.t. A y = b, y >= 0 with few rows and
/// many columns (the shape of Chebyshev-fit duals).

#include <Eigen/Dense>

#include <cstdint>

namespace homlab {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
    LpStatus status = LpStatus::iteration_limit;
    Eigen::VectorXd y;      ///< primal solution
    Eigen::VectorXd pi;     ///< row multipliers, c_B B^-1
    double objective = 0.0;
    std::int64_t iterations = 0;
};

/// Two-phase simplex with Dantzig pricing and a switch to Bland's rule after
/// a run of degenerate pivots.
LpResult solve_standard_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& c, double tol = 1e-11,
                           std::int64_t max_iterations = 100000);

}  // namespace homlab
