#ifndef DSLICE_ORACLE_HPP
#define DSLICE_ORACLE_HPP

#include <Eigen/Core>
#include <stdexcept>

#include "dslice/model.hpp"

namespace dslice::oracle {

/// Thrown when the minimum-utility constraints cannot be met even with every
/// user at r_tot in every slot.
struct infeasible_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Slot term of the slice subproblem:
///   sum_k w_k U_k(x_k) - (rho/2) * (sum_k x_k - d_t)^2
double slot_objective(const model::SliceSpec& slice, const Eigen::VectorXd& x_t,
                      double d_t, double rho);

/// Full subproblem objective over the horizon; x is K x T, d has length T.
double slave_objective(const model::SliceSpec& slice, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& d, double rho);

/// Model-aware slave solver. Maximizes slave_objective subject to the
/// per-user cumulative-utility floors (sum_t U_k >= u_min_k) and the box
/// 0 <= x <= r_tot.
///
/// Method: projected gradient ascent with backtracking line search; the
/// utility floors enter through a quadratic penalty whose weight escalates
/// x10 whenever the remaining violation exceeds 1e-4 (at most 6 escalations).
/// Concave utilities reach the global optimum from a single start; slices
/// containing a SigmoidG user get 8 seeded restarts and the best stationary
/// point wins.
Eigen::MatrixXd solve_slave_oracle(const model::SliceSpec& slice,
                                   const Eigen::VectorXd& d, double rho, int horizon,
                                   double r_tot);

/// Exhaustive search over the box grid {0, step, 2*step, ...} per entry,
/// discarding points that violate the utility floors. Grids above 1e7 points
/// are rejected. Intended for tiny instances (users * horizon <= 3).
Eigen::MatrixXd grid_optimum(const model::SliceSpec& slice, const Eigen::VectorXd& d,
                             double rho, int horizon, double r_tot, double step);

}  // namespace dslice::oracle

#endif  // DSLICE_ORACLE_HPP
