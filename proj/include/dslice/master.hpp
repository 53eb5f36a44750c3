#ifndef DSLICE_MASTER_HPP
#define DSLICE_MASTER_HPP

#include <Eigen/Core>
#include <vector>

namespace dslice::master {

/// Euclidean projection onto the slab {z : lo <= sum(z) <= hi}.
///
/// The feasible set is the intersection of two half-spaces with the same
/// normal (the all-ones vector), so the projection has a closed form:
///   sum(c) in [lo, hi]  ->  c
///   sum(c) >  hi        ->  c - ((sum(c) - hi) / n) * 1
///   sum(c) <  lo        ->  c + ((lo - sum(c)) / n) * 1
Eigen::VectorXd project_slab(const Eigen::VectorXd& c, double lo, double hi);

/// z-update: per slot t independently, project x_sums(:,t) + y(:,t) onto
/// {z : 0 <= sum(z) <= r_tot}. Inputs are I x T (slice by slot).
/// Components of z may go negative; only the per-slot sum is constrained.
Eigen::MatrixXd solve_master(const Eigen::MatrixXd& x_sums,
                             const Eigen::MatrixXd& y, double r_tot);

/// Scaled dual ascent: y' = y + (x_sums - z), elementwise.
Eigen::MatrixXd update_duals(const Eigen::MatrixXd& y,
                             const Eigen::MatrixXd& x_sums,
                             const Eigen::MatrixXd& z);

struct ResidualReport {
  /// sum over slots and slices of |x_sum - z + y| (the stopping expression).
  double algorithm_residual = 0.0;
  /// sum over slots and slices of |x_sum - z| (consensus violation).
  double primal_residual = 0.0;
};

ResidualReport residual(const Eigen::MatrixXd& x_sums, const Eigen::MatrixXd& z,
                        const Eigen::MatrixXd& y);

/// Auxiliary and scaled dual state carried across iterations.
struct AdmmVariables {
  Eigen::MatrixXd z;  ///< I x T
  Eigen::MatrixXd y;  ///< I x T
  std::vector<ResidualReport> history;
};

}  // namespace dslice::master

#endif  // DSLICE_MASTER_HPP
