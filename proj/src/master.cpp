#include "dslice/master.hpp"

#include <stdexcept>

namespace dslice::master {

Eigen::VectorXd project_slab(const Eigen::VectorXd& c, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("project_slab: lo > hi");
  if (c.size() == 0) throw std::invalid_argument("project_slab: empty input");
  const double total = c.sum();
  const double n = static_cast<double>(c.size());
  if (total > hi) return c.array() - (total - hi) / n;
  if (total < lo) return c.array() + (lo - total) / n;
  return c;
}

Eigen::MatrixXd solve_master(const Eigen::MatrixXd& x_sums,
                             const Eigen::MatrixXd& y, double r_tot) {
  if (x_sums.rows() != y.rows() || x_sums.cols() != y.cols())
    throw std::invalid_argument("solve_master: shape mismatch");
  Eigen::MatrixXd z(x_sums.rows(), x_sums.cols());
  for (Eigen::Index t = 0; t < x_sums.cols(); ++t)
    z.col(t) = project_slab(x_sums.col(t) + y.col(t), 0.0, r_tot);
  return z;
}

Eigen::MatrixXd update_duals(const Eigen::MatrixXd& y,
                             const Eigen::MatrixXd& x_sums,
                             const Eigen::MatrixXd& z) {
  if (y.rows() != x_sums.rows() || y.cols() != x_sums.cols() ||
      y.rows() != z.rows() || y.cols() != z.cols())
    throw std::invalid_argument("update_duals: shape mismatch");
  return y + (x_sums - z);
}

ResidualReport residual(const Eigen::MatrixXd& x_sums, const Eigen::MatrixXd& z,
                        const Eigen::MatrixXd& y) {
  if (x_sums.rows() != z.rows() || x_sums.cols() != z.cols() ||
      x_sums.rows() != y.rows() || x_sums.cols() != y.cols())
    throw std::invalid_argument("residual: shape mismatch");
  ResidualReport report;
  report.algorithm_residual = (x_sums - z + y).cwiseAbs().sum();
  report.primal_residual = (x_sums - z).cwiseAbs().sum();
  return report;
}

}  // namespace dslice::master
