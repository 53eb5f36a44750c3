#include "dslice/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dslice/rng.hpp"

namespace dslice::oracle {

namespace {

constexpr double kStationarityTol = 1e-6;
constexpr double kC1Tol = 1e-4;
constexpr double kArmijo = 1e-4;
constexpr int kMaxPgaIters = 50000;
constexpr int kMaxEscalations = 6;
constexpr int kRestarts = 8;

struct PenaltyProblem {
  const model::SliceSpec& slice;
  const Eigen::VectorXd& d;
  double rho;
  double r_tot;
  double mu;  // penalty weight on utility-floor violations

  int users() const { return static_cast<int>(slice.size()); }
  int horizon() const { return static_cast<int>(d.size()); }

  // Per-user violation of the cumulative floor, max(0, u_min - sum_t U_k).
  Eigen::VectorXd violations(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd v(users());
    for (int k = 0; k < users(); ++k) {
      double cum = 0.0;
      for (int t = 0; t < horizon(); ++t)
        cum += model::eval_utility(slice[static_cast<std::size_t>(k)].utility, x(k, t));
      v[k] = std::max(0.0, slice[static_cast<std::size_t>(k)].u_min - cum);
    }
    return v;
  }

  double value(const Eigen::MatrixXd& x) const {
    double obj = slave_objective(slice, x, d, rho);
    const Eigen::VectorXd v = violations(x);
    return obj - mu * v.squaredNorm();
  }

  Eigen::MatrixXd gradient(const Eigen::MatrixXd& x) const {
    const Eigen::VectorXd v = violations(x);
    Eigen::MatrixXd g(users(), horizon());
    for (int t = 0; t < horizon(); ++t) {
      const double coupling = rho * (x.col(t).sum() - d[t]);
      for (int k = 0; k < users(); ++k) {
        const auto& user = slice[static_cast<std::size_t>(k)];
        const double du = model::utility_gradient(user.utility, x(k, t));
        g(k, t) = user.weight * du - coupling + 2.0 * mu * v[k] * du;
      }
    }
    return g;
  }

  Eigen::MatrixXd clamp(const Eigen::MatrixXd& x) const {
    return x.array().max(0.0).min(r_tot);
  }
};

// Ascent with backtracking; accepted steps never decrease the objective.
Eigen::MatrixXd project_gradient_ascent(const PenaltyProblem& prob,
                                        Eigen::MatrixXd x) {
  double fx = prob.value(x);
  for (int iter = 0; iter < kMaxPgaIters; ++iter) {
    const Eigen::MatrixXd g = prob.gradient(x);
    const Eigen::MatrixXd unit_move = prob.clamp(x + g) - x;
    if (unit_move.cwiseAbs().maxCoeff() <= kStationarityTol) break;

    double step = 1.0;
    bool accepted = false;
    while (step > 1e-14) {
      const Eigen::MatrixXd x_new = prob.clamp(x + step * g);
      const double decrease = (g.array() * (x_new - x).array()).sum();
      const double f_new = prob.value(x_new);
      if (f_new >= fx + kArmijo * decrease) {
        x = x_new;
        fx = f_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no admissible step left at this scale
  }
  return x;
}

void check_feasible(const model::SliceSpec& slice, int horizon, double r_tot) {
  for (std::size_t k = 0; k < slice.size(); ++k) {
    const double best =
        static_cast<double>(horizon) * model::eval_utility(slice[k].utility, r_tot);
    if (best < slice[k].u_min - 1e-9)
      throw infeasible_error(
          "utility floor unreachable for user " + std::to_string(k) +
          ": max cumulative utility " + std::to_string(best) + " < u_min " +
          std::to_string(slice[k].u_min));
  }
}

bool has_sigmoid_user(const model::SliceSpec& slice) {
  for (const auto& user : slice)
    if (std::holds_alternative<model::SigmoidG>(user.utility)) return true;
  return false;
}

}  // namespace

double slot_objective(const model::SliceSpec& slice, const Eigen::VectorXd& x_t,
                      double d_t, double rho) {
  const double coupling = x_t.sum() - d_t;
  return model::slice_utility(slice, x_t) - 0.5 * rho * coupling * coupling;
}

double slave_objective(const model::SliceSpec& slice, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& d, double rho) {
  if (x.rows() != static_cast<Eigen::Index>(slice.size()) || x.cols() != d.size())
    throw std::invalid_argument("slave_objective: shape mismatch");
  double total = 0.0;
  for (Eigen::Index t = 0; t < d.size(); ++t)
    total += slot_objective(slice, x.col(t), d[t], rho);
  return total;
}

Eigen::MatrixXd solve_slave_oracle(const model::SliceSpec& slice,
                                   const Eigen::VectorXd& d, double rho, int horizon,
                                   double r_tot) {
  if (slice.empty()) throw std::invalid_argument("solve_slave_oracle: empty slice");
  if (d.size() != horizon)
    throw std::invalid_argument("solve_slave_oracle: d length != horizon");
  if (rho <= 0.0 || r_tot <= 0.0)
    throw std::invalid_argument("solve_slave_oracle: rho and r_tot must be > 0");
  check_feasible(slice, horizon, r_tot);

  const int users = static_cast<int>(slice.size());

  std::vector<Eigen::MatrixXd> starts;
  {
    // Even split of the coupling target across users, clamped to the box.
    Eigen::MatrixXd even(users, horizon);
    for (int t = 0; t < horizon; ++t)
      even.col(t).setConstant(
          std::clamp(d[t] / static_cast<double>(users), 0.0, r_tot));
    starts.push_back(even);
  }
  if (has_sigmoid_user(slice)) {
    rng::Engine eng(rng::mix(0x5eedf00dULL, static_cast<std::uint64_t>(users)));
    for (int s = 1; s < kRestarts; ++s) {
      Eigen::MatrixXd x0(users, horizon);
      for (int k = 0; k < users; ++k)
        for (int t = 0; t < horizon; ++t) x0(k, t) = eng.uniform(0.0, r_tot);
      starts.push_back(x0);
    }
  }

  Eigen::MatrixXd best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& x0 : starts) {
    PenaltyProblem prob{slice, d, rho, r_tot, 10.0};
    Eigen::MatrixXd x = project_gradient_ascent(prob, x0);
    for (int esc = 0; esc < kMaxEscalations; ++esc) {
      if (prob.violations(x).maxCoeff() <= kC1Tol) break;
      prob.mu *= 10.0;
      x = project_gradient_ascent(prob, x);
    }
    const double value = prob.value(x);
    if (value > best_value) {
      best_value = value;
      best = x;
    }
  }
  return best;
}

Eigen::MatrixXd grid_optimum(const model::SliceSpec& slice, const Eigen::VectorXd& d,
                             double rho, int horizon, double r_tot, double step) {
  if (d.size() != horizon)
    throw std::invalid_argument("grid_optimum: d length != horizon");
  if (step <= 0.0) throw std::invalid_argument("grid_optimum: step must be > 0");

  const int users = static_cast<int>(slice.size());
  const int cells = users * horizon;
  const int n_vals = static_cast<int>(std::floor(r_tot / step + 1e-9)) + 1;
  if (std::pow(static_cast<double>(n_vals), cells) > 1e7)
    throw std::invalid_argument("grid_optimum: grid too large");

  // Utility lookup per user per grid value.
  Eigen::MatrixXd util(users, n_vals);
  for (int k = 0; k < users; ++k)
    for (int v = 0; v < n_vals; ++v)
      util(k, v) = model::eval_utility(slice[static_cast<std::size_t>(k)].utility,
                                       step * v);

  std::vector<int> idx(static_cast<std::size_t>(cells), 0);
  Eigen::MatrixXd x(users, horizon), best;
  double best_value = -std::numeric_limits<double>::infinity();
  bool any_feasible = false;

  while (true) {
    bool feasible = true;
    for (int k = 0; k < users && feasible; ++k) {
      double cum = 0.0;
      for (int t = 0; t < horizon; ++t)
        cum += util(k, idx[static_cast<std::size_t>(k * horizon + t)]);
      feasible = cum >= slice[static_cast<std::size_t>(k)].u_min - 1e-12;
    }
    if (feasible) {
      for (int k = 0; k < users; ++k)
        for (int t = 0; t < horizon; ++t)
          x(k, t) = step * idx[static_cast<std::size_t>(k * horizon + t)];
      const double value = slave_objective(slice, x, d, rho);
      if (value > best_value) {
        best_value = value;
        best = x;
        any_feasible = true;
      }
    }
    // advance multi-index
    int pos = 0;
    while (pos < cells) {
      if (++idx[static_cast<std::size_t>(pos)] < n_vals) break;
      idx[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == cells) break;
  }

  if (!any_feasible)
    throw infeasible_error("grid_optimum: no grid point satisfies the utility floors");
  return best;
}

}  // namespace dslice::oracle
