#ifndef DSLICE_MODEL_HPP
#define DSLICE_MODEL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace dslice::model {

/// alpha-fairness utility: U(x) = x^(1-alpha) / (1-alpha), alpha in [0, 1).
/// alpha = 0 is plain throughput; alpha -> 1 approaches proportional fairness.
struct AlphaFair {
  double alpha = 0.0;
};

/// Sigmoidal utility g(x) = r_tot * (r_tot * exp(-alpha * x) + 1)^-1.
/// Non-decreasing but not concave on [0, r_tot].
struct SigmoidG {
  double alpha = 0.05;
  double r_tot = 100.0;
};

using UtilityModel = std::variant<AlphaFair, SigmoidG>;

void validate_utility(const UtilityModel& model);

/// U(x) for x >= 0. Throws std::domain_error for x < 0.
double eval_utility(const UtilityModel& model, double x);

/// dU/dx. For AlphaFair this is x^-alpha, evaluated at max(x, 1e-12) so the
/// pole at x = 0 (alpha > 0) stays finite for gradient-based solvers.
double utility_gradient(const UtilityModel& model, double x);

struct UserSpec {
  double weight = 1.0;  ///< in [0, 1]
  UtilityModel utility;
  double u_min = 0.0;  ///< minimum cumulative utility over the horizon
};

using SliceSpec = std::vector<UserSpec>;

/// Weighted slice utility: sum_k w_k * U_k(alloc_k).
double slice_utility(const SliceSpec& slice, const Eigen::VectorXd& alloc);

struct ScenarioConfig {
  std::vector<SliceSpec> slices;
  double r_tot = 100.0;  ///< shared capacity, rate units
  int horizon = 1;       ///< number of time slots T
  double rho = 1.0;      ///< augmented-Lagrangian penalty weight
  double eta = 0.1;      ///< convergence tolerance
  double beta = 20.0;    ///< reward-shaping weight
  std::uint64_t seed = 0;

  int n_slices() const { return static_cast<int>(slices.size()); }
  int users_in(int i) const { return static_cast<int>(slices.at(i).size()); }

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

/// Per-slice K_i x T rate matrices.
struct AllocationMatrix {
  std::vector<Eigen::MatrixXd> x;
};

/// Checks dimensions against the scenario and entries against [0, r_tot].
void validate_allocation(const ScenarioConfig& cfg, const AllocationMatrix& alloc);

enum class UtilityKind { AlphaFair, SigmoidG };

/// Seeded scenario generation. Weights are Uniform[0,1]; fairness exponents
/// Uniform[0, 0.95]; all users share u_min. Each slice draws from its own
/// substream keyed on (seed, slice index), so slice i of an n-slice scenario
/// equals slice i of any m-slice scenario with the same seed.
ScenarioConfig generate_scenario(std::uint64_t seed, int n_slices,
                                 int users_per_slice, double r_tot, int horizon,
                                 double rho, double eta, double beta,
                                 double u_min,
                                 UtilityKind kind = UtilityKind::AlphaFair,
                                 double sigmoid_alpha = 0.05);

// Config file round trip. Unknown keys are rejected at every level.
nlohmann::json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const nlohmann::json& j);
void save_config(const std::filesystem::path& path, const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the canonical serialized form; used in CSV provenance lines.
std::uint64_t config_hash(const ScenarioConfig& cfg);

/// Hash of one slice's users (weights, utility models, u_min); identifies
/// which trained agent can serve the slice.
std::uint64_t slice_hash(const SliceSpec& slice);

}  // namespace dslice::model

#endif  // DSLICE_MODEL_HPP
