#include "dslice/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dslice/rng.hpp"

namespace dslice::model {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

constexpr double kGradientFloor = 1e-12;

}  // namespace

void validate_utility(const UtilityModel& model) {
  if (const auto* af = std::get_if<AlphaFair>(&model)) {
    require(af->alpha >= 0.0 && af->alpha < 1.0,
            "AlphaFair alpha must lie in [0, 1)");
  } else {
    const auto& sg = std::get<SigmoidG>(model);
    require(sg.alpha > 0.0, "SigmoidG alpha must be > 0");
    require(sg.r_tot > 0.0, "SigmoidG r_tot must be > 0");
  }
}

double eval_utility(const UtilityModel& model, double x) {
  if (x < 0.0) throw std::domain_error("utility argument must be >= 0");
  if (const auto* af = std::get_if<AlphaFair>(&model)) {
    // x^(1-alpha)/(1-alpha); 0^(1-alpha) = 0 for alpha < 1.
    return std::pow(x, 1.0 - af->alpha) / (1.0 - af->alpha);
  }
  const auto& sg = std::get<SigmoidG>(model);
  return sg.r_tot / (sg.r_tot * std::exp(-sg.alpha * x) + 1.0);
}

double utility_gradient(const UtilityModel& model, double x) {
  if (x < 0.0) throw std::domain_error("utility argument must be >= 0");
  if (const auto* af = std::get_if<AlphaFair>(&model)) {
    if (af->alpha == 0.0) return 1.0;
    return std::pow(std::max(x, kGradientFloor), -af->alpha);
  }
  const auto& sg = std::get<SigmoidG>(model);
  const double e = sg.r_tot * std::exp(-sg.alpha * x);
  const double denom = e + 1.0;
  return sg.alpha * e * sg.r_tot / (denom * denom);
}

double slice_utility(const SliceSpec& slice, const Eigen::VectorXd& alloc) {
  if (static_cast<Eigen::Index>(slice.size()) != alloc.size())
    throw std::invalid_argument("slice_utility: allocation length mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < slice.size(); ++k)
    total += slice[k].weight * eval_utility(slice[k].utility, alloc[static_cast<Eigen::Index>(k)]);
  return total;
}

void ScenarioConfig::validate() const {
  require(!slices.empty(), "scenario needs at least one slice");
  for (const auto& slice : slices) {
    require(!slice.empty(), "every slice needs at least one user");
    for (const auto& user : slice) {
      require(user.weight >= 0.0 && user.weight <= 1.0,
              "user weight must lie in [0, 1]");
      require(user.u_min >= 0.0, "u_min must be >= 0");
      validate_utility(user.utility);
    }
  }
  require(r_tot > 0.0, "r_tot must be > 0");
  require(horizon >= 1, "horizon must be >= 1");
  require(rho > 0.0, "rho must be > 0");
  require(eta > 0.0, "eta must be > 0");
  require(beta >= 0.0, "beta must be >= 0");
}

void validate_allocation(const ScenarioConfig& cfg, const AllocationMatrix& alloc) {
  require(static_cast<int>(alloc.x.size()) == cfg.n_slices(),
          "allocation slice count mismatch");
  for (int i = 0; i < cfg.n_slices(); ++i) {
    const auto& xi = alloc.x[static_cast<std::size_t>(i)];
    require(xi.rows() == cfg.users_in(i) && xi.cols() == cfg.horizon,
            "allocation shape mismatch");
    require((xi.array() >= 0.0).all() && (xi.array() <= cfg.r_tot).all(),
            "allocation entry outside [0, r_tot]");
  }
}

ScenarioConfig generate_scenario(std::uint64_t seed, int n_slices,
                                 int users_per_slice, double r_tot, int horizon,
                                 double rho, double eta, double beta,
                                 double u_min, UtilityKind kind,
                                 double sigmoid_alpha) {
  require(n_slices >= 1, "n_slices must be >= 1");
  require(users_per_slice >= 1, "users_per_slice must be >= 1");

  ScenarioConfig cfg;
  cfg.r_tot = r_tot;
  cfg.horizon = horizon;
  cfg.rho = rho;
  cfg.eta = eta;
  cfg.beta = beta;
  cfg.seed = seed;
  cfg.slices.reserve(static_cast<std::size_t>(n_slices));

  for (int i = 0; i < n_slices; ++i) {
    rng::Engine eng(rng::mix(seed, static_cast<std::uint64_t>(i)));
    SliceSpec slice;
    slice.reserve(static_cast<std::size_t>(users_per_slice));
    for (int k = 0; k < users_per_slice; ++k) {
      UserSpec user;
      user.weight = eng.uniform();
      const double alpha = eng.uniform(0.0, 0.95);
      if (kind == UtilityKind::AlphaFair) {
        user.utility = AlphaFair{alpha};
      } else {
        user.utility = SigmoidG{sigmoid_alpha, r_tot};
      }
      user.u_min = u_min;
      slice.push_back(user);
    }
    cfg.slices.push_back(std::move(slice));
  }
  cfg.validate();
  return cfg;
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const char* context) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument(std::string("unknown key '") + item.key() +
                                  "' in " + context);
  }
}

json utility_to_json(const UtilityModel& model) {
  json j;
  if (const auto* af = std::get_if<AlphaFair>(&model)) {
    j["kind"] = "alpha_fair";
    j["alpha"] = af->alpha;
  } else {
    const auto& sg = std::get<SigmoidG>(model);
    j["kind"] = "sigmoid_g";
    j["alpha"] = sg.alpha;
    j["r_tot"] = sg.r_tot;
  }
  return j;
}

UtilityModel utility_from_json(const json& j, double scenario_r_tot) {
  reject_unknown_keys(j, {"kind", "alpha", "r_tot"}, "utility");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "alpha_fair") {
    return AlphaFair{j.at("alpha").get<double>()};
  }
  if (kind == "sigmoid_g") {
    SigmoidG sg;
    sg.alpha = j.value("alpha", 0.05);
    sg.r_tot = j.value("r_tot", scenario_r_tot);
    return sg;
  }
  throw std::invalid_argument("unknown utility kind '" + kind + "'");
}

}  // namespace

nlohmann::json config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["r_tot"] = cfg.r_tot;
  j["horizon"] = cfg.horizon;
  j["rho"] = cfg.rho;
  j["eta"] = cfg.eta;
  j["beta"] = cfg.beta;
  j["seed"] = cfg.seed;
  json slices = json::array();
  for (const auto& slice : cfg.slices) {
    json users = json::array();
    for (const auto& user : slice) {
      json u;
      u["weight"] = user.weight;
      u["u_min"] = user.u_min;
      u["utility"] = utility_to_json(user.utility);
      users.push_back(u);
    }
    slices.push_back(users);
  }
  j["slices"] = slices;
  return j;
}

ScenarioConfig config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(
      j, {"r_tot", "horizon", "rho", "eta", "beta", "seed", "slices"},
      "scenario config");
  ScenarioConfig cfg;
  cfg.r_tot = j.at("r_tot").get<double>();
  cfg.horizon = j.value("horizon", 1);
  cfg.rho = j.value("rho", 1.0);
  cfg.eta = j.value("eta", 0.1);
  cfg.beta = j.value("beta", 20.0);
  cfg.seed = j.value("seed", std::uint64_t{0});
  for (const auto& slice_json : j.at("slices")) {
    SliceSpec slice;
    for (const auto& user_json : slice_json) {
      reject_unknown_keys(user_json, {"weight", "u_min", "utility"}, "user");
      UserSpec user;
      user.weight = user_json.at("weight").get<double>();
      user.u_min = user_json.value("u_min", 0.0);
      user.utility = utility_from_json(user_json.at("utility"), cfg.r_tot);
      slice.push_back(user);
    }
    cfg.slices.push_back(std::move(slice));
  }
  cfg.validate();
  return cfg;
}

void save_config(const std::filesystem::path& path, const ScenarioConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << config_to_json(cfg).dump(2) << "\n";
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t config_hash(const ScenarioConfig& cfg) {
  return fnv1a(config_to_json(cfg).dump());
}

std::uint64_t slice_hash(const SliceSpec& slice) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& user : slice) {
    nlohmann::json u;
    u["weight"] = user.weight;
    u["u_min"] = user.u_min;
    u["utility"] = utility_to_json(user.utility);
    users.push_back(u);
  }
  return fnv1a(users.dump());
}

}  // namespace dslice::model
