#ifndef DSLICE_NN_HPP
#define DSLICE_NN_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace dslice::nn {

/// Numerically stable logistic function.
double sigmoid(double x);

enum class OutputActivation : std::uint8_t { Identity = 0, Sigmoid = 1 };

/// Fully-connected network: hidden layers use LeakyReLU, the output layer
/// uses Identity or Sigmoid. Plain data; cloneable and thread-safe to read.
struct Mlp {
  std::vector<int> dims;                 ///< e.g. {6, 128, 128, 5}
  std::vector<Eigen::MatrixXd> weights;  ///< per layer, out x in
  std::vector<Eigen::VectorXd> biases;   ///< per layer, out
  double leaky_slope = 0.01;
  OutputActivation output_act = OutputActivation::Identity;
  std::uint64_t init_seed = 0;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
};

/// Seeded initialization: weights and biases uniform in +-1/sqrt(fan_in).
Mlp make_mlp(const std::vector<int>& dims, OutputActivation output_act,
             std::uint64_t seed, double leaky_slope = 0.01);

/// Activation record from a forward pass, consumed by backward().
struct ForwardTape {
  Eigen::MatrixXd input;              ///< in x batch
  std::vector<Eigen::MatrixXd> pre;   ///< pre-activations per layer
  std::vector<Eigen::MatrixXd> post;  ///< post-activations per layer
};

/// Batched forward pass; columns are samples. Throws on dimension mismatch
/// or non-finite input.
Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& input,
                        ForwardTape* tape = nullptr);

/// Single-sample convenience wrapper.
Eigen::VectorXd forward1(const Mlp& net, const Eigen::VectorXd& input);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Reverse pass. output_grad is dL/dy (out x batch) for a scalar loss L.
/// If input_grad is non-null it receives dL/dx, which is how a policy
/// gradient flows through a critic into an actor.
Gradients backward(const Mlp& net, const ForwardTape& tape,
                   const Eigen::MatrixXd& output_grad,
                   Eigen::MatrixXd* input_grad = nullptr);

struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam(const Mlp& net);

/// One bias-corrected Adam descent step. Throws on shape mismatch or
/// non-finite gradients.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state, double lr);

/// target <- tau * online + (1 - tau) * target, per parameter.
void soft_update(Mlp& target, const Mlp& online, double tau);

// Binary checkpoints: versioned header (dims, activations, seed) followed by
// the raw parameters as little-endian 64-bit reals in layer order. Round
// trips are bit-exact.
void save_mlp(std::ostream& out, const Mlp& net);
Mlp load_mlp(std::istream& in);
void save_mlp_file(const std::filesystem::path& path, const Mlp& net);
Mlp load_mlp_file(const std::filesystem::path& path);

}  // namespace dslice::nn

#endif  // DSLICE_NN_HPP
