#include "dslice/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "dslice/rng.hpp"

namespace dslice::nn {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

Eigen::MatrixXd apply_output(const Mlp& net, const Eigen::MatrixXd& z) {
  if (net.output_act == OutputActivation::Identity) return z;
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace

Mlp make_mlp(const std::vector<int>& dims, OutputActivation output_act,
             std::uint64_t seed, double leaky_slope) {
  require(dims.size() >= 2, "make_mlp: need at least input and output dims");
  for (int d : dims) require(d >= 1, "make_mlp: dims must be positive");

  Mlp net;
  net.dims = dims;
  net.leaky_slope = leaky_slope;
  net.output_act = output_act;
  net.init_seed = seed;

  rng::Engine eng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Eigen::MatrixXd w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = eng.uniform(-bound, bound);
    Eigen::VectorXd b(out);
    for (int r = 0; r < out; ++r) b[r] = eng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& input,
                        ForwardTape* tape) {
  require(input.rows() == net.input_dim(), "forward: input dimension mismatch");
  require(input.allFinite(), "forward: non-finite input");

  if (tape) {
    tape->input = input;
    tape->pre.clear();
    tape->post.clear();
    tape->pre.reserve(net.weights.size());
    tape->post.reserve(net.weights.size());
  }

  Eigen::MatrixXd h = input;
  const int last = net.layer_count() - 1;
  for (int l = 0; l <= last; ++l) {
    Eigen::MatrixXd z = (net.weights[static_cast<std::size_t>(l)] * h).colwise() +
                        net.biases[static_cast<std::size_t>(l)];
    if (l < last) {
      const double s = net.leaky_slope;
      h = z.unaryExpr([s](double v) { return v > 0.0 ? v : s * v; });
    } else {
      h = apply_output(net, z);
    }
    if (tape) {
      tape->pre.push_back(std::move(z));
      tape->post.push_back(h);
    }
  }
  return h;
}

Eigen::VectorXd forward1(const Mlp& net, const Eigen::VectorXd& input) {
  return forward(net, input, nullptr).col(0);
}

Gradients backward(const Mlp& net, const ForwardTape& tape,
                   const Eigen::MatrixXd& output_grad,
                   Eigen::MatrixXd* input_grad) {
  const int layers = net.layer_count();
  require(static_cast<int>(tape.pre.size()) == layers,
          "backward: tape does not match network");
  require(output_grad.rows() == net.output_dim() &&
              output_grad.cols() == tape.input.cols(),
          "backward: output_grad shape mismatch");

  Gradients grads;
  grads.weights.resize(static_cast<std::size_t>(layers));
  grads.biases.resize(static_cast<std::size_t>(layers));

  Eigen::MatrixXd delta;  // dL/dz of the current layer
  for (int l = layers - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    const Eigen::MatrixXd& dh =
        (l == layers - 1) ? output_grad : delta;  // delta holds dL/dh here
    if (l == layers - 1) {
      if (net.output_act == OutputActivation::Sigmoid) {
        // sigma' = sigma * (1 - sigma), using the recorded outputs
        delta = dh.array() * tape.post[ul].array() * (1.0 - tape.post[ul].array());
      } else {
        delta = dh;
      }
    } else {
      const double s = net.leaky_slope;
      delta = dh.array() *
              tape.pre[ul].unaryExpr([s](double v) { return v > 0.0 ? 1.0 : s; }).array();
    }
    const Eigen::MatrixXd& below = (l == 0) ? tape.input : tape.post[ul - 1];
    grads.weights[ul].noalias() = delta * below.transpose();
    grads.biases[ul] = delta.rowwise().sum();
    if (l > 0 || input_grad) {
      Eigen::MatrixXd next = net.weights[ul].transpose() * delta;
      if (l == 0) {
        *input_grad = std::move(next);
      } else {
        delta = std::move(next);  // becomes dL/dh of layer below
      }
    }
  }
  return grads;
}

AdamState make_adam(const Mlp& net) {
  AdamState state;
  for (int l = 0; l < net.layer_count(); ++l) {
    const auto ul = static_cast<std::size_t>(l);
    state.m_weights.push_back(Eigen::MatrixXd::Zero(net.weights[ul].rows(),
                                                    net.weights[ul].cols()));
    state.v_weights.push_back(Eigen::MatrixXd::Zero(net.weights[ul].rows(),
                                                    net.weights[ul].cols()));
    state.m_biases.push_back(Eigen::VectorXd::Zero(net.biases[ul].size()));
    state.v_biases.push_back(Eigen::VectorXd::Zero(net.biases[ul].size()));
  }
  return state;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state, double lr) {
  require(grads.weights.size() == net.weights.size() &&
              grads.biases.size() == net.biases.size(),
          "adam_step: gradient layer count mismatch");
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    require(grads.weights[l].rows() == net.weights[l].rows() &&
                grads.weights[l].cols() == net.weights[l].cols() &&
                grads.biases[l].size() == net.biases[l].size(),
            "adam_step: gradient shape mismatch");
    require(grads.weights[l].allFinite() && grads.biases[l].allFinite(),
            "adam_step: non-finite gradient");
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& mw = state.m_weights[l];
    auto& vw = state.v_weights[l];
    mw = state.beta1 * mw + (1.0 - state.beta1) * grads.weights[l];
    vw = state.beta2 * vw.array() +
         (1.0 - state.beta2) * grads.weights[l].array().square();
    net.weights[l].array() -=
        lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + state.epsilon);

    auto& mb = state.m_biases[l];
    auto& vb = state.v_biases[l];
    mb = state.beta1 * mb + (1.0 - state.beta1) * grads.biases[l];
    vb = state.beta2 * vb.array() +
         (1.0 - state.beta2) * grads.biases[l].array().square();
    net.biases[l].array() -=
        lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + state.epsilon);
  }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  require(target.dims == online.dims, "soft_update: architecture mismatch");
  for (std::size_t l = 0; l < target.weights.size(); ++l) {
    target.weights[l] = tau * online.weights[l] + (1.0 - tau) * target.weights[l];
    target.biases[l] = tau * online.biases[l] + (1.0 - tau) * target.biases[l];
  }
}

// --- checkpoint serialization -------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'S', 'L', 'M', 'L', 'P', '0', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void save_mlp(std::ostream& out, const Mlp& net) {
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u64(out, net.init_seed);
  out.put(static_cast<char>(net.output_act));
  put_f64(out, net.leaky_slope);
  put_u32(out, static_cast<std::uint32_t>(net.dims.size()));
  for (int d : net.dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r)
      put_f64(out, net.biases[l][r]);
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

Mlp load_mlp(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a network checkpoint (bad magic)");
  if (get_u32(in) != kVersion)
    throw std::runtime_error("unsupported checkpoint version");

  Mlp net;
  net.init_seed = get_u64(in);
  const int act = in.get();
  if (act != 0 && act != 1) throw std::runtime_error("corrupt checkpoint: activation");
  net.output_act = static_cast<OutputActivation>(act);
  net.leaky_slope = get_f64(in);
  const std::uint32_t n_dims = get_u32(in);
  if (n_dims < 2 || n_dims > 64) throw std::runtime_error("corrupt checkpoint: dims");
  for (std::uint32_t i = 0; i < n_dims; ++i) {
    const std::uint32_t d = get_u32(in);
    if (d == 0 || d > (1u << 20)) throw std::runtime_error("corrupt checkpoint: dims");
    net.dims.push_back(static_cast<int>(d));
  }
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    Eigen::MatrixXd w(net.dims[l + 1], net.dims[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = get_f64(in);
    Eigen::VectorXd b(net.dims[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = get_f64(in);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

void save_mlp_file(const std::filesystem::path& path, const Mlp& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_mlp(out, net);
}

Mlp load_mlp_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_mlp(in);
}

}  // namespace dslice::nn
