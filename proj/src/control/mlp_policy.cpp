#include "hfl/control/mlp_policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include <Eigen/Cholesky>

#include "hfl/bytes.hpp"
#include "hfl/errors.hpp"
#include "hfl/rbd/dynamics.hpp"
#include "hfl/rbd/kinematics.hpp"

namespace hfl {

namespace {

constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxWidth = 1u << 14;

Eigen::VectorXd policy_input(const MlpPolicy& policy, const JointState& x,
                             const Eigen::Vector3d& p_ref) {
  const auto n = x.q.size();
  if (x.v.size() != n || 2 * n + 3 != policy.input_dim() || n != policy.output_dim()) {
    throw DimensionError("mlp policy: expected input (q, v, p*) of length " +
                         std::to_string(policy.input_dim()) + " and " +
                         std::to_string(policy.output_dim()) + " joints");
  }
  Eigen::VectorXd in(2 * n + 3);
  in << x.q, x.v, p_ref;
  return (in - policy.input_offset()).cwiseProduct(policy.input_scale());
}

}  // namespace

MlpPolicy::MlpPolicy(std::vector<DenseLayer> layers, Eigen::VectorXd input_offset,
                     Eigen::VectorXd input_scale)
    : layers_(std::move(layers)),
      input_offset_(std::move(input_offset)),
      input_scale_(std::move(input_scale)) {
  if (layers_.empty()) throw DimensionError("mlp policy: no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() != l.bias.size() || l.weight.rows() == 0 || l.weight.cols() == 0) {
      throw DimensionError("mlp policy: layer " + std::to_string(i) + " bias/weight mismatch");
    }
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) {
      throw DimensionError("mlp policy: layer " + std::to_string(i) +
                           " input does not match previous output");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw NonFiniteError("mlp policy: layer " + std::to_string(i) + " has non-finite weights");
    }
  }
  if (input_offset_.size() != input_dim() || input_scale_.size() != input_dim()) {
    throw DimensionError("mlp policy: normalization vectors must match the input dimension");
  }
  if (!input_offset_.allFinite() || !input_scale_.allFinite()) {
    throw NonFiniteError("mlp policy: non-finite normalization");
  }
  if ((input_dim() - 3) != 2 * output_dim()) {
    throw DimensionError("mlp policy: input must be (q, v, p*) with 2n + 3 entries");
  }
}

Eigen::VectorXd mlp_eval(const MlpPolicy& policy, const JointState& x,
                         const Eigen::Vector3d& p_ref) {
  Eigen::VectorXd h = policy_input(policy, x, p_ref);
  const auto& layers = policy.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].weight * h + layers[i].bias;
    if (i + 1 < layers.size()) h = h.array().tanh().matrix();
  }
  return h;
}

Eigen::MatrixXd mlp_state_jacobian(const MlpPolicy& policy, const JointState& x,
                                   const Eigen::Vector3d& p_ref) {
  Eigen::VectorXd h = policy_input(policy, x, p_ref);
  const auto& layers = policy.layers();
  // Forward-mode: jac = ∂h/∂input, seeded with the normalization scale.
  Eigen::MatrixXd jac = policy.input_scale().asDiagonal();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].weight * h + layers[i].bias;
    jac = layers[i].weight * jac;
    if (i + 1 < layers.size()) {
      h = h.array().tanh().matrix();
      const Eigen::VectorXd slope = (1.0 - h.array().square()).matrix();
      jac = slope.asDiagonal() * jac;
    }
  }
  return jac.leftCols(2 * policy.dof());
}

std::vector<std::uint8_t> serialize_policy(const MlpPolicy& policy) {
  std::vector<std::uint8_t> out(kPolicyMagic.begin(), kPolicyMagic.end());
  const auto& layers = policy.layers();
  bytes::put_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    bytes::put_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
    bytes::put_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
  }
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) bytes::put_f64(out, l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) bytes::put_f64(out, l.bias(r));
  }
  for (Eigen::Index i = 0; i < policy.input_offset().size(); ++i) {
    bytes::put_f64(out, policy.input_offset()(i));
  }
  for (Eigen::Index i = 0; i < policy.input_scale().size(); ++i) {
    bytes::put_f64(out, policy.input_scale()(i));
  }
  return out;
}

MlpPolicy deserialize_policy(std::span<const std::uint8_t> data) {
  if (data.size() < kPolicyMagic.size() ||
      !std::equal(kPolicyMagic.begin(), kPolicyMagic.end(), data.begin())) {
    throw std::runtime_error("policy file: bad magic");
  }
  try {
    bytes::Reader rd(data.subspan(kPolicyMagic.size()));
    const std::uint32_t count = rd.u32();
    if (count == 0 || count > kMaxLayers) throw std::runtime_error("policy file: bad layer count");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t rows = rd.u32();
      const std::uint32_t cols = rd.u32();
      if (rows == 0 || cols == 0 || rows > kMaxWidth || cols > kMaxWidth) {
        throw std::runtime_error("policy file: bad layer shape");
      }
      shapes.emplace_back(rows, cols);
    }
    std::vector<DenseLayer> layers;
    for (const auto& [rows, cols] : shapes) {
      DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
      for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) l.weight(r, c) = rd.f64();
      }
      for (std::uint32_t r = 0; r < rows; ++r) l.bias(r) = rd.f64();
      layers.push_back(std::move(l));
    }
    const auto in_dim = static_cast<Eigen::Index>(shapes.front().second);
    Eigen::VectorXd offset(in_dim);
    Eigen::VectorXd scale(in_dim);
    for (Eigen::Index i = 0; i < in_dim; ++i) offset(i) = rd.f64();
    for (Eigen::Index i = 0; i < in_dim; ++i) scale(i) = rd.f64();
    if (rd.remaining() != 0) throw std::runtime_error("policy file: trailing bytes");
    return MlpPolicy(std::move(layers), std::move(offset), std::move(scale));
  } catch (const std::out_of_range&) {
    throw std::runtime_error("policy file: truncated");
  }
}

void save_policy(const MlpPolicy& policy, const std::filesystem::path& path) {
  const auto data = serialize_policy(policy);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write policy file " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

MlpPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open policy file " + path.string());
  const std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  return deserialize_policy(data);
}

MlpPolicy make_random_policy(int dof, std::vector<int> hidden, std::uint64_t seed,
                             double weight_scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<int> dims{2 * dof + 3};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(dof);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const double sd = weight_scale / std::sqrt(static_cast<double>(dims[i]));
    DenseLayer l{Eigen::MatrixXd(dims[i + 1], dims[i]), Eigen::VectorXd(dims[i + 1])};
    for (Eigen::Index k = 0; k < l.weight.size(); ++k) l.weight.data()[k] = sd * normal(rng);
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias(k) = 0.1 * normal(rng);
    layers.push_back(std::move(l));
  }
  const int in_dim = 2 * dof + 3;
  return MlpPolicy(std::move(layers), Eigen::VectorXd::Zero(in_dim),
                   Eigen::VectorXd::Ones(in_dim));
}

MlpPolicy make_standin_policy(const RobotModel& model, const StandinPolicyOptions& opt) {
  const int n = model.dof();
  const int in_dim = 2 * n + 3;
  if (opt.hidden.empty() || *std::min_element(opt.hidden.begin(), opt.hidden.end()) < in_dim) {
    throw DimensionError("stand-in policy: hidden layers need at least 2n + 3 units");
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::VectorXd& q0 = model.nominal_posture();
  Eigen::VectorXd offset(in_dim);
  offset << q0, Eigen::VectorXd::Zero(n), opt.center;
  Eigen::VectorXd scale(in_dim);
  scale << Eigen::VectorXd::Constant(n, 2.0), Eigen::VectorXd::Constant(n, 0.2),
      Eigen::VectorXd::Constant(3, 20.0);

  // Joint-space map from foot displacement to posture displacement.
  const Eigen::MatrixXd jac = frame_jacobian(model, q0, opt.frame);
  const Eigen::Matrix3d jjt = jac * jac.transpose() + 1e-6 * Eigen::Matrix3d::Identity();
  const Eigen::MatrixXd ik = jjt.ldlt().solve(jac).transpose();  // n x 3

  Eigen::MatrixXd lin_raw(n, in_dim);
  lin_raw << -opt.kq * Eigen::MatrixXd::Identity(n, n), -opt.kv * Eigen::MatrixXd::Identity(n, n),
      opt.kq * ik;
  const Eigen::MatrixXd lin_norm = lin_raw * scale.cwiseInverse().asDiagonal();
  const Eigen::VectorXd feedforward = bias_forces(model, q0, Eigen::VectorXd::Zero(n));

  const double eps = opt.passthrough_gain;
  std::vector<DenseLayer> layers;
  int prev = in_dim;
  for (std::size_t li = 0; li < opt.hidden.size(); ++li) {
    const int width = opt.hidden[li];
    DenseLayer l{Eigen::MatrixXd::Zero(width, prev), Eigen::VectorXd::Zero(width)};
    // Pass-through units keep ε z (first layer) then re-apply ≈ identity.
    for (int k = 0; k < in_dim; ++k) l.weight(k, k) = (li == 0) ? eps : 1.0;
    const double sd = 1.0 / std::sqrt(static_cast<double>(prev));
    for (int r = in_dim; r < width; ++r) {
      for (int c = 0; c < prev; ++c) l.weight(r, c) = sd * normal(rng);
      l.bias(r) = 0.1 * normal(rng);
    }
    layers.push_back(std::move(l));
    prev = width;
  }
  DenseLayer out{Eigen::MatrixXd::Zero(n, prev), feedforward};
  out.weight.leftCols(in_dim) = lin_norm / eps;
  for (int r = 0; r < n; ++r) {
    for (int c = in_dim; c < prev; ++c) out.weight(r, c) = opt.random_output_scale * normal(rng);
  }
  layers.push_back(std::move(out));
  return MlpPolicy(std::move(layers), std::move(offset), std::move(scale));
}

MlpController::MlpController(std::shared_ptr<const MlpPolicy> policy,
                             CircleTrajectory trajectory)
    : policy_(std::move(policy)), trajectory_(std::move(trajectory)) {
  if (!policy_) throw std::invalid_argument("mlp controller: null policy");
  trajectory_.validate();
}

Eigen::VectorXd MlpController::evaluate(const JointState& x, double t) const {
  Eigen::VectorXd tau = mlp_eval(*policy_, x, circle_ref(trajectory_, t).position);
  if (!tau.allFinite()) throw NonFiniteError("mlp controller: non-finite torque");
  return tau;
}

std::optional<Eigen::MatrixXd> MlpController::state_jacobian(const JointState& x,
                                                             double t) const {
  return mlp_state_jacobian(*policy_, x, circle_ref(trajectory_, t).position);
}

}  // namespace hfl
