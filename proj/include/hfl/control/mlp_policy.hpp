#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hfl/control/controller.hpp"
#include "hfl/control/trajectory.hpp"
#include "hfl/rbd/model.hpp"

namespace hfl {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Feed-forward torque policy: tanh hidden layers, identity output.
///
/// Input layout is (q, v, p*), length 2n + 3. Inputs are normalized as
/// z = (input − offset) ⊙ scale before the first layer.
class MlpPolicy {
 public:
  MlpPolicy(std::vector<DenseLayer> layers, Eigen::VectorXd input_offset,
            Eigen::VectorXd input_scale);

  int input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers_.back().weight.rows()); }
  /// Joint count n implied by the input layout.
  int dof() const { return output_dim(); }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  const Eigen::VectorXd& input_offset() const { return input_offset_; }
  const Eigen::VectorXd& input_scale() const { return input_scale_; }

 private:
  std::vector<DenseLayer> layers_;
  Eigen::VectorXd input_offset_;
  Eigen::VectorXd input_scale_;
};

Eigen::VectorXd mlp_eval(const MlpPolicy& policy, const JointState& x,
                         const Eigen::Vector3d& p_ref);

/// ∂τ/∂(q, v) (n × 2n); the p* inputs are held constant.
Eigen::MatrixXd mlp_state_jacobian(const MlpPolicy& policy, const JointState& x,
                                   const Eigen::Vector3d& p_ref);

// Policy file: 8-byte magic "HFLMLP01", u32 layer count, per layer u32 rows and
// u32 cols, then per layer the row-major weights followed by the bias, then the
// input offset and input scale. All integers and f64 values little-endian.
inline constexpr std::array<char, 8> kPolicyMagic = {'H', 'F', 'L', 'M', 'L', 'P', '0', '1'};

std::vector<std::uint8_t> serialize_policy(const MlpPolicy& policy);
/// Throws std::runtime_error for malformed input.
MlpPolicy deserialize_policy(std::span<const std::uint8_t> bytes);
void save_policy(const MlpPolicy& policy, const std::filesystem::path& path);
MlpPolicy load_policy(const std::filesystem::path& path);

/// Random tanh network with seeded N(0, 1/fan_in) weights. For tests.
MlpPolicy make_random_policy(int dof, std::vector<int> hidden, std::uint64_t seed,
                             double weight_scale = 1.0);

/// Stand-in for a trained tracking policy.
///
/// The network embeds a joint-space tracking law
///   τ ≈ g(q₀) − Kq (q − q₀ − G (p* − c)) − Kv v
/// (G is the damped pseudoinverse of the foot Jacobian at q₀) in near-linear
/// tanh pass-through units, alongside seeded random units that add a mild
/// non-linearity. Deterministic for a fixed seed.
struct StandinPolicyOptions {
  std::uint64_t seed = 7;
  std::vector<int> hidden = {32, 32};
  double kq = 5.0;             // N m / rad
  double kv = 0.6;             // N m s / rad
  double passthrough_gain = 0.1;
  double random_output_scale = 0.02;  // N m
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // circle center c
  std::string frame = "right_foot";
};

MlpPolicy make_standin_policy(const RobotModel& model, const StandinPolicyOptions& options);

/// π(x, p*(t)) as a TorqueController; the analytic Jacobian is exposed.
class MlpController final : public TorqueController {
 public:
  MlpController(std::shared_ptr<const MlpPolicy> policy, CircleTrajectory trajectory);

  Eigen::VectorXd evaluate(const JointState& x, double t) const override;
  int dof() const override { return policy_->dof(); }
  std::optional<Eigen::MatrixXd> state_jacobian(const JointState& x, double t) const override;

  const MlpPolicy& policy() const { return *policy_; }
  const CircleTrajectory& trajectory() const { return trajectory_; }

 private:
  std::shared_ptr<const MlpPolicy> policy_;
  CircleTrajectory trajectory_;
};

}  // namespace hfl
