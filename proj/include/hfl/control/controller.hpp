#pragma once

#include <optional>

#include <Eigen/Core>

#include "hfl/rbd/model.hpp"

namespace hfl {

/// Time- and state-dependent torque map τ = τ(x; t), x = (q, v).
///
/// Implementations are immutable after construction; evaluate() must be
/// deterministic for a fixed (x, t) and safe to call concurrently.
class TorqueController {
 public:
  virtual ~TorqueController() = default;

  virtual Eigen::VectorXd evaluate(const JointState& x, double t) const = 0;
  virtual int dof() const = 0;
  int state_dimension() const { return 2 * dof(); }

  /// ∂τ/∂x (n × 2n) at fixed t when the controller has a closed form for it.
  virtual std::optional<Eigen::MatrixXd> state_jacobian(const JointState& /*x*/,
                                                        double /*t*/) const {
    return std::nullopt;
  }
};

/// τ = K x + c. Used as the joint PD baseline and for exactness checks.
class AffineController final : public TorqueController {
 public:
  AffineController(Eigen::MatrixXd gain, Eigen::VectorXd offset);

  /// τ = kp (q_ref − q) − kd v + feedforward.
  static AffineController joint_pd(const Eigen::VectorXd& q_ref, double kp, double kd,
                                   const Eigen::VectorXd& feedforward);

  Eigen::VectorXd evaluate(const JointState& x, double t) const override;
  int dof() const override { return static_cast<int>(offset_.size()); }
  std::optional<Eigen::MatrixXd> state_jacobian(const JointState& x, double t) const override;

  const Eigen::MatrixXd& gain() const { return gain_; }
  const Eigen::VectorXd& offset() const { return offset_; }

 private:
  Eigen::MatrixXd gain_;
  Eigen::VectorXd offset_;
};

}  // namespace hfl
