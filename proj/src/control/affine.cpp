#include "hfl/control/controller.hpp"
#include "hfl/errors.hpp"

namespace hfl {

AffineController::AffineController(Eigen::MatrixXd gain, Eigen::VectorXd offset)
    : gain_(std::move(gain)), offset_(std::move(offset)) {
  if (gain_.rows() != offset_.size() || gain_.cols() != 2 * offset_.size()) {
    throw DimensionError("affine controller: gain must be n x 2n with an n-vector offset");
  }
  if (!gain_.allFinite() || !offset_.allFinite()) {
    throw NonFiniteError("affine controller: non-finite coefficients");
  }
}

AffineController AffineController::joint_pd(const Eigen::VectorXd& q_ref, double kp, double kd,
                                            const Eigen::VectorXd& feedforward) {
  const auto n = q_ref.size();
  Eigen::MatrixXd gain(n, 2 * n);
  gain << -kp * Eigen::MatrixXd::Identity(n, n), -kd * Eigen::MatrixXd::Identity(n, n);
  return AffineController(std::move(gain), kp * q_ref + feedforward);
}

Eigen::VectorXd AffineController::evaluate(const JointState& x, double /*t*/) const {
  if (x.q.size() != dof() || x.v.size() != dof()) {
    throw DimensionError("affine controller: state dimension mismatch");
  }
  return gain_.leftCols(dof()) * x.q + gain_.rightCols(dof()) * x.v + offset_;
}

std::optional<Eigen::MatrixXd> AffineController::state_jacobian(const JointState& /*x*/,
                                                                double /*t*/) const {
  return gain_;
}

}  // namespace hfl
