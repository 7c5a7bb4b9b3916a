#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "hfl/control/controller.hpp"
#include "hfl/control/mlp_policy.hpp"
#include "hfl/rbd/model.hpp"

namespace hfl {

/// Affine feedback τ = A x + b valid around (x_k, t_k).
///
/// b is stored pre-shifted (b = τ(x_k) − A x_k) so evaluation needs only the
/// raw state.
struct LinearFeedbackLaw {
  Eigen::MatrixXd gain;     // A, n x 2n
  Eigen::VectorXd offset;   // b, n
  Eigen::VectorXd anchor;   // x_k, 2n
  double time = 0.0;        // t_k, s
  std::uint32_t sequence = 0;

  int dof() const { return static_cast<int>(offset.size()); }
};

inline constexpr double kDefaultFdStep = 1e-6;

/// Central differences, one state coordinate at a time, time frozen at t_k.
/// Throws NonFiniteError naming the offending coordinate.
LinearFeedbackLaw linearize_fd(const TorqueController& ctrl, const JointState& x_k, double t_k,
                               double step = kDefaultFdStep);

/// Exact Jacobian through the tanh layers; p* held at its given value.
LinearFeedbackLaw linearize_analytic(const MlpPolicy& policy, const JointState& x_k,
                                     const Eigen::Vector3d& p_ref, double t_k);

/// Uses the controller's closed-form Jacobian when it has one, else linearize_fd.
LinearFeedbackLaw linearize(const TorqueController& ctrl, const JointState& x_k, double t_k,
                            double step = kDefaultFdStep);

/// τ_i = b_i + Σ_j A_ij x_j, summed in column order.
///
/// The driver boards run the same kernel on their rows, so the distributed
/// result is bit-identical to this one.
double law_row(const Eigen::MatrixXd& gain, const Eigen::VectorXd& offset, Eigen::Index row,
               const Eigen::VectorXd& x);

Eigen::VectorXd eval_law(const LinearFeedbackLaw& law, const Eigen::VectorXd& x);
Eigen::VectorXd eval_law(const LinearFeedbackLaw& law, const JointState& x);

}  // namespace hfl
