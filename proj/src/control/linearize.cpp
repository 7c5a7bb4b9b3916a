#include "hfl/control/linearize.hpp"

#include <string>

#include "hfl/errors.hpp"

namespace hfl {

namespace {

LinearFeedbackLaw assemble(Eigen::MatrixXd gain, const Eigen::VectorXd& tau_k,
                           const JointState& x_k, double t_k) {
  LinearFeedbackLaw law;
  law.anchor = x_k.stacked();
  law.offset = tau_k - gain * law.anchor;
  law.gain = std::move(gain);
  law.time = t_k;
  if (!law.gain.allFinite() || !law.offset.allFinite()) {
    throw NonFiniteError("linearization produced non-finite coefficients");
  }
  return law;
}

}  // namespace

LinearFeedbackLaw linearize_fd(const TorqueController& ctrl, const JointState& x_k, double t_k,
                               double step) {
  if (!(step > 0.0)) throw std::invalid_argument("linearize_fd: step must be positive");
  const int n = ctrl.dof();
  if (x_k.q.size() != n || x_k.v.size() != n) {
    throw DimensionError("linearize_fd: state does not match controller dof");
  }
  const Eigen::VectorXd tau_k = ctrl.evaluate(x_k, t_k);
  if (!tau_k.allFinite()) throw NonFiniteError("linearize_fd: non-finite torque at x_k");

  const Eigen::VectorXd base = x_k.stacked();
  Eigen::MatrixXd gain(n, 2 * n);
  for (int j = 0; j < 2 * n; ++j) {
    Eigen::VectorXd plus = base;
    Eigen::VectorXd minus = base;
    plus(j) += step;
    minus(j) -= step;
    const Eigen::VectorXd tp = ctrl.evaluate(JointState::from_stacked(plus), t_k);
    const Eigen::VectorXd tm = ctrl.evaluate(JointState::from_stacked(minus), t_k);
    if (!tp.allFinite() || !tm.allFinite()) {
      throw NonFiniteError("linearize_fd: non-finite torque probing state coordinate " +
                           std::to_string(j));
    }
    gain.col(j) = (tp - tm) / (2.0 * step);
  }
  return assemble(std::move(gain), tau_k, x_k, t_k);
}

LinearFeedbackLaw linearize_analytic(const MlpPolicy& policy, const JointState& x_k,
                                     const Eigen::Vector3d& p_ref, double t_k) {
  return assemble(mlp_state_jacobian(policy, x_k, p_ref), mlp_eval(policy, x_k, p_ref), x_k, t_k);
}

LinearFeedbackLaw linearize(const TorqueController& ctrl, const JointState& x_k, double t_k,
                            double step) {
  if (auto jac = ctrl.state_jacobian(x_k, t_k)) {
    return assemble(std::move(*jac), ctrl.evaluate(x_k, t_k), x_k, t_k);
  }
  return linearize_fd(ctrl, x_k, t_k, step);
}

double law_row(const Eigen::MatrixXd& gain, const Eigen::VectorXd& offset, Eigen::Index row,
               const Eigen::VectorXd& x) {
  double acc = offset(row);
  for (Eigen::Index j = 0; j < gain.cols(); ++j) acc += gain(row, j) * x(j);
  return acc;
}

Eigen::VectorXd eval_law(const LinearFeedbackLaw& law, const Eigen::VectorXd& x) {
  if (x.size() != law.gain.cols()) {
    throw DimensionError("eval_law: state length " + std::to_string(x.size()) +
                         " does not match law width " + std::to_string(law.gain.cols()));
  }
  Eigen::VectorXd tau(law.dof());
  for (Eigen::Index i = 0; i < tau.size(); ++i) tau(i) = law_row(law.gain, law.offset, i, x);
  return tau;
}

Eigen::VectorXd eval_law(const LinearFeedbackLaw& law, const JointState& x) {
  return eval_law(law, x.stacked());
}

}  // namespace hfl
