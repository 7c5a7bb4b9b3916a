#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hfl/errors.hpp"
#include "hfl/rbd/kinematics.hpp"
#include "hfl/rbd/model.hpp"

namespace hfl {

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + " has non-finite entries");
}

// Link-frame motion of every link: angular velocity, angular acceleration and
// linear acceleration of the link origin.
template <typename Scalar>
struct LinkMotion {
  Matrix3<Scalar> rel;   // link -> parent rotation
  Vector3<Scalar> omega;
  Vector3<Scalar> omega_dot;
  Vector3<Scalar> accel;
};

template <typename DQ, typename DV, typename DA>
std::vector<LinkMotion<typename DQ::Scalar>> forward_motion(
    const RobotModel& model, const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DV>& v,
    const Eigen::MatrixBase<DA>& a, const Vector3<typename DQ::Scalar>& base_accel) {
  using Scalar = typename DQ::Scalar;
  const int n = model.dof();
  std::vector<LinkMotion<Scalar>> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const JointSpec& js = model.joint(i);
    const Vector3<Scalar> s = js.axis.template cast<Scalar>();
    const Vector3<Scalar> r = js.translation.template cast<Scalar>();
    auto& m = out[static_cast<std::size_t>(i)];
    m.rel = joint_rotation<Scalar>(js, q(i));
    const Matrix3<Scalar> to_child = m.rel.transpose();

    Vector3<Scalar> w_p = Vector3<Scalar>::Zero();
    Vector3<Scalar> wd_p = Vector3<Scalar>::Zero();
    Vector3<Scalar> a_p = base_accel;
    if (js.parent >= 0) {
      const auto& p = out[static_cast<std::size_t>(js.parent)];
      w_p = p.omega;
      wd_p = p.omega_dot;
      a_p = p.accel;
    }
    const Vector3<Scalar> w_in = to_child * w_p;
    m.omega = w_in + s * v(i);
    m.omega_dot = to_child * wd_p + s * a(i) + w_in.cross(s * v(i));
    m.accel = to_child * (a_p + wd_p.cross(r) + w_p.cross(w_p.cross(r)));
  }
  return out;
}

}  // namespace detail

/// Drift acceleration J̇v of a frame origin, world frame (m/s²).
template <typename DQ, typename DV>
Vector3<typename DQ::Scalar> jdot_v(const RobotModel& model, const Eigen::MatrixBase<DQ>& q,
                                    const Eigen::MatrixBase<DV>& v, std::string_view frame) {
  using Scalar = typename DQ::Scalar;
  const int n = model.dof();
  detail::require_size(q, n, "q");
  detail::require_size(v, n, "v");
  const FrameSpec& fs = model.frame(frame);
  const VectorX<Scalar> zero = VectorX<Scalar>::Zero(n);
  const auto motion = detail::forward_motion(model, q, v, zero, Vector3<Scalar>::Zero());
  const auto poses = link_poses(model, q);
  const auto& m = motion[static_cast<std::size_t>(fs.link)];
  const Vector3<Scalar> r = fs.offset.template cast<Scalar>();
  const Vector3<Scalar> local = m.accel + m.omega_dot.cross(r) + m.omega.cross(m.omega.cross(r));
  return poses[static_cast<std::size_t>(fs.link)].rotation * local;
}

/// Recursive Newton-Euler: τ = M(q)a + C(q,v)v + g(q) + D v.
template <typename DQ, typename DV, typename DA>
VectorX<typename DQ::Scalar> inverse_dynamics(const RobotModel& model,
                                              const Eigen::MatrixBase<DQ>& q,
                                              const Eigen::MatrixBase<DV>& v,
                                              const Eigen::MatrixBase<DA>& a) {
  using Scalar = typename DQ::Scalar;
  const int n = model.dof();
  detail::require_size(q, n, "q");
  detail::require_size(v, n, "v");
  detail::require_size(a, n, "a");
  detail::require_finite(q, "q");
  detail::require_finite(v, "v");
  detail::require_finite(a, "a");

  // Gravity enters as an upward acceleration of the base.
  const Vector3<Scalar> base_accel = -model.gravity().template cast<Scalar>();
  const auto motion = detail::forward_motion(model, q, v, a, base_accel);

  std::vector<Vector3<Scalar>> force(static_cast<std::size_t>(n));
  std::vector<Vector3<Scalar>> moment(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const JointSpec& js = model.joint(i);
    const auto& m = motion[static_cast<std::size_t>(i)];
    const Vector3<Scalar> c = js.com.template cast<Scalar>();
    const Matrix3<Scalar> inertia = js.inertia.template cast<Scalar>();
    const Scalar mass = static_cast<Scalar>(js.mass);
    const Vector3<Scalar> a_com = m.accel + m.omega_dot.cross(c) + m.omega.cross(m.omega.cross(c));
    const Vector3<Scalar> f = mass * a_com;
    force[static_cast<std::size_t>(i)] = f;
    moment[static_cast<std::size_t>(i)] =
        inertia * m.omega_dot + m.omega.cross(inertia * m.omega) + c.cross(f);
  }

  VectorX<Scalar> tau(n);
  for (int i = n - 1; i >= 0; --i) {
    const JointSpec& js = model.joint(i);
    const auto idx = static_cast<std::size_t>(i);
    tau(i) = js.axis.template cast<Scalar>().dot(moment[idx]) +
             static_cast<Scalar>(js.damping) * v(i);
    if (js.parent >= 0) {
      const auto pidx = static_cast<std::size_t>(js.parent);
      const Matrix3<Scalar>& rel = motion[idx].rel;
      const Vector3<Scalar> f_parent = rel * force[idx];
      force[pidx] += f_parent;
      moment[pidx] += rel * moment[idx] + js.translation.template cast<Scalar>().cross(f_parent);
    }
  }
  return tau;
}

/// Gravity + Coriolis + damping: ID(q, v, 0).
template <typename DQ, typename DV>
VectorX<typename DQ::Scalar> bias_forces(const RobotModel& model, const Eigen::MatrixBase<DQ>& q,
                                         const Eigen::MatrixBase<DV>& v) {
  using Scalar = typename DQ::Scalar;
  return inverse_dynamics(model, q, v, VectorX<Scalar>::Zero(model.dof()));
}

/// Joint-space mass matrix by the composite-rigid-body algorithm.
template <typename DQ>
MatrixX<typename DQ::Scalar> mass_matrix(const RobotModel& model,
                                         const Eigen::MatrixBase<DQ>& q) {
  using Scalar = typename DQ::Scalar;
  using Mat6 = Eigen::Matrix<Scalar, 6, 6>;
  using Vec6 = Eigen::Matrix<Scalar, 6, 1>;
  const int n = model.dof();
  detail::require_size(q, n, "q");
  detail::require_finite(q, "q");

  auto skew = [](const Vector3<Scalar>& w) {
    Matrix3<Scalar> s;
    s << Scalar(0), -w.z(), w.y(), w.z(), Scalar(0), -w.x(), -w.y(), w.x(), Scalar(0);
    return s;
  };

  // Spatial quantities use [angular; linear] ordering, link-origin reference.
  std::vector<Mat6> composite(static_cast<std::size_t>(n));
  std::vector<Mat6> xform(static_cast<std::size_t>(n));  // parent motion -> child motion
  std::vector<Vec6> subspace(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const JointSpec& js = model.joint(i);
    const auto idx = static_cast<std::size_t>(i);
    const Scalar mass = static_cast<Scalar>(js.mass);
    const Matrix3<Scalar> cx = skew(js.com.template cast<Scalar>());
    Mat6 inertia;
    inertia.template topLeftCorner<3, 3>() =
        js.inertia.template cast<Scalar>() + mass * cx * cx.transpose();
    inertia.template topRightCorner<3, 3>() = mass * cx;
    inertia.template bottomLeftCorner<3, 3>() = mass * cx.transpose();
    inertia.template bottomRightCorner<3, 3>() = mass * Matrix3<Scalar>::Identity();
    composite[idx] = inertia;

    const Matrix3<Scalar> e = detail::joint_rotation<Scalar>(js, q(i)).transpose();
    const Matrix3<Scalar> rx = skew(js.translation.template cast<Scalar>());
    Mat6 x = Mat6::Zero();
    x.template topLeftCorner<3, 3>() = e;
    x.template bottomLeftCorner<3, 3>() = -e * rx;
    x.template bottomRightCorner<3, 3>() = e;
    xform[idx] = x;

    subspace[idx] << js.axis.template cast<Scalar>(), Vector3<Scalar>::Zero();
  }

  for (int i = n - 1; i >= 0; --i) {
    const int parent = model.joint(i).parent;
    if (parent >= 0) {
      const auto idx = static_cast<std::size_t>(i);
      composite[static_cast<std::size_t>(parent)] +=
          xform[idx].transpose() * composite[idx] * xform[idx];
    }
  }

  MatrixX<Scalar> mm = MatrixX<Scalar>::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    Vec6 f = composite[idx] * subspace[idx];
    mm(i, i) = subspace[idx].dot(f);
    for (int j = i; model.joint(j).parent >= 0;) {
      f = xform[static_cast<std::size_t>(j)].transpose() * f;
      j = model.joint(j).parent;
      mm(i, j) = f.dot(subspace[static_cast<std::size_t>(j)]);
      mm(j, i) = mm(i, j);
    }
  }
  return mm;
}

/// Solves M(q) a = τ − ID(q, v, 0). Throws ModelError for a singular M.
template <typename DQ, typename DV, typename DT>
VectorX<typename DQ::Scalar> forward_dynamics(const RobotModel& model,
                                              const Eigen::MatrixBase<DQ>& q,
                                              const Eigen::MatrixBase<DV>& v,
                                              const Eigen::MatrixBase<DT>& tau) {
  using Scalar = typename DQ::Scalar;
  detail::require_size(tau, model.dof(), "tau");
  detail::require_finite(tau, "tau");
  const MatrixX<Scalar> mm = mass_matrix(model, q);
  const Eigen::LLT<MatrixX<Scalar>> llt(mm);
  if (llt.info() != Eigen::Success) {
    throw ModelError("mass matrix is not positive definite");
  }
  return llt.solve(tau - bias_forces(model, q, v));
}

/// Semi-implicit Euler: v⁺ = v + a dt, q⁺ = q + v⁺ dt. Throws BlowupError on a
/// non-finite result.
JointState integrate_step(const RobotModel& model, const JointState& state,
                          const Eigen::VectorXd& tau, double dt);

}  // namespace hfl
