#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hfl/control/controller.hpp"
#include "hfl/control/id_controller.hpp"
#include "hfl/control/linearize.hpp"
#include "hfl/control/mlp_policy.hpp"
#include "hfl/errors.hpp"
#include "hfl/rbd/kinematics.hpp"
#include "test_util.hpp"

namespace hfl {
namespace {

using test::bolt;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

// τ = sin(q) for n = 1, no closed-form Jacobian exposed
class SineController final : public TorqueController {
 public:
  VectorXd evaluate(const JointState& x, double) const override {
    return VectorXd::Constant(1, std::sin(x.q[0]));
  }
  int dof() const override { return 1; }
};

// Finite at x_k, NaN once coordinate `bad` moves away from zero.
class PoisonedController final : public TorqueController {
 public:
  explicit PoisonedController(int bad) : bad_(bad) {}
  VectorXd evaluate(const JointState& x, double) const override {
    const double c = x.stacked()[bad_];
    return VectorXd::Constant(2, c == 0.0 ? 1.0 : std::nan(""));
  }
  int dof() const override { return 2; }

 private:
  int bad_;
};

// Hides the affine controller's Jacobian so linearize_fd is exercised.
class OpaqueAffine final : public TorqueController {
 public:
  OpaqueAffine(MatrixXd k, VectorXd c) : inner_(std::move(k), std::move(c)) {}
  VectorXd evaluate(const JointState& x, double t) const override { return inner_.evaluate(x, t); }
  int dof() const override { return inner_.dof(); }

 private:
  AffineController inner_;
};

std::shared_ptr<IdTrackingController> id_controller(double kp = 500.0) {
  CircleTrajectory traj;
  traj.center = forward_kinematics(*bolt(), bolt()->nominal_posture(), "right_foot").position;
  return std::make_shared<IdTrackingController>(bolt(), TaskGains::critically_damped(kp), traj);
}

JointState near_nominal(std::mt19937_64& rng) {
  return {bolt()->nominal_posture() + test::uniform(rng, 6, -0.3, 0.3),
          test::uniform(rng, 6, -2, 2)};
}

TEST(LinearizeFd, AffineIsRecoveredExactly) {
  MatrixXd k(1, 2);
  k << 2.0, 3.0;
  const OpaqueAffine ctrl(k, VectorXd::Constant(1, 1.0));
  // dyadic anchors and steps: every operation is exact
  for (double h : {0.5, 0x1p-10, 0x1p-20}) {
    for (double q : {0.0, 0.75, -12.5}) {
      const auto law = linearize_fd(ctrl, {VectorXd::Constant(1, q), VectorXd::Constant(1, 0.25)},
                                    0.0, h);
      EXPECT_EQ(law.gain, k);
      EXPECT_EQ(law.offset, VectorXd::Constant(1, 1.0));
    }
  }
}

TEST(LinearizeFd, AffineRandomStatesToRoundoff) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd k = MatrixXd::Random(6, 12);
    const VectorXd c = VectorXd::Random(6);
    const OpaqueAffine ctrl(k, c);
    const auto x = test::random_state(rng, 6);
    for (double h : {1e-2, 1e-4, 1e-6}) {
      const auto law = linearize_fd(ctrl, x, 0.0, h);
      // central differences are exact on affine maps up to roundoff eps |τ| / h
      EXPECT_LE((law.gain - k).cwiseAbs().maxCoeff(), 1e-14 / h);
      EXPECT_LE((law.offset - c).cwiseAbs().maxCoeff(), 1e-14 / h * 20);
    }
  }
}

TEST(LinearizeFd, SineAtOrigin) {
  const double h = 1e-4;
  const auto law = linearize_fd(SineController(), JointState::zero(1), 0.0, h);
  EXPECT_NEAR(law.gain(0, 0), 1.0, h * h);
  EXPECT_EQ(law.gain(0, 1), 0.0);
  EXPECT_NEAR(law.offset[0], 0.0, h * h);
}

TEST(LinearizeFd, IdControllerMatchesRichardsonReference) {
  const auto ctrl = id_controller();
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = near_nominal(rng);
    const double t = 0.3 * trial;
    const MatrixXd coarse = linearize_fd(*ctrl, x, t, 1e-3).gain;
    const MatrixXd fine = linearize_fd(*ctrl, x, t, 5e-4).gain;
    const MatrixXd reference = (4.0 * fine - coarse) / 3.0;
    const MatrixXd a = linearize_fd(*ctrl, x, t).gain;
    EXPECT_LE((a - reference).norm(), 1e-4 * reference.norm());
  }
}

TEST(LinearizeFd, FirstOrderResidualQuarters) {
  const auto ctrl = id_controller();
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = near_nominal(rng);
    const auto law = linearize_fd(*ctrl, x, 0.5);
    const VectorXd dir = test::uniform(rng, 12, -1, 1).normalized();
    auto residual = [&](double s) {
      const VectorXd xs = x.stacked() + s * dir;
      return (ctrl->evaluate(JointState::from_stacked(xs), 0.5) - eval_law(law, xs)).norm();
    };
    const double ratio = residual(2e-2) / residual(1e-2);
    EXPECT_GT(ratio, 3.5);
    EXPECT_LT(ratio, 4.5);
  }
}

TEST(LinearizeFd, NamesOffendingCoordinate) {
  try {
    linearize_fd(PoisonedController(3), JointState::zero(2), 0.0);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 3"), std::string::npos) << e.what();
  }
}

TEST(LinearizeFd, RejectsBadArguments) {
  EXPECT_THROW(linearize_fd(SineController(), JointState::zero(1), 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(linearize_fd(SineController(), JointState::zero(2), 0.0), DimensionError);
}

TEST(LinearizeAnalytic, AgreesWithFdOnRandomPolicies) {
  std::mt19937_64 rng(44);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto policy = std::make_shared<const MlpPolicy>(make_random_policy(6, {32, 32}, seed));
    CircleTrajectory traj;
    traj.center = Vector3d(0.0, -0.1, -0.33);
    const MlpController ctrl(policy, traj);
    const auto x = test::random_state(rng, 6, 1.0, 1.0);
    const double t = test::uniform(rng, 1, 0, 2)[0];
    const auto analytic = linearize_analytic(*policy, x, circle_ref(traj, t).position, t);
    const auto fd = linearize_fd(ctrl, x, t);
    EXPECT_LE((analytic.gain - fd.gain).cwiseAbs().maxCoeff(), 1e-5) << "seed " << seed;
    EXPECT_LE((analytic.offset - fd.offset).cwiseAbs().maxCoeff(), 1e-5) << "seed " << seed;
  }
}

TEST(LinearizeAnalytic, LinearPolicyMatchesFdTightly) {
  const int n = 2, in = 2 * n + 3;
  std::mt19937_64 rng(45);
  MatrixXd w(n, in);
  for (int i = 0; i < w.size(); ++i) w.data()[i] = test::uniform(rng, 1, -1, 1)[0];
  auto policy = std::make_shared<const MlpPolicy>(
      MlpPolicy({{w, test::uniform(rng, n, -1, 1)}}, VectorXd::Zero(in), VectorXd::Ones(in)));
  CircleTrajectory traj;
  const MlpController ctrl(policy, traj);
  const auto x = test::random_state(rng, n, 1.0, 1.0);
  const auto analytic = linearize_analytic(*policy, x, circle_ref(traj, 0.2).position, 0.2);
  const auto fd = linearize_fd(ctrl, x, 0.2);
  EXPECT_LE((analytic.gain - fd.gain).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(analytic.gain, w.leftCols(2 * n));
}

TEST(LinearizeAnalytic, ZeroPolicyGivesZeroLaw) {
  const int n = 2, in = 2 * n + 3;
  const MlpPolicy p({{MatrixXd::Zero(4, in), VectorXd::Zero(4)}, {MatrixXd::Zero(n, 4), VectorXd::Zero(n)}},
                    VectorXd::Zero(in), VectorXd::Ones(in));
  std::mt19937_64 rng(46);
  const auto law = linearize_analytic(p, test::random_state(rng, n), Vector3d::Zero(), 0.0);
  EXPECT_EQ(law.gain, MatrixXd::Zero(n, 2 * n));
  EXPECT_EQ(law.offset, VectorXd::Zero(n));
}

TEST(Linearize, UsesClosedFormWhenAvailable) {
  MatrixXd k(1, 2);
  k << 0.1, 0.3;
  const AffineController ctrl(k, VectorXd::Constant(1, -0.2));
  const auto law = linearize(ctrl, {VectorXd::Constant(1, 0.123), VectorXd::Constant(1, 4.56)}, 0.0);
  EXPECT_EQ(law.gain, k);
}

TEST(EvalLaw, WorkedExample) {
  LinearFeedbackLaw law;
  law.gain = MatrixXd(1, 2);
  law.gain << 2.0, 3.0;
  law.offset = VectorXd::Constant(1, 1.0);
  const JointState x{VectorXd::Constant(1, 0.5), VectorXd::Constant(1, -1.0)};
  EXPECT_EQ(eval_law(law, x)[0], -1.0);
}

TEST(EvalLaw, ZeroGainGivesOffset) {
  LinearFeedbackLaw law;
  law.gain = MatrixXd::Zero(3, 6);
  law.offset = VectorXd::LinSpaced(3, -1, 1);
  std::mt19937_64 rng(47);
  EXPECT_EQ(eval_law(law, test::uniform(rng, 6, -9, 9)), law.offset);
}

TEST(EvalLaw, ReproducesAnchor) {
  const auto ctrl = id_controller(1000.0);
  std::mt19937_64 rng(48);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = near_nominal(rng);
    const auto law = linearize(*ctrl, x, 0.1 * trial);
    const VectorXd tau = ctrl->evaluate(x, 0.1 * trial);
    EXPECT_LE((eval_law(law, x) - tau).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(law.anchor, x.stacked());
    EXPECT_EQ(law.time, 0.1 * trial);
  }
}

TEST(EvalLaw, RejectsWrongWidth) {
  LinearFeedbackLaw law;
  law.gain = MatrixXd::Zero(1, 2);
  law.offset = VectorXd::Zero(1);
  EXPECT_THROW(eval_law(law, VectorXd::Zero(3)), DimensionError);
}

}  // namespace
}  // namespace hfl
