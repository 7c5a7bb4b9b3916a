#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "hfl/errors.hpp"
#include "hfl/rbd/dynamics.hpp"
#include "hfl/sim/config.hpp"
#include "hfl/sim/executor.hpp"
#include "test_util.hpp"

namespace hfl {
namespace {

using Eigen::VectorXd;

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.model = test::bolt();
  cfg.rates.fast_hz = 8000;
  cfg.duration = 0.3;
  cfg.record_hz = 1000;
  return cfg;
}

ExperimentConfig quiet(ExperimentConfig cfg) {
  cfg.realism.vel_noise_std = 0.0;
  cfg.realism.vel_lowpass_hz = 0.0;
  cfg.realism.actuation_delay_ticks = 0;
  cfg.wire_float32 = false;
  return cfg;
}

std::string csv_text(const SimTrace& tr) {
  std::ostringstream os;
  write_trace_csv(tr, os);
  return os.str();
}

double max_row_diff(const SimTrace& a, const SimTrace& b) {
  EXPECT_EQ(a.rows.size(), b.rows.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows.size(), b.rows.size()); ++i) {
    worst = std::max(worst, (a.rows[i].q - b.rows[i].q).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.rows[i].v - b.rows[i].v).cwiseAbs().maxCoeff());
  }
  return worst;
}

TEST(Executor, DeterministicForFixedSeed) {
  const auto cfg = small_config();
  const std::string a = csv_text(run_experiment(cfg));
  EXPECT_EQ(a, csv_text(run_experiment(cfg)));
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(a, csv_text(run_experiment(other)));
}

TEST(Executor, AffineInterpolatedEqualsFastDirect) {
  for (int hz : {500, 1000}) {
    auto cfg = quiet(small_config());
    cfg.controller.kind = ControllerKind::kJointPd;
    cfg.controller.joint_kp = 8.0;
    cfg.controller.joint_kd = 0.2;
    cfg.initial_q = std::vector<double>{0.1, 0.3, -0.5, -0.2, 0.4, -0.6};
    cfg.rates.controller_hz = hz;
    auto direct = cfg;
    direct.mode = ExecutionMode::kDirect;
    direct.rates.controller_hz = cfg.rates.fast_hz;
    const auto a = run_experiment(direct), b = run_experiment(cfg);
    ASSERT_FALSE(a.blowup);
    EXPECT_LE(max_row_diff(a, b), 1e-12) << hz;
  }
}

TEST(Executor, ZeroTorqueLimitIsPassive) {
  auto cfg = small_config();
  cfg.initial_q = std::vector<double>{0.2, 0.1, -0.3, 0.0, 0.5, -0.4};
  cfg.realism.torque_limit = 0.0;
  auto passive = cfg;
  passive.passive = true;
  const auto a = run_experiment(cfg), b = run_experiment(passive);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    EXPECT_EQ(a.rows[r].q, b.rows[r].q);
    EXPECT_EQ(a.rows[r].v, b.rows[r].v);
    EXPECT_EQ(a.rows[r].tau, VectorXd::Zero(6));  // -0 compares equal
  }

  // and both equal a hand-rolled integration loop
  const auto& model = *test::bolt();
  const int steps_per_record = cfg.rates.fast_hz / cfg.record_hz;
  JointState x{Eigen::Map<const VectorXd>(cfg.initial_q->data(), 6), VectorXd::Zero(6)};
  for (std::size_t r = 0; r < b.rows.size(); ++r) {
    ASSERT_EQ(b.rows[r].q, x.q) << r;
    ASSERT_EQ(b.rows[r].v, x.v) << r;
    for (int s = 0; s < steps_per_record; ++s) {
      x = integrate_step(model, x, VectorXd::Zero(6), 1.0 / cfg.rates.fast_hz);
    }
  }
}

TEST(Executor, RateBookkeeping) {
  auto cfg = small_config();
  cfg.duration = 0.5;
  cfg.decimation = 4;
  const auto tr = run_experiment(cfg);
  EXPECT_NEAR(static_cast<double>(tr.fast_recomputations), 8000 * 0.5 / 4, 1.0);
  EXPECT_NEAR(static_cast<double>(tr.controller_evaluations), 500 * 0.5, 1.0);
  EXPECT_NEAR(static_cast<double>(tr.laws_pushed), 500 * 0.5, 1.0);
  EXPECT_EQ(tr.rows.size(), 500u);

  cfg.mode = ExecutionMode::kDirect;
  const auto d = run_experiment(cfg);
  EXPECT_NEAR(static_cast<double>(d.controller_evaluations), 500 * 0.5, 1.0);
  EXPECT_EQ(d.laws_pushed, 0u);
}

TEST(Executor, PlantFinerThanFastLoop) {
  auto cfg = small_config();
  cfg.rates.plant_hz = 16000;
  const auto tr = run_experiment(cfg);
  EXPECT_FALSE(tr.blowup);
  EXPECT_NEAR(static_cast<double>(tr.fast_recomputations), 8000 * 0.3, 1.0);
}

TEST(Executor, TorqueSaturation) {
  auto cfg = small_config();
  cfg.controller.kp = 2000.0;
  cfg.realism.torque_limit = 0.3;
  cfg.record_hz = 8000;
  const auto tr = run_experiment(cfg);
  bool touched = false;
  for (const auto& row : tr.rows) {
    if (!row.tau.allFinite()) continue;
    EXPECT_LE(row.tau.cwiseAbs().maxCoeff(), 0.3);
    touched |= row.tau.cwiseAbs().maxCoeff() == 0.3;
  }
  EXPECT_TRUE(touched);
}

TEST(Executor, AnchorInvariant) {
  for (auto kind : {ControllerKind::kInverseDynamics, ControllerKind::kMlp}) {
    auto cfg = quiet(small_config());
    cfg.controller.kind = kind;
    cfg.rates.law_push_hz = 1000;
    const auto tr = run_experiment(cfg);
    ASSERT_FALSE(tr.blowup);
    EXPECT_GT(tr.controller_evaluations, 0u);
    EXPECT_LE(tr.max_anchor_error, 1e-9) << to_string(kind);
  }
}

TEST(Executor, AppliedTorqueMatchesControllerOnTicks) {
  auto cfg = quiet(small_config());
  cfg.record_hz = 500;  // aligned with controller ticks
  const auto tr = run_experiment(cfg);
  const auto ctrl = make_controller(cfg, test::bolt());
  const VectorXd limits = test::bolt()->torque_limits();
  for (const auto& row : tr.rows) {
    const VectorXd tau = ctrl->evaluate({row.q, row.v}, row.t).cwiseMax(-limits).cwiseMin(limits);
    EXPECT_LE((row.tau - tau).cwiseAbs().maxCoeff(), 1e-9) << row.t;
  }
}

TEST(Executor, FidelityImprovesWithControllerRate) {
  double previous = INFINITY;
  for (int hz : {250, 500, 1000}) {
    auto cfg = quiet(small_config());
    cfg.fidelity_probe = true;
    cfg.rates.controller_hz = hz;
    const auto tr = run_experiment(cfg);
    EXPECT_LT(tr.max_interp_residual, previous) << hz;
    previous = tr.max_interp_residual;
  }
}

TEST(Executor, DecimationEquivalence) {
  const auto cfg = small_config();
  for (int d : {1, 2, 4, 8}) EXPECT_TRUE(decimation_equivalence_check(cfg, d)) << d;
  auto delayed = cfg;
  delayed.hop_delay = 1;
  EXPECT_THROW(decimation_equivalence_check(delayed, 2), ConfigError);
  EXPECT_THROW(decimation_equivalence_check(cfg, 3), ConfigError);
}

TEST(Executor, BlowupIsRecordedNotThrown) {
  auto cfg = quiet(small_config());
  cfg.controller.kind = ControllerKind::kJointPd;
  cfg.controller.joint_kp = 1e5;
  cfg.controller.joint_kd = 0.0;
  cfg.realism.torque_limit = 1e9;
  cfg.mode = ExecutionMode::kDirect;
  cfg.rates.controller_hz = 100;
  cfg.duration = 2.0;
  cfg.initial_q = std::vector<double>{0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  SimTrace tr;
  ASSERT_NO_THROW(tr = run_experiment(cfg));
  EXPECT_TRUE(tr.blowup);
  EXPECT_GT(tr.blowup_time, 0.0);
  EXPECT_LT(tr.blowup_time, cfg.duration);
  EXPECT_FALSE(tr.blowup_reason.empty());
}

TEST(TraceCsv, RoundtripIsTextStable) {
  const auto tr = run_experiment(small_config());
  const auto path = std::filesystem::temp_directory_path() / "hfl_trace_roundtrip.csv";
  write_trace_csv(tr, path);
  const auto back = read_trace_csv(path);
  EXPECT_EQ(csv_text(back), csv_text(tr));
  ASSERT_EQ(back.rows.size(), tr.rows.size());
  EXPECT_EQ(back.rows.back().pos_err, tr.rows.back().pos_err);
  std::filesystem::remove(path);
  const std::string text = csv_text(tr);
  std::string header;
  for (const auto& c : trace_columns(6)) header += (header.empty() ? "" : ",") + c;
  EXPECT_EQ(text.substr(0, text.find('\n')), header);
}

TEST(TraceCsv, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Config, JsonRoundtrip) {
  ExperimentConfig cfg;
  cfg.controller.kp = 1234.5;
  cfg.controller.kd = 7.0;
  cfg.mode = ExecutionMode::kDirect;
  cfg.realism.torque_limit = 2.5;
  cfg.initial_q = std::vector<double>{1, 2, 3, 4, 5, 6};
  const auto doc = config_to_json(cfg);
  EXPECT_EQ(config_to_json(parse_config(doc)), doc);

  ExperimentConfig plain;
  const auto plain_doc = config_to_json(plain);
  const auto back = parse_config(plain_doc);
  EXPECT_FALSE(back.controller.kd.has_value());
  EXPECT_EQ(config_to_json(back), plain_doc);
}

TEST(Config, RejectsUnknownKeysAndBadRates) {
  EXPECT_THROW(parse_config({{"bogus", 1}}), ConfigError);
  EXPECT_THROW(parse_config({{"controller", {{"kpp", 1}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"mode", "sideways"}}), ConfigError);
  ExperimentConfig cfg;
  cfg.rates.controller_hz = 333;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.rates.plant_hz = 50000;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.record_hz = 7;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.drop_probability = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.realism.torque_limit = 0.0;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Overrides) {
  auto doc = config_to_json(ExperimentConfig{});
  apply_override(doc, "realism.vel_noise_std=0");
  apply_override(doc, "controller.type=pd");
  apply_override(doc, "rates.fast_hz=20000");
  const auto cfg = parse_config(doc);
  EXPECT_EQ(cfg.realism.vel_noise_std, 0.0);
  EXPECT_EQ(cfg.controller.kind, ControllerKind::kJointPd);
  EXPECT_EQ(cfg.rates.fast_hz, 20000);
  EXPECT_THROW(apply_override(doc, "no_equals_sign"), ConfigError);
}

}  // namespace
}  // namespace hfl
