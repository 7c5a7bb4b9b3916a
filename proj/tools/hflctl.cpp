// hflctl: experiment harness for the high-frequency feedback-law simulator.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hfl/errors.hpp"
#include "hfl/control/mlp_policy.hpp"
#include "hfl/exp/codec_check.hpp"
#include "hfl/exp/stats.hpp"
#include "hfl/exp/sweep.hpp"
#include "hfl/rbd/dynamics.hpp"
#include "hfl/rbd/kinematics.hpp"
#include "hfl/sim/config.hpp"
#include "hfl/sim/executor.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Options shared by the experiment subcommands; each maps onto a config key.
struct Overrides {
  std::vector<std::string> set;
  std::optional<std::uint64_t> seed;
  std::optional<double> kp;
  std::optional<std::string> mode;
  std::optional<double> duration;
  std::optional<std::string> controller;
  std::string out_dir = "out";

  void attach(CLI::App* cmd) {
    cmd->add_option("--set", set, "Override a config field, e.g. realism.vel_noise_std=0")
        ->take_all();
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--mode", mode, "direct | interpolated");
    cmd->add_option("--duration", duration, "Simulated time (s)");
    cmd->add_option("--controller", controller, "id | mlp | affine | pd");
    cmd->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  }

  std::vector<std::string> assignments(bool with_kp) const {
    std::vector<std::string> out;
    if (seed) out.push_back("seed=" + std::to_string(*seed));
    if (with_kp && kp) out.push_back("controller.kp=" + hfl::format_double(*kp));
    if (mode) out.push_back("mode=\"" + *mode + "\"");
    if (duration) out.push_back("duration=" + hfl::format_double(*duration));
    if (controller) out.push_back("controller.type=\"" + *controller + "\"");
    out.insert(out.end(), set.begin(), set.end());
    return out;
  }
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw hfl::ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw hfl::ConfigError(path.string() + ": " + e.what());
  }
}

hfl::ExperimentConfig config_with_overrides(const fs::path& path,
                                            const std::vector<std::string>& assignments) {
  json doc = read_json(path);
  for (const auto& a : assignments) hfl::apply_override(doc, a);
  return hfl::parse_config(doc, path.parent_path());
}

void write_both(const fs::path& file, const std::string& text) {
  std::cout << text;
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

std::string run_report(const hfl::ExperimentConfig& cfg, const hfl::SimTrace& trace) {
  std::ostringstream out;
  out << "controller: " << hfl::to_string(cfg.controller.kind)
      << "  mode: " << hfl::to_string(cfg.mode) << "  seed: " << cfg.seed << '\n'
      << "controller evaluations: " << trace.controller_evaluations
      << "  fast recomputations: " << trace.fast_recomputations
      << "  laws pushed: " << trace.laws_pushed << '\n';
  if (trace.blowup) {
    out << "blow-up at t = " << hfl::format_double(trace.blowup_time) << " s ("
        << trace.blowup_reason << ")\n";
  }
  const auto pos = hfl::steady_samples(trace, hfl::TraceMetric::kPositionError, hfl::kSteadyStateStart);
  const auto vel = hfl::steady_samples(trace, hfl::TraceMetric::kVelocityError, hfl::kSteadyStateStart);
  if (!pos.empty()) {
    out << "position error (m):   median " << hfl::format_double(hfl::percentile(pos, 50))
        << "  p5 " << hfl::format_double(hfl::percentile(pos, 5)) << "  p95 "
        << hfl::format_double(hfl::percentile(pos, 95)) << '\n'
        << "velocity error (m/s): median " << hfl::format_double(hfl::percentile(vel, 50))
        << "  p5 " << hfl::format_double(hfl::percentile(vel, 5)) << "  p95 "
        << hfl::format_double(hfl::percentile(vel, 95)) << '\n';
  } else {
    out << "no steady-state samples (t >= " << hfl::kSteadyStateStart << " s)\n";
  }
  return out.str();
}

int cmd_run(const fs::path& config, const Overrides& ov) {
  const auto cfg = config_with_overrides(config, ov.assignments(true));
  const auto trace = hfl::run_experiment(cfg);
  fs::create_directories(ov.out_dir);
  const fs::path dir = ov.out_dir;
  hfl::write_trace_csv(trace, dir / "trace.csv");
  write_both(dir / "report.txt", run_report(cfg, trace));
  return 0;
}

int cmd_sweep(const fs::path& spec_path, const Overrides& ov) {
  json doc = read_json(spec_path);
  const auto assignments = ov.assignments(false);
  if (!assignments.empty() || ov.seed) {
    if (doc.contains("base_config")) {
      fs::path base = doc["base_config"].get<std::string>();
      if (base.is_relative()) base = spec_path.parent_path() / base;
      doc["base"] = hfl::config_to_json(hfl::load_config(base));
      doc.erase("base_config");
    }
    if (!doc.contains("base")) doc["base"] = json::object();
    for (const auto& a : assignments) hfl::apply_override(doc["base"], a);
    if (ov.seed && doc.contains("seeds")) {
      // keep the repetition count, restart the seed sequence
      const auto reps = doc["seeds"].size();
      doc.erase("seeds");
      doc["repetitions"] = reps;
    }
  }
  const auto spec = hfl::parse_sweep(doc, spec_path.parent_path());
  const fs::path dir = ov.out_dir;
  const auto result = hfl::run_sweep(spec, dir / "traces");
  hfl::write_summary_csv(result.rows, dir / "summary.csv");

  std::ostringstream report;
  report << "kp      mode          pos_err_med   vel_err_p5..p95            blowup_frac\n";
  for (const auto& r : result.rows) {
    report << hfl::format_double(r.kp) << "  " << hfl::to_string(r.mode) << "  "
           << hfl::format_double(r.pos_err_med) << "  [" << hfl::format_double(r.vel_err_p5)
           << ", " << hfl::format_double(r.vel_err_p95) << "]  "
           << hfl::format_double(r.blowup_frac) << '\n';
  }
  write_both(dir / "report.txt", report.str());
  return 0;
}

int cmd_compare(const fs::path& config, double kp, const Overrides& ov) {
  const auto cfg = config_with_overrides(config, ov.assignments(false));
  const auto cmp = hfl::compare_modes(cfg, kp);
  const fs::path dir = ov.out_dir;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "compare.csv");
    hfl::write_comparison_csv(cmp, out);
  }
  hfl::write_trace_csv(cmp.a, dir / "trace_direct.csv");
  hfl::write_trace_csv(cmp.b, dir / "trace_interpolated.csv");
  std::ostringstream report;
  report << "Kp = " << hfl::format_double(kp) << " s^-2; a = direct, b = interpolated\n";
  hfl::write_comparison_report(cmp, report);
  write_both(dir / "report.txt", report.str());
  return 0;
}

// Prints `text` and, when an output directory is given, saves it there too.
void emit(const std::string& text, const std::string& out_dir, const char* file) {
  std::cout << text;
  if (out_dir.empty()) return;
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / file) << text;
}

int cmd_codec_check(int packets, std::uint64_t seed, const std::string& out_dir) {
  const auto report = hfl::codec_check(packets, seed);
  std::ostringstream os;
  hfl::write_codec_report(report, os);
  emit(os.str(), out_dir, "codec_report.txt");
  return report.passed() ? 0 : 1;
}

int cmd_model_info(const fs::path& path, const std::string& out_dir) {
  std::ostringstream out;
  const hfl::RobotModel model = hfl::load_model(path);
  const Eigen::VectorXd& q0 = model.nominal_posture();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.dof());
  double mass = 0.0;
  out << "dof: " << model.dof() << '\n'
            << "gravity: " << model.gravity().transpose() << '\n'
            << "joints:\n";
  for (const auto& j : model.joints()) {
    mass += j.mass;
    out << "  " << j.name << "  parent " << j.parent << "  axis " << j.axis.transpose()
              << "  mass " << j.mass << "  limit " << j.torque_limit << "  damping "
              << j.damping << '\n';
  }
  out << "total link mass: " << mass << " kg\n"
            << "nominal posture: " << q0.transpose() << '\n'
            << "frames (position at nominal posture):\n";
  for (const auto& f : model.frames()) {
    out << "  " << f.name << "  link " << f.link << "  "
              << hfl::forward_kinematics(model, q0, f.name).position.transpose() << '\n';
  }
  out << "gravity torque at nominal posture: "
            << hfl::bias_forces(model, q0, zero).transpose() << '\n'
            << "mass matrix diagonal at nominal posture: "
            << hfl::mass_matrix(model, q0).diagonal().transpose() << '\n';
  emit(out.str(), out_dir, "model_info.txt");
  return 0;
}

int cmd_make_policy(const fs::path& model_path, const fs::path& out, std::uint64_t seed,
                    double kq, double kv) {
  const hfl::RobotModel model = hfl::load_model(model_path);
  hfl::StandinPolicyOptions opt;
  opt.seed = seed;
  opt.kq = kq;
  opt.kv = kv;
  opt.center = hfl::forward_kinematics(model, model.nominal_posture(), opt.frame).position;
  hfl::save_policy(hfl::make_standin_policy(model, opt), out);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-frequency feedback-law experiments"};
  app.require_subcommand(1);

  Overrides run_ov, sweep_ov, cmp_ov;
  std::string run_cfg, sweep_spec, cmp_cfg, model_path, policy_out;
  double cmp_kp = 500.0;

  auto* run = app.add_subcommand("run", "Run one experiment and write its trace");
  run->add_option("config", run_cfg, "Experiment config (JSON)")->required();
  run_ov.attach(run);
  run->add_option("--kp", run_ov.kp, "Task stiffness (s^-2)");

  auto* sweep = app.add_subcommand("sweep", "Kp x mode x seed sweep with summary CSV");
  sweep->add_option("spec", sweep_spec, "Sweep spec (JSON)")->required();
  sweep_ov.attach(sweep);

  auto* compare = app.add_subcommand("compare", "Direct against interpolated at one Kp");
  compare->add_option("config", cmp_cfg, "Experiment config (JSON)")->required();
  compare->add_option("--kp", cmp_kp, "Task stiffness (s^-2)")->required();
  cmp_ov.attach(compare);

  int packets = 1000;
  std::uint64_t codec_seed = 1;
  std::string codec_out;
  auto* codec = app.add_subcommand("codec-check", "Wire codec roundtrip and CRC self-check");
  codec->add_option("--packets", packets, "Random packets to roundtrip")->capture_default_str();
  codec->add_option("--seed", codec_seed, "Random seed")->capture_default_str();
  codec->add_option("--out-dir", codec_out, "Also write codec_report.txt here");

  auto* info = app.add_subcommand("model-info", "Print a robot model summary");
  std::string info_out;
  std::uint64_t info_seed = 1;
  info->add_option("model", model_path, "Model file (JSON)")->required();
  info->add_option("--out-dir", info_out, "Also write model_info.txt here");
  info->add_option("--seed", info_seed, "Accepted for uniformity; unused");

  std::uint64_t policy_seed = 7;
  double policy_kq = 5.0, policy_kv = 0.6;
  std::string policy_model = hfl::kDefaultModelPath;
  std::string policy_outdir;
  auto* make_policy = app.add_subcommand("make-policy", "Write the seeded stand-in MLP policy");
  make_policy->add_option("out", policy_out, "Output file")->required();
  make_policy->add_option("--model", policy_model, "Model file")->capture_default_str();
  make_policy->add_option("--seed", policy_seed)->capture_default_str();
  make_policy->add_option("--kq", policy_kq)->capture_default_str();
  make_policy->add_option("--kv", policy_kv)->capture_default_str();
  make_policy->add_option("--out-dir", policy_outdir, "Directory for a relative output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_cfg, run_ov);
    if (*sweep) return cmd_sweep(sweep_spec, sweep_ov);
    if (*compare) return cmd_compare(cmp_cfg, cmp_kp, cmp_ov);
    if (*codec) return cmd_codec_check(packets, codec_seed, codec_out);
    if (*info) return cmd_model_info(model_path, info_out);
    if (*make_policy) {
      if (!policy_outdir.empty() && fs::path(policy_out).is_relative()) {
        fs::create_directories(policy_outdir);
        policy_out = (fs::path(policy_outdir) / policy_out).string();
      }
      return cmd_make_policy(policy_model, policy_out, policy_seed, policy_kq, policy_kv);
    }
  } catch (const hfl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const hfl::ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
