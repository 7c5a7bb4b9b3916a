#include "hfl/sim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hfl/control/id_controller.hpp"
#include "hfl/control/mlp_policy.hpp"
#include "hfl/errors.hpp"
#include "hfl/rbd/dynamics.hpp"
#include "hfl/rbd/kinematics.hpp"

namespace hfl {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const char* where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(std::string("unknown key '") + key + "' in " + where);
    }
  }
}

Eigen::Vector3d to_vec3(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ConfigError(std::string(what) + " must have 3 entries");
  return {v[0], v[1], v[2]};
}

json from_vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : std::filesystem::absolute(base / path).lexically_normal().string();
}

bool divides(int divisor, int value) { return divisor > 0 && value % divisor == 0; }

}  // namespace

std::string to_string(ExecutionMode mode) {
  return mode == ExecutionMode::kDirect ? "direct" : "interpolated";
}

ExecutionMode parse_mode(std::string_view text) {
  if (text == "direct" || text == "DIRECT") return ExecutionMode::kDirect;
  if (text == "interpolated" || text == "INTERPOLATED") return ExecutionMode::kInterpolated;
  throw ConfigError("unknown mode '" + std::string(text) + "' (direct | interpolated)");
}

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kInverseDynamics: return "id";
    case ControllerKind::kMlp: return "mlp";
    case ControllerKind::kAffine: return "affine";
    case ControllerKind::kJointPd: return "pd";
  }
  return "id";
}

ControllerKind parse_controller_kind(std::string_view text) {
  if (text == "id") return ControllerKind::kInverseDynamics;
  if (text == "mlp") return ControllerKind::kMlp;
  if (text == "affine") return ControllerKind::kAffine;
  if (text == "pd") return ControllerKind::kJointPd;
  throw ConfigError("unknown controller type '" + std::string(text) + "' (id | mlp | affine | pd)");
}

int ExperimentConfig::effective_controller_hz() const {
  if (rates.controller_hz > 0) return rates.controller_hz;
  return controller.kind == ControllerKind::kMlp ? 200 : 500;
}

int ExperimentConfig::effective_plant_hz() const {
  return rates.plant_hz > 0 ? rates.plant_hz : rates.fast_hz;
}

void ExperimentConfig::validate() const {
  const int plant = effective_plant_hz();
  const int ctrl = effective_controller_hz();
  if (rates.fast_hz <= 0 || ctrl <= 0 || rates.law_push_hz <= 0 || plant <= 0) {
    throw ConfigError("rates must be positive");
  }
  if (!divides(ctrl, rates.fast_hz) || !divides(rates.law_push_hz, rates.fast_hz)) {
    throw ConfigError("fast_hz must be divisible by controller_hz and law_push_hz");
  }
  if (!divides(rates.fast_hz, plant)) throw ConfigError("plant_hz must be a multiple of fast_hz");
  if (!divides(record_hz, plant)) throw ConfigError("record_hz must divide plant_hz");
  if (decimation < 1) throw ConfigError("decimation must be >= 1");
  if (hop_delay < 0 || law_latency < 0) throw ConfigError("hop_delay and law_latency must be >= 0");
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (!(realism.vel_noise_std >= 0.0)) throw ConfigError("vel_noise_std must be >= 0");
  if (realism.actuation_delay_ticks < 0) throw ConfigError("actuation delay must be >= 0");
  if (realism.torque_limit && !(*realism.torque_limit >= 0.0)) {
    throw ConfigError("torque_limit must be >= 0");
  }
  if (!(drop_probability >= 0.0 && drop_probability < 1.0)) {
    throw ConfigError("drop_probability must be in [0, 1)");
  }
  if (controller.kind == ControllerKind::kInverseDynamics && !(controller.kp > 0.0)) {
    throw ConfigError("kp must be positive");
  }
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    reject_unknown(doc,
                   {"model", "frame", "controller", "mode", "rates", "network", "duration",
                    "trajectory", "realism", "initial_q", "record_hz", "seed", "fidelity_probe",
                    "passive"},
                   "config");
    if (doc.contains("model")) cfg.model_path = resolve_path(doc["model"].get<std::string>(), base_dir);
    cfg.frame = doc.value("frame", cfg.frame);
    if (doc.contains("mode")) cfg.mode = parse_mode(doc["mode"].get<std::string>());
    cfg.duration = doc.value("duration", cfg.duration);
    cfg.record_hz = doc.value("record_hz", cfg.record_hz);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.fidelity_probe = doc.value("fidelity_probe", cfg.fidelity_probe);
    cfg.passive = doc.value("passive", cfg.passive);
    if (doc.contains("initial_q")) cfg.initial_q = doc["initial_q"].get<std::vector<double>>();

    if (doc.contains("controller")) {
      const json& c = doc["controller"];
      reject_unknown(c,
                     {"type", "kp", "kd", "pinv_damping", "posture_kp", "policy", "policy_seed",
                      "policy_kq", "policy_kv", "joint_kp", "joint_kd", "gain", "offset"},
                     "controller");
      auto& cc = cfg.controller;
      if (c.contains("type")) cc.kind = parse_controller_kind(c["type"].get<std::string>());
      cc.kp = c.value("kp", cc.kp);
      if (c.contains("kd") && !c["kd"].is_null()) cc.kd = c["kd"].get<double>();
      cc.pinv_damping = c.value("pinv_damping", cc.pinv_damping);
      cc.posture_kp = c.value("posture_kp", cc.posture_kp);
      if (c.contains("policy")) cc.policy_path = resolve_path(c["policy"].get<std::string>(), base_dir);
      cc.policy_seed = c.value("policy_seed", cc.policy_seed);
      cc.policy_kq = c.value("policy_kq", cc.policy_kq);
      cc.policy_kv = c.value("policy_kv", cc.policy_kv);
      cc.joint_kp = c.value("joint_kp", cc.joint_kp);
      cc.joint_kd = c.value("joint_kd", cc.joint_kd);
      if (c.contains("gain")) cc.affine_gain = c["gain"].get<std::vector<double>>();
      if (c.contains("offset")) cc.affine_offset = c["offset"].get<std::vector<double>>();
    }
    if (doc.contains("rates")) {
      const json& r = doc["rates"];
      reject_unknown(r, {"fast_hz", "controller_hz", "law_push_hz", "plant_hz"}, "rates");
      cfg.rates.fast_hz = r.value("fast_hz", cfg.rates.fast_hz);
      cfg.rates.controller_hz = r.value("controller_hz", cfg.rates.controller_hz);
      cfg.rates.law_push_hz = r.value("law_push_hz", cfg.rates.law_push_hz);
      cfg.rates.plant_hz = r.value("plant_hz", cfg.rates.plant_hz);
    }
    if (doc.contains("network")) {
      const json& n = doc["network"];
      reject_unknown(n, {"decimation", "hop_delay", "law_latency", "wire_float32", "drop_probability"},
                     "network");
      cfg.decimation = n.value("decimation", cfg.decimation);
      cfg.hop_delay = n.value("hop_delay", cfg.hop_delay);
      cfg.law_latency = n.value("law_latency", cfg.law_latency);
      cfg.wire_float32 = n.value("wire_float32", cfg.wire_float32);
      cfg.drop_probability = n.value("drop_probability", cfg.drop_probability);
    }
    if (doc.contains("trajectory")) {
      const json& t = doc["trajectory"];
      reject_unknown(t, {"center", "radius", "omega", "u", "w", "phase"}, "trajectory");
      auto& tc = cfg.trajectory;
      if (t.contains("center") && !t["center"].is_null()) tc.center = to_vec3(t["center"], "center");
      tc.radius = t.value("radius", tc.radius);
      tc.angular_rate = t.value("omega", tc.angular_rate);
      if (t.contains("u")) tc.u = to_vec3(t["u"], "u");
      if (t.contains("w")) tc.w = to_vec3(t["w"], "w");
      tc.phase = t.value("phase", tc.phase);
    }
    if (doc.contains("realism")) {
      const json& r = doc["realism"];
      reject_unknown(r, {"vel_noise_std", "vel_lowpass_hz", "actuation_delay_ticks", "torque_limit"},
                     "realism");
      auto& rc = cfg.realism;
      rc.vel_noise_std = r.value("vel_noise_std", rc.vel_noise_std);
      rc.vel_lowpass_hz = r.value("vel_lowpass_hz", rc.vel_lowpass_hz);
      rc.actuation_delay_ticks = r.value("actuation_delay_ticks", rc.actuation_delay_ticks);
      if (r.contains("torque_limit") && !r["torque_limit"].is_null()) {
        rc.torque_limit = r["torque_limit"].get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& cc = cfg.controller;
  json controller = {{"type", to_string(cc.kind)},
                     {"kp", cc.kp},
                     {"kd", cc.kd ? json(*cc.kd) : json(nullptr)},
                     {"pinv_damping", cc.pinv_damping},
                     {"posture_kp", cc.posture_kp},
                     {"policy", cc.policy_path},
                     {"policy_seed", cc.policy_seed},
                     {"policy_kq", cc.policy_kq},
                     {"policy_kv", cc.policy_kv},
                     {"joint_kp", cc.joint_kp},
                     {"joint_kd", cc.joint_kd}};
  if (!cc.affine_gain.empty()) controller["gain"] = cc.affine_gain;
  if (!cc.affine_offset.empty()) controller["offset"] = cc.affine_offset;
  const auto& tc = cfg.trajectory;
  json doc = {
      {"model", cfg.model_path},
      {"frame", cfg.frame},
      {"controller", controller},
      {"mode", to_string(cfg.mode)},
      {"rates",
       {{"fast_hz", cfg.rates.fast_hz},
        {"controller_hz", cfg.rates.controller_hz},
        {"law_push_hz", cfg.rates.law_push_hz},
        {"plant_hz", cfg.rates.plant_hz}}},
      {"network",
       {{"decimation", cfg.decimation},
        {"hop_delay", cfg.hop_delay},
        {"law_latency", cfg.law_latency},
        {"wire_float32", cfg.wire_float32},
        {"drop_probability", cfg.drop_probability}}},
      {"duration", cfg.duration},
      {"trajectory",
       {{"center", tc.center ? from_vec3(*tc.center) : json(nullptr)},
        {"radius", tc.radius},
        {"omega", tc.angular_rate},
        {"u", from_vec3(tc.u)},
        {"w", from_vec3(tc.w)},
        {"phase", tc.phase}}},
      {"realism",
       {{"vel_noise_std", cfg.realism.vel_noise_std},
        {"vel_lowpass_hz", cfg.realism.vel_lowpass_hz},
        {"actuation_delay_ticks", cfg.realism.actuation_delay_ticks},
        {"torque_limit",
         cfg.realism.torque_limit ? json(*cfg.realism.torque_limit) : json(nullptr)}}},
      {"record_hz", cfg.record_hz},
      {"seed", cfg.seed},
      {"fidelity_probe", cfg.fidelity_probe},
      {"passive", cfg.passive}};
  if (cfg.initial_q) doc["initial_q"] = *cfg.initial_q;
  return doc;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value: " + std::string(assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  std::string pointer = "/" + key;
  for (auto& ch : pointer) {
    if (ch == '.') ch = '/';
  }
  doc[json::json_pointer(pointer)] = value;
}

std::shared_ptr<const RobotModel> resolve_model(const ExperimentConfig& cfg) {
  if (cfg.model) return cfg.model;
  return std::make_shared<const RobotModel>(load_model(cfg.model_path));
}

CircleTrajectory resolve_trajectory(const ExperimentConfig& cfg, const RobotModel& model) {
  CircleTrajectory traj;
  const auto& tc = cfg.trajectory;
  traj.center = tc.center ? *tc.center
                          : forward_kinematics(model, model.nominal_posture(), cfg.frame).position;
  traj.radius = tc.radius;
  traj.angular_rate = tc.angular_rate;
  traj.u = tc.u;
  traj.w = tc.w;
  traj.phase = tc.phase;
  try {
    traj.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("trajectory: ") + e.what());
  }
  return traj;
}

std::unique_ptr<TorqueController> make_controller(const ExperimentConfig& cfg,
                                                  std::shared_ptr<const RobotModel> model) {
  const auto& cc = cfg.controller;
  const int n = model->dof();
  switch (cc.kind) {
    case ControllerKind::kInverseDynamics: {
      TaskGains gains = TaskGains::critically_damped(cc.kp, cc.pinv_damping, cc.posture_kp);
      if (cc.kd) gains.kd = Eigen::Vector3d::Constant(*cc.kd);
      IdTrackingController::Options opt;
      opt.frame = cfg.frame;
      return std::make_unique<IdTrackingController>(model, gains, resolve_trajectory(cfg, *model),
                                                    opt);
    }
    case ControllerKind::kMlp: {
      const CircleTrajectory traj = resolve_trajectory(cfg, *model);
      std::shared_ptr<const MlpPolicy> policy;
      if (!cc.policy_path.empty()) {
        policy = std::make_shared<const MlpPolicy>(load_policy(cc.policy_path));
      } else {
        StandinPolicyOptions opt;
        opt.seed = cc.policy_seed;
        opt.kq = cc.policy_kq;
        opt.kv = cc.policy_kv;
        opt.center = traj.center;
        opt.frame = cfg.frame;
        policy = std::make_shared<const MlpPolicy>(make_standin_policy(*model, opt));
      }
      if (policy->dof() != n) throw ConfigError("policy output size does not match the model");
      return std::make_unique<MlpController>(std::move(policy), traj);
    }
    case ControllerKind::kAffine: {
      if (cc.affine_gain.size() != static_cast<std::size_t>(2 * n * n) ||
          cc.affine_offset.size() != static_cast<std::size_t>(n)) {
        throw ConfigError("affine controller needs an n x 2n gain (row-major) and an n offset");
      }
      const Eigen::MatrixXd gain =
          Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
              cc.affine_gain.data(), n, 2 * n);
      const Eigen::VectorXd offset = Eigen::Map<const Eigen::VectorXd>(cc.affine_offset.data(), n);
      return std::make_unique<AffineController>(gain, offset);
    }
    case ControllerKind::kJointPd: {
      const Eigen::VectorXd& q0 = model->nominal_posture();
      return std::make_unique<AffineController>(AffineController::joint_pd(
          q0, cc.joint_kp, cc.joint_kd, bias_forces(*model, q0, Eigen::VectorXd::Zero(n))));
    }
  }
  throw ConfigError("unknown controller");
}

}  // namespace hfl
