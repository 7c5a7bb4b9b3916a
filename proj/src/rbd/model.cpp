#include "hfl/rbd/model.hpp"

#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "hfl/errors.hpp"

namespace hfl {

namespace {

using nlohmann::json;

constexpr double kAxisNormTol = 1e-12;

void validate_joint(const JointSpec& js, int index) {
  const std::string tag = "joint " + std::to_string(index) + " (" + js.name + ")";
  if (js.parent >= index || js.parent < -1) {
    throw ModelError(tag + ": parent index must be -1 or lower than its own index");
  }
  if (std::abs(js.axis.norm() - 1.0) > kAxisNormTol) {
    throw ModelError(tag + ": axis must have unit norm");
  }
  if (!(js.mass > 0.0)) throw ModelError(tag + ": link mass must be positive");
  if (!(js.torque_limit > 0.0)) throw ModelError(tag + ": torque limit must be positive");
  if (!(js.damping >= 0.0)) throw ModelError(tag + ": damping must be non-negative");
  if (!js.rotation.allFinite() || !js.translation.allFinite() || !js.com.allFinite() ||
      !js.inertia.allFinite()) {
    throw ModelError(tag + ": non-finite placement or inertia");
  }
  if ((js.rotation.transpose() * js.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >
      1e-9) {
    throw ModelError(tag + ": placement rotation is not orthonormal");
  }
  if ((js.inertia - js.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ModelError(tag + ": inertia tensor is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(js.inertia, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12) {
    throw ModelError(tag + ": inertia tensor is not positive semi-definite");
  }
}

Eigen::Vector3d vec3(const json& j, const char* key, const Eigen::Vector3d& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw ModelError(std::string("'") + key + "' must be a 3-element array");
  }
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

Eigen::Matrix3d rpy_to_matrix(const Eigen::Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

// Accepts an index or the name of an earlier joint; "base" and -1 mean the fixed base.
int resolve_link(const json& ref, const std::vector<JointSpec>& joints, bool allow_base) {
  if (ref.is_number_integer()) return ref.get<int>();
  if (ref.is_string()) {
    const auto name = ref.get<std::string>();
    if (allow_base && name == "base") return -1;
    for (std::size_t i = 0; i < joints.size(); ++i) {
      if (joints[i].name == name) return static_cast<int>(i);
    }
    throw ModelError("unknown link reference '" + name + "'");
  }
  throw ModelError("link reference must be an index or a name");
}

}  // namespace

RobotModel::RobotModel(std::vector<JointSpec> joints, std::vector<FrameSpec> frames,
                       Eigen::Vector3d gravity, Eigen::VectorXd nominal_posture)
    : joints_(std::move(joints)),
      frames_(std::move(frames)),
      gravity_(std::move(gravity)),
      nominal_posture_(std::move(nominal_posture)) {
  if (joints_.empty()) throw ModelError("model has no joints");
  for (int i = 0; i < dof(); ++i) validate_joint(joints_[static_cast<std::size_t>(i)], i);
  for (const auto& f : frames_) {
    if (f.link < 0 || f.link >= dof()) {
      throw ModelError("frame '" + f.name + "' references an invalid link");
    }
    if (!f.offset.allFinite()) throw ModelError("frame '" + f.name + "' has a non-finite offset");
  }
  if (!gravity_.allFinite()) throw ModelError("gravity must be finite");
  if (nominal_posture_.size() == 0) nominal_posture_ = Eigen::VectorXd::Zero(dof());
  if (nominal_posture_.size() != dof() || !nominal_posture_.allFinite()) {
    throw ModelError("nominal posture must have one finite entry per joint");
  }
}

const FrameSpec& RobotModel::frame(std::string_view name) const {
  for (const auto& f : frames_) {
    if (f.name == name) return f;
  }
  throw ModelError("unknown frame '" + std::string(name) + "'");
}

bool RobotModel::has_frame(std::string_view name) const {
  for (const auto& f : frames_) {
    if (f.name == name) return true;
  }
  return false;
}

bool RobotModel::is_ancestor(int j, int link) const {
  for (int k = link; k >= 0; k = joint(k).parent) {
    if (k == j) return true;
  }
  return false;
}

Eigen::VectorXd RobotModel::torque_limits() const {
  Eigen::VectorXd out(dof());
  for (int i = 0; i < dof(); ++i) out(i) = joint(i).torque_limit;
  return out;
}

Eigen::VectorXd RobotModel::damping() const {
  Eigen::VectorXd out(dof());
  for (int i = 0; i < dof(); ++i) out(i) = joint(i).damping;
  return out;
}

RobotModel RobotModel::with_gravity(const Eigen::Vector3d& g) const {
  return RobotModel(joints_, frames_, g, nominal_posture_);
}

RobotModel RobotModel::with_damping(double d) const {
  auto joints = joints_;
  for (auto& js : joints) js.damping = d;
  return RobotModel(std::move(joints), frames_, gravity_, nominal_posture_);
}

JointState JointState::from_stacked(const Eigen::VectorXd& x) {
  if (x.size() % 2 != 0) throw DimensionError("stacked state must have even length");
  const auto n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

Eigen::VectorXd JointState::stacked() const {
  Eigen::VectorXd x(q.size() + v.size());
  x << q, v;
  return x;
}

void check_state(const RobotModel& model, const JointState& x) {
  if (x.q.size() != model.dof() || x.v.size() != model.dof()) {
    throw DimensionError("joint state length does not match model dof " +
                         std::to_string(model.dof()));
  }
  if (!x.q.allFinite() || !x.v.allFinite()) throw NonFiniteError("joint state is not finite");
}

RobotModel parse_model(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("model file: ") + e.what());
  }

  try {
    const json defaults = doc.value("defaults", json::object());
    const double default_damping = defaults.value("damping", 0.01);
    const double default_limit = defaults.value("torque_limit", 2.7);

    std::vector<JointSpec> joints;
    for (const auto& jj : doc.at("joints")) {
      JointSpec js;
      js.name = jj.value("name", "joint" + std::to_string(joints.size()));
      js.parent = resolve_link(jj.value("parent", json(-1)), joints, true);
      const json origin = jj.value("origin", json::object());
      js.translation = vec3(origin, "xyz", Eigen::Vector3d::Zero());
      js.rotation = rpy_to_matrix(vec3(origin, "rpy", Eigen::Vector3d::Zero()));
      js.axis = vec3(jj, "axis", Eigen::Vector3d::UnitZ());
      const json& link = jj.at("link");
      js.mass = link.at("mass").get<double>();
      js.com = vec3(link, "com", Eigen::Vector3d::Zero());
      // [ixx, iyy, izz, ixy, ixz, iyz]
      const auto in = link.value("inertia", std::vector<double>(6, 0.0));
      if (in.size() != 6) throw ModelError("inertia must list [ixx, iyy, izz, ixy, ixz, iyz]");
      js.inertia << in[0], in[3], in[4], in[3], in[1], in[5], in[4], in[5], in[2];
      js.damping = jj.value("damping", default_damping);
      js.torque_limit = jj.value("torque_limit", default_limit);
      joints.push_back(std::move(js));
    }

    std::vector<FrameSpec> frames;
    for (const auto& fj : doc.value("frames", json::array())) {
      FrameSpec fs;
      fs.name = fj.at("name").get<std::string>();
      fs.link = resolve_link(fj.at("link"), joints, false);
      fs.offset = vec3(fj, "offset", Eigen::Vector3d::Zero());
      frames.push_back(std::move(fs));
    }

    const Eigen::Vector3d gravity = vec3(doc, "gravity", Eigen::Vector3d(0.0, 0.0, -9.81));
    Eigen::VectorXd posture;
    if (doc.contains("nominal_posture")) {
      const auto values = doc.at("nominal_posture").get<std::vector<double>>();
      posture = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                  static_cast<Eigen::Index>(values.size()));
    }
    return RobotModel(std::move(joints), std::move(frames), gravity, posture);
  } catch (const json::exception& e) {
    throw ModelError(std::string("model file: ") + e.what());
  }
}

RobotModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

RobotModel make_point_pendulum(double mass, double length, double damping,
                               const Eigen::Vector3d& axis) {
  JointSpec js;
  js.name = "pivot";
  js.axis = axis;
  js.mass = mass;
  js.com = Eigen::Vector3d(length, 0.0, 0.0);
  js.damping = damping;
  FrameSpec foot{"right_foot", 0, Eigen::Vector3d(length, 0.0, 0.0)};
  return RobotModel({js}, {foot});
}

}  // namespace hfl
