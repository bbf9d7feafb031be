#include "jetfault/model.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace jetfault {

namespace {

constexpr double kUnitTol = 1e-12;

std::string at(const std::string& base, const std::string& key) { return base + "/" + key; }
std::string at(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

const nlohmann::json& field(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ModelError(at(path, key), "missing field");
  return obj.at(key);
}

double number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) throw ModelError(path, "expected a number");
  return v.get<double>();
}

Vector3d vec3(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ModelError(path, "expected an array of 3 numbers");
  return {number(v[0], at(path, 0)), number(v[1], at(path, 1)), number(v[2], at(path, 2))};
}

Matrix3d mat3(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ModelError(path, "expected a 3x3 nested array");
  Matrix3d m;
  for (int r = 0; r < 3; ++r) m.row(r) = vec3(v[r], at(path, r)).transpose();
  return m;
}

nlohmann::json toJson(const Vector3d& v) { return {v.x(), v.y(), v.z()}; }

nlohmann::json toJson(const Matrix3d& m) {
  return {toJson(Vector3d(m.row(0))), toJson(Vector3d(m.row(1))), toJson(Vector3d(m.row(2)))};
}

}  // namespace

RobotModel::RobotModel(std::vector<Link> links, std::vector<Joint> joints,
                       std::vector<Thruster> thrusters, double gravity, std::string name)
    : name_(std::move(name)),
      links_(std::move(links)),
      joints_(std::move(joints)),
      thrusters_(std::move(thrusters)),
      gravity_(gravity) {
  validate();
  buildTopology();
  totalMass_ = 0.0;
  for (const auto& l : links_) totalMass_ += l.mass;
}

void RobotModel::validate() const {
  if (links_.empty()) throw ModelError("/links", "model has no links");
  if (!(gravity_ > 0.0)) throw ModelError("/gravity", "gravity magnitude must be positive");

  for (std::size_t i = 0; i < links_.size(); ++i) {
    const auto& l = links_[i];
    const std::string p = at("/links", i);
    if (!(l.mass > 0.0)) throw ModelError(at(p, "mass"), "mass must be positive");
    if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > kUnitTol)
      throw ModelError(at(p, "inertia"), "inertia must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix3d> eig(l.inertia);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
      throw ModelError(at(p, "inertia"), "inertia must be positive definite");
    for (std::size_t k = 0; k < l.spheres.size(); ++k) {
      if (!(l.spheres[k].radius > 0.0))
        throw ModelError(at(at(at(p, "spheres"), k), "radius"), "sphere radius must be positive");
    }
  }

  std::vector<int> parentCount(links_.size(), 0);
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    const auto& jt = joints_[j];
    const std::string p = at("/joints", j);
    const int n = static_cast<int>(links_.size());
    if (jt.parent < 0 || jt.parent >= n) throw ModelError(at(p, "parent"), "unknown parent link");
    if (jt.child < 0 || jt.child >= n) throw ModelError(at(p, "child"), "unknown child link");
    if (jt.parent == jt.child) throw ModelError(at(p, "child"), "joint connects a link to itself");
    if (std::abs(jt.axis.norm() - 1.0) > kUnitTol) throw ModelError(at(p, "axis"), "axis must have unit norm");
    if (!isRotation(jt.originRotation, 1e-9)) throw ModelError(at(p, "origin"), "origin rotation is not a rotation");
    if (!(jt.lowerLimit <= jt.upperLimit)) throw ModelError(at(p, "limits"), "lower limit exceeds upper limit");
    if (!(jt.velocityLimit > 0.0)) throw ModelError(at(p, "velocity_limit"), "velocity limit must be positive");
    ++parentCount[jt.child];
  }

  int bases = 0;
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (parentCount[i] == 0) ++bases;
    if (parentCount[i] > 1) throw ModelError(at("/links", i), "link has more than one parent joint");
  }
  if (bases != 1) throw ModelError("/links", "model must have exactly one base link");
  if (parentCount[0] != 0) throw ModelError("/links/0", "the first link must be the base");

  for (std::size_t k = 0; k < thrusters_.size(); ++k) {
    const auto& t = thrusters_[k];
    const std::string p = at("/thrusters", k);
    if (t.link < 0 || t.link >= static_cast<int>(links_.size())) throw ModelError(at(p, "link"), "unknown host link");
    if (std::abs(t.axis.norm() - 1.0) > kUnitTol) throw ModelError(at(p, "axis"), "axis must have unit norm");
    if (!(t.maxThrust > 0.0)) throw ModelError(at(p, "max_thrust"), "max thrust must be positive");
    if (!(t.maxRpm > 0.0)) throw ModelError(at(p, "max_rpm"), "max RPM must be positive");
    if (!(t.maxThrustRate > 0.0)) throw ModelError(at(p, "max_thrust_rate"), "max thrust rate must be positive");
  }
}

void RobotModel::buildTopology() {
  const int n = numLinks();
  parentJoint_.assign(n, -1);
  for (int j = 0; j < numJoints(); ++j) parentJoint_[joints_[j].child] = j;

  // Breadth-first from the base; anything unreachable sits on a cycle.
  order_.clear();
  order_.push_back(0);
  for (std::size_t head = 0; head < order_.size(); ++head) {
    const int link = order_[head];
    for (int j = 0; j < numJoints(); ++j)
      if (joints_[j].parent == link) order_.push_back(joints_[j].child);
  }
  if (static_cast<int>(order_.size()) != n) throw ModelError("/joints", "joint graph is not a tree rooted at the base");

  support_.assign(n, {});
  for (int link : order_) {
    const int j = parentJoint_[link];
    if (j < 0) continue;
    support_[link] = support_[joints_[j].parent];
    support_[link].push_back(j);
  }
}

RobotModel modelFromJson(const nlohmann::json& j) {
  const std::string root;
  std::vector<Link> links;
  std::map<std::string, int> index;
  const auto& jl = field(j, "links", root);
  if (!jl.is_array()) throw ModelError("/links", "expected an array");
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const std::string p = at("/links", i);
    Link l;
    l.name = field(jl[i], "name", p).get<std::string>();
    l.mass = number(field(jl[i], "mass", p), at(p, "mass"));
    if (jl[i].contains("com")) l.com = vec3(jl[i]["com"], at(p, "com"));
    l.inertia = mat3(field(jl[i], "inertia", p), at(p, "inertia"));
    if (jl[i].contains("spheres")) {
      const auto& js = jl[i]["spheres"];
      for (std::size_t k = 0; k < js.size(); ++k) {
        const std::string sp = at(at(p, "spheres"), k);
        CollisionSphere s;
        s.center = vec3(field(js[k], "center", sp), at(sp, "center"));
        s.radius = number(field(js[k], "radius", sp), at(sp, "radius"));
        s.lowerBody = js[k].value("lower_body", false);
        l.spheres.push_back(s);
      }
    }
    if (index.count(l.name)) throw ModelError(at(p, "name"), "duplicate link name");
    index[l.name] = static_cast<int>(i);
    links.push_back(std::move(l));
  }

  auto linkIndex = [&](const nlohmann::json& v, const std::string& path) {
    if (!v.is_string() || !index.count(v.get<std::string>())) throw ModelError(path, "unknown link name");
    return index.at(v.get<std::string>());
  };

  std::vector<Joint> joints;
  if (j.contains("joints")) {
    const auto& jj = j["joints"];
    for (std::size_t i = 0; i < jj.size(); ++i) {
      const std::string p = at("/joints", i);
      Joint jt;
      jt.name = field(jj[i], "name", p).get<std::string>();
      jt.parent = linkIndex(field(jj[i], "parent", p), at(p, "parent"));
      jt.child = linkIndex(field(jj[i], "child", p), at(p, "child"));
      if (jj[i].contains("origin")) {
        const auto& o = jj[i]["origin"];
        if (o.contains("xyz")) jt.originPosition = vec3(o["xyz"], at(at(p, "origin"), "xyz"));
        if (o.contains("rpy")) jt.originRotation = rpyToRotation(vec3(o["rpy"], at(at(p, "origin"), "rpy")));
      }
      jt.axis = vec3(field(jj[i], "axis", p), at(p, "axis"));
      const auto& lim = field(jj[i], "limits", p);
      if (!lim.is_array() || lim.size() != 2) throw ModelError(at(p, "limits"), "expected [lower, upper]");
      jt.lowerLimit = number(lim[0], at(at(p, "limits"), 0));
      jt.upperLimit = number(lim[1], at(at(p, "limits"), 1));
      if (jj[i].contains("velocity_limit")) jt.velocityLimit = number(jj[i]["velocity_limit"], at(p, "velocity_limit"));
      joints.push_back(std::move(jt));
    }
  }

  std::vector<Thruster> thrusters;
  if (j.contains("thrusters")) {
    const auto& jt = j["thrusters"];
    for (std::size_t i = 0; i < jt.size(); ++i) {
      const std::string p = at("/thrusters", i);
      Thruster t;
      t.name = field(jt[i], "name", p).get<std::string>();
      t.link = linkIndex(field(jt[i], "link", p), at(p, "link"));
      t.position = vec3(field(jt[i], "position", p), at(p, "position"));
      t.axis = vec3(field(jt[i], "axis", p), at(p, "axis"));
      t.maxThrust = number(field(jt[i], "max_thrust", p), at(p, "max_thrust"));
      t.maxRpm = number(field(jt[i], "max_rpm", p), at(p, "max_rpm"));
      if (jt[i].contains("max_thrust_rate")) t.maxThrustRate = number(jt[i]["max_thrust_rate"], at(p, "max_thrust_rate"));
      thrusters.push_back(std::move(t));
    }
  }

  const double g = number(field(j, "gravity", root), "/gravity");
  return RobotModel(std::move(links), std::move(joints), std::move(thrusters), g, j.value("name", std::string("robot")));
}

RobotModel loadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("", "cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError("", "parse error in '" + path + "': " + e.what());
  }
  return modelFromJson(j);
}

nlohmann::json modelToJson(const RobotModel& model) {
  nlohmann::json j;
  j["name"] = model.name();
  j["gravity"] = model.gravity();
  for (const auto& l : model.links()) {
    nlohmann::json jl{{"name", l.name}, {"mass", l.mass}, {"com", toJson(l.com)}, {"inertia", toJson(l.inertia)}};
    for (const auto& s : l.spheres)
      jl["spheres"].push_back({{"center", toJson(s.center)}, {"radius", s.radius}, {"lower_body", s.lowerBody}});
    j["links"].push_back(jl);
  }
  for (const auto& jt : model.joints()) {
    j["joints"].push_back({{"name", jt.name},
                           {"parent", model.links()[jt.parent].name},
                           {"child", model.links()[jt.child].name},
                           {"origin", {{"xyz", toJson(jt.originPosition)}, {"rpy", toJson(rotationToRpy(jt.originRotation))}}},
                           {"axis", toJson(jt.axis)},
                           {"limits", {jt.lowerLimit, jt.upperLimit}},
                           {"velocity_limit", jt.velocityLimit}});
  }
  for (const auto& t : model.thrusters()) {
    j["thrusters"].push_back({{"name", t.name},
                              {"link", model.links()[t.link].name},
                              {"position", toJson(t.position)},
                              {"axis", toJson(t.axis)},
                              {"max_thrust", t.maxThrust},
                              {"max_rpm", t.maxRpm},
                              {"max_thrust_rate", t.maxThrustRate}});
  }
  return j;
}

}  // namespace jetfault
