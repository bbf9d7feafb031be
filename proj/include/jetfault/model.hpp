#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "jetfault/math.hpp"

namespace jetfault {

/// Raised for malformed or inconsistent model files. `path` is a JSON-pointer
/// style location of the offending field (e.g. "/links/2/mass").
class ModelError : public std::runtime_error {
 public:
  ModelError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct CollisionSphere {
  Vector3d center = Vector3d::Zero();  // link frame
  double radius = 0.0;
  bool lowerBody = false;  // exposed to jet exhausts
};

struct Link {
  std::string name;
  double mass = 0.0;
  Vector3d com = Vector3d::Zero();          // link frame
  Matrix3d inertia = Matrix3d::Identity();  // about the CoM, link axes
  std::vector<CollisionSphere> spheres;
};

/// Revolute joint. The child frame sits at `originPosition` in the parent
/// frame, rotated by `originRotation`, then by the joint angle about `axis`
/// (expressed in the child frame).
struct Joint {
  std::string name;
  int parent = -1;
  int child = -1;
  Vector3d originPosition = Vector3d::Zero();
  Matrix3d originRotation = Matrix3d::Identity();
  Vector3d axis = Vector3d::UnitZ();
  double lowerLimit = 0.0;
  double upperLimit = 0.0;
  double velocityLimit = 1.0;
};

struct Thruster {
  std::string name;
  int link = 0;
  Vector3d position = Vector3d::Zero();  // application point, link frame
  Vector3d axis = Vector3d::UnitZ();     // thrust direction, link frame
  double maxThrust = 0.0;
  double maxRpm = 0.0;
  double maxThrustRate = 100.0;  // N/s
};

class RobotModel {
 public:
  RobotModel() = default;
  RobotModel(std::vector<Link> links, std::vector<Joint> joints, std::vector<Thruster> thrusters,
             double gravity, std::string name = "robot");

  const std::string& name() const { return name_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<Thruster>& thrusters() const { return thrusters_; }
  double gravity() const { return gravity_; }
  double totalMass() const { return totalMass_; }

  int numLinks() const { return static_cast<int>(links_.size()); }
  int numJoints() const { return static_cast<int>(joints_.size()); }
  int numThrusters() const { return static_cast<int>(thrusters_.size()); }
  int dofs() const { return 6 + numJoints(); }

  /// Links sorted so that every parent precedes its children (base first).
  const std::vector<int>& linkOrder() const { return order_; }
  /// Index of the joint whose child is `link`, -1 for the base.
  int parentJoint(int link) const { return parentJoint_[link]; }
  /// Joints between the base and `link`, base-to-tip order.
  const std::vector<int>& supportJoints(int link) const { return support_[link]; }

  /// Throws ModelError if an invariant does not hold.
  void validate() const;

 private:
  void buildTopology();

  std::string name_ = "robot";
  std::vector<Link> links_;
  std::vector<Joint> joints_;
  std::vector<Thruster> thrusters_;
  double gravity_ = 9.81;
  double totalMass_ = 0.0;
  std::vector<int> order_;
  std::vector<int> parentJoint_;
  std::vector<std::vector<int>> support_;
};

RobotModel modelFromJson(const nlohmann::json& j);
RobotModel loadModel(const std::string& path);
nlohmann::json modelToJson(const RobotModel& model);

}  // namespace jetfault
