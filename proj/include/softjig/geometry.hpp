#pragma once

#include <Eigen/Dense>

namespace softjig {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

double deg2rad(double deg);
double rad2deg(double rad);

// Active right-handed rotations about the coordinate axes.
Mat3 rot_x(double rad);
Mat3 rot_y(double rad);
Mat3 rot_z(double rad);

// Rigid-body transform p' = R p + t. Constructing from a non-orthonormal
// rotation throws DomainError.
class RigidTransform {
 public:
  RigidTransform();
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t);
  static RigidTransform from_rotation(const Mat3& r);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Mat4 homogeneous() const;
  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

bool is_rotation(const Mat3& r, double tol = 1e-9);

// Homogeneous product a * b: b is applied first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

// Pose of the object relative to the jig: invert(jig) * obj.
RigidTransform relative_pose(const RigidTransform& jig, const RigidTransform& obj);

// Unit-length 3-vector. Construction normalizes; a zero vector throws.
class UnitVec3 {
 public:
  explicit UnitVec3(const Vec3& v);
  UnitVec3(double x, double y, double z) : UnitVec3(Vec3(x, y, z)) {}

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

 private:
  Vec3 v_;
};

// Tilt of a normal seen in the YZ plane (ax) and XZ plane (ay), degrees.
struct TiltAngles {
  double ax_deg = 0.0;
  double ay_deg = 0.0;
};

UnitVec3 principal_normal_from_rotation(const Mat3& r);

// ax = atan2(n.y, n.z), ay = atan2(n.x, n.z). Requires n.z > 0.
TiltAngles tilt_angles_from_normal(const UnitVec3& n);

// Inverse of tilt_angles_from_normal. Requires |ax|, |ay| < 90.
UnitVec3 normal_from_tilt_angles(const TiltAngles& t);

}  // namespace softjig
