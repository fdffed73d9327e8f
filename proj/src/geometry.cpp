#include "softjig/geometry.hpp"

#include <cmath>
#include <numbers>

#include "softjig/errors.hpp"

namespace softjig {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

Mat3 rot_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Mat3 rot_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

Mat3 rot_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const Mat3 err = r.transpose() * r - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

RigidTransform::RigidTransform()
    : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation_)) {
    throw DomainError("RigidTransform: rotation is not orthonormal with det +1");
  }
  if (!translation_.allFinite()) {
    throw DomainError("RigidTransform: translation is not finite");
  }
}

RigidTransform RigidTransform::from_translation(const Vec3& t) {
  return {Mat3::Identity(), t};
}

RigidTransform RigidTransform::from_rotation(const Mat3& r) {
  return {r, Vec3::Zero()};
}

Mat4 RigidTransform::homogeneous() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = t.rotation().transpose();
  return {rt, -(rt * t.translation())};
}

RigidTransform relative_pose(const RigidTransform& jig, const RigidTransform& obj) {
  return compose(invert(jig), obj);
}

UnitVec3::UnitVec3(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DomainError("UnitVec3: cannot normalize a zero or non-finite vector");
  }
  v_ = v / n;
}

UnitVec3 principal_normal_from_rotation(const Mat3& r) {
  return UnitVec3(r * Vec3::UnitZ());
}

TiltAngles tilt_angles_from_normal(const UnitVec3& n) {
  if (!(n.z() > 0.0)) {
    throw DomainError("tilt_angles_from_normal: normal must have positive z");
  }
  return {rad2deg(std::atan2(n.y(), n.z())), rad2deg(std::atan2(n.x(), n.z()))};
}

UnitVec3 normal_from_tilt_angles(const TiltAngles& t) {
  if (!(std::abs(t.ax_deg) < 90.0) || !(std::abs(t.ay_deg) < 90.0)) {
    throw DomainError("normal_from_tilt_angles: |ax| and |ay| must be below 90 degrees");
  }
  return UnitVec3(Vec3(std::tan(deg2rad(t.ay_deg)), std::tan(deg2rad(t.ax_deg)), 1.0));
}

}  // namespace softjig
