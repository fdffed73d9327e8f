#include "softjig/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "softjig/errors.hpp"

namespace softjig {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace

void JigGeometry::validate() const {
  require(plate_side > 0.0, "plate_side must be positive");
  require(membrane_rest_height > 0.0, "membrane_rest_height must be positive");
  require(dome_radius > 0.0, "dome_radius must be positive");
  require(marker_radius > 0.0, "marker_radius must be positive");
  require(marker_pitch > 2.0 * marker_radius, "marker_pitch must exceed 2 * marker_radius");
  for (const Vec2& f : fiducials) {
    require(std::abs(f.x()) <= plate_side / 2 && std::abs(f.y()) <= plate_side / 2,
            "fiducials must lie on the base plate");
  }
  // Non-collinear: at least one triple spans a non-trivial area.
  double best = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        const Vec2 a = fiducials[j] - fiducials[i];
        const Vec2 b = fiducials[k] - fiducials[i];
        best = std::max(best, std::abs(a.x() * b.y() - a.y() * b.x()));
      }
    }
  }
  require(best > 1e-6, "fiducials must not be collinear");
}

void StereoRig::validate() const {
  require(focal_px > 0.0, "focal_px must be positive");
  require(baseline > 0.0, "baseline must be positive");
  require(camera_height > 0.0, "camera_height must be positive");
  require(width > 0 && height > 0, "resolution must be positive");
}

RigidTransform StereoRig::pose_mid() const {
  return RigidTransform::from_translation(Vec3(0.0, 0.0, -camera_height));
}

RigidTransform StereoRig::pose_left() const {
  return compose(pose_mid(), RigidTransform::from_translation(Vec3(-baseline / 2, 0.0, 0.0)));
}

RigidTransform StereoRig::pose_right() const {
  return compose(pose_mid(), RigidTransform::from_translation(Vec3(baseline / 2, 0.0, 0.0)));
}

RigidTransform StereoRig::pose(CameraSide side) const {
  return side == CameraSide::left ? pose_left() : pose_right();
}

void ContactSpec::validate(const JigGeometry& geom) const {
  require(object_diameter > 0.0, "object_diameter must be positive");
  require(tilt_alpha_deg >= 0.0 && tilt_alpha_deg < 45.0, "tilt_alpha must be in [0, 45)");
  require(push_depth > 0.0 && push_depth < geom.membrane_rest_height,
          "push_depth must be in (0, membrane_rest_height)");
  require(std::isfinite(tilt_direction_deg), "tilt_direction must be finite");
}

std::vector<Vec2> generate_marker_layout(const JigGeometry& geom) {
  const double pitch = geom.marker_pitch;
  const double row_step = pitch * std::sqrt(3.0) / 2.0;
  const double radius = geom.dome_radius;
  const int rows = static_cast<int>(std::floor(radius / row_step));
  const int cols = static_cast<int>(std::ceil(radius / pitch)) + 1;

  std::vector<Vec2> out;
  for (int j = -rows; j <= rows; ++j) {
    const double shift = (j % 2 != 0) ? pitch / 2.0 : 0.0;
    for (int i = -cols; i <= cols; ++i) {
      const Vec2 p(i * pitch + shift, j * row_step);
      if (p.norm() <= radius) out.push_back(p);
    }
  }
  return out;
}

double rest_height(const JigGeometry& geom, const Vec2& xy) {
  const double q = xy.squaredNorm() / (geom.dome_radius * geom.dome_radius);
  return geom.membrane_rest_height * std::exp(-q * q);
}

UnitVec3 contact_normal(const ContactSpec& contact) {
  const double a = deg2rad(contact.tilt_alpha_deg);
  const double t = deg2rad(contact.tilt_direction_deg);
  return UnitVec3(std::sin(a) * std::cos(t), std::sin(a) * std::sin(t), std::cos(a));
}

namespace {

// Coordinates along (u) and across (w) the downhill direction.
Vec2 downhill_coords(const ContactSpec& contact, const Vec2& xy) {
  const double t = deg2rad(contact.tilt_direction_deg);
  const double c = std::cos(t), s = std::sin(t);
  return {c * xy.x() + s * xy.y(), -s * xy.x() + c * xy.y()};
}

}  // namespace

bool in_contact_footprint(const ContactSpec& contact, const Vec2& xy) {
  const double r = contact.object_diameter / 2.0;
  const double ru = r * std::cos(deg2rad(contact.tilt_alpha_deg));
  const Vec2 uw = downhill_coords(contact, xy);
  const double q = (uw.x() / ru) * (uw.x() / ru) + (uw.y() / r) * (uw.y() / r);
  return q <= 1.0;
}

double membrane_height_field(const JigGeometry& geom, const ContactSpec& contact,
                             const Vec2& xy) {
  const double half = geom.plate_side / 2.0;
  if (std::abs(xy.x()) > half || std::abs(xy.y()) > half) {
    throw DomainError("membrane_height_field: point outside the base plate");
  }
  const double rest = rest_height(geom, xy);
  if (!in_contact_footprint(contact, xy)) return rest;
  const double u = downhill_coords(contact, xy).x();
  const double plane = geom.membrane_rest_height - contact.push_depth -
                       std::tan(deg2rad(contact.tilt_alpha_deg)) * u;
  return std::min(rest, plane);
}

double camera_depth(const Vec3& point, const StereoRig& rig, CameraSide side) {
  return invert(rig.pose(side)).apply(point).z();
}

Vec2 project_to_camera(const Vec3& point, const StereoRig& rig, CameraSide side) {
  const Vec3 pc = invert(rig.pose(side)).apply(point);
  if (!(pc.z() > 0.0)) throw ProjectionError("project_to_camera: point is not in front of camera");
  return {rig.cx + rig.focal_px * pc.x() / pc.z(), rig.cy + rig.focal_px * pc.y() / pc.z()};
}

GrayImage render_image(std::span<const SpotProjection> spots, const StereoRig& rig,
                       const RenderParams& params, std::uint64_t noise_seed) {
  if (!(params.blur_sigma > 0.0)) throw DomainError("render_image: blur_sigma must be positive");
  GrayImage img(rig.width, rig.height);
  for (const SpotProjection& s : spots) {
    if (!(s.depth > 0.0)) continue;
    const double sigma = params.blur_sigma * rig.camera_height / s.depth;
    const double reach = std::ceil(5.0 * sigma);
    const int u0 = std::max(0, static_cast<int>(std::floor(s.pixel.x() - reach)));
    const int u1 = std::min(rig.width - 1, static_cast<int>(std::ceil(s.pixel.x() + reach)));
    const int v0 = std::max(0, static_cast<int>(std::floor(s.pixel.y() - reach)));
    const int v1 = std::min(rig.height - 1, static_cast<int>(std::ceil(s.pixel.y() + reach)));
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int v = v0; v <= v1; ++v) {
      const double dv = v - s.pixel.y();
      for (int u = u0; u <= u1; ++u) {
        const double du = u - s.pixel.x();
        img.at(u, v) += params.peak_intensity * std::exp(-(du * du + dv * dv) * inv2s2);
      }
    }
  }
  for (double& p : img.pixels()) p = std::clamp(p, 0.0, 255.0);
  if (params.noise_sigma > 0.0) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, params.noise_sigma);
    for (double& p : img.pixels()) p = std::clamp(p + noise(rng), 0.0, 255.0);
  }
  for (double& p : img.pixels()) p = std::round(p);
  return img;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SceneFrame generate_scene(const JigGeometry& geom, const StereoRig& rig,
                          const ContactSpec& contact, const RenderParams& render,
                          std::uint64_t seed) {
  geom.validate();
  rig.validate();
  contact.validate(geom);

  SceneFrame frame;
  frame.contact = contact;
  frame.ground_truth_normal = contact_normal(contact);
  frame.ground_truth_tilt = tilt_angles_from_normal(frame.ground_truth_normal);

  std::vector<SpotProjection> spots_left, spots_right;
  const auto add = [&](const Vec3& p, std::vector<Vec2>& pix_left, std::vector<Vec2>& pix_right) {
    const Vec2 pl = project_to_camera(p, rig, CameraSide::left);
    const Vec2 pr = project_to_camera(p, rig, CameraSide::right);
    pix_left.push_back(pl);
    pix_right.push_back(pr);
    spots_left.push_back({pl, camera_depth(p, rig, CameraSide::left)});
    spots_right.push_back({pr, camera_depth(p, rig, CameraSide::right)});
  };

  for (const Vec2& xy : generate_marker_layout(geom)) {
    const Vec3 p(xy.x(), xy.y(), membrane_height_field(geom, contact, xy));
    frame.true_marker_points.push_back(p);
    add(p, frame.marker_pixels_left, frame.marker_pixels_right);
  }
  for (const Vec2& f : geom.fiducials) {
    add(Vec3(f.x(), f.y(), 0.0), frame.fiducial_pixels_left, frame.fiducial_pixels_right);
  }

  frame.image_left = render_image(spots_left, rig, render, mix_seed(seed, 1));
  frame.image_right = render_image(spots_right, rig, render, mix_seed(seed, 2));
  return frame;
}

}  // namespace softjig
