#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "softjig/geometry.hpp"
#include "softjig/image.hpp"

namespace softjig {

// Simulated jig. Lengths in mm, jig frame: origin at the base-plate center,
// z up into the membrane.
struct JigGeometry {
  double plate_side = 220.0;
  double membrane_rest_height = 30.0;
  double dome_radius = 80.0;
  double marker_pitch = 6.0;
  double marker_radius = 1.5;
  std::array<Vec2, 4> fiducials = {Vec2(-60.0, -54.0), Vec2(60.0, -54.0), Vec2(60.0, 54.0),
                                   Vec2(-60.0, 54.0)};

  // Throws DomainError naming the offending field.
  void validate() const;
};

struct Intrinsics {
  double focal_px = 600.0;
  double cx = 320.0;
  double cy = 240.0;
};

enum class CameraSide { left, right };

// Rectified stereo pair looking up (+z) at the plate from below. The rig
// midpoint sits camera_height below the plate center; the cameras share the
// midpoint's orientation and are offset by -/+ baseline/2 along camera x.
struct StereoRig {
  double focal_px = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
  double baseline = 30.0;
  double camera_height = 150.0;

  void validate() const;

  Intrinsics intrinsics() const { return {focal_px, cx, cy}; }
  // camera -> jig transforms
  RigidTransform pose_mid() const;
  RigidTransform pose_left() const;
  RigidTransform pose_right() const;
  RigidTransform pose(CameraSide side) const;
};

struct ContactSpec {
  double object_diameter = 60.0;
  double tilt_alpha_deg = 0.0;
  double tilt_direction_deg = 0.0;
  double push_depth = 12.0;

  void validate(const JigGeometry& geom) const;
};

struct RenderParams {
  double blur_sigma = 2.0;
  double noise_sigma = 2.0;
  double peak_intensity = 200.0;
};

struct SpotProjection {
  Vec2 pixel;
  double depth = 0.0;
};

struct SceneFrame {
  GrayImage image_left;
  GrayImage image_right;
  std::vector<Vec3> true_marker_points;
  std::vector<Vec2> marker_pixels_left;
  std::vector<Vec2> marker_pixels_right;
  std::vector<Vec2> fiducial_pixels_left;
  std::vector<Vec2> fiducial_pixels_right;
  UnitVec3 ground_truth_normal{0.0, 0.0, 1.0};
  TiltAngles ground_truth_tilt;
  ContactSpec contact;
};

// Hexagonal grid of marker centers, clipped to |p| <= dome_radius.
// Ordered by row (ascending y) then column (ascending x).
std::vector<Vec2> generate_marker_layout(const JigGeometry& geom);

// Rest dome profile: membrane_rest_height * exp(-(r / dome_radius)^4).
double rest_height(const JigGeometry& geom, const Vec2& xy);

// Object bottom-plane normal for a contact: tilted by alpha with its
// downhill direction at angle theta counterclockwise from +x.
UnitVec3 contact_normal(const ContactSpec& contact);

bool in_contact_footprint(const ContactSpec& contact, const Vec2& xy);

// Membrane surface height under contact: min(rest dome, object plane) inside
// the object's vertically projected footprint, rest dome elsewhere.
double membrane_height_field(const JigGeometry& geom, const ContactSpec& contact,
                             const Vec2& xy);

// Pinhole projection of a jig-frame point. Throws ProjectionError when the
// point is not in front of the camera.
Vec2 project_to_camera(const Vec3& point, const StereoRig& rig, CameraSide side);
double camera_depth(const Vec3& point, const StereoRig& rig, CameraSide side);

// Renders Gaussian spots (sigma = blur_sigma * reference_depth / depth) on a
// black background, adds optional pixel noise, clamps to [0, 255] and rounds
// to 8-bit levels. reference_depth is the rig's camera height.
GrayImage render_image(std::span<const SpotProjection> spots, const StereoRig& rig,
                       const RenderParams& params, std::uint64_t noise_seed);

SceneFrame generate_scene(const JigGeometry& geom, const StereoRig& rig,
                          const ContactSpec& contact, const RenderParams& render,
                          std::uint64_t seed);

// SplitMix64 step, used to derive independent seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace softjig
