#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "softjig/geometry.hpp"
#include "softjig/marker_detect.hpp"
#include "softjig/scene_sim.hpp"

namespace softjig {

struct StereoMatchParams {
  double max_row_diff = 1.5;
  double min_disparity = 95.0;
  double max_disparity = 125.0;

  void validate() const;
};

// Disparity window covering depths from just below the plate to just above the
// membrane apex.
StereoMatchParams default_match_params(const StereoRig& rig, const JigGeometry& geom);

struct MatchedPair {
  MarkerDetection left;
  MarkerDetection right;
  std::size_t left_index = 0;
  std::size_t right_index = 0;

  double disparity() const { return left.center.x() - right.center.x(); }
  double row_diff() const { return std::abs(left.center.y() - right.center.y()); }
};

// Greedy one-to-one matching on rectified rows. Output sorted by left row,
// then left column.
std::vector<MatchedPair> match_detections(std::span<const MarkerDetection> left,
                                          std::span<const MarkerDetection> right,
                                          const StereoMatchParams& params);

// Point in the rig-midpoint camera frame (mm).
Vec3 triangulate(const Vec2& left_px, const Vec2& right_px, const StereoRig& rig);
Vec3 triangulate(const MatchedPair& pair, const StereoRig& rig);

enum class Frame { camera, jig };
std::string_view frame_name(Frame f);
Frame parse_frame(std::string_view name);

struct PointCloud {
  std::vector<Vec3> points;
  Frame frame = Frame::camera;
};

PointCloud triangulate_pairs(std::span<const MatchedPair> pairs, const StereoRig& rig);

// Maps every point by t; the cloud must be tagged `from`.
PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t, Frame from, Frame to);

// Planar PnP via a normalized DLT homography: model points on the jig plane
// (z = 0, mm) and their pixel observations. Returns the jig -> camera pose.
RigidTransform estimate_jig_pose_pnp(std::span<const Vec2> pixels, std::span<const Vec2> model,
                                     const Intrinsics& k);

// Locates the four plate fiducials among left-image detections (nearest to
// their nominal projections within search_radius_px) and solves PnP.
// Returns the rig-midpoint camera -> jig transform.
RigidTransform register_jig_from_fiducials(std::span<const MarkerDetection> left,
                                           const StereoRig& rig, const JigGeometry& geom,
                                           double search_radius_px = 8.0);

}  // namespace softjig
