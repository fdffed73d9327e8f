#pragma once

#include "softjig/geometry.hpp"
#include "softjig/marker_detect.hpp"
#include "softjig/scene_sim.hpp"
#include "softjig/stereo.hpp"

namespace softjig {

struct CropSpec {
  double crop_radius = 30.0;
  double margin_factor = 0.9;

  void validate() const;
};

// Plane a x + b y + c z + d = 0 with (a, b, c) unit length and c > 0.
struct PlaneFit {
  UnitVec3 normal{0.0, 0.0, 1.0};
  double offset = 0.0;
  int point_count = 0;
  double rms_residual = 0.0;
  double max_residual = 0.0;
};

// Keeps points with sqrt(x^2 + y^2) < margin_factor * crop_radius, in order.
PointCloud crop_point_cloud(const PointCloud& cloud, const CropSpec& spec);

PlaneFit fit_plane_svd(const PointCloud& cloud);

// Orthogonal RMS distance of the cloud to the plane through its centroid with
// normal n.
double plane_rms_residual(const PointCloud& cloud, const Vec3& n);

struct PipelineSettings {
  LoGParams detect;
  StereoMatchParams match;
  // Register the camera to the jig through the plate fiducials instead of
  // using the rig's nominal mounting pose.
  bool register_with_fiducials = false;
};

struct PrincipalNormalEstimate {
  UnitVec3 normal{0.0, 0.0, 1.0};
  TiltAngles tilt;
  PlaneFit plane;
  // Rest apex height minus the plane's height at the jig axis.
  double push_depth = 0.0;
  int detections_left = 0;
  int detections_right = 0;
  int matched_pairs = 0;
  PointCloud jig_cloud;
};

// Image pair -> raw (uncalibrated) principal normal and tilt angles.
// Throws InsufficientDataError when fewer than 3 points survive the crop.
PrincipalNormalEstimate estimate_principal_normal(const GrayImage& left, const GrayImage& right,
                                                  const StereoRig& rig, const JigGeometry& geom,
                                                  const PipelineSettings& settings,
                                                  const CropSpec& crop);

}  // namespace softjig
