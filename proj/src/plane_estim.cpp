#include "softjig/plane_estim.hpp"

#include <cmath>

#include "softjig/errors.hpp"

namespace softjig {

void CropSpec::validate() const {
  if (!(crop_radius > 0.0)) throw DomainError("crop_radius must be positive");
  if (!(margin_factor > 0.0 && margin_factor <= 1.0)) {
    throw DomainError("margin_factor must be in (0, 1]");
  }
}

PointCloud crop_point_cloud(const PointCloud& cloud, const CropSpec& spec) {
  spec.validate();
  if (cloud.frame != Frame::jig) throw UsageError("crop_point_cloud: cloud must be in the jig frame");
  const double limit = spec.margin_factor * spec.crop_radius;
  PointCloud out;
  out.frame = Frame::jig;
  for (const Vec3& p : cloud.points) {
    if (std::hypot(p.x(), p.y()) < limit) out.points.push_back(p);
  }
  return out;
}

namespace {

Vec3 centroid(const PointCloud& cloud) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : cloud.points) c += p;
  return c / static_cast<double>(cloud.points.size());
}

}  // namespace

double plane_rms_residual(const PointCloud& cloud, const Vec3& n) {
  const Vec3 c = centroid(cloud);
  const Vec3 un = n.normalized();
  double sum = 0.0;
  for (const Vec3& p : cloud.points) {
    const double r = un.dot(p - c);
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(cloud.points.size()));
}

PlaneFit fit_plane_svd(const PointCloud& cloud) {
  const auto n = static_cast<Eigen::Index>(cloud.points.size());
  if (n < 3) throw InsufficientDataError("fit_plane_svd: need at least 3 points");

  const Vec3 c = centroid(cloud);
  Eigen::MatrixXd centered(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    centered.row(i) = (cloud.points[static_cast<std::size_t>(i)] - c).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-9 * s(0)) {
    throw DegenerateError("fit_plane_svd: points are collinear or coincident");
  }
  Vec3 normal = svd.matrixV().col(2);
  if (normal.z() < 0.0) normal = -normal;

  PlaneFit fit;
  fit.normal = UnitVec3(normal);
  fit.offset = -fit.normal.vec().dot(c);
  fit.point_count = static_cast<int>(n);
  double sum = 0.0;
  for (const Vec3& p : cloud.points) {
    const double r = fit.normal.vec().dot(p) + fit.offset;
    sum += r * r;
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  fit.rms_residual = std::sqrt(sum / static_cast<double>(n));
  return fit;
}

PrincipalNormalEstimate estimate_principal_normal(const GrayImage& left, const GrayImage& right,
                                                  const StereoRig& rig, const JigGeometry& geom,
                                                  const PipelineSettings& settings,
                                                  const CropSpec& crop) {
  PrincipalNormalEstimate est;
  const std::vector<MarkerDetection> dl = detect_markers(left, settings.detect);
  const std::vector<MarkerDetection> dr = detect_markers(right, settings.detect);
  est.detections_left = static_cast<int>(dl.size());
  est.detections_right = static_cast<int>(dr.size());

  const std::vector<MatchedPair> pairs = match_detections(dl, dr, settings.match);
  est.matched_pairs = static_cast<int>(pairs.size());

  const RigidTransform camera_to_jig = settings.register_with_fiducials
                                           ? register_jig_from_fiducials(dl, rig, geom)
                                           : rig.pose_mid();
  est.jig_cloud =
      transform_cloud(triangulate_pairs(pairs, rig), camera_to_jig, Frame::camera, Frame::jig);

  const PointCloud cropped = crop_point_cloud(est.jig_cloud, crop);
  if (cropped.points.size() < 3) {
    throw InsufficientDataError("estimate: only " + std::to_string(cropped.points.size()) +
                                " points inside the crop radius; object too small or off-center");
  }
  est.plane = fit_plane_svd(cropped);
  est.normal = est.plane.normal;
  est.tilt = tilt_angles_from_normal(est.normal);
  est.push_depth = geom.membrane_rest_height - (-est.plane.offset / est.normal.z());
  return est;
}

}  // namespace softjig
