#include "softjig/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "softjig/errors.hpp"

namespace softjig {

void StereoMatchParams::validate() const {
  if (!(min_disparity > 0.0) || !(min_disparity < max_disparity)) {
    throw DomainError("disparity window must satisfy 0 < min_disparity < max_disparity");
  }
  if (!(max_row_diff >= 0.0)) throw DomainError("max_row_diff must be non-negative");
}

StereoMatchParams default_match_params(const StereoRig& rig, const JigGeometry& geom) {
  const double fb = rig.focal_px * rig.baseline;
  const double near_depth = rig.camera_height - 5.0;
  const double far_depth = rig.camera_height + geom.membrane_rest_height + 5.0;
  return {1.5, fb / far_depth, fb / near_depth};
}

std::vector<MatchedPair> match_detections(std::span<const MarkerDetection> left,
                                          std::span<const MarkerDetection> right,
                                          const StereoMatchParams& params) {
  params.validate();
  struct Candidate {
    std::size_t li, ri;
    double row_diff, disparity, deviation;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < left.size(); ++i) {
    for (std::size_t j = 0; j < right.size(); ++j) {
      const double dv = std::abs(left[i].center.y() - right[j].center.y());
      const double d = left[i].center.x() - right[j].center.x();
      if (dv <= params.max_row_diff && d >= params.min_disparity && d <= params.max_disparity) {
        cands.push_back({i, j, dv, d, 0.0});
      }
    }
  }
  if (cands.empty()) return {};

  std::vector<double> disp;
  disp.reserve(cands.size());
  for (const Candidate& c : cands) disp.push_back(c.disparity);
  const auto mid = disp.begin() + static_cast<std::ptrdiff_t>(disp.size() / 2);
  std::nth_element(disp.begin(), mid, disp.end());
  const double median = *mid;
  for (Candidate& c : cands) c.deviation = std::abs(c.disparity - median);

  // Row differences are compared in bins: on a rectified pair every marker of
  // an image row has near-zero row difference, so within a bin the disparity
  // deviation decides.
  constexpr double kRowBinPx = 0.5;
  const auto key = [](const Candidate& c) {
    return std::make_tuple(std::floor(c.row_diff / kRowBinPx), c.deviation, c.li, c.ri);
  };
  std::sort(cands.begin(), cands.end(),
            [&](const Candidate& a, const Candidate& b) { return key(a) < key(b); });

  std::vector<bool> used_l(left.size(), false), used_r(right.size(), false);
  std::vector<MatchedPair> pairs;
  for (const Candidate& c : cands) {
    if (used_l[c.li] || used_r[c.ri]) continue;
    used_l[c.li] = used_r[c.ri] = true;
    pairs.push_back({left[c.li], right[c.ri], c.li, c.ri});
  }
  std::sort(pairs.begin(), pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return std::make_pair(a.left.center.y(), a.left.center.x()) <
           std::make_pair(b.left.center.y(), b.left.center.x());
  });
  return pairs;
}

Vec3 triangulate(const Vec2& left_px, const Vec2& right_px, const StereoRig& rig) {
  const double disparity = left_px.x() - right_px.x();
  if (!(disparity > 0.0)) {
    throw TriangulationError("triangulate: disparity must be positive");
  }
  const double z = rig.focal_px * rig.baseline / disparity;
  const double u_mid = 0.5 * (left_px.x() + right_px.x());
  const double v_mean = 0.5 * (left_px.y() + right_px.y());
  return {(u_mid - rig.cx) * z / rig.focal_px, (v_mean - rig.cy) * z / rig.focal_px, z};
}

Vec3 triangulate(const MatchedPair& pair, const StereoRig& rig) {
  return triangulate(pair.left.center, pair.right.center, rig);
}

std::string_view frame_name(Frame f) { return f == Frame::camera ? "camera" : "jig"; }

Frame parse_frame(std::string_view name) {
  if (name == "camera") return Frame::camera;
  if (name == "jig") return Frame::jig;
  throw UsageError("unknown frame tag: " + std::string(name));
}

PointCloud triangulate_pairs(std::span<const MatchedPair> pairs, const StereoRig& rig) {
  PointCloud cloud;
  cloud.frame = Frame::camera;
  cloud.points.reserve(pairs.size());
  for (const MatchedPair& p : pairs) cloud.points.push_back(triangulate(p, rig));
  return cloud;
}

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t, Frame from, Frame to) {
  if (cloud.frame != from) {
    throw UsageError("transform_cloud: cloud is in the " + std::string(frame_name(cloud.frame)) +
                     " frame, expected " + std::string(frame_name(from)));
  }
  PointCloud out;
  out.frame = to;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
  return out;
}

namespace {

// Similarity taking points to zero centroid and mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Vec2> pts) {
  Vec2 c = Vec2::Zero();
  for (const Vec2& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const Vec2& p : pts) mean += (p - c).norm();
  mean /= static_cast<double>(pts.size());
  const double s = std::sqrt(2.0) / mean;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x(),
       0, s, -s * c.y(),
       0, 0, 1;
  return t;
}

void check_planar_configuration(std::span<const Vec2> model) {
  double scale = 0.0;
  for (const Vec2& p : model) scale = std::max(scale, p.norm());
  for (std::size_t i = 0; i < model.size(); ++i) {
    for (std::size_t j = i + 1; j < model.size(); ++j) {
      scale = std::max(scale, (model[i] - model[j]).norm());
    }
  }
  if (!(scale > 0.0)) throw DegenerateError("PnP: model points coincide");
  const double tol = 1e-6 * scale * scale;
  for (std::size_t i = 0; i < model.size(); ++i) {
    for (std::size_t j = i + 1; j < model.size(); ++j) {
      if ((model[i] - model[j]).norm() <= 1e-9 * scale) {
        throw DegenerateError("PnP: duplicate model points");
      }
      for (std::size_t k = j + 1; k < model.size(); ++k) {
        const Vec2 a = model[j] - model[i];
        const Vec2 b = model[k] - model[i];
        if (std::abs(a.x() * b.y() - a.y() * b.x()) <= tol) {
          throw DegenerateError("PnP: three model points are collinear");
        }
      }
    }
  }
}

}  // namespace

RigidTransform estimate_jig_pose_pnp(std::span<const Vec2> pixels, std::span<const Vec2> model,
                                     const Intrinsics& k) {
  if (pixels.size() != model.size() || model.size() < 4) {
    throw InsufficientDataError("PnP: need at least 4 matching pixel/model correspondences");
  }
  check_planar_configuration(model);

  const std::size_t n = model.size();
  std::vector<Vec2> rays(n);
  for (std::size_t i = 0; i < n; ++i) {
    rays[i] = Vec2((pixels[i].x() - k.cx) / k.focal_px, (pixels[i].y() - k.cy) / k.focal_px);
  }
  const Eigen::Matrix3d tm = normalizing_transform(model);
  const Eigen::Matrix3d tr = normalizing_transform(rays);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * n), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d m = tm * model[i].homogeneous();
    const Eigen::Vector3d r = tr * rays[i].homogeneous();
    const auto row = static_cast<Eigen::Index>(2 * i);
    a.block<1, 3>(row, 0) = m.transpose();
    a.block<1, 3>(row, 6) = -r.x() * m.transpose();
    a.block<1, 3>(row + 1, 3) = m.transpose();
    a.block<1, 3>(row + 1, 6) = -r.y() * m.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2),
        h(3), h(4), h(5),
        h(6), h(7), h(8);
  // Homography from plane coordinates to normalized rays: ~ [r1 r2 t].
  const Eigen::Matrix3d hm = tr.inverse() * hn * tm;

  double lambda = 2.0 / (hm.col(0).norm() + hm.col(1).norm());
  if (hm(2, 2) * lambda < 0.0) lambda = -lambda;

  Mat3 approx;
  approx.col(0) = lambda * hm.col(0);
  approx.col(1) = lambda * hm.col(1);
  approx.col(2) = approx.col(0).cross(approx.col(1));
  Eigen::JacobiSVD<Mat3> rsvd(approx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = rsvd.matrixU() * rsvd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = rsvd.matrixU();
    u.col(2) = -u.col(2);
    r = u * rsvd.matrixV().transpose();
  }
  const Vec3 t = lambda * hm.col(2);

  for (const Vec2& m : model) {
    if (!((r * Vec3(m.x(), m.y(), 0.0) + t).z() > 0.0)) {
      throw DegenerateError("PnP: no solution places all points in front of the camera");
    }
  }
  return {r, t};
}

RigidTransform register_jig_from_fiducials(std::span<const MarkerDetection> left,
                                           const StereoRig& rig, const JigGeometry& geom,
                                           double search_radius_px) {
  std::vector<Vec2> pixels, model;
  for (const Vec2& f : geom.fiducials) {
    const Vec2 expected = project_to_camera(Vec3(f.x(), f.y(), 0.0), rig, CameraSide::left);
    double best = std::numeric_limits<double>::infinity();
    const MarkerDetection* hit = nullptr;
    for (const MarkerDetection& d : left) {
      const double dist = (d.center - expected).norm();
      if (dist < best) {
        best = dist;
        hit = &d;
      }
    }
    if (hit == nullptr || best > search_radius_px) {
      throw InsufficientDataError("fiducial registration: fiducial not found in left image");
    }
    pixels.push_back(hit->center);
    model.push_back(f);
  }
  const RigidTransform jig_to_left = estimate_jig_pose_pnp(pixels, model, rig.intrinsics());
  const RigidTransform mid_to_left =
      RigidTransform::from_translation(Vec3(rig.baseline / 2.0, 0.0, 0.0));
  return compose(invert(jig_to_left), mid_to_left);
}

}  // namespace softjig
