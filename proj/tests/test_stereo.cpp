#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "softjig/config.hpp"
#include "softjig/errors.hpp"
#include "softjig/stereo.hpp"
#include "test_helpers.hpp"

using namespace softjig;
using softjig::test::random_rotation;
using softjig::test::random_vec;

namespace {

MarkerDetection det(double u, double v) {
  MarkerDetection d;
  d.center = Vec2(u, v);
  d.response = 50;
  return d;
}

// Index of the true projection nearest to px, or -1 beyond tol.
int nearest_truth(const std::vector<Vec2>& truth, const Vec2& px, double tol = 0.5) {
  int best = -1;
  double dist = tol;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = (truth[i] - px).norm();
    if (d < dist) {
      dist = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Vec2 pinhole(const RigidTransform& jig_to_cam, const Vec2& m, const Intrinsics& k) {
  const Vec3 pc = jig_to_cam.apply(Vec3(m.x(), m.y(), 0.0));
  return {k.cx + k.focal_px * pc.x() / pc.z(), k.cy + k.focal_px * pc.y() / pc.z()};
}

}  // namespace

TEST_CASE("match_detections basics") {
  const StereoMatchParams p{1.5, 90, 130};
  const std::vector<MarkerDetection> l = {det(400, 200)};
  const std::vector<MarkerDetection> r = {det(290, 200.4)};
  const auto pairs = match_detections(l, r, p);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].disparity() == doctest::Approx(110));

  const std::vector<MarkerDetection> r_far = {det(290, 202)};
  CHECK(match_detections(l, r_far, p).empty());
  const std::vector<MarkerDetection> r_disp = {det(200, 200)};
  CHECK(match_detections(l, r_disp, p).empty());
  CHECK(match_detections({}, r, p).empty());

  // One-to-one: two left candidates for one right detection.
  const std::vector<MarkerDetection> l2 = {det(400, 200), det(405, 200.2)};
  CHECK(match_detections(l2, r, p).size() == 1);

  StereoMatchParams bad{1.0, 10, 5};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("matching a noiseless scene has no false pairs") {
  // Near a steep contact edge two spots can nearly merge in one view and the
  // blended detection lands a few pixels from either; assign within 5 px.
  constexpr double kAssign = 5.0;
  const RunConfig cfg;
  RenderParams clean = cfg.render;
  clean.noise_sigma = 0;
  const LoGParams lp = resolve_detect_params(cfg);
  const StereoMatchParams mp = resolve_match_params(cfg);
  for (const double alpha : {0.0, 12.0}) {
    ContactSpec contact;
    contact.tilt_alpha_deg = alpha;
    contact.tilt_direction_deg = 200;
    contact.object_diameter = 70;
    const SceneFrame s = generate_scene(cfg.jig, cfg.rig, contact, clean, 8);
    std::vector<Vec2> truth_l = s.marker_pixels_left, truth_r = s.marker_pixels_right;
    truth_l.insert(truth_l.end(), s.fiducial_pixels_left.begin(), s.fiducial_pixels_left.end());
    truth_r.insert(truth_r.end(), s.fiducial_pixels_right.begin(), s.fiducial_pixels_right.end());

    const auto dl = detect_markers(s.image_left, lp);
    const auto dr = detect_markers(s.image_right, lp);
    std::set<int> in_left, in_right;
    for (const auto& d : dl) in_left.insert(nearest_truth(truth_l, d.center, kAssign));
    for (const auto& d : dr) in_right.insert(nearest_truth(truth_r, d.center, kAssign));
    std::vector<int> both;
    std::set_intersection(in_left.begin(), in_left.end(), in_right.begin(), in_right.end(),
                          std::back_inserter(both));
    both.erase(std::remove(both.begin(), both.end(), -1), both.end());

    const auto pairs = match_detections(dl, dr, mp);
    int false_pairs = 0;
    for (const auto& p : pairs) {
      if (nearest_truth(truth_l, p.left.center, kAssign) != nearest_truth(truth_r, p.right.center, kAssign)) {
        ++false_pairs;
      }
    }
    CHECK(false_pairs == 0);
    CHECK(pairs.size() == both.size());
    CHECK(std::is_sorted(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
      return std::make_pair(a.left.center.y(), a.left.center.x()) <
             std::make_pair(b.left.center.y(), b.left.center.x());
    }));
  }
}

TEST_CASE("triangulate") {
  StereoRig rig;
  const Vec3 p = triangulate(Vec2(380, 240), Vec2(260, 240), rig);
  CHECK(p.z() == doctest::Approx(150.0).epsilon(1e-15));
  CHECK(std::abs(p.x()) < 1e-12);
  CHECK_THROWS_AS(triangulate(Vec2(300, 240), Vec2(300, 240), rig), TriangulationError);
  CHECK_THROWS_AS(triangulate(Vec2(300, 240), Vec2(310, 240), rig), TriangulationError);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> xy(-60, 60), z(0, 30);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const Vec3 pj(xy(rng), xy(rng), z(rng));
    const Vec3 pc = triangulate(project_to_camera(pj, rig, CameraSide::left),
                                project_to_camera(pj, rig, CameraSide::right), rig);
    worst = std::max(worst, (rig.pose_mid().apply(pc) - pj).norm());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("transform_cloud") {
  PointCloud cloud{{Vec3(1, 2, 3), Vec3(-4, 0, 9)}, Frame::camera};
  const PointCloud same = transform_cloud(cloud, RigidTransform::identity(), Frame::camera, Frame::jig);
  CHECK(same.points == cloud.points);
  CHECK(same.frame == Frame::jig);

  const PointCloud origin{{Vec3::Zero()}, Frame::camera};
  const PointCloud up = transform_cloud(origin, RigidTransform::from_translation(Vec3(0, 0, 150)),
                                        Frame::camera, Frame::jig);
  CHECK(up.points[0] == Vec3(0, 0, 150));

  CHECK_THROWS_AS(transform_cloud(same, RigidTransform::identity(), Frame::camera, Frame::jig),
                  UsageError);

  std::mt19937_64 rng(32);
  PointCloud random_cloud;
  for (int i = 0; i < 40; ++i) random_cloud.points.push_back(random_vec(rng, -100, 100));
  for (int k = 0; k < 10; ++k) {
    const RigidTransform t(random_rotation(rng), random_vec(rng, -300, 300));
    const PointCloud moved = transform_cloud(random_cloud, t, Frame::camera, Frame::jig);
    for (std::size_t i = 0; i < random_cloud.points.size(); ++i) {
      for (std::size_t j = i + 1; j < random_cloud.points.size(); ++j) {
        const double before = (random_cloud.points[i] - random_cloud.points[j]).norm();
        const double after = (moved.points[i] - moved.points[j]).norm();
        CHECK(std::abs(before - after) < 1e-9);
      }
    }
  }
}

TEST_CASE("planar PnP") {
  const JigGeometry g;
  const StereoRig rig;
  const Intrinsics k = rig.intrinsics();
  const std::vector<Vec2> model(g.fiducials.begin(), g.fiducials.end());

  // Camera straight below the plate center.
  const RigidTransform below = RigidTransform::from_translation(Vec3(0, 0, rig.camera_height));
  std::vector<Vec2> px;
  for (const Vec2& m : model) px.push_back(pinhole(below, m, k));
  const RigidTransform est = estimate_jig_pose_pnp(px, model, k);
  CHECK(std::abs(est.translation().z() - rig.camera_height) < 1e-6);

  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> tilt(-0.4, 0.4), yaw(-3.14, 3.14), off(-20, 20), dist(120, 250);
  for (int i = 0; i < 50; ++i) {
    const RigidTransform truth(rot_z(yaw(rng)) * rot_x(tilt(rng)) * rot_y(tilt(rng)),
                               Vec3(off(rng), off(rng), dist(rng)));
    px.clear();
    for (const Vec2& m : model) px.push_back(pinhole(truth, m, k));
    const RigidTransform r = estimate_jig_pose_pnp(px, model, k);
    CHECK((r.translation() - truth.translation()).norm() < 1e-6);
    const Eigen::AngleAxisd err(r.rotation().transpose() * truth.rotation());
    CHECK(std::abs(err.angle()) < 1e-6);
    for (std::size_t j = 0; j < model.size(); ++j) CHECK((pinhole(r, model[j], k) - px[j]).norm() < 1e-6);
  }

  const std::vector<Vec2> collinear = {Vec2(0, 0), Vec2(10, 0), Vec2(20, 0), Vec2(5, 30)};
  std::vector<Vec2> cpx;
  for (const Vec2& m : collinear) cpx.push_back(pinhole(below, m, k));
  CHECK_THROWS_AS(estimate_jig_pose_pnp(cpx, collinear, k), DegenerateError);
  const std::vector<Vec2> dup = {Vec2(0, 0), Vec2(0, 0), Vec2(20, 0), Vec2(5, 30)};
  CHECK_THROWS_AS(estimate_jig_pose_pnp(cpx, dup, k), DegenerateError);
  CHECK_THROWS_AS(estimate_jig_pose_pnp(std::span(cpx).first(3), std::span(collinear).first(3), k),
                  InsufficientDataError);
}

TEST_CASE("fiducial registration and end-to-end point accuracy") {
  const RunConfig cfg;
  RenderParams clean = cfg.render;
  clean.noise_sigma = 0;
  ContactSpec contact;
  contact.tilt_alpha_deg = 10;
  contact.tilt_direction_deg = 45;
  const SceneFrame s = generate_scene(cfg.jig, cfg.rig, contact, clean, 2);
  const LoGParams lp = resolve_detect_params(cfg);
  const auto dl = detect_markers(s.image_left, lp);
  const auto dr = detect_markers(s.image_right, lp);

  const RigidTransform reg = register_jig_from_fiducials(dl, cfg.rig, cfg.jig);
  CHECK((reg.translation() - cfg.rig.pose_mid().translation()).norm() < 1.0);
  CHECK(std::abs(Eigen::AngleAxisd(reg.rotation()).angle()) < deg2rad(0.5));

  const auto pairs = match_detections(dl, dr, resolve_match_params(cfg));
  const PointCloud cloud = transform_cloud(triangulate_pairs(pairs, cfg.rig), cfg.rig.pose_mid(),
                                           Frame::camera, Frame::jig);
  double sq = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const int idx = nearest_truth(s.marker_pixels_left, pairs[i].left.center);
    if (idx < 0) continue;
    sq += (cloud.points[i] - s.true_marker_points[static_cast<std::size_t>(idx)]).squaredNorm();
    ++n;
  }
  REQUIRE(n > 400);
  CHECK(std::sqrt(sq / n) < 0.5);

  CHECK_THROWS_AS(register_jig_from_fiducials({}, cfg.rig, cfg.jig), InsufficientDataError);
}
