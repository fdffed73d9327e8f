// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criteria 1, 2 and 7 run the full evaluate command twice (serial and
// threaded) and take a couple of minutes on one core.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <fmt/core.h>

#include "softjig/calibration.hpp"
#include "softjig/commands.hpp"
#include "softjig/io.hpp"
#include "softjig/marker_detect.hpp"
#include "softjig/plane_estim.hpp"
#include "softjig/stereo.hpp"
#include "test_helpers.hpp"

using namespace softjig;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  fmt::print("[{}] {} {}: {}\n", pass ? "PASS" : "FAIL", id, name, detail);
  std::cout.flush();
  if (!pass) ++failures;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<fs::path> csv_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct EvalRuns {
  bool ok = false;
  fs::path serial, threaded;
  int threads = 2;
  std::string error;
};

EvalRuns run_evaluate_twice() {
  EvalRuns r;
  const fs::path base = fs::temp_directory_path() / "softjig_acceptance";
  fs::remove_all(base);
  r.serial = base / "threads1";
  r.threaded = base / "threadsN";
  r.threads = std::max(2u, std::thread::hardware_concurrency());

  std::ostringstream log, err;
  CommonOptions c;
  c.out = r.serial;
  c.threads = 1;
  if (cmd_evaluate(c, log, err) != kExitOk) {
    r.error = err.str();
    return r;
  }
  std::cout << log.str();
  c.out = r.threaded;
  c.threads = r.threads;
  if (cmd_evaluate(c, log, err) != kExitOk) {
    r.error = err.str();
    return r;
  }
  r.ok = true;
  return r;
}

void criterion_grid(const EvalRuns& runs) {
  if (!runs.ok) {
    report(1, "RMSE < 3 deg for D >= 50, alpha <= 15", false, "evaluate failed: " + runs.error);
    report(2, "D=30 noisier than D=60", false, "evaluate failed");
    return;
  }
  const RmseTable t = read_rmse_grid_csv(runs.serial / "rmse_grid.csv");
  double worst = 0.0;
  bool all_present = true;
  int cells = 0;
  for (std::size_t i = 0; i < t.diameters.size(); ++i) {
    for (std::size_t j = 0; j < t.alphas.size(); ++j) {
      if (t.diameters[i] < 50.0 || t.alphas[j] > 15.0) continue;
      ++cells;
      if (!t.rmse[i][j]) {
        all_present = false;
        continue;
      }
      worst = std::max(worst, *t.rmse[i][j]);
    }
  }
  report(1, "RMSE < 3 deg for D >= 50, alpha <= 15", all_present && cells > 0 && worst < 3.0,
         fmt::format("{} cells, max RMSE {:.4f} deg", cells, worst));

  auto row_mean = [&](double d) -> std::optional<double> {
    const auto it = std::find(t.diameters.begin(), t.diameters.end(), d);
    if (it == t.diameters.end()) return std::nullopt;
    const auto& row = t.rmse[static_cast<std::size_t>(it - t.diameters.begin())];
    double s = 0.0;
    for (const auto& v : row) {
      if (!v) return std::nullopt;
      s += *v;
    }
    return s / static_cast<double>(row.size());
  };
  const auto m30 = row_mean(30.0), m60 = row_mean(60.0);
  report(2, "D=30 noisier than D=60", m30 && m60 && *m30 > *m60,
         m30 && m60 ? fmt::format("mean RMSE D=30 {:.4f} deg, D=60 {:.4f} deg", *m30, *m60)
                    : std::string("row missing"));
}

void criterion_calibration_identity() {
  const int n = 72;
  const double alpha = 10.0;
  std::vector<TiltAngles> trace;
  for (int i = 0; i < n; ++i) {
    const double th = deg2rad(360.0 * i / n);
    trace.push_back({2.0 + alpha * std::sin(th), -1.0 + alpha * std::cos(th)});
  }
  const CalibrationParams p = compute_calibration(trace, alpha);
  const double err = std::max({std::abs(p.offset_x_deg - 2.0), std::abs(p.offset_y_deg + 1.0),
                               std::abs(p.scale - 1.0)});
  report(3, "calibration identity", err < 1e-9, fmt::format("max error {:.3e}", err));
}

void criterion_plane_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(10, 80);
  std::uniform_real_distribution<double> tilt(-50, 50), extent(15, 40), noise(0.0, 0.5);
  bool minimal = true;
  double worst_angle = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vec3 n = normal_from_tilt_angles({tilt(rng), tilt(rng)}).vec();
    const Vec3 a = n.unitOrthogonal(), b = n.cross(a);
    const double ext = extent(rng);
    std::uniform_real_distribution<double> u(-ext, ext);
    std::normal_distribution<double> e(0.0, noise(rng));
    PointCloud c{{}, Frame::jig};
    const int m = count(rng);
    for (int i = 0; i < m; ++i) c.points.push_back(Vec3(5, -3, 20) + u(rng) * a + u(rng) * b + e(rng) * n);

    const PlaneFit fit = fit_plane_svd(c);
    for (int polar = 0; polar <= 90 && minimal; ++polar) {
      for (int az = 0; az < 360; ++az) {
        const double pr = deg2rad(polar), ar = deg2rad(az);
        const Vec3 cand(std::sin(pr) * std::cos(ar), std::sin(pr) * std::sin(ar), std::cos(pr));
        if (fit.rms_residual > plane_rms_residual(c, cand) + 1e-12) {
          minimal = false;
          break;
        }
      }
    }
    const Vec3 oracle = test::closed_form_plane_normal(c.points);
    worst_angle = std::max(worst_angle, std::acos(std::min(1.0, std::abs(fit.normal.vec().dot(oracle)))));
  }
  report(4, "plane fit minimal and matches oracle", minimal && worst_angle < 1e-6,
         fmt::format("grid minimal: {}, max angle to oracle {:.3e} rad", minimal ? "yes" : "no", worst_angle));
}

void criterion_round_trips() {
  const StereoRig rig;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> xy(-80, 80), z(0, 30);
  double tri = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 pj(xy(rng), xy(rng), z(rng));
    const Vec3 pc = triangulate(project_to_camera(pj, rig, CameraSide::left),
                                project_to_camera(pj, rig, CameraSide::right), rig);
    tri = std::max(tri, (rig.pose_mid().apply(pc) - pj).norm());
  }

  const JigGeometry g;
  const Intrinsics k = rig.intrinsics();
  const std::vector<Vec2> model(g.fiducials.begin(), g.fiducials.end());
  std::uniform_real_distribution<double> ang(-0.4, 0.4), yaw(-3.1, 3.1), off(-25, 25), dist(110, 260);
  double pos = 0.0, rot = 0.0;
  for (int i = 0; i < 100; ++i) {
    const RigidTransform truth(rot_z(yaw(rng)) * rot_y(ang(rng)) * rot_x(ang(rng)),
                               Vec3(off(rng), off(rng), dist(rng)));
    std::vector<Vec2> px;
    for (const Vec2& m : model) {
      const Vec3 c = truth.apply(Vec3(m.x(), m.y(), 0.0));
      px.emplace_back(k.cx + k.focal_px * c.x() / c.z(), k.cy + k.focal_px * c.y() / c.z());
    }
    const RigidTransform est = estimate_jig_pose_pnp(px, model, k);
    pos = std::max(pos, (est.translation() - truth.translation()).norm());
    rot = std::max(rot, std::abs(Eigen::AngleAxisd(est.rotation().transpose() * truth.rotation()).angle()));
  }
  report(5, "triangulation and PnP round trips", tri < 1e-6 && pos < 1e-6 && rot < 1e-6,
         fmt::format("triangulation {:.3e} mm, PnP {:.3e} mm / {:.3e} rad", tri, pos, rot));
}

void criterion_detection() {
  StereoRig rig;
  rig.width = 41;
  rig.height = 41;
  RenderParams rp;
  rp.noise_sigma = 0.0;
  LoGParams p;
  p.sigma = rp.blur_sigma;
  p.border_margin = 6;
  p.response_threshold = 10.0;

  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> frac(-0.5, 0.5);
  double total = 0.0;
  int missed = 0;
  const int trials = 500;
  for (int i = 0; i < trials; ++i) {
    const Vec2 c(20 + frac(rng), 20 + frac(rng));
    const std::vector<SpotProjection> spot = {{c, rig.camera_height}};
    const auto dets = detect_markers(render_image(spot, rig, rp, 1), p);
    if (dets.size() != 1) {
      ++missed;
      continue;
    }
    total += (dets[0].center - c).norm();
  }
  const double mean = missed == trials ? INFINITY : total / (trials - missed);

  // Integer shifts: the response map moves bit-for-bit, peaks move by the
  // shift, and centers agree up to the rounding of storing peak + offset.
  StereoRig big = rig;
  big.width = 120;
  big.height = 100;
  const std::vector<SpotProjection> spots = {{Vec2(40.3, 35.8), big.camera_height},
                                             {Vec2(70.6, 60.2), big.camera_height},
                                             {Vec2(55.1, 30.7), big.camera_height}};
  const GrayImage img = render_image(spots, big, rp, 1);
  const GrayImage base_resp = log_filter(img, p.sigma);
  const auto base = detect_markers(img, p);
  bool equivariant = base.size() == spots.size();
  double center_diff = 0.0;
  const int pad = 12;  // beyond the kernel radius, so clamped borders do not matter
  for (const auto& [du, dv] : {std::pair(7, -3), std::pair(-11, 12), std::pair(1, 1), std::pair(0, 5)}) {
    GrayImage moved(img.width(), img.height());
    for (int v = 0; v < img.height(); ++v) {
      for (int u = 0; u < img.width(); ++u) {
        const int su = u - du, sv = v - dv;
        if (su >= 0 && sv >= 0 && su < img.width() && sv < img.height()) moved.at(u, v) = img.at(su, sv);
      }
    }
    const GrayImage moved_resp = log_filter(moved, p.sigma);
    for (int v = pad; v < img.height() - pad; ++v) {
      for (int u = pad; u < img.width() - pad; ++u) {
        const int mu = u + du, mv = v + dv;
        if (mu < pad || mv < pad || mu >= img.width() - pad || mv >= img.height() - pad) continue;
        equivariant = equivariant && moved_resp.at(mu, mv) == base_resp.at(u, v);
      }
    }
    const auto md = detect_markers(moved, p);
    if (md.size() != base.size()) {
      equivariant = false;
      continue;
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
      equivariant = equivariant && md[i].peak.u == base[i].peak.u + du && md[i].peak.v == base[i].peak.v + dv;
      center_diff = std::max(center_diff, (md[i].center - base[i].center - Vec2(du, dv)).cwiseAbs().maxCoeff());
    }
  }
  equivariant = equivariant && center_diff < 1e-12;
  report(6, "detection localization", missed == 0 && mean < 0.1 && equivariant,
         fmt::format("mean error {:.4f} px over {} spots, {} missed, integer-shift equivariance: {} "
                     "(center rounding {:.1e} px)",
                     mean, trials, missed, equivariant ? "exact" : "broken", center_diff));
}

void criterion_determinism(const EvalRuns& runs) {
  if (!runs.ok) {
    report(7, "evaluate deterministic across thread counts", false, "evaluate failed: " + runs.error);
    return;
  }
  const auto a = csv_files(runs.serial), b = csv_files(runs.threaded);
  bool same = !a.empty() && a == b;
  std::string first_diff;
  if (same) {
    for (const fs::path& rel : a) {
      if (slurp(runs.serial / rel) != slurp(runs.threaded / rel)) {
        same = false;
        first_diff = rel.string();
        break;
      }
    }
  }
  report(7, "evaluate deterministic across thread counts", same,
         same ? fmt::format("{} CSV files byte-identical (threads 1 vs {})", a.size(), runs.threads)
              : "differs: " + (first_diff.empty() ? std::string("file lists") : first_diff));
}

}  // namespace

int main(int argc, char** argv) {
  // --skip-evaluate leaves out the slow evaluate-based criteria (1, 2, 7).
  const bool quick = argc > 1 && std::string(argv[1]) == "--skip-evaluate";
  criterion_calibration_identity();
  criterion_plane_oracle();
  criterion_round_trips();
  criterion_detection();
  if (quick) {
    for (int id : {1, 2, 7}) fmt::print("[SKIP] {}\n", id);
  } else {
    const EvalRuns runs = run_evaluate_twice();
    criterion_grid(runs);
    criterion_determinism(runs);
    if (runs.ok) fs::remove_all(runs.serial.parent_path());
  }
  if (failures > 0) {
    fmt::print("{} CRITERIA FAILED\n", failures);
  } else {
    fmt::print("{}\n", quick ? "ALL RUN CRITERIA PASSED (1, 2, 7 skipped)" : "ALL CRITERIA PASSED");
  }
  return failures == 0 ? 0 : 1;
}
