#include "softjig/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "softjig/errors.hpp"

namespace softjig {

using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_number(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ": bad number '" + s + "'");
  }
}

std::optional<double> parse_optional(const std::string& s, const fs::path& path) {
  if (s == "NA") return std::nullopt;
  return parse_number(s, path);
}

std::string num(double v) { return fmt::format("{:.6f}", v); }

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

}  // namespace

void write_detections_csv(const fs::path& path, const std::vector<MarkerDetection>& dets) {
  std::ofstream out = open_out(path);
  out << "u,v,response\n";
  for (const MarkerDetection& d : dets) {
    out << num(d.center.x()) << "," << num(d.center.y()) << "," << num(d.response) << "\n";
  }
}

std::vector<MarkerDetection> read_detections_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "u,v,response") {
    throw IoError(path.string() + ": missing detections header");
  }
  std::vector<MarkerDetection> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 3) throw IoError(path.string() + ": expected 3 columns");
    MarkerDetection d;
    d.center = Vec2(parse_number(cells[0], path), parse_number(cells[1], path));
    d.response = parse_number(cells[2], path);
    d.peak = {static_cast<int>(std::lround(d.center.x())),
              static_cast<int>(std::lround(d.center.y())), d.response};
    out.push_back(d);
  }
  return out;
}

void write_cloud_csv(const fs::path& path, const PointCloud& cloud) {
  std::ofstream out = open_out(path);
  out << "# frame: " << frame_name(cloud.frame) << "\n";
  out << "x_mm,y_mm,z_mm\n";
  for (const Vec3& p : cloud.points) {
    out << num(p.x()) << "," << num(p.y()) << "," << num(p.z()) << "\n";
  }
}

PointCloud read_cloud_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  const std::string tag = "# frame: ";
  if (!std::getline(in, line) || line.rfind(tag, 0) != 0) {
    throw IoError(path.string() + ": missing frame comment");
  }
  PointCloud cloud;
  cloud.frame = parse_frame(line.substr(tag.size()));
  if (!std::getline(in, line) || line != "x_mm,y_mm,z_mm") {
    throw IoError(path.string() + ": missing point cloud header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 3) throw IoError(path.string() + ": expected 3 columns");
    cloud.points.emplace_back(parse_number(cells[0], path), parse_number(cells[1], path),
                              parse_number(cells[2], path));
  }
  return cloud;
}

json scene_truth_json(const SceneFrame& scene) {
  const Vec3& n = scene.ground_truth_normal.vec();
  return {{"alpha_deg", scene.contact.tilt_alpha_deg},
          {"theta_deg", scene.contact.tilt_direction_deg},
          {"push_mm", scene.contact.push_depth},
          {"diameter_mm", scene.contact.object_diameter},
          {"normal", {n.x(), n.y(), n.z()}},
          {"ax_deg", scene.ground_truth_tilt.ax_deg},
          {"ay_deg", scene.ground_truth_tilt.ay_deg}};
}

json estimate_json(const PrincipalNormalEstimate& est) {
  const Vec3& n = est.normal.vec();
  return {{"normal", {n.x(), n.y(), n.z()}},
          {"d_mm", est.plane.offset},
          {"push_depth_mm", est.push_depth},
          {"ax_deg", est.tilt.ax_deg},
          {"ay_deg", est.tilt.ay_deg},
          {"point_count", est.plane.point_count},
          {"rms_residual_mm", est.plane.rms_residual}};
}

json calibration_json(const CalibrationParams& p) {
  return {{"o_x_deg", p.offset_x_deg},   {"o_y_deg", p.offset_y_deg},
          {"scale", p.scale},            {"sigma_x_deg", p.sigma_x_deg},
          {"sigma_y_deg", p.sigma_y_deg}, {"source_sweep", p.source_sweep}};
}

CalibrationParams calibration_from_json(const json& j) {
  CalibrationParams p;
  try {
    p.offset_x_deg = j.at("o_x_deg").get<double>();
    p.offset_y_deg = j.at("o_y_deg").get<double>();
    p.scale = j.at("scale").get<double>();
    p.sigma_x_deg = j.at("sigma_x_deg").get<double>();
    p.sigma_y_deg = j.at("sigma_y_deg").get<double>();
    p.source_sweep = j.value("source_sweep", std::string());
  } catch (const json::exception& e) {
    throw IoError(std::string("calibration JSON: ") + e.what());
  }
  if (!(p.scale > 0.0)) throw IoError("calibration JSON: scale must be positive");
  return p;
}

void write_sweep_trace_csv(const fs::path& path, const CalibrationSamples& sweep,
                           const CalibrationParams* params) {
  std::ofstream out = open_out(path);
  out << "theta_deg,ax_meas,ay_meas,ax_cmd,ay_cmd\n";
  for (const SweepSample& s : sweep.samples) {
    std::optional<TiltAngles> m = s.measured;
    if (m && params) m = apply_calibration(*m, *params);
    out << num(s.theta_deg) << "," << opt_num(m ? std::optional(m->ax_deg) : std::nullopt) << ","
        << opt_num(m ? std::optional(m->ay_deg) : std::nullopt) << "," << num(s.commanded.ax_deg)
        << "," << num(s.commanded.ay_deg) << "\n";
  }
}

std::vector<TraceRow> read_sweep_trace_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "theta_deg,ax_meas,ay_meas,ax_cmd,ay_cmd") {
    throw IoError(path.string() + ": missing sweep trace header");
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 5) throw IoError(path.string() + ": expected 5 columns");
    TraceRow r;
    r.theta_deg = parse_number(c[0], path);
    const auto ax = parse_optional(c[1], path);
    const auto ay = parse_optional(c[2], path);
    if (ax.has_value() != ay.has_value()) throw IoError(path.string() + ": partial measurement");
    if (ax) r.measured = TiltAngles{*ax, *ay};
    r.commanded = {parse_number(c[3], path), parse_number(c[4], path)};
    rows.push_back(r);
  }
  return rows;
}

void write_rmse_grid_csv(const fs::path& path, const RmseGrid& grid) {
  std::ofstream out = open_out(path);
  out << "diameter_mm\\alpha_deg";
  for (double a : grid.alphas) out << "," << num(a);
  out << "\n";
  for (std::size_t i = 0; i < grid.diameters.size(); ++i) {
    out << num(grid.diameters[i]);
    for (const RmseCell& c : grid.cells[i]) out << "," << opt_num(c.rmse);
    out << "\n";
  }
}

RmseTable read_rmse_grid_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty grid file");
  const auto header = split(line);
  if (header.empty() || header[0] != "diameter_mm\\alpha_deg") {
    throw IoError(path.string() + ": missing grid header");
  }
  RmseTable t;
  for (std::size_t j = 1; j < header.size(); ++j) t.alphas.push_back(parse_number(header[j], path));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != header.size()) throw IoError(path.string() + ": ragged grid row");
    t.diameters.push_back(parse_number(c[0], path));
    t.rmse.emplace_back();
    for (std::size_t j = 1; j < c.size(); ++j) t.rmse.back().push_back(parse_optional(c[j], path));
  }
  return t;
}

void write_trace_svg(const fs::path& path, const std::string& title,
                     const std::vector<TraceRow>& rows) {
  constexpr double kW = 640, kH = 360, kLeft = 50, kRight = 20, kTop = 30, kBottom = 40;
  double amp = 1.0;
  for (const TraceRow& r : rows) {
    amp = std::max({amp, std::abs(r.commanded.ax_deg), std::abs(r.commanded.ay_deg)});
    if (r.measured) amp = std::max({amp, std::abs(r.measured->ax_deg), std::abs(r.measured->ay_deg)});
  }
  amp = std::ceil(amp * 1.1);
  const auto px = [&](double theta) { return kLeft + theta / 360.0 * (kW - kLeft - kRight); };
  const auto py = [&](double deg) {
    return kTop + (amp - deg) / (2.0 * amp) * (kH - kTop - kBottom);
  };
  const auto polyline = [&](auto get, const char* color, const char* dash) {
    std::string pts;
    for (const TraceRow& r : rows) {
      const std::optional<double> v = get(r);
      if (v) pts += fmt::format("{:.2f},{:.2f} ", px(r.theta_deg), py(*v));
    }
    return fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" stroke-dasharray=\"{}\" "
        "points=\"{}\"/>\n",
        color, dash, pts);
  };

  std::ofstream out = open_out(path);
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kW, kH);
  out << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kW, kH);
  out << fmt::format("<text x=\"{}\" y=\"18\">{}</text>\n", kLeft, title);
  out << fmt::format(
      "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#999\"/>\n", kLeft, py(0),
      kW - kRight);
  out << fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#999\"/>\n", kLeft,
                     kTop, kH - kBottom);
  out << fmt::format("<text x=\"4\" y=\"{:.2f}\">{}</text>\n", py(amp) + 4, amp);
  out << fmt::format("<text x=\"4\" y=\"{:.2f}\">{}</text>\n", py(-amp) + 4, -amp);
  out << fmt::format("<text x=\"{:.2f}\" y=\"{}\">tilt direction (deg)</text>\n", kW / 2 - 50,
                     kH - 10);
  out << polyline([](const TraceRow& r) { return std::optional(r.commanded.ax_deg); }, "#1f77b4",
                  "6,4");
  out << polyline([](const TraceRow& r) { return std::optional(r.commanded.ay_deg); }, "#d62728",
                  "6,4");
  out << polyline(
      [](const TraceRow& r) {
        return r.measured ? std::optional(r.measured->ax_deg) : std::nullopt;
      },
      "#1f77b4", "none");
  out << polyline(
      [](const TraceRow& r) {
        return r.measured ? std::optional(r.measured->ay_deg) : std::nullopt;
      },
      "#d62728", "none");
  out << fmt::format(
      "<text x=\"{}\" y=\"{}\" fill=\"#1f77b4\">Ax</text><text x=\"{}\" y=\"{}\" "
      "fill=\"#d62728\">Ay</text><text x=\"{}\" y=\"{}\">solid: measured, dashed: "
      "commanded</text>\n",
      kW - 250, 18, kW - 225, 18, kW - 195, 18);
  out << "</svg>\n";
}

json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace softjig
