#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "softjig/calibration.hpp"
#include "softjig/marker_detect.hpp"
#include "softjig/plane_estim.hpp"
#include "softjig/scene_sim.hpp"
#include "softjig/stereo.hpp"

namespace softjig {

namespace fs = std::filesystem;

// u,v,response with a header line.
void write_detections_csv(const fs::path& path, const std::vector<MarkerDetection>& dets);
std::vector<MarkerDetection> read_detections_csv(const fs::path& path);

// "# frame: <tag>" comment, then x_mm,y_mm,z_mm.
void write_cloud_csv(const fs::path& path, const PointCloud& cloud);
PointCloud read_cloud_csv(const fs::path& path);

nlohmann::json scene_truth_json(const SceneFrame& scene);
nlohmann::json estimate_json(const PrincipalNormalEstimate& est);

nlohmann::json calibration_json(const CalibrationParams& p);
CalibrationParams calibration_from_json(const nlohmann::json& j);

// theta_deg,ax_meas,ay_meas,ax_cmd,ay_cmd; failed samples carry NA.
// With params, measured columns hold calibrated angles.
void write_sweep_trace_csv(const fs::path& path, const CalibrationSamples& sweep,
                           const CalibrationParams* params = nullptr);
struct TraceRow {
  double theta_deg = 0.0;
  std::optional<TiltAngles> measured;
  TiltAngles commanded;
};
std::vector<TraceRow> read_sweep_trace_csv(const fs::path& path);

// Diameter rows, alpha columns, NA for absent cells.
void write_rmse_grid_csv(const fs::path& path, const RmseGrid& grid);
struct RmseTable {
  std::vector<double> diameters;
  std::vector<double> alphas;
  std::vector<std::vector<std::optional<double>>> rmse;
};
RmseTable read_rmse_grid_csv(const fs::path& path);

// Line plot of measured against commanded tilt angles over theta.
void write_trace_svg(const fs::path& path, const std::string& title,
                     const std::vector<TraceRow>& rows);

nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

}  // namespace softjig
