#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "softjig/calibration.hpp"
#include "softjig/plane_estim.hpp"
#include "softjig/scene_sim.hpp"

namespace softjig {

// Detection parameters; unset fields are derived from the rig and render
// settings when the run is resolved.
struct DetectConfig {
  std::optional<double> sigma;
  std::optional<double> response_threshold;
  std::optional<int> border_margin;
};

struct MatchConfig {
  std::optional<double> max_row_diff;
  std::optional<double> min_disparity;
  std::optional<double> max_disparity;
};

struct SweepSettings {
  int samples = 36;
  double push_depth = 12.0;
  double reference_diameter = 60.0;
  double reference_alpha = 10.0;
};

struct GridSettings {
  std::vector<double> diameters = {30, 40, 50, 60, 70, 80};
  std::vector<double> alphas = {5, 10, 15, 20};
};

struct RunConfig {
  JigGeometry jig;
  StereoRig rig;
  RenderParams render;
  DetectConfig detect;
  MatchConfig match;
  double crop_margin_factor = 0.9;
  ContactSpec contact;
  SweepSettings sweep;
  GridSettings grid;
  bool register_with_fiducials = false;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = "out";

  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Missing keys take defaults; unknown keys and invalid values throw
// ConfigError naming the key.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& c);

// Fills derived detection and matching parameters.
LoGParams resolve_detect_params(const RunConfig& c);
StereoMatchParams resolve_match_params(const RunConfig& c);
SimSettings make_sim_settings(const RunConfig& c);

}  // namespace softjig
