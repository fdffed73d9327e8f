#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "softjig/geometry.hpp"
#include "softjig/plane_estim.hpp"
#include "softjig/scene_sim.hpp"

namespace softjig {

// Constant-tilt sweep: tilt direction stepped uniformly over [0, 360).
struct SweepConfig {
  double alpha_deg = 10.0;
  double diameter = 60.0;
  int samples = 36;
  double push_depth = 12.0;

  void validate() const;
  double theta_deg(int i) const { return 360.0 * i / samples; }
};

// Everything needed to simulate and estimate one sweep sample.
struct SimSettings {
  JigGeometry geom;
  StereoRig rig;
  RenderParams render;
  PipelineSettings pipeline;
  double crop_margin_factor = 0.9;
  std::uint64_t master_seed = 1;
  int threads = 1;
};

struct SweepSample {
  double theta_deg = 0.0;
  TiltAngles commanded;
  std::optional<TiltAngles> measured;  // empty when the estimate failed
};

struct CalibrationSamples {
  SweepConfig config;
  std::vector<SweepSample> samples;

  int valid_count() const;
  int failed_count() const;
};

struct CalibrationParams {
  double offset_x_deg = 0.0;
  double offset_y_deg = 0.0;
  double scale = 1.0;
  double sigma_x_deg = 0.0;
  double sigma_y_deg = 0.0;
  std::string source_sweep;
};

// Seed of one sweep sample, a pure function of the master seed, the sweep
// parameters and the sample index.
std::uint64_t sample_seed(std::uint64_t master, const SweepConfig& config, int index);

CalibrationSamples run_sweep(const SweepConfig& config, const SimSettings& sim);

// Runs several sweeps with all samples spread across sim.threads workers.
// Output is identical to running each sweep serially.
std::vector<CalibrationSamples> run_sweeps(std::span<const SweepConfig> configs,
                                           const SimSettings& sim);

// O = mean, sigma = population standard deviation about O,
// S = 2 alpha / (sqrt(2) (sigma_x + sigma_y)).
CalibrationParams compute_calibration(std::span<const TiltAngles> measured, double alpha_deg);
CalibrationParams compute_calibration(const CalibrationSamples& samples);

// (t - O) * S per component.
TiltAngles apply_calibration(const TiltAngles& t, const CalibrationParams& p);
TiltAngles unapply_calibration(const TiltAngles& t, const CalibrationParams& p);

// sqrt(mean_i ((dx_i^2 + dy_i^2) / 2)) over paired samples.
double tilt_rmse(std::span<const TiltAngles> corrected, std::span<const TiltAngles> commanded);

struct RmseCell {
  std::optional<double> rmse;  // absent when every sample failed
  int valid = 0;
  int failed = 0;
};

struct RmseGrid {
  std::vector<double> diameters;
  std::vector<double> alphas;
  std::vector<std::vector<RmseCell>> cells;  // [diameter][alpha]
  std::vector<std::vector<CalibrationSamples>> sweeps;
};

RmseCell evaluate_cell(const CalibrationSamples& sweep, const CalibrationParams& params);

RmseGrid evaluate_rmse_grid(std::span<const double> diameters, std::span<const double> alphas,
                            const CalibrationParams& params, const SimSettings& sim,
                            int samples_per_sweep, double push_depth);

}  // namespace softjig
