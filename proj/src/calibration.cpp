#include "softjig/calibration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "parallel.hpp"
#include "softjig/errors.hpp"

namespace softjig {

void SweepConfig::validate() const {
  if (samples < 8) throw DomainError("sweep samples must be at least 8");
  if (!(alpha_deg >= 0.0 && alpha_deg < 45.0)) throw DomainError("sweep alpha must be in [0, 45)");
  if (!(diameter > 0.0)) throw DomainError("sweep diameter must be positive");
  if (!(push_depth > 0.0)) throw DomainError("sweep push_depth must be positive");
}

int CalibrationSamples::valid_count() const {
  return static_cast<int>(std::count_if(samples.begin(), samples.end(),
                                        [](const SweepSample& s) { return s.measured.has_value(); }));
}

int CalibrationSamples::failed_count() const {
  return static_cast<int>(samples.size()) - valid_count();
}

std::uint64_t sample_seed(std::uint64_t master, const SweepConfig& config, int index) {
  std::uint64_t s = mix_seed(master, std::bit_cast<std::uint64_t>(config.diameter));
  s = mix_seed(s, std::bit_cast<std::uint64_t>(config.alpha_deg));
  s = mix_seed(s, std::bit_cast<std::uint64_t>(config.push_depth));
  s = mix_seed(s, static_cast<std::uint64_t>(config.samples));
  return mix_seed(s, static_cast<std::uint64_t>(index));
}

namespace {

SweepSample run_sample(const SweepConfig& config, const SimSettings& sim, int index) {
  ContactSpec contact;
  contact.object_diameter = config.diameter;
  contact.tilt_alpha_deg = config.alpha_deg;
  contact.tilt_direction_deg = config.theta_deg(index);
  contact.push_depth = config.push_depth;

  const SceneFrame scene = generate_scene(sim.geom, sim.rig, contact, sim.render,
                                          sample_seed(sim.master_seed, config, index));
  SweepSample out;
  out.theta_deg = contact.tilt_direction_deg;
  out.commanded = scene.ground_truth_tilt;
  const CropSpec crop{config.diameter / 2.0, sim.crop_margin_factor};
  try {
    out.measured = estimate_principal_normal(scene.image_left, scene.image_right, sim.rig,
                                             sim.geom, sim.pipeline, crop)
                       .tilt;
  } catch (const InsufficientDataError&) {
  } catch (const DegenerateError&) {
  }
  return out;
}

}  // namespace

std::vector<CalibrationSamples> run_sweeps(std::span<const SweepConfig> configs,
                                           const SimSettings& sim) {
  std::vector<CalibrationSamples> out(configs.size());
  std::vector<std::pair<std::size_t, int>> jobs;
  for (std::size_t s = 0; s < configs.size(); ++s) {
    configs[s].validate();
    out[s].config = configs[s];
    out[s].samples.resize(static_cast<std::size_t>(configs[s].samples));
    for (int i = 0; i < configs[s].samples; ++i) jobs.emplace_back(s, i);
  }
  detail::parallel_for(jobs.size(), sim.threads, [&](std::size_t j) {
    const auto [s, i] = jobs[j];
    out[s].samples[static_cast<std::size_t>(i)] = run_sample(configs[s], sim, i);
  });
  return out;
}

CalibrationSamples run_sweep(const SweepConfig& config, const SimSettings& sim) {
  return std::move(run_sweeps(std::span(&config, 1), sim).front());
}

CalibrationParams compute_calibration(std::span<const TiltAngles> measured, double alpha_deg) {
  if (measured.empty()) throw InsufficientDataError("compute_calibration: no valid samples");
  const double n = static_cast<double>(measured.size());
  CalibrationParams p;
  for (const TiltAngles& t : measured) {
    p.offset_x_deg += t.ax_deg;
    p.offset_y_deg += t.ay_deg;
  }
  p.offset_x_deg /= n;
  p.offset_y_deg /= n;
  double vx = 0.0, vy = 0.0;
  for (const TiltAngles& t : measured) {
    vx += (t.ax_deg - p.offset_x_deg) * (t.ax_deg - p.offset_x_deg);
    vy += (t.ay_deg - p.offset_y_deg) * (t.ay_deg - p.offset_y_deg);
  }
  p.sigma_x_deg = std::sqrt(vx / n);
  p.sigma_y_deg = std::sqrt(vy / n);
  const double spread = p.sigma_x_deg + p.sigma_y_deg;
  if (!(spread > 0.0)) throw DegenerateError("compute_calibration: sweep has zero spread");
  p.scale = 2.0 * alpha_deg / (std::sqrt(2.0) * spread);
  return p;
}

CalibrationParams compute_calibration(const CalibrationSamples& samples) {
  std::vector<TiltAngles> measured;
  for (const SweepSample& s : samples.samples) {
    if (s.measured) measured.push_back(*s.measured);
  }
  CalibrationParams p = compute_calibration(measured, samples.config.alpha_deg);
  p.source_sweep = "D=" + std::to_string(samples.config.diameter) +
                   "mm alpha=" + std::to_string(samples.config.alpha_deg) +
                   "deg n=" + std::to_string(measured.size());
  return p;
}

TiltAngles apply_calibration(const TiltAngles& t, const CalibrationParams& p) {
  return {(t.ax_deg - p.offset_x_deg) * p.scale, (t.ay_deg - p.offset_y_deg) * p.scale};
}

TiltAngles unapply_calibration(const TiltAngles& t, const CalibrationParams& p) {
  return {t.ax_deg / p.scale + p.offset_x_deg, t.ay_deg / p.scale + p.offset_y_deg};
}

double tilt_rmse(std::span<const TiltAngles> corrected, std::span<const TiltAngles> commanded) {
  if (corrected.size() != commanded.size() || corrected.empty()) {
    throw InsufficientDataError("tilt_rmse: need equal, non-empty sample lists");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < corrected.size(); ++i) {
    const double dx = corrected[i].ax_deg - commanded[i].ax_deg;
    const double dy = corrected[i].ay_deg - commanded[i].ay_deg;
    sum += (dx * dx + dy * dy) / 2.0;
  }
  return std::sqrt(sum / static_cast<double>(corrected.size()));
}

RmseCell evaluate_cell(const CalibrationSamples& sweep, const CalibrationParams& params) {
  std::vector<TiltAngles> corrected, commanded;
  for (const SweepSample& s : sweep.samples) {
    if (!s.measured) continue;
    corrected.push_back(apply_calibration(*s.measured, params));
    commanded.push_back(s.commanded);
  }
  RmseCell cell;
  cell.valid = static_cast<int>(corrected.size());
  cell.failed = sweep.failed_count();
  if (!corrected.empty()) cell.rmse = tilt_rmse(corrected, commanded);
  return cell;
}

RmseGrid evaluate_rmse_grid(std::span<const double> diameters, std::span<const double> alphas,
                            const CalibrationParams& params, const SimSettings& sim,
                            int samples_per_sweep, double push_depth) {
  std::vector<SweepConfig> configs;
  for (double d : diameters) {
    for (double a : alphas) configs.push_back({a, d, samples_per_sweep, push_depth});
  }
  std::vector<CalibrationSamples> sweeps = run_sweeps(configs, sim);

  RmseGrid grid;
  grid.diameters.assign(diameters.begin(), diameters.end());
  grid.alphas.assign(alphas.begin(), alphas.end());
  std::size_t k = 0;
  for (std::size_t i = 0; i < diameters.size(); ++i) {
    grid.cells.emplace_back();
    grid.sweeps.emplace_back();
    for (std::size_t j = 0; j < alphas.size(); ++j, ++k) {
      grid.cells[i].push_back(evaluate_cell(sweeps[k], params));
      grid.sweeps[i].push_back(std::move(sweeps[k]));
    }
  }
  return grid;
}

}  // namespace softjig
