#include "softjig/commands.hpp"

#include <fmt/format.h>

#include <chrono>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "softjig/errors.hpp"
#include "softjig/io.hpp"

namespace softjig {

using nlohmann::json;

RunConfig resolve_run_config(const CommonOptions& common) {
  RunConfig c = common.config ? load_config(*common.config) : RunConfig{};
  if (common.seed) c.seed = *common.seed;
  if (common.threads) c.threads = *common.threads;
  if (common.out) c.output_dir = common.out->string();
  c.validate();
  return c;
}

namespace {

// One command invocation: owns the output directory bookkeeping, stage
// timings and the manifest.
class Run {
 public:
  Run(std::string command, std::ostream& log, bool verbose)
      : command_(std::move(command)), log_(log), verbose_(verbose) {}

  void set_config(const RunConfig& c) {
    config_ = c;
    out_dir_ = c.output_dir;
    fs::create_directories(out_dir_);
  }
  const RunConfig& config() const { return config_; }

  template <typename Fn>
  auto stage(const std::string& name, Fn&& fn) {
    stage_ = name;
    if (verbose_) log_ << "[" << command_ << "] " << name << "\n";
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
      fn();
      timings_[name] = seconds_since(t0);
    } else {
      auto result = fn();
      timings_[name] = seconds_since(t0);
      return result;
    }
  }

  // Registers an output path (relative to the output dir) and returns it.
  fs::path output(const fs::path& rel) {
    const fs::path p = fs::path(out_dir_) / rel;
    fs::create_directories(p.parent_path());
    written_.push_back(p);
    return p;
  }

  void add_info(const std::string& key, json value) { info_[key] = std::move(value); }

  void finish() {
    const fs::path manifest = output(command_ + ".manifest.json");
    json outputs = json::array();
    for (const fs::path& p : written_) outputs.push_back(p.string());
    json j = {{"tool_version", kToolVersion},
              {"command", command_},
              {"config", config_to_json(config_)},
              {"outputs", outputs},
              {"timings_s", timings_}};
    if (!info_.empty()) j["info"] = info_;
    write_json(manifest, j);
  }

  void remove_partial_outputs() noexcept {
    for (const fs::path& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

  const std::string& current_stage() const { return stage_; }
  const std::string& command() const { return command_; }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::string command_;
  std::ostream& log_;
  bool verbose_;
  RunConfig config_;
  std::string out_dir_;
  std::string stage_ = "config";
  std::vector<fs::path> written_;
  json timings_ = json::object();
  json info_ = json::object();
};

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config error";
  if (dynamic_cast<const InsufficientDataError*>(&e)) return "insufficient data";
  if (dynamic_cast<const DegenerateError*>(&e)) return "degenerate data";
  if (dynamic_cast<const IoError*>(&e)) return "i/o error";
  return "error";
}

int execute(const std::string& command, const CommonOptions& common, std::ostream& log,
            std::ostream& err, const std::function<void(Run&)>& body) {
  Run run(command, log, common.verbose);
  try {
    run.set_config(resolve_run_config(common));
    body(run);
    run.finish();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << command << " [" << run.current_stage() << "]: " << error_kind(e) << ": " << e.what()
        << "\n";
    run.remove_partial_outputs();
    return kExitConfig;
  } catch (const std::exception& e) {
    err << command << " [" << run.current_stage() << "]: " << error_kind(e) << ": " << e.what()
        << "\n";
    run.remove_partial_outputs();
    return kExitData;
  }
}

std::string cell_name(double diameter, double alpha) {
  return fmt::format("D{:g}_a{:g}", diameter, alpha);
}

void write_trace_pair(Run& run, const std::string& stem, const CalibrationSamples& sweep,
                      const CalibrationParams& params, const std::string& title) {
  const fs::path raw = run.output("traces/" + stem + "_raw.csv");
  write_sweep_trace_csv(raw, sweep);
  write_trace_svg(run.output("plots/" + stem + "_raw.svg"), title + " (raw)",
                  read_sweep_trace_csv(raw));
  const fs::path cal = run.output("traces/" + stem + "_calibrated.csv");
  write_sweep_trace_csv(cal, sweep, &params);
  write_trace_svg(run.output("plots/" + stem + "_calibrated.svg"), title + " (calibrated)",
                  read_sweep_trace_csv(cal));
}

CalibrationParams reference_calibration(Run& run, const SimSettings& sim,
                                        CalibrationSamples& sweep_out) {
  const SweepSettings& s = run.config().sweep;
  const SweepConfig ref{s.reference_alpha, s.reference_diameter, s.samples, s.push_depth};
  sweep_out = run.stage("reference_sweep", [&] { return run_sweep(ref, sim); });
  return run.stage("compute_calibration", [&] { return compute_calibration(sweep_out); });
}

}  // namespace

int cmd_simulate(const CommonOptions& common, const SimulateOptions& opts, std::ostream& log,
                 std::ostream& err) {
  return execute("simulate", common, log, err, [&](Run& run) {
    const RunConfig& c = run.config();
    ContactSpec contact = c.contact;
    if (opts.alpha_deg) contact.tilt_alpha_deg = *opts.alpha_deg;
    if (opts.theta_deg) contact.tilt_direction_deg = *opts.theta_deg;
    if (opts.diameter) contact.object_diameter = *opts.diameter;
    if (opts.push_depth) contact.push_depth = *opts.push_depth;
    try {
      contact.validate(c.jig);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("contact: ") + e.what());
    }

    const SceneFrame scene = run.stage("generate_scene", [&] {
      return generate_scene(c.jig, c.rig, contact, c.render, c.seed);
    });
    run.stage("write", [&] {
      write_pgm(run.output("left.pgm"), scene.image_left);
      write_pgm(run.output("right.pgm"), scene.image_right);
      write_json(run.output("truth.json"), scene_truth_json(scene));
      write_cloud_csv(run.output("true_points.csv"),
                      PointCloud{scene.true_marker_points, Frame::jig});
    });
    log << fmt::format("simulated alpha={:g} theta={:g} D={:g} push={:g}: {} markers\n",
                       contact.tilt_alpha_deg, contact.tilt_direction_deg,
                       contact.object_diameter, contact.push_depth,
                       scene.true_marker_points.size());
  });
}

int cmd_detect(const CommonOptions& common, const DetectOptions& opts, std::ostream& log,
               std::ostream& err) {
  return execute("detect", common, log, err, [&](Run& run) {
    const GrayImage img = run.stage("read_image", [&] { return read_pgm(opts.image); });
    const LoGParams params = run.stage("resolve", [&] { return resolve_detect_params(run.config()); });
    const auto dets = run.stage("detect_markers", [&] { return detect_markers(img, params); });
    run.stage("write", [&] { write_detections_csv(run.output("detections.csv"), dets); });
    log << dets.size() << " detections\n";
  });
}

int cmd_estimate(const CommonOptions& common, const EstimateOptions& opts, std::ostream& log,
                 std::ostream& err) {
  return execute("estimate", common, log, err, [&](Run& run) {
    const RunConfig& c = run.config();
    const GrayImage left = run.stage("read_images", [&] { return read_pgm(opts.left); });
    const GrayImage right = run.stage("read_images", [&] { return read_pgm(opts.right); });
    if (left.width() != c.rig.width || left.height() != c.rig.height ||
        right.width() != c.rig.width || right.height() != c.rig.height) {
      throw IoError("image size does not match the configured rig resolution");
    }
    std::optional<CalibrationParams> cal;
    if (opts.calibration) {
      cal = run.stage("read_calibration",
                      [&] { return calibration_from_json(read_json(*opts.calibration)); });
    }
    const SimSettings sim = run.stage("resolve", [&] { return make_sim_settings(c); });
    const CropSpec crop{opts.diameter.value_or(c.contact.object_diameter) / 2.0,
                        c.crop_margin_factor};
    const PrincipalNormalEstimate est = run.stage("pipeline", [&] {
      return estimate_principal_normal(left, right, c.rig, c.jig, sim.pipeline, crop);
    });
    json j = estimate_json(est);
    if (cal) {
      const TiltAngles t = apply_calibration(est.tilt, *cal);
      j["calibrated"] = {{"ax_deg", t.ax_deg}, {"ay_deg", t.ay_deg}};
    }
    run.stage("write", [&] {
      write_json(run.output("estimate.json"), j);
      write_cloud_csv(run.output("cloud_jig.csv"), est.jig_cloud);
    });
    log << fmt::format("raw tilt ax={:.3f} ay={:.3f} deg from {} points\n", est.tilt.ax_deg,
                       est.tilt.ay_deg, est.plane.point_count);
  });
}

int cmd_calibrate(const CommonOptions& common, std::ostream& log, std::ostream& err) {
  return execute("calibrate", common, log, err, [&](Run& run) {
    const SimSettings sim = run.stage("resolve", [&] { return make_sim_settings(run.config()); });
    CalibrationSamples sweep;
    const CalibrationParams params = reference_calibration(run, sim, sweep);
    run.stage("write", [&] {
      write_json(run.output("calibration.json"), calibration_json(params));
      write_sweep_trace_csv(run.output("sweep_trace.csv"), sweep);
      write_trace_pair(run, "reference", sweep, params, "Reference sweep " + params.source_sweep);
    });
    run.add_info("failed_samples", sweep.failed_count());
    log << fmt::format("O_x={:.4f} O_y={:.4f} S={:.5f} ({} failed samples)\n", params.offset_x_deg,
                       params.offset_y_deg, params.scale, sweep.failed_count());
  });
}

int cmd_evaluate(const CommonOptions& common, std::ostream& log, std::ostream& err) {
  return execute("evaluate", common, log, err, [&](Run& run) {
    const RunConfig& c = run.config();
    const SimSettings sim = run.stage("resolve", [&] { return make_sim_settings(c); });
    CalibrationSamples ref_sweep;
    const CalibrationParams params = reference_calibration(run, sim, ref_sweep);
    const RmseGrid grid = run.stage("grid", [&] {
      return evaluate_rmse_grid(c.grid.diameters, c.grid.alphas, params, sim, c.sweep.samples,
                                c.sweep.push_depth);
    });

    run.stage("write", [&] {
      write_json(run.output("calibration.json"), calibration_json(params));
      write_rmse_grid_csv(run.output("rmse_grid.csv"), grid);
      // Same layout, failed-sample counts per cell.
      RmseGrid failures = grid;
      for (auto& row : failures.cells) {
        for (RmseCell& cell : row) cell.rmse = static_cast<double>(cell.failed);
      }
      write_rmse_grid_csv(run.output("rmse_failures.csv"), failures);
      write_trace_pair(run, "reference", ref_sweep, params, "Reference sweep " + params.source_sweep);
      for (std::size_t i = 0; i < grid.diameters.size(); ++i) {
        for (std::size_t j = 0; j < grid.alphas.size(); ++j) {
          const std::string name = cell_name(grid.diameters[i], grid.alphas[j]);
          write_trace_pair(run, name, grid.sweeps[i][j], params,
                           fmt::format("D = {:g} mm, alpha = {:g} deg", grid.diameters[i],
                                       grid.alphas[j]));
        }
      }
    });

    log << fmt::format("O_x={:.4f} O_y={:.4f} S={:.5f}\n", params.offset_x_deg,
                       params.offset_y_deg, params.scale);
    log << "RMSE (deg), rows D mm, columns alpha deg\n      ";
    for (double a : grid.alphas) log << fmt::format("{:>9g}", a);
    log << "\n";
    for (std::size_t i = 0; i < grid.diameters.size(); ++i) {
      log << fmt::format("{:>6g}", grid.diameters[i]);
      for (const RmseCell& cell : grid.cells[i]) {
        log << (cell.rmse ? fmt::format("{:9.4f}", *cell.rmse) : fmt::format("{:>9}", "NA"));
      }
      log << "\n";
    }
  });
}

}  // namespace softjig
