#include <iostream>

#include "CLI11.hpp"
#include "softjig/commands.hpp"

int main(int argc, char** argv) {
  using namespace softjig;

  CLI::App app{"Soft-jig optical tilt sensing: simulate, detect, estimate, calibrate, evaluate"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CommonOptions common;
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--seed", seed, "master random seed");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose", common.verbose, "log pipeline stages");
  };

  SimulateOptions sim_opts;
  double alpha = 0, theta = 0, diameter = 0, push = 0;
  CLI::App* simulate = app.add_subcommand("simulate", "render one stereo pair with ground truth");
  add_common(simulate);
  simulate->add_option("--alpha", alpha, "tilt angle (deg)");
  simulate->add_option("--theta", theta, "tilt direction (deg)");
  simulate->add_option("--diameter", diameter, "object diameter (mm)");
  simulate->add_option("--push", push, "push depth (mm)");

  DetectOptions det_opts;
  CLI::App* detect = app.add_subcommand("detect", "detect markers in one PGM image");
  add_common(detect);
  detect->add_option("--image", det_opts.image, "input PGM")->required();

  EstimateOptions est_opts;
  double est_diameter = 0;
  std::string calibration_path;
  CLI::App* estimate = app.add_subcommand("estimate", "principal normal from a stereo pair");
  add_common(estimate);
  estimate->add_option("--left", est_opts.left, "left PGM")->required();
  estimate->add_option("--right", est_opts.right, "right PGM")->required();
  estimate->add_option("--diameter", est_diameter, "object diameter for the crop (mm)");
  estimate->add_option("--calibration", calibration_path, "calibration JSON to apply");

  CLI::App* calibrate = app.add_subcommand("calibrate", "run the reference sweep calibration");
  add_common(calibrate);
  CLI::App* evaluate = app.add_subcommand("evaluate", "calibrate and evaluate the RMSE grid");
  add_common(evaluate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(kExitConfig);
  }

  CLI::App* cmd = app.get_subcommands().front();
  if (cmd->count("--config")) common.config = config_path;
  if (cmd->count("--seed")) common.seed = seed;
  if (cmd->count("--out")) common.out = out_dir;
  if (cmd->count("--threads")) common.threads = threads;

  if (cmd == simulate) {
    if (simulate->count("--alpha")) sim_opts.alpha_deg = alpha;
    if (simulate->count("--theta")) sim_opts.theta_deg = theta;
    if (simulate->count("--diameter")) sim_opts.diameter = diameter;
    if (simulate->count("--push")) sim_opts.push_depth = push;
    return cmd_simulate(common, sim_opts, std::cout, std::cerr);
  }
  if (cmd == detect) return cmd_detect(common, det_opts, std::cout, std::cerr);
  if (cmd == estimate) {
    if (estimate->count("--diameter")) est_opts.diameter = est_diameter;
    if (estimate->count("--calibration")) est_opts.calibration = calibration_path;
    return cmd_estimate(common, est_opts, std::cout, std::cerr);
  }
  if (cmd == calibrate) return cmd_calibrate(common, std::cout, std::cerr);
  return cmd_evaluate(common, std::cout, std::cerr);
}
