#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "softjig/config.hpp"

namespace softjig {

inline constexpr const char* kToolVersion = "softjig 0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3 };

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> threads;
  bool verbose = false;
};

struct SimulateOptions {
  std::optional<double> alpha_deg;
  std::optional<double> theta_deg;
  std::optional<double> diameter;
  std::optional<double> push_depth;
};

struct DetectOptions {
  std::filesystem::path image;
};

struct EstimateOptions {
  std::filesystem::path left;
  std::filesystem::path right;
  std::optional<double> diameter;
  std::optional<std::filesystem::path> calibration;
};

// Defaults or --config file, then command-line overrides, validated.
RunConfig resolve_run_config(const CommonOptions& common);

// Each command writes its outputs plus <command>.manifest.json into the output
// directory and returns an exit code. On failure it prints a stage-named
// message to `err` and removes what it had written.
int cmd_simulate(const CommonOptions& common, const SimulateOptions& opts, std::ostream& log,
                 std::ostream& err);
int cmd_detect(const CommonOptions& common, const DetectOptions& opts, std::ostream& log,
               std::ostream& err);
int cmd_estimate(const CommonOptions& common, const EstimateOptions& opts, std::ostream& log,
                 std::ostream& err);
int cmd_calibrate(const CommonOptions& common, std::ostream& log, std::ostream& err);
int cmd_evaluate(const CommonOptions& common, std::ostream& log, std::ostream& err);

}  // namespace softjig
