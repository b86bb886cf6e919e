#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "feedloc/pipeline.hpp"

namespace feedloc::tools {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitPipeline = 3,
};

struct SimulateOptions {
  std::optional<std::filesystem::path> spec;
  std::optional<std::filesystem::path> corruption;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct LocalizeOptions {
  std::filesystem::path bundle;  // one bundle, or a directory of bundles
  std::filesystem::path out;
  RunConfig config;
  std::string thresholds = "5,5;1,1";
};

struct EvaluateOptions {
  std::filesystem::path results;
  std::filesystem::path gt;  // oracle.json, bundle, or a directory holding either
  std::string thresholds = "5,5;1,1";
  std::optional<std::filesystem::path> out;
};

/// Each command reports diagnostics on `err` and returns a process exit code.
int cmd_simulate(const SimulateOptions& options, std::ostream& err);
int cmd_localize(const LocalizeOptions& options, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& bundle, std::ostream& out, std::ostream& err);

ScaleMode parse_scale_mode(const std::string& text);

}  // namespace feedloc::tools
