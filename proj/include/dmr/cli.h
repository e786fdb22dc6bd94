#pragma once

// Command-line front end: simulate, analytics, study and list-studies.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dmr/io.h"
#include "dmr/model.h"

namespace dmr {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitIo = 3, kExitCriterion = 4 };

struct RunConfig {
  ModelParams model;
  std::optional<ReflectionSpec> reflection;  // model.m when present
  GridSpec grid;
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  std::string study;
  Json study_args = Json::object();
  std::string out_dir = "out";
  std::string format = "csv";  // csv or binary
};

/// Accepts a plain config or a manifest written by a previous run.
RunConfig config_from_json(const Json& j);
Json to_json(const RunConfig& c);

const std::vector<std::string>& registered_studies();

/// Runs one command; `args` excludes the program name. Returns an ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmr
