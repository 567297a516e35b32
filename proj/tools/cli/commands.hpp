#pragma once
// nv-vecsense subcommands. Each command computes all of its outputs in memory
// and only then writes them, so a failing run leaves no partial files.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace nvsense::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,
  exit_config = 2,
  exit_degenerate = 3,
  exit_breach = 4,
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  int exit_code = exit_ok;
  std::vector<OutputFile> files;
  std::string summary;  // one or two lines for the terminal
};

[[nodiscard]] CommandResult cmd_populations(const RunConfig& config);
[[nodiscard]] CommandResult cmd_sensitivity(const RunConfig& config);
[[nodiscard]] CommandResult cmd_estimate(const RunConfig& config);
[[nodiscard]] CommandResult cmd_compensate(const RunConfig& config);
[[nodiscard]] CommandResult cmd_montecarlo(const RunConfig& config);

[[nodiscard]] CommandResult run_command(Command command, const RunConfig& config);

/// Writes every file through a temporary name and a rename.
void commit_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files);

struct Overrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
};

/// Loads the config, applies overrides, runs the command and writes its
/// outputs. Returns the process exit status.
int run(Command command, const std::filesystem::path& config_path, const Overrides& overrides, std::ostream& out,
        std::ostream& err);

}  // namespace nvsense::cli
