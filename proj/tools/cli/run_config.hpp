#pragma once
// JSON run configuration for nv-vecsense.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvsense/compensation.hpp"
#include "nvsense/model.hpp"
#include "nvsense/protocols.hpp"

namespace nvsense::cli {

enum class Command { populations, sensitivity, estimate, compensate, montecarlo };

[[nodiscard]] std::string_view to_string(Command c) noexcept;

struct FieldConfig {
  Vec3 B = Vec3::Zero();
  std::optional<Vec3> B_ex;
  Vec3 B_ac = Vec3::Zero();
  std::optional<double> omega_ac;
};

struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::mf_dc;
  Component component = Component::x;
  std::optional<double> t;                   // unset: optimal 1/(4 gamma)
  std::optional<std::array<double, 4>> times;  // per-axis override
  std::optional<double> omega_ac;            // unset: theta_opt / t
  std::optional<std::array<PulseSign, 4>> signs;
  std::size_t repetitions = 1'000'000;
  double T = 1.0;
};

struct SweepConfig {
  SweepParameter parameter = SweepParameter::t;
  std::vector<double> values;
};

struct MonteCarloConfig {
  std::uint64_t seed = 1;
  std::size_t samples = 1000;
  std::vector<double> sigma_grid{0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1};
  DrawDistribution distribution{};
  double alpha_sum = 0.03;
  std::size_t draws = 200;
  CompensationMode mode = CompensationMode::dc;
  std::size_t trials = 1;
  std::size_t curve_points = 200;
};

struct RunConfig {
  PhysicalConstants constants{};
  double selectivity_factor = 10.0;
  double rabi = 2.0 * 3.141592653589793 * 1e6;
  EnsembleParams ensemble = EnsembleParams::homogeneous({0.02, 0.01, 1e6, 1e6});
  FieldConfig field;
  ProtocolConfig protocol;
  std::optional<SweepConfig> sweep;
  MonteCarloConfig montecarlo;
  std::filesystem::path out_dir = ".";
  bool write_shot_records = false;
  unsigned workers = 1;
};

/// Every violated constraint, one message each.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  [[nodiscard]] const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Parses and validates a configuration for `command`. Throws ConfigError.
[[nodiscard]] RunConfig parse_config(const nlohmann::json& doc, Command command);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path, Command command);

/// The protocol plan the configuration describes.
[[nodiscard]] ProtocolPlan make_plan(const RunConfig& config);
[[nodiscard]] ProtocolPlan make_plan(const RunConfig& config, ProtocolKind kind, Component component);

}  // namespace nvsense::cli
