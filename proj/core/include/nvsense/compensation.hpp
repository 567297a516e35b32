#pragma once

// Per-axis evolution times that equalise the signal weight of every axis class
// when contrast and dephasing vary from class to class, and the Monte Carlo
// study of how much sensitivity such inhomogeneity costs.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "nvsense/model.hpp"
#include "nvsense/protocols.hpp"

namespace nvsense {

enum class CompensationMode { dc, ac };

/// Contrast delta_alpha_j = alpha0 - alpha1 and dephasing rate (gamma_j for
/// DC, gamma'_j for AC) per sample.
struct InhomogeneousDraw {
  std::vector<double> delta_alpha;
  std::vector<double> rate;

  [[nodiscard]] std::size_t size() const noexcept { return delta_alpha.size(); }
};

struct DrawDistribution {
  double mean_delta_alpha = 0.01;
  double std_delta_alpha = 0.001;
  double mean_rate = 1e6;
  double std_rate = 1e5;
};

/// Independent Gaussian draws, redrawn while non-positive. Sample j depends
/// only on (seed, stream, j).
[[nodiscard]] InhomogeneousDraw draw_inhomogeneous(std::uint64_t seed, std::size_t n, const DrawDistribution& dist,
                                                   std::uint64_t stream = 0);

/// (delta_alpha/2) e^{-2 gamma t} t
[[nodiscard]] double dc_weight(double delta_alpha, double gamma, double t);
/// (delta_alpha/2) e^{-2 gamma' t} f(omega t)/omega
[[nodiscard]] double ac_weight(double delta_alpha, double gamma_prime, double t, double omega_ac);

struct CompensationSchedule {
  CompensationMode mode = CompensationMode::dc;
  std::vector<double> times;
  std::vector<double> weights;  // weight of each sample at its time
  double target = 0.0;
  double t_max = 0.0;           // 1/(4 rate_max)
  std::optional<double> omega_ac;

  [[nodiscard]] double max_relative_error() const noexcept;
};

/// Solves weight_j(t_j) = target with 0 < t_j <= t_max for every sample.
/// DC target: (da_min/2) e^{-1/2} t_max. AC: omega = 4 theta_opt rate_max and
/// target (da_min/2) e^{-1/2} f(theta_opt)/omega; the largest root below
/// t_max is taken. Throws NoRootError when a sample cannot reach the target.
[[nodiscard]] CompensationSchedule solve_schedule(const InhomogeneousDraw& draws, CompensationMode mode);

/// Four-axis parameters with fixed alpha0 + alpha1 = alpha_sum and the drawn
/// contrast and rate (used as both gamma and gamma').
[[nodiscard]] EnsembleParams compensated_params(const InhomogeneousDraw& draws, double alpha_sum);

/// Multi-frequency plan running the schedule (exactly four samples), with the
/// repetition time fixed to t_max.
[[nodiscard]] ProtocolPlan compensated_plan(const CompensationSchedule& schedule, Component component);

struct RatioCurveConfig {
  double mean_delta_alpha = 0.01;
  double mean_rate = 1e6;
  double alpha_sum = 0.03;
  std::vector<double> sigma_grid{0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1};
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  CompensationMode mode = CompensationMode::dc;
  unsigned workers = 1;
};

struct RatioPoint {
  double sigma = 0.0;
  double r_mean = 0.0;
  double r_stderr = 0.0;
  std::size_t n_success = 0;
  std::size_t n_failed = 0;
};

struct MonteCarloReport {
  CompensationMode mode = CompensationMode::dc;
  std::vector<RatioPoint> points;
};

/// r(sigma') = delta_B(sigma') / delta_B(0), averaged over four-axis draws
/// with relative spread sigma'. The same standard-normal deviates are reused
/// at every grid point. Failed schedules are counted, not fatal.
[[nodiscard]] MonteCarloReport sensitivity_ratio_curve(const RatioCurveConfig& config);

/// sigma_prime,r_mean,r_stderr,n_success,n_failed
void write_ratio_curve_csv(std::ostream& out, const MonteCarloReport& report);
/// j,delta_alpha_j,gamma_j,t_j,weight_j
void write_schedule_csv(std::ostream& out, const InhomogeneousDraw& draws, const CompensationSchedule& schedule);

}  // namespace nvsense
