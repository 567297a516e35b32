#pragma once

// Signal models, shot-noise sensitivities and moment estimators for the
// conventional (sequential axis pair) and multi-frequency (all four axes in
// parallel) vector-field protocols, in DC (Ramsey) and AC (echo) variants.

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "nvsense/dynamics.hpp"
#include "nvsense/errors.hpp"
#include "nvsense/model.hpp"
#include "nvsense/protocol_kind.hpp"
#include "nvsense/readout.hpp"

namespace nvsense {

/// Axes read out by the conventional protocol for a component: x -> (1,4),
/// y -> (2,4), z -> (3,4). Their directions sum to a vector along the target.
[[nodiscard]] std::pair<AxisId, AxisId> conventional_pair(Component c);

/// Multi-frequency final-pulse signs: the two axes whose target component is
/// positive get the 3pi/2 pulse (minus), the other two pi/2 (plus).
[[nodiscard]] std::array<PulseSign, 4> multifreq_signs(Component c);

struct ProtocolPlan {
  ProtocolKind kind = ProtocolKind::mf_dc;
  Component component = Component::x;
  std::array<double, 4> times{};  // free-evolution time per axis class
  std::optional<double> omega_ac;
  std::array<PulseSign, 4> signs{PulseSign::plus, PulseSign::plus, PulseSign::plus, PulseSign::plus};
  std::pair<AxisId, AxisId> pair{AxisId(1), AxisId(4)};
  /// Duration of one repetition. Unset: t_a + t_b (conventional) or
  /// max_k t_k (multi-frequency).
  std::optional<double> cycle_time;

  [[nodiscard]] static ProtocolPlan conventional(ProtocolKind kind, Component c, double t,
                                                 std::optional<double> omega_ac = std::nullopt);
  [[nodiscard]] static ProtocolPlan multifreq(ProtocolKind kind, Component c, const std::array<double, 4>& times,
                                              std::optional<double> omega_ac = std::nullopt);
  [[nodiscard]] static ProtocolPlan multifreq(ProtocolKind kind, Component c, double t,
                                              std::optional<double> omega_ac = std::nullopt) {
    return multifreq(kind, c, {t, t, t, t}, omega_ac);
  }
  /// t = 1/(4 gamma_max) (gamma' for AC) over the driven axes, and for AC
  /// omega_ac = theta_opt / t.
  [[nodiscard]] static ProtocolPlan optimal(ProtocolKind kind, Component c, const EnsembleParams& params);

  /// Axes that carry signal: the pair, or all four.
  [[nodiscard]] std::vector<AxisId> driven_axes() const;
  [[nodiscard]] double repetition_time() const;
  [[nodiscard]] std::size_t shots_per_repetition() const noexcept { return is_conventional(kind) ? 2 : 1; }

  /// Empty when the plan is well-formed.
  [[nodiscard]] std::vector<std::string> violations() const;
  void validate() const;
};

enum class SignalMode {
  linearized,  // sin(phi) ~ phi
  exact,       // exact two-level mixture
};

struct SignalModel {
  double mean = 0.0;        // expected photons per repetition
  double variance = 0.0;    // shot-noise variance per repetition
  double derivative = 0.0;  // d mean / d B_target (per tesla)
  Vec3 gradient = Vec3::Zero();  // d mean / d B for all three components
};

/// Per-axis phase gain: t_k for DC, f(omega t_k)/omega for AC.
[[nodiscard]] double phase_gain(const ProtocolPlan& plan, AxisId axis);
/// e^{-2 gamma_k t_k} (DC) or e^{-2 gamma'_k t_k} (AC).
[[nodiscard]] double decay(const ProtocolPlan& plan, const EnsembleParams& params, AxisId axis);

[[nodiscard]] SignalModel conventional_signal(const ProtocolPlan& plan, const Vec3& field,
                                              const EnsembleParams& params, const PhysicalConstants& constants,
                                              SignalMode mode = SignalMode::linearized);
[[nodiscard]] SignalModel multifreq_signal(const ProtocolPlan& plan, const Vec3& field, const EnsembleParams& params,
                                           const PhysicalConstants& constants,
                                           SignalMode mode = SignalMode::linearized);
/// Dispatches on plan.kind.
[[nodiscard]] SignalModel signal(const ProtocolPlan& plan, const Vec3& field, const EnsembleParams& params,
                                 const PhysicalConstants& constants, SignalMode mode = SignalMode::linearized);

/// Exact closed-form populations of each axis class under the plan. Idle
/// axes of a conventional plan are reported as |0>.
[[nodiscard]] std::array<Populations, 4> plan_populations(const ProtocolPlan& plan, const Vec3& field,
                                                          const EnsembleParams& params,
                                                          const PhysicalConstants& constants);

/// Emission probabilities for shot sampling at a true field.
[[nodiscard]] ShotLayout shot_layout(const ProtocolPlan& plan, const Vec3& field, const EnsembleParams& params,
                                     const PhysicalConstants& constants);

struct SensitivityReport {
  double delta_B = 0.0;      // tesla, after total time T
  double T = 0.0;            // seconds
  double t_used = 0.0;       // longest per-axis free-evolution time
  double repetitions = 0.0;  // T / repetition_time
  std::optional<double> omega_ac_used;
  double normalized = 0.0;   // delta_B * sqrt(T), tesla sqrt(s)
};

/// sqrt(variance) / |slope| / sqrt(N) at B = 0 with the linearized slope.
/// Returns a degenerate_signal failure when the slope vanishes.
[[nodiscard]] Outcome<SensitivityReport> sensitivity(const ProtocolPlan& plan, const EnsembleParams& params,
                                                     const PhysicalConstants& constants, double T);
[[nodiscard]] Outcome<SensitivityReport> dc_sensitivity(const ProtocolPlan& plan, const EnsembleParams& params,
                                                        const PhysicalConstants& constants, double T);
[[nodiscard]] Outcome<SensitivityReport> ac_sensitivity(const ProtocolPlan& plan, const EnsembleParams& params,
                                                        const PhysicalConstants& constants, double T);

/// argmax over (0, 2pi) of |f(theta)|/theta, f the echo filter. ~1.856 pi.
[[nodiscard]] double optimize_theta();
/// |f(theta)| / theta
[[nodiscard]] double theta_objective(double theta) noexcept;

enum class SweepParameter { t, omega_ac };

struct SweepPoint {
  double parameter = 0.0;
  double delta_B = 0.0;
  double normalized = 0.0;
  bool degenerate = false;
};

/// Re-evaluates the sensitivity with every per-axis time (or omega_ac)
/// replaced by each value in turn.
[[nodiscard]] std::vector<SweepPoint> sensitivity_sweep(const ProtocolPlan& plan, const EnsembleParams& params,
                                                        const PhysicalConstants& constants, double T,
                                                        SweepParameter parameter, const std::vector<double>& values);

struct JointAcOptimum {
  double t = 0.0;
  double omega_ac = 0.0;
  double normalized = 0.0;
};

/// Diagnostic grid search over (t, omega_ac) for an AC plan.
[[nodiscard]] JointAcOptimum joint_ac_scan(const ProtocolPlan& plan, const EnsembleParams& params,
                                           const PhysicalConstants& constants, const std::vector<double>& t_values,
                                           const std::vector<double>& omega_values);

/// (mean count - model mean at B = 0) / slope, from the repetition totals.
[[nodiscard]] Outcome<double> estimate_component(const ShotSummary& summary, const ProtocolPlan& plan,
                                                 const EnsembleParams& params, const PhysicalConstants& constants);
[[nodiscard]] Outcome<double> estimate_component(const ShotRecord& record, const ProtocolPlan& plan,
                                                 const EnsembleParams& params, const PhysicalConstants& constants);

struct ComponentMeasurement {
  const ShotRecord* record = nullptr;
  ProtocolPlan plan;
};

/// Component-wise estimate from one x, one y and one z measurement.
[[nodiscard]] Outcome<Vec3> estimate_vector(const std::array<ComponentMeasurement, 3>& measurements,
                                            const EnsembleParams& params, const PhysicalConstants& constants);

}  // namespace nvsense
