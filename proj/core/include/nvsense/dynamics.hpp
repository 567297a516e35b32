#pragma once

// Single-NV two-level dynamics: closed-form Ramsey and spin-echo populations
// and a Lindblad pure-dephasing integrator used to check them.
//
// Rotation convention: R_a(theta) = exp(-i theta sigma_a / 2), i.e. a
// right-handed rotation of the Bloch vector by theta about axis a. With it,
// pi/2_y . free(t) . pi/2_x maps |0> to p0 = (1 + e^{-2 gamma t} sin phi)/2.

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "nvsense/model.hpp"
#include "nvsense/ode.hpp"

namespace nvsense {

/// Density matrix [[p0, c], [c*, p1]] with c = re + i im.
struct QubitState {
  double p0 = 1.0;
  double p1 = 0.0;
  double re = 0.0;
  double im = 0.0;

  [[nodiscard]] static QubitState ground() noexcept { return {1.0, 0.0, 0.0, 0.0}; }
  /// (|0> + |1>)/sqrt2
  [[nodiscard]] static QubitState plus() noexcept { return {0.5, 0.5, 0.5, 0.0}; }

  [[nodiscard]] double trace() const noexcept { return p0 + p1; }
  [[nodiscard]] double coherence_magnitude() const noexcept;
  /// (x, y, z) with rho = (tr + x sx + y sy + z sz)/2.
  [[nodiscard]] Vec3 bloch() const noexcept;
  [[nodiscard]] static QubitState from_bloch(const Vec3& r, double trace = 1.0) noexcept;
};

struct Populations {
  double p0 = 0.5;
  double p1 = 0.5;
};

struct AccumulatedPhase {
  double radians = 0.0;
};

/// Sign of the final readout pulse: +1 for pi/2_x, -1 for 3pi/2_x.
enum class PulseSign : int { plus = 1, minus = -1 };

[[nodiscard]] constexpr double as_double(PulseSign s) noexcept { return static_cast<double>(static_cast<int>(s)); }
[[nodiscard]] PulseSign pulse_sign_from_int(int s);

enum class RotationAxis { x, y };

struct Rotation {
  RotationAxis axis = RotationAxis::x;
  int quarter_turns = 1;  // 1, 2 or 3 -> pi/2, pi, 3pi/2

  [[nodiscard]] double angle() const noexcept;
};

/// Free evolution. A nonzero rabi models a finite-duration resonant drive
/// (only meaningful in the ODE route).
struct FreeEvolution {
  double duration = 0.0;
  double rabi = 0.0;
};

using PulseEvent = std::variant<Rotation, FreeEvolution>;

enum class DephasingChannel { ramsey, echo };

struct PulseSequence {
  std::vector<PulseEvent> events;
  DephasingChannel dephasing = DephasingChannel::ramsey;

  /// pi/2_y, free(t), pi/2_x (plus) or 3pi/2_x (minus).
  [[nodiscard]] static PulseSequence ramsey(double t, PulseSign sign = PulseSign::plus);
  /// pi/2_y, free(t/2), pi_y, free(t/2), pi/2_x or 3pi/2_x.
  [[nodiscard]] static PulseSequence echo(double t, PulseSign sign = PulseSign::plus);

  [[nodiscard]] double total_duration() const noexcept;
  /// Throws std::invalid_argument for negative durations or bad angles.
  void validate() const;
};

/// phi = gyro * (B . d_k) * t
[[nodiscard]] AccumulatedPhase ramsey_phase(const Vec3& field, AxisId axis, double t,
                                            const PhysicalConstants& constants);

/// Echo filter f(theta) = 1 + cos(theta) - 2 cos(theta/2).
[[nodiscard]] double echo_filter(double theta) noexcept;
/// d f / d theta
[[nodiscard]] double echo_filter_derivative(double theta) noexcept;

/// theta = gyro * (B_ac . d_k) * f(omega_ac t) / omega_ac for an AC field
/// B_ac sin(omega_ac t) starting at phase zero.
[[nodiscard]] AccumulatedPhase echo_phase(const Vec3& field, AxisId axis, double t, double omega_ac,
                                          const PhysicalConstants& constants);

/// p0 = (1 + s e^{-2 gamma t} sin phi)/2
[[nodiscard]] Populations ramsey_populations(AccumulatedPhase phi, double gamma, double t, PulseSign sign);
[[nodiscard]] Populations echo_populations(AccumulatedPhase theta, double gamma_prime, double t,
                                           PulseSign sign);

struct MasterEquationOptions {
  ode::Tolerance tolerance{};
  std::function<void(double, const QubitState&)> observer;
};

/// Lindblad evolution with H = (detuning/2) sz + (rabi/2) sx and pure
/// dephasing -gamma (rho - sz rho sz), over a duration t.
[[nodiscard]] QubitState integrate_master_equation(const QubitState& initial, double detuning, double rabi,
                                                   double gamma, double t,
                                                   const MasterEquationOptions& options = {});

/// Same with a time-dependent detuning, integrated over [t0, t1] in absolute
/// sequence time.
[[nodiscard]] QubitState integrate_master_equation(const QubitState& initial,
                                                   const std::function<double(double)>& detuning,
                                                   double rabi, double gamma, double t0, double t1,
                                                   const MasterEquationOptions& options = {});

/// Instantaneous ideal rotation.
[[nodiscard]] QubitState apply_rotation(const QubitState& state, const Rotation& rotation) noexcept;

enum class EvolutionMode { closed_form, ode_oracle };

/// Field seen by the sequence: static, or B_ac sin(omega_ac t) when
/// omega_ac is set.
struct FieldDrive {
  Vec3 amplitude = Vec3::Zero();
  std::optional<double> omega_ac;

  [[nodiscard]] static FieldDrive dc(const Vec3& b) { return {b, std::nullopt}; }
  [[nodiscard]] static FieldDrive ac(const Vec3& b, double omega) { return {b, omega}; }
};

/// Runs a sequence on one axis class starting from |0>. The closed-form route
/// only accepts the Ramsey and echo templates (echo refocusing about x or y)
/// and throws std::invalid_argument otherwise.
[[nodiscard]] Populations run_sequence(const PulseSequence& seq, const FieldDrive& drive, AxisId axis,
                                       const EnsembleParams& params, const PhysicalConstants& constants,
                                       EvolutionMode mode, const MasterEquationOptions& options = {});

}  // namespace nvsense
