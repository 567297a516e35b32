#include "nvsense/dynamics.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nvsense {

namespace {

using State4 = std::array<double, 4>;

State4 to_array(const QubitState& s) { return {s.p0, s.p1, s.re, s.im}; }
QubitState from_array(const State4& a) { return {a[0], a[1], a[2], a[3]}; }

template <class Detuning>
QubitState evolve(const QubitState& initial, Detuning&& detuning, double rabi, double gamma, double t0,
                  double t1, const MasterEquationOptions& options) {
  if (!(t1 >= t0)) throw std::invalid_argument("evolution duration must be >= 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("dephasing rate must be >= 0");
  if (t1 == t0) return initial;

  // rho = [[p0, u + i v], [u - i v, p1]]
  //   dp0/dt = -rabi v,  dp1/dt = rabi v
  //   du/dt  =  D v - 2 gamma u
  //   dv/dt  = -D u + rabi (p0 - p1)/2 - 2 gamma v
  const auto rhs = [&](double t, const State4& y) -> State4 {
    const double d = detuning(t);
    const double u = y[2], v = y[3];
    return {-rabi * v, rabi * v, d * v - 2.0 * gamma * u, -d * u + 0.5 * rabi * (y[0] - y[1]) - 2.0 * gamma * v};
  };

  if (options.observer) {
    const auto observe = [&](double t, const State4& y) { options.observer(t, from_array(y)); };
    return from_array(ode::integrate<4>(rhs, to_array(initial), t0, t1, options.tolerance, observe));
  }
  return from_array(ode::integrate<4>(rhs, to_array(initial), t0, t1, options.tolerance));
}

bool is_rotation(const PulseEvent& e, RotationAxis axis, int quarter_turns) {
  const auto* r = std::get_if<Rotation>(&e);
  return r && r->axis == axis && r->quarter_turns == quarter_turns;
}

const Rotation* rotation_if(const PulseEvent& e) { return std::get_if<Rotation>(&e); }
const FreeEvolution* free_if(const PulseEvent& e) { return std::get_if<FreeEvolution>(&e); }

// Final pi/2_x -> +1, 3pi/2_x -> -1, anything else -> nullopt.
std::optional<PulseSign> readout_sign(const PulseEvent& e) {
  if (is_rotation(e, RotationAxis::x, 1)) return PulseSign::plus;
  if (is_rotation(e, RotationAxis::x, 3)) return PulseSign::minus;
  return std::nullopt;
}

struct RecognizedRamsey {
  double t;
  PulseSign sign;
};

struct RecognizedEcho {
  double t;
  PulseSign sign;  // effective sign including the refocusing axis
};

std::optional<RecognizedRamsey> recognize_ramsey(const PulseSequence& seq) {
  const auto& ev = seq.events;
  if (ev.size() != 3 || !is_rotation(ev[0], RotationAxis::y, 1)) return std::nullopt;
  const auto* f = free_if(ev[1]);
  const auto sign = readout_sign(ev[2]);
  if (!f || f->rabi != 0.0 || !sign) return std::nullopt;
  return RecognizedRamsey{f->duration, *sign};
}

std::optional<RecognizedEcho> recognize_echo(const PulseSequence& seq) {
  const auto& ev = seq.events;
  if (ev.size() != 5 || !is_rotation(ev[0], RotationAxis::y, 1)) return std::nullopt;
  const auto* a = free_if(ev[1]);
  const auto* refocus = rotation_if(ev[2]);
  const auto* b = free_if(ev[3]);
  const auto sign = readout_sign(ev[4]);
  if (!a || !b || !refocus || !sign || a->rabi != 0.0 || b->rabi != 0.0) return std::nullopt;
  if (refocus->quarter_turns != 2) return std::nullopt;
  const double half = a->duration;
  if (std::abs(a->duration - b->duration) > 1e-12 * std::max(half, 1e-300)) return std::nullopt;
  // A pi_x refocusing pulse mirrors the phase the other way round from pi_y.
  const PulseSign effective =
      refocus->axis == RotationAxis::y ? *sign : (*sign == PulseSign::plus ? PulseSign::minus : PulseSign::plus);
  return RecognizedEcho{a->duration + b->duration, effective};
}

Populations populations_of(const QubitState& s) { return {s.p0, s.p1}; }

}  // namespace

double QubitState::coherence_magnitude() const noexcept { return std::hypot(re, im); }

Vec3 QubitState::bloch() const noexcept { return {2.0 * re, -2.0 * im, p0 - p1}; }

QubitState QubitState::from_bloch(const Vec3& r, double trace) noexcept {
  return {(trace + r.z()) / 2.0, (trace - r.z()) / 2.0, r.x() / 2.0, -r.y() / 2.0};
}

PulseSign pulse_sign_from_int(int s) {
  if (s == 1) return PulseSign::plus;
  if (s == -1) return PulseSign::minus;
  throw std::invalid_argument("final pulse sign must be +1 or -1, got " + std::to_string(s));
}

double Rotation::angle() const noexcept { return quarter_turns * std::numbers::pi / 2.0; }

PulseSequence PulseSequence::ramsey(double t, PulseSign sign) {
  PulseSequence seq;
  seq.events = {Rotation{RotationAxis::y, 1}, FreeEvolution{t, 0.0},
                Rotation{RotationAxis::x, sign == PulseSign::plus ? 1 : 3}};
  seq.dephasing = DephasingChannel::ramsey;
  return seq;
}

PulseSequence PulseSequence::echo(double t, PulseSign sign) {
  PulseSequence seq;
  seq.events = {Rotation{RotationAxis::y, 1}, FreeEvolution{t / 2.0, 0.0}, Rotation{RotationAxis::y, 2},
                FreeEvolution{t / 2.0, 0.0}, Rotation{RotationAxis::x, sign == PulseSign::plus ? 1 : 3}};
  seq.dephasing = DephasingChannel::echo;
  return seq;
}

double PulseSequence::total_duration() const noexcept {
  double total = 0.0;
  for (const auto& e : events) {
    if (const auto* f = std::get_if<FreeEvolution>(&e)) total += f->duration;
  }
  return total;
}

void PulseSequence::validate() const {
  for (const auto& e : events) {
    if (const auto* f = std::get_if<FreeEvolution>(&e)) {
      if (!(f->duration >= 0.0) || !std::isfinite(f->duration)) {
        throw std::invalid_argument("free evolution duration must be finite and >= 0");
      }
      if (!std::isfinite(f->rabi)) throw std::invalid_argument("rabi frequency must be finite");
    } else {
      const auto& r = std::get<Rotation>(e);
      if (r.quarter_turns < 1 || r.quarter_turns > 3) {
        throw std::invalid_argument("rotation angle must be pi/2, pi or 3pi/2");
      }
    }
  }
}

AccumulatedPhase ramsey_phase(const Vec3& field, AxisId axis, double t, const PhysicalConstants& constants) {
  if (!(t >= 0.0)) throw std::invalid_argument("ramsey_phase: t must be >= 0");
  return {constants.gyromagnetic_ratio * AxisSet::projection(field, axis) * t};
}

double echo_filter(double theta) noexcept { return 1.0 + std::cos(theta) - 2.0 * std::cos(theta / 2.0); }

double echo_filter_derivative(double theta) noexcept { return -std::sin(theta) + std::sin(theta / 2.0); }

AccumulatedPhase echo_phase(const Vec3& field, AxisId axis, double t, double omega_ac,
                            const PhysicalConstants& constants) {
  if (!(t >= 0.0)) throw std::invalid_argument("echo_phase: t must be >= 0");
  if (!(omega_ac > 0.0)) throw std::invalid_argument("echo_phase: omega_ac must be > 0");
  return {constants.gyromagnetic_ratio * AxisSet::projection(field, axis) * echo_filter(omega_ac * t) / omega_ac};
}

Populations ramsey_populations(AccumulatedPhase phi, double gamma, double t, PulseSign sign) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("ramsey_populations: gamma must be >= 0");
  if (!(t >= 0.0)) throw std::invalid_argument("ramsey_populations: t must be >= 0");
  const double fringe = as_double(sign) * std::exp(-2.0 * gamma * t) * std::sin(phi.radians);
  const double p0 = 0.5 * (1.0 + fringe);
  return {p0, 1.0 - p0};
}

Populations echo_populations(AccumulatedPhase theta, double gamma_prime, double t, PulseSign sign) {
  return ramsey_populations(theta, gamma_prime, t, sign);
}

QubitState integrate_master_equation(const QubitState& initial, double detuning, double rabi, double gamma,
                                     double t, const MasterEquationOptions& options) {
  return evolve(initial, [detuning](double) { return detuning; }, rabi, gamma, 0.0, t, options);
}

QubitState integrate_master_equation(const QubitState& initial, const std::function<double(double)>& detuning,
                                     double rabi, double gamma, double t0, double t1,
                                     const MasterEquationOptions& options) {
  return evolve(initial, detuning, rabi, gamma, t0, t1, options);
}

QubitState apply_rotation(const QubitState& state, const Rotation& rotation) noexcept {
  const Vec3 r = state.bloch();
  const double c = std::cos(rotation.angle());
  const double s = std::sin(rotation.angle());
  Vec3 out = r;
  if (rotation.axis == RotationAxis::x) {
    out.y() = r.y() * c - r.z() * s;
    out.z() = r.y() * s + r.z() * c;
  } else {
    out.x() = r.x() * c + r.z() * s;
    out.z() = -r.x() * s + r.z() * c;
  }
  return QubitState::from_bloch(out, state.trace());
}

Populations run_sequence(const PulseSequence& seq, const FieldDrive& drive, AxisId axis,
                         const EnsembleParams& params, const PhysicalConstants& constants, EvolutionMode mode,
                         const MasterEquationOptions& options) {
  seq.validate();
  require_finite(drive.amplitude, "field");
  if (drive.omega_ac && !(*drive.omega_ac > 0.0)) throw std::invalid_argument("omega_ac must be > 0");

  const AxisParams& ap = params[axis];
  const double gamma = seq.dephasing == DephasingChannel::ramsey ? ap.gamma : ap.gamma_prime;
  const double amplitude = constants.gyromagnetic_ratio * AxisSet::projection(drive.amplitude, axis);

  if (mode == EvolutionMode::closed_form) {
    if (const auto r = recognize_ramsey(seq)) {
      AccumulatedPhase phi{amplitude * r->t};
      if (drive.omega_ac) {
        const double w = *drive.omega_ac;
        phi.radians = amplitude * (1.0 - std::cos(w * r->t)) / w;
      }
      return ramsey_populations(phi, gamma, r->t, r->sign);
    }
    if (const auto e = recognize_echo(seq)) {
      // A static field is fully refocused.
      const AccumulatedPhase theta =
          drive.omega_ac ? echo_phase(drive.amplitude, axis, e->t, *drive.omega_ac, constants) : AccumulatedPhase{0.0};
      return echo_populations(theta, gamma, e->t, e->sign);
    }
    throw std::invalid_argument("closed-form evaluation needs a Ramsey or echo template sequence");
  }

  QubitState state = QubitState::ground();
  double clock = 0.0;
  for (const auto& event : seq.events) {
    if (const auto* rot = std::get_if<Rotation>(&event)) {
      state = apply_rotation(state, *rot);
      continue;
    }
    const auto& free = std::get<FreeEvolution>(event);
    const double t_end = clock + free.duration;
    if (drive.omega_ac) {
      const double w = *drive.omega_ac;
      state = integrate_master_equation(
          state, [amplitude, w](double s) { return amplitude * std::sin(w * s); }, free.rabi, gamma, clock, t_end,
          options);
    } else {
      state = integrate_master_equation(state, amplitude, free.rabi, gamma, free.duration, options);
    }
    clock = t_end;
  }
  return populations_of(state);
}

}  // namespace nvsense
