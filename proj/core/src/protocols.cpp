#include "nvsense/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nvsense/roots.hpp"

namespace nvsense {

std::pair<AxisId, AxisId> conventional_pair(Component c) { return {AxisId(index_of(c) + 1), AxisId(4)}; }

std::array<PulseSign, 4> multifreq_signs(Component c) {
  std::array<PulseSign, 4> signs{};
  for (AxisId k : AxisId::all()) {
    signs[k.slot()] = AxisSet::direction(k)[index_of(c)] > 0.0 ? PulseSign::minus : PulseSign::plus;
  }
  return signs;
}

ProtocolPlan ProtocolPlan::conventional(ProtocolKind kind, Component c, double t, std::optional<double> omega_ac) {
  if (!is_conventional(kind)) throw std::invalid_argument("conventional plan needs a conv_* kind");
  ProtocolPlan plan;
  plan.kind = kind;
  plan.component = c;
  plan.times = {t, t, t, t};
  plan.omega_ac = omega_ac;
  plan.pair = conventional_pair(c);
  plan.validate();
  return plan;
}

ProtocolPlan ProtocolPlan::multifreq(ProtocolKind kind, Component c, const std::array<double, 4>& times,
                                     std::optional<double> omega_ac) {
  if (is_conventional(kind)) throw std::invalid_argument("multi-frequency plan needs an mf_* kind");
  ProtocolPlan plan;
  plan.kind = kind;
  plan.component = c;
  plan.times = times;
  plan.omega_ac = omega_ac;
  plan.signs = multifreq_signs(c);
  plan.validate();
  return plan;
}

ProtocolPlan ProtocolPlan::optimal(ProtocolKind kind, Component c, const EnsembleParams& params) {
  ProtocolPlan probe;
  probe.kind = kind;
  probe.pair = conventional_pair(c);
  double rate = 0.0;
  for (AxisId k : probe.driven_axes()) {
    rate = std::max(rate, is_ac(kind) ? params[k].gamma_prime : params[k].gamma);
  }
  if (!(rate > 0.0)) throw std::invalid_argument("optimal plan needs positive dephasing rates");
  const double t = 1.0 / (4.0 * rate);
  const std::optional<double> omega = is_ac(kind) ? std::optional<double>(optimize_theta() / t) : std::nullopt;
  return is_conventional(kind) ? conventional(kind, c, t, omega) : multifreq(kind, c, t, omega);
}

std::vector<AxisId> ProtocolPlan::driven_axes() const {
  if (is_conventional(kind)) return {pair.first, pair.second};
  const auto all = AxisId::all();
  return {all.begin(), all.end()};
}

double ProtocolPlan::repetition_time() const {
  if (cycle_time) return *cycle_time;
  if (is_conventional(kind)) return times[pair.first.slot()] + times[pair.second.slot()];
  return *std::max_element(times.begin(), times.end());
}

std::vector<std::string> ProtocolPlan::violations() const {
  std::vector<std::string> out;
  for (AxisId k : driven_axes()) {
    const double t = times[k.slot()];
    if (!(t > 0.0) || !std::isfinite(t)) {
      out.push_back("protocol: evolution time of axis " + std::to_string(k.index()) + " must be finite and > 0");
    }
  }
  if (is_ac(kind)) {
    if (!omega_ac || !(*omega_ac > 0.0) || !std::isfinite(*omega_ac)) {
      out.emplace_back("protocol: AC kinds need a finite omega_ac > 0");
    }
  } else if (omega_ac) {
    out.emplace_back("protocol: omega_ac is only meaningful for AC kinds");
  }
  if (is_conventional(kind)) {
    if (pair != conventional_pair(component)) {
      out.emplace_back(std::string("protocol: conventional axis pair does not isolate component ") +
                       to_char(component));
    }
  } else if (signs != multifreq_signs(component)) {
    out.emplace_back(std::string("protocol: sign pattern must flip exactly the axes with positive ") +
                     to_char(component) + " projection");
  }
  if (cycle_time) {
    double longest = 0.0;
    for (AxisId k : driven_axes()) longest = std::max(longest, times[k.slot()]);
    if (!(*cycle_time >= longest)) out.emplace_back("protocol: cycle time shorter than the longest evolution");
  }
  return out;
}

void ProtocolPlan::validate() const {
  const auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

double phase_gain(const ProtocolPlan& plan, AxisId axis) {
  const double t = plan.times[axis.slot()];
  if (!is_ac(plan.kind)) return t;
  const double w = plan.omega_ac.value();
  return echo_filter(w * t) / w;
}

double decay(const ProtocolPlan& plan, const EnsembleParams& params, AxisId axis) {
  const AxisParams& a = params[axis];
  const double rate = is_ac(plan.kind) ? a.gamma_prime : a.gamma;
  return std::exp(-2.0 * rate * plan.times[axis.slot()]);
}

namespace {

SignalModel evaluate(const ProtocolPlan& plan, const Vec3& field, const EnsembleParams& params,
                     const PhysicalConstants& constants, SignalMode mode) {
  plan.validate();
  require_finite(field, "field");
  const bool conv = is_conventional(plan.kind);
  const double gyro = constants.gyromagnetic_ratio;

  SignalModel out;
  for (AxisId k : plan.driven_axes()) {
    const AxisParams& a = params[k];
    const double gain = phase_gain(plan, k);
    const double visibility = decay(plan, params, k) * a.contrast() / 2.0;
    const double s = conv ? 1.0 : as_double(plan.signs[k.slot()]);
    const double phi = gyro * AxisSet::projection(field, k) * gain;

    double baseline = (a.alpha0 + a.alpha1) / 2.0;
    if (conv) {
      const EffectiveEmission e = effective_emission(params, k);
      baseline = (e.alpha_tilde0 + e.alpha_tilde1) / 2.0;
    }
    const bool exact = mode == SignalMode::exact;
    out.mean += baseline + s * visibility * (exact ? std::sin(phi) : phi);
    out.gradient += (s * visibility * (exact ? std::cos(phi) : 1.0) * gyro * gain) * AxisSet::direction(k);
  }
  out.variance = shot_variance(out.mean);
  out.derivative = out.gradient[index_of(plan.component)];
  return out;
}

// Slope scale used to decide that a computed slope is numerically zero.
double slope_reference(const ProtocolPlan& plan, const EnsembleParams& params, const PhysicalConstants& constants) {
  double ref = 0.0;
  for (AxisId k : plan.driven_axes()) ref += params[k].alpha0 * plan.times[k.slot()];
  return constants.gyromagnetic_ratio * ref;
}

}  // namespace

SignalModel conventional_signal(const ProtocolPlan& plan, const Vec3& field, const EnsembleParams& params,
                                const PhysicalConstants& constants, SignalMode mode) {
  if (!is_conventional(plan.kind)) throw std::invalid_argument("conventional_signal: plan is multi-frequency");
  return evaluate(plan, field, params, constants, mode);
}

SignalModel multifreq_signal(const ProtocolPlan& plan, const Vec3& field, const EnsembleParams& params,
                             const PhysicalConstants& constants, SignalMode mode) {
  if (is_conventional(plan.kind)) throw std::invalid_argument("multifreq_signal: plan is conventional");
  return evaluate(plan, field, params, constants, mode);
}

SignalModel signal(const ProtocolPlan& plan, const Vec3& field, const EnsembleParams& params,
                   const PhysicalConstants& constants, SignalMode mode) {
  return evaluate(plan, field, params, constants, mode);
}

std::array<Populations, 4> plan_populations(const ProtocolPlan& plan, const Vec3& field,
                                            const EnsembleParams& params, const PhysicalConstants& constants) {
  plan.validate();
  std::array<Populations, 4> pops{};
  pops.fill(Populations{1.0, 0.0});
  const bool conv = is_conventional(plan.kind);
  for (AxisId k : plan.driven_axes()) {
    const double t = plan.times[k.slot()];
    const PulseSign s = conv ? PulseSign::plus : plan.signs[k.slot()];
    if (is_ac(plan.kind)) {
      pops[k.slot()] = echo_populations(echo_phase(field, k, t, *plan.omega_ac, constants), params[k].gamma_prime, t, s);
    } else {
      pops[k.slot()] = ramsey_populations(ramsey_phase(field, k, t, constants), params[k].gamma, t, s);
    }
  }
  return pops;
}

ShotLayout shot_layout(const ProtocolPlan& plan, const Vec3& field, const EnsembleParams& params,
                       const PhysicalConstants& constants) {
  const auto pops = plan_populations(plan, field, params, constants);
  if (!is_conventional(plan.kind)) return parallel_layout(params, pops);
  const std::array<AxisId, 2> driven{plan.pair.first, plan.pair.second};
  const std::array<Populations, 2> driven_pops{pops[plan.pair.first.slot()], pops[plan.pair.second.slot()]};
  return sequential_layout(params, driven, driven_pops);
}

Outcome<SensitivityReport> sensitivity(const ProtocolPlan& plan, const EnsembleParams& params,
                                       const PhysicalConstants& constants, double T) {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("sensitivity: total time T must be > 0");
  const SignalModel model = evaluate(plan, Vec3::Zero(), params, constants, SignalMode::linearized);
  const double slope = std::abs(model.derivative);
  if (!(slope > 1e-12 * slope_reference(plan, params, constants))) {
    return Failure{FailureKind::degenerate_signal,
                   std::string("signal slope with respect to B_") + to_char(plan.component) +
                       " vanishes (zero contrast or echo filter null)"};
  }
  SensitivityReport report;
  report.T = T;
  report.repetitions = T / plan.repetition_time();
  for (AxisId k : plan.driven_axes()) report.t_used = std::max(report.t_used, plan.times[k.slot()]);
  report.omega_ac_used = plan.omega_ac;
  report.delta_B = std::sqrt(model.variance) / slope / std::sqrt(report.repetitions);
  report.normalized = report.delta_B * std::sqrt(T);
  return report;
}

Outcome<SensitivityReport> dc_sensitivity(const ProtocolPlan& plan, const EnsembleParams& params,
                                          const PhysicalConstants& constants, double T) {
  if (is_ac(plan.kind)) throw std::invalid_argument("dc_sensitivity: plan is an AC protocol");
  return sensitivity(plan, params, constants, T);
}

Outcome<SensitivityReport> ac_sensitivity(const ProtocolPlan& plan, const EnsembleParams& params,
                                          const PhysicalConstants& constants, double T) {
  if (!is_ac(plan.kind)) throw std::invalid_argument("ac_sensitivity: plan is a DC protocol");
  return sensitivity(plan, params, constants, T);
}

double theta_objective(double theta) noexcept { return std::abs(echo_filter(theta)) / theta; }

double optimize_theta() {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  constexpr int grid = 2048;
  int best = 1;
  for (int i = 1; i < grid; ++i) {
    if (theta_objective(two_pi * i / grid) > theta_objective(two_pi * best / grid)) best = i;
  }
  const double lo = two_pi * (best - 1) / grid;
  const double hi = two_pi * std::min(best + 1, grid - 1) / grid;
  // Stationary point of f/theta: f'(theta) theta - f(theta) = 0.
  const auto stationary = [](double theta) {
    return echo_filter_derivative(theta) * theta - echo_filter(theta);
  };
  return bisect(stationary, lo, hi, {1e-15, 400});
}

std::vector<SweepPoint> sensitivity_sweep(const ProtocolPlan& plan, const EnsembleParams& params,
                                          const PhysicalConstants& constants, double T, SweepParameter parameter,
                                          const std::vector<double>& values) {
  std::vector<SweepPoint> out;
  out.reserve(values.size());
  for (double v : values) {
    ProtocolPlan p = plan;
    p.cycle_time.reset();
    if (parameter == SweepParameter::t) {
      for (AxisId k : p.driven_axes()) p.times[k.slot()] = v;
    } else {
      if (!is_ac(p.kind)) throw std::invalid_argument("omega_ac sweep needs an AC protocol");
      p.omega_ac = v;
    }
    const auto r = sensitivity(p, params, constants, T);
    if (r) {
      out.push_back({v, r->delta_B, r->normalized, false});
    } else {
      out.push_back({v, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), true});
    }
  }
  return out;
}

JointAcOptimum joint_ac_scan(const ProtocolPlan& plan, const EnsembleParams& params,
                             const PhysicalConstants& constants, const std::vector<double>& t_values,
                             const std::vector<double>& omega_values) {
  if (!is_ac(plan.kind)) throw std::invalid_argument("joint_ac_scan needs an AC protocol");
  JointAcOptimum best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (double t : t_values) {
    ProtocolPlan p = plan;
    p.cycle_time.reset();
    for (AxisId k : p.driven_axes()) p.times[k.slot()] = t;
    for (double w : omega_values) {
      p.omega_ac = w;
      const auto r = sensitivity(p, params, constants, 1.0);
      if (r && r->normalized < best.normalized) best = {t, w, r->normalized};
    }
  }
  return best;
}

Outcome<double> estimate_component(const ShotSummary& summary, const ProtocolPlan& plan,
                                   const EnsembleParams& params, const PhysicalConstants& constants) {
  if (summary.repetitions == 0) throw std::invalid_argument("estimate_component: empty record");
  const SignalModel at_zero = evaluate(plan, Vec3::Zero(), params, constants, SignalMode::linearized);
  if (!(std::abs(at_zero.derivative) > 1e-12 * slope_reference(plan, params, constants))) {
    return Failure{FailureKind::degenerate_signal, std::string("cannot invert a zero slope for B_") +
                                                       to_char(plan.component)};
  }
  return (summary.mean() - at_zero.mean) / at_zero.derivative;
}

Outcome<double> estimate_component(const ShotRecord& record, const ProtocolPlan& plan, const EnsembleParams& params,
                                   const PhysicalConstants& constants) {
  if (record.protocol != plan.kind || record.shots_per_repetition != plan.shots_per_repetition()) {
    return Failure{FailureKind::invalid_plan, "shot record was not produced by this protocol"};
  }
  return estimate_component(summarize(record), plan, params, constants);
}

Outcome<Vec3> estimate_vector(const std::array<ComponentMeasurement, 3>& measurements, const EnsembleParams& params,
                              const PhysicalConstants& constants) {
  Vec3 out = Vec3::Zero();
  std::array<bool, 3> seen{};
  for (const auto& m : measurements) {
    if (!m.record) throw std::invalid_argument("estimate_vector: missing shot record");
    const int c = index_of(m.plan.component);
    if (seen[c]) throw std::invalid_argument("estimate_vector: component measured twice");
    seen[c] = true;
    const auto est = estimate_component(*m.record, m.plan, params, constants);
    if (!est) return est.failure();
    out[c] = *est;
  }
  return out;
}

}  // namespace nvsense
