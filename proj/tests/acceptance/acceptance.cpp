// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Geometry>

#include "nvsense/compensation.hpp"
#include "nvsense/dynamics.hpp"
#include "nvsense/protocols.hpp"
#include "nvsense/random.hpp"
#include "nvsense/readout.hpp"
#include "oracles/reference_values.hpp"

using namespace nvsense;
using std::numbers::pi;

namespace {

const PhysicalConstants kConstants{};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned workers() { return std::max(1U, std::thread::hardware_concurrency()); }

EnsembleParams homogeneous(double a0, double a1, double gamma, double gamma_prime) {
  return EnsembleParams::homogeneous({a0, a1, gamma, gamma_prime});
}

Verdict oracle_equivalence() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> axis_pick(1, 4);
  double worst_ramsey = 0.0, worst_echo = 0.0;
  int tuples = 0;
  for (int i = 0; i < 120; ++i) {
    const double gamma = 1e5 + 1.9e6 * unit(rng);
    const double t = (0.05 + 0.95 * unit(rng)) / gamma;
    const AxisId axis(axis_pick(rng));
    const double phi = pi * (2.0 * unit(rng) - 1.0);
    const PulseSign sign = i % 2 ? PulseSign::minus : PulseSign::plus;
    const auto p = homogeneous(0.02, 0.01, gamma, gamma);
    const Vec3 dir = AxisSet::direction(axis);

    // Ramsey: phase phi = gyro B t along the axis, plus a random transverse part.
    Vec3 b = phi / (kConstants.gyromagnetic_ratio * t) * dir;
    b += 1e-6 * (2.0 * unit(rng) - 1.0) * dir.cross(Vec3::UnitX()).normalized();
    const auto seq = PulseSequence::ramsey(t, sign);
    const auto closed = run_sequence(seq, FieldDrive::dc(b), axis, p, kConstants, EvolutionMode::closed_form);
    const auto ode = run_sequence(seq, FieldDrive::dc(b), axis, p, kConstants, EvolutionMode::ode_oracle);
    worst_ramsey = std::max({worst_ramsey, std::abs(closed.p0 - ode.p0), std::abs(closed.p1 - ode.p1)});

    // Echo: pick omega away from the filter null, then scale the amplitude to hit phi.
    const double theta = (0.5 + 5.0 * unit(rng)) * pi;
    if (std::abs(echo_filter(theta)) < 0.05) continue;
    const double omega = theta / t;
    const double gain = echo_filter(theta) / omega;
    const Vec3 b_ac = phi / (kConstants.gyromagnetic_ratio * gain) * dir;
    const auto eseq = PulseSequence::echo(t, sign);
    const auto eclosed =
        run_sequence(eseq, FieldDrive::ac(b_ac, omega), axis, p, kConstants, EvolutionMode::closed_form);
    const auto eode = run_sequence(eseq, FieldDrive::ac(b_ac, omega), axis, p, kConstants, EvolutionMode::ode_oracle);
    worst_echo = std::max({worst_echo, std::abs(eclosed.p0 - eode.p0), std::abs(eclosed.p1 - eode.p1)});
    ++tuples;
  }
  const bool pass = tuples >= 100 && worst_ramsey <= 1e-6 && worst_echo <= 1e-6;
  return {pass, fmt("120 ramsey + %d echo tuples, max |dp| ramsey %.2e echo %.2e", tuples, worst_ramsey, worst_echo)};
}

Verdict theta_opt() {
  const double theta = optimize_theta();
  const double ratio = theta / pi;
  const auto plan = ProtocolPlan::optimal(ProtocolKind::mf_ac, Component::x, homogeneous(0.02, 0.01, 1e6, 1e6));
  const double w = *plan.omega_ac / 1e6;
  const bool pass = ratio >= 1.855 && ratio <= 1.857 && w >= 23.2 && w <= 23.4 &&
                    std::abs(theta - oracle::kThetaOptGrid) < 1e-5;
  return {pass, fmt("theta_opt/pi = %.6f, omega_ac/gamma' = %.4f", ratio, w)};
}

Verdict four_fold() {
  const double eps = 1e-4;
  const auto p = homogeneous(0.02, 0.02 * (1 - eps), 1e6, 1e6);
  double ratios[2];
  int i = 0;
  for (auto [conv, mf] : {std::pair{ProtocolKind::conv_dc, ProtocolKind::mf_dc},
                          std::pair{ProtocolKind::conv_ac, ProtocolKind::mf_ac}}) {
    const auto c = sensitivity(ProtocolPlan::optimal(conv, Component::z, p), p, kConstants, 1.0).value();
    const auto m = sensitivity(ProtocolPlan::optimal(mf, Component::z, p), p, kConstants, 1.0).value();
    ratios[i++] = c.delta_B / m.delta_B;
  }
  const bool pass = std::abs(ratios[0] - 4.0) <= 1e-3 && std::abs(ratios[1] - 4.0) <= 1e-3;
  return {pass, fmt("eps = 1e-4: DC ratio %.6f, AC ratio %.6f", ratios[0], ratios[1])};
}

Verdict variance_numerators() {
  const double a0 = 0.02, a1 = 0.01;
  const auto p = homogeneous(a0, a1, 1e6, 1e6);
  const std::size_t n = 1'000'000;
  const auto conv = ProtocolPlan::optimal(ProtocolKind::conv_dc, Component::x, p);
  const auto mf = ProtocolPlan::optimal(ProtocolKind::mf_dc, Component::x, p);
  const double v_conv = sample_summary(41, shot_layout(conv, Vec3::Zero(), p, kConstants), n, workers()).variance();
  const double v_mf = sample_summary(42, shot_layout(mf, Vec3::Zero(), p, kConstants), n, workers()).variance();
  const double rel_conv = v_conv / (7 * a0 + a1) - 1.0;
  const double rel_mf = v_mf / (2 * (a0 + a1)) - 1.0;
  const bool pass = std::abs(rel_conv) <= 0.05 && std::abs(rel_mf) <= 0.05;
  return {pass, fmt("conv %.5f vs %.5f (%+.2f%%), mf %.5f vs %.5f (%+.2f%%)", v_conv, 7 * a0 + a1, 100 * rel_conv,
                    v_mf, 2 * (a0 + a1), 100 * rel_mf)};
}

Verdict decoupling() {
  const auto p = homogeneous(0.02, 0.01, 1e6, 1e6);
  bool exact_zero = true;
  double worst_ratio = 0.0;  // deviation over cubic bound
  for (ProtocolKind kind : {ProtocolKind::conv_dc, ProtocolKind::conv_ac, ProtocolKind::mf_dc, ProtocolKind::mf_ac}) {
    for (Component c : {Component::x, Component::y, Component::z}) {
      const auto plan = ProtocolPlan::optimal(kind, c, p);
      const auto base = signal(plan, Vec3::Zero(), p, kConstants);
      for (int other = 0; other < 3; ++other) {
        if (other != index_of(c) && base.gradient[other] != 0.0) exact_zero = false;
      }
      // Fields with no target component, |B| up to 1 uT.
      for (int i = 0; i < 24; ++i) {
        const double mag = 1e-6 * (i + 1) / 24.0;
        const double ang = 2 * pi * i / 24.0;
        Vec3 b = Vec3::Zero();
        b[(index_of(c) + 1) % 3] = mag * std::cos(ang);
        b[(index_of(c) + 2) % 3] = mag * std::sin(ang);
        const double dev = std::abs(signal(plan, b, p, kConstants).mean - base.mean);
        double bound = 0.0;
        for (AxisId k : plan.driven_axes()) {
          const double phi = kConstants.gyromagnetic_ratio * phase_gain(plan, k) * b.dot(AxisSet::direction(k));
          const AxisParams& a = p[k];
          bound += std::abs(a.alpha0 - a.alpha1) / 2 * decay(plan, p, k) * std::pow(std::abs(phi), 3) / 6;
        }
        worst_ratio = std::max(worst_ratio, dev / (bound * (1 + 1e-9) + 1e-17));
      }
    }
  }
  const bool pass = exact_zero && worst_ratio <= 1.0;
  return {pass, fmt("off-target gradients %s; max deviation / cubic bound = %.2e over 12 plans x 24 fields",
                    exact_zero ? "exactly 0" : "NONZERO", worst_ratio)};
}

Verdict schedules() {
  const auto draws = draw_inhomogeneous(6, 200, {0.01, 0.001, 1e6, 1e5});
  const double g_max = *std::max_element(draws.rate.begin(), draws.rate.end());
  std::string detail;
  bool pass = true;
  for (CompensationMode m : {CompensationMode::dc, CompensationMode::ac}) {
    try {
      const auto s = solve_schedule(draws, m);
      const double t_hi = *std::max_element(s.times.begin(), s.times.end());
      const bool ok = s.max_relative_error() <= 1e-9 && t_hi <= 1.0 / (4 * g_max) &&
                      std::all_of(s.times.begin(), s.times.end(), [](double t) { return t > 0; });
      pass = pass && ok;
      detail += fmt("%s: max rel err %.1e, max t_j*4gamma_max = %.6f; ", m == CompensationMode::dc ? "DC" : "AC",
                    s.max_relative_error(), t_hi * 4 * g_max);
    } catch (const NoRootError& e) {
      pass = false;
      detail += std::string("no schedule: ") + e.what() + "; ";
    }
  }
  detail.resize(detail.size() - 2);
  return {pass, "200 draws, " + detail};
}

Verdict ratio_curve() {
  RatioCurveConfig cfg;
  cfg.samples = 100'000;
  cfg.seed = 7;
  cfg.workers = workers();
  const auto dc = sensitivity_ratio_curve(cfg);
  cfg.mode = CompensationMode::ac;
  const auto ac = sensitivity_ratio_curve(cfg);

  bool r0 = dc.points[0].r_mean == 1.0 && ac.points[0].r_mean == 1.0;
  bool shape = true, agree = true, regression = true;
  double worst_agree = 0.0, worst_reg = 0.0;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < dc.points.size(); ++i) {
    for (const auto* curve : {&dc, &ac}) {
      const auto& pt = curve->points[i];
      failed += pt.n_failed;
      if (pt.r_mean < 1.0 || (i > 0 && pt.r_mean < curve->points[i - 1].r_mean)) shape = false;
      const double z = std::abs(pt.r_mean - oracle::kRatioQuadrature[i]) / std::max(pt.r_stderr, 1e-300);
      if (i > 0) worst_reg = std::max(worst_reg, z);
      if (i > 0 && z > 4.0) regression = false;
    }
    const double se = std::hypot(dc.points[i].r_stderr, ac.points[i].r_stderr);
    if (i > 0) {
      const double z = std::abs(dc.points[i].r_mean - ac.points[i].r_mean) / se;
      worst_agree = std::max(worst_agree, z);
      if (z > 3.0) agree = false;
    }
  }
  const bool pass = r0 && shape && agree && regression && failed == 0;
  return {pass, fmt("r(0)=1 %s, >=1 and monotone %s, max |dc-ac|/se %.2f, max |r-oracle|/se %.2f, r(0.1) dc %.5f "
                    "ac %.5f oracle %.5f",
                    r0 ? "yes" : "no", shape ? "yes" : "no", worst_agree, worst_reg, dc.points.back().r_mean,
                    ac.points.back().r_mean, oracle::kRatioQuadrature.back())};
}

Verdict estimator() {
  const auto p = homogeneous(0.02, 0.01, 1e6, 1e6);
  const Vec3 truth(30e-9, -20e-9, 10e-9);
  const std::size_t n = 10'000'000;
  const std::size_t trials = 200;
  const std::uint64_t seed = 20261017;

  std::array<ProtocolPlan, 3> plans;
  std::array<ShotLayout, 3> layouts;
  Vec3 predicted;
  for (Component c : {Component::x, Component::y, Component::z}) {
    const int i = index_of(c);
    plans[i] = ProtocolPlan::optimal(ProtocolKind::mf_dc, c, p);
    layouts[i] = shot_layout(plans[i], truth, p, kConstants);
    predicted[i] = sensitivity(plans[i], p, kConstants, static_cast<double>(n) * plans[i].repetition_time())
                       .value()
                       .delta_B;
  }
  std::vector<Vec3> est(trials);
  for (std::size_t r = 0; r < trials; ++r) {
    for (int c = 0; c < 3; ++c) {
      const auto s = sample_summary(random::stream_key(seed, r * 3 + c), layouts[c], n, workers());
      est[r][c] = estimate_component(s, plans[c], p, kConstants).value();
    }
  }
  const Vec3 first_sigma = (est[0] - truth).cwiseQuotient(predicted);
  const bool within = first_sigma.cwiseAbs().maxCoeff() <= 4.0;

  Vec3 mean = Vec3::Zero();
  for (const Vec3& e : est) mean += e / static_cast<double>(trials);
  Vec3 var = Vec3::Zero();
  for (const Vec3& e : est) var += (e - mean).cwiseAbs2() / static_cast<double>(trials - 1);
  const Vec3 sd_ratio = var.cwiseSqrt().cwiseQuotient(predicted);
  // Pooled over the three components: 600 normalized deviations.
  double pooled = 0.0;
  for (const Vec3& e : est) pooled += (e - mean).cwiseQuotient(predicted).squaredNorm();
  pooled = std::sqrt(pooled / (3.0 * static_cast<double>(trials - 1)));
  const bool sd_ok = std::abs(pooled - 1.0) <= 0.05;

  return {within && sd_ok,
          fmt("trial 0 deviation (%+.2f, %+.2f, %+.2f) sigma; empirical/analytic std pooled %.4f, per component "
              "(%.4f, %.4f, %.4f)",
              first_sigma.x(), first_sigma.y(), first_sigma.z(), pooled, sd_ratio.x(), sd_ratio.y(), sd_ratio.z())};
}

Verdict optimum_location() {
  const double gamma = 1e6;
  const auto p = homogeneous(0.02, 0.01, gamma, gamma);
  std::string detail;
  bool pass = true;
  for (ProtocolKind kind : {ProtocolKind::conv_dc, ProtocolKind::mf_dc}) {
    const auto plan = ProtocolPlan::optimal(kind, Component::x, p);
    std::vector<double> ts;
    // 0.1% spacing around the optimum
    for (int i = 0; i <= 2000; ++i) ts.push_back((0.25 + 1.5 * i / 2000.0) / (4 * gamma));
    const auto sweep = sensitivity_sweep(plan, p, kConstants, 1.0, SweepParameter::t, ts);
    const auto best = std::min_element(sweep.begin(), sweep.end(), [](const auto& a, const auto& b) {
      return !a.degenerate && (b.degenerate || a.delta_B < b.delta_B);
    });
    const double rel = best->parameter * 4 * gamma - 1.0;
    pass = pass && std::abs(rel) <= 0.005;
    detail += fmt("%s argmin t*4gamma = %.5f; ", std::string(to_string(kind)).c_str(), 1.0 + rel);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", 10, oracle_equivalence},
      {2, "theta_opt", 1, theta_opt},
      {3, "four-fold improvement", 1, four_fold},
      {4, "variance numerators", 30, variance_numerators},
      {5, "cross-component decoupling", 1, decoupling},
      {6, "compensation schedules", 5, schedules},
      {7, "r(sigma) curve", 120, ratio_curve},
      {8, "estimator consistency", 180, estimator},
      {9, "optimum location", 1, optimum_location},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = v.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("criterion %d %s  %-28s %s [%.2f s, budget %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                v.detail.c_str(), secs, c.budget_s, in_time ? "" : ", OVER");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
