#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "nvsense/random.hpp"

namespace nvsense::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kOracleTolerance = 1e-5;
constexpr double kEstimateSigmaLimit = 5.0;

std::ostringstream csv_stream() {
  std::ostringstream out;
  out.precision(17);
  return out;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

ordered_json plan_json(const ProtocolPlan& plan) {
  ordered_json j;
  j["kind"] = std::string(to_string(plan.kind));
  j["component"] = std::string(1, to_char(plan.component));
  ordered_json times = ordered_json::array();
  for (AxisId k : plan.driven_axes()) times.push_back({{"axis", k.index()}, {"t", plan.times[k.slot()]}});
  j["times"] = times;
  j["omega_ac"] = plan.omega_ac ? ordered_json(*plan.omega_ac) : ordered_json(nullptr);
  if (!is_conventional(plan.kind)) {
    ordered_json signs = ordered_json::array();
    for (PulseSign s : plan.signs) signs.push_back(static_cast<int>(s));
    j["signs"] = signs;
  }
  j["repetition_time"] = plan.repetition_time();
  return j;
}

ordered_json header(Command c) {
  ordered_json j;
  j["schema_version"] = "1";
  j["command"] = std::string(to_string(c));
  return j;
}

// All four classes must be individually addressable under the bias field.
void require_selectivity(const RunConfig& cfg) {
  const auto freqs = resonance_frequencies(cfg.constants, *cfg.field.B_ex);
  const auto verdict = check_selectivity(freqs, cfg.rabi, cfg.selectivity_factor);
  if (verdict.selective) return;
  std::string msg = "bias field does not separate the NV classes (min gap " + std::to_string(verdict.min_gap) +
                    " rad/s, need > " + std::to_string(verdict.threshold) + "); offending pairs:";
  for (const auto& [a, b] : verdict.offending) msg += " (" + std::to_string(a.index()) + "," + std::to_string(b.index()) + ")";
  throw DegenerateSignalError(msg);
}

Vec3 sensed_field(const RunConfig& cfg) { return is_ac(cfg.protocol.kind) ? cfg.field.B_ac : cfg.field.B; }

ProtocolKind counterpart(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::conv_dc: return ProtocolKind::mf_dc;
    case ProtocolKind::mf_dc: return ProtocolKind::conv_dc;
    case ProtocolKind::conv_ac: return ProtocolKind::mf_ac;
    case ProtocolKind::mf_ac: return ProtocolKind::conv_ac;
  }
  return k;
}

ordered_json report_json(const SensitivityReport& r) {
  ordered_json j;
  j["delta_B"] = r.delta_B;
  j["T"] = r.T;
  j["t_used"] = r.t_used;
  j["repetitions"] = r.repetitions;
  j["omega_ac_used"] = r.omega_ac_used ? ordered_json(*r.omega_ac_used) : ordered_json(nullptr);
  j["normalized"] = r.normalized;
  return j;
}

std::string mode_name(CompensationMode m) { return m == CompensationMode::dc ? "dc" : "ac"; }

}  // namespace

CommandResult cmd_populations(const RunConfig& cfg) {
  require_selectivity(cfg);
  const ProtocolPlan plan = make_plan(cfg);
  const bool ac = is_ac(plan.kind);
  const FieldDrive drive = ac ? FieldDrive::ac(cfg.field.B_ac, *plan.omega_ac) : FieldDrive::dc(cfg.field.B);

  auto csv = csv_stream();
  csv << "axis,p0_closed_form,p1_closed_form,p0_ode_oracle,p1_ode_oracle,abs_deviation\n";
  double worst = 0.0;
  ordered_json rows = ordered_json::array();
  for (AxisId k : AxisId::all()) {
    const double t = plan.times[k.slot()];
    const PulseSign s = is_conventional(plan.kind) ? PulseSign::plus : plan.signs[k.slot()];
    const PulseSequence seq = ac ? PulseSequence::echo(t, s) : PulseSequence::ramsey(t, s);
    const Populations closed =
        run_sequence(seq, drive, k, cfg.ensemble, cfg.constants, EvolutionMode::closed_form);
    const Populations ode = run_sequence(seq, drive, k, cfg.ensemble, cfg.constants, EvolutionMode::ode_oracle);
    const double dev = std::max(std::abs(closed.p0 - ode.p0), std::abs(closed.p1 - ode.p1));
    worst = std::max(worst, dev);
    csv << k.index() << ',' << closed.p0 << ',' << closed.p1 << ',' << ode.p0 << ',' << ode.p1 << ',' << dev << '\n';
  }

  ordered_json summary = header(Command::populations);
  summary["protocol"] = plan_json(plan);
  summary["max_deviation"] = worst;
  summary["tolerance"] = kOracleTolerance;
  summary["pass"] = worst <= kOracleTolerance;

  CommandResult result;
  result.files = {{"populations.csv", csv.str()}, {"populations.json", dump(summary)}};
  std::ostringstream line;
  line << "max |closed form - oracle| = " << worst << (worst <= kOracleTolerance ? " (ok)" : " (exceeds 1e-5)");
  result.summary = line.str();
  result.exit_code = worst <= kOracleTolerance ? exit_ok : exit_breach;
  return result;
}

CommandResult cmd_sensitivity(const RunConfig& cfg) {
  require_selectivity(cfg);
  const ProtocolPlan plan = make_plan(cfg);
  const double T = cfg.protocol.T;
  const auto report = sensitivity(plan, cfg.ensemble, cfg.constants, T).value();

  ordered_json j = header(Command::sensitivity);
  j["protocol"] = plan_json(plan);
  j["report"] = report_json(report);

  // Same settings under the other protocol family.
  ordered_json comparison = nullptr;
  try {
    const ProtocolPlan other = make_plan(cfg, counterpart(plan.kind), plan.component);
    const auto other_report = sensitivity(other, cfg.ensemble, cfg.constants, T);
    if (other_report) {
      const bool conv_first = is_conventional(plan.kind);
      const SensitivityReport& conv = conv_first ? report : *other_report;
      const SensitivityReport& mf = conv_first ? *other_report : report;
      comparison = ordered_json::object();
      comparison["conventional_delta_B"] = conv.delta_B;
      comparison["multifreq_delta_B"] = mf.delta_B;
      comparison["improvement_ratio"] = conv.delta_B / mf.delta_B;
    }
  } catch (const std::invalid_argument&) {
    // per-axis times have no conventional counterpart
  }
  j["comparison"] = comparison;

  CommandResult result;
  if (cfg.sweep) {
    const auto points =
        sensitivity_sweep(plan, cfg.ensemble, cfg.constants, T, cfg.sweep->parameter, cfg.sweep->values);
    auto csv = csv_stream();
    csv << "parameter,delta_B,normalized\n";
    const SweepPoint* best = nullptr;
    for (const auto& p : points) {
      if (p.degenerate) {
        csv << p.parameter << ",nan,nan\n";
        continue;
      }
      csv << p.parameter << ',' << p.delta_B << ',' << p.normalized << '\n';
      if (!best || p.delta_B < best->delta_B) best = &p;
    }
    const bool over_t = cfg.sweep->parameter == SweepParameter::t;
    ordered_json s;
    s["parameter"] = over_t ? "t" : "omega_ac";
    s["points"] = points.size();
    s["argmin"] = best ? ordered_json(best->parameter) : ordered_json(nullptr);
    s["min_delta_B"] = best ? ordered_json(best->delta_B) : ordered_json(nullptr);
    double rate = 0.0;
    for (AxisId k : plan.driven_axes()) {
      rate = std::max(rate, is_ac(plan.kind) ? cfg.ensemble[k].gamma_prime : cfg.ensemble[k].gamma);
    }
    if (over_t) {
      s["analytic_optimum"] = 1.0 / (4.0 * rate);
    } else {
      s["argmin_over_gamma_prime"] = best ? ordered_json(best->parameter / rate) : ordered_json(nullptr);
    }
    j["sweep"] = s;
    result.files.push_back({over_t ? "sweep_t.csv" : "sweep_omega_ac.csv", csv.str()});
  }
  result.files.insert(result.files.begin(), {"sensitivity.json", dump(j)});

  std::ostringstream line;
  line.precision(6);
  line << to_string(plan.kind) << " delta_B = " << report.delta_B << " T after T = " << T << " s ("
       << report.normalized << " T/sqrt(Hz))";
  if (!comparison.is_null()) line << "\nimprovement ratio conventional/multifreq = " << comparison["improvement_ratio"];
  result.summary = line.str();
  return result;
}

CommandResult cmd_estimate(const RunConfig& cfg) {
  require_selectivity(cfg);
  const Vec3 truth = sensed_field(cfg);
  const std::size_t n = cfg.protocol.repetitions;
  const std::size_t trials = cfg.montecarlo.trials;
  const std::uint64_t seed = cfg.montecarlo.seed;

  std::array<ProtocolPlan, 3> plans;
  std::array<ShotLayout, 3> layouts;
  Vec3 predicted;
  for (Component c : {Component::x, Component::y, Component::z}) {
    const int i = index_of(c);
    plans[i] = make_plan(cfg, cfg.protocol.kind, c);
    layouts[i] = shot_layout(plans[i], truth, cfg.ensemble, cfg.constants);
    predicted[i] =
        sensitivity(plans[i], cfg.ensemble, cfg.constants, static_cast<double>(n) * plans[i].repetition_time())
            .value()
            .delta_B;
  }

  const auto shot_seed = [&](std::size_t trial, int c) { return random::stream_key(seed, trial * 3 + c); };
  std::vector<Vec3> estimates(trials);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (int c = 0; c < 3; ++c) {
      const ShotSummary s = sample_summary(shot_seed(trial, c), layouts[c], n, cfg.workers);
      estimates[trial][c] = estimate_component(s, plans[c], cfg.ensemble, cfg.constants).value();
    }
  }

  CommandResult result;
  const std::uint64_t hash = params_hash(cfg.ensemble);
  if (cfg.write_shot_records) {
    std::array<ShotRecord, 3> records;
    std::array<ComponentMeasurement, 3> ms;
    for (int c = 0; c < 3; ++c) {
      records[c] = sample_shots(shot_seed(0, c), layouts[c], n, plans[c].kind, hash, cfg.workers);
      ms[c] = {&records[c], plans[c]};
      std::ostringstream csv;
      write_shot_record_csv(csv, records[c]);
      result.files.push_back({std::string("shots_") + "xyz"[c] + ".csv", csv.str()});
    }
    // Same draws as the summaries above.
    const Vec3 check = estimate_vector(ms, cfg.ensemble, cfg.constants).value();
    if (check != estimates[0]) throw Error("shot record and summary estimates disagree");
  }

  double worst = 0.0;
  for (const Vec3& e : estimates) {
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(e[c] - truth[c]) / predicted[c]);
  }

  ordered_json j = header(Command::estimate);
  j["protocol"] = std::string(to_string(cfg.protocol.kind));
  j["params_hash"] = [&] {
    std::ostringstream h;
    h << std::hex << hash;
    return h.str();
  }();
  j["seed"] = seed;
  j["repetitions"] = n;
  j["trials"] = trials;
  j["true_B"] = vec_json(truth);
  j["estimated_B"] = vec_json(estimates[0]);
  j["predicted_delta_B"] = vec_json(predicted);
  j["deviation"] = vec_json(estimates[0] - truth);
  j["deviation_sigma"] = vec_json((estimates[0] - truth).cwiseQuotient(predicted));
  if (trials > 1) {
    Vec3 mean = Vec3::Zero();
    for (const Vec3& e : estimates) mean += e / static_cast<double>(trials);
    Vec3 var = Vec3::Zero();
    for (const Vec3& e : estimates) var += (e - mean).cwiseAbs2() / static_cast<double>(trials - 1);
    const Vec3 sd = var.cwiseSqrt();
    j["empirical"] = {{"mean", vec_json(mean)}, {"std", vec_json(sd)}, {"std_over_predicted", vec_json(sd.cwiseQuotient(predicted))}};
  }
  j["max_abs_deviation_sigma"] = worst;
  j["sigma_limit"] = kEstimateSigmaLimit;
  j["pass"] = worst <= kEstimateSigmaLimit;
  result.files.insert(result.files.begin(), {"estimate.json", dump(j)});

  std::ostringstream line;
  line.precision(6);
  line << "B_hat = (" << estimates[0].x() << ", " << estimates[0].y() << ", " << estimates[0].z()
       << ") T; worst deviation " << worst << " sigma";
  result.summary = line.str();
  result.exit_code = worst <= kEstimateSigmaLimit ? exit_ok : exit_breach;
  return result;
}

CommandResult cmd_compensate(const RunConfig& cfg) {
  const auto& m = cfg.montecarlo;
  const InhomogeneousDraw draws = draw_inhomogeneous(m.seed, m.draws, m.distribution);
  const CompensationSchedule schedule = solve_schedule(draws, m.mode);

  std::ostringstream sched;
  write_schedule_csv(sched, draws, schedule);

  auto curves = csv_stream();
  curves << "j,t,weight\n";
  const double t_end = 2.0 * schedule.t_max;
  for (std::size_t j = 0; j < draws.size(); ++j) {
    for (std::size_t i = 0; i < m.curve_points; ++i) {
      const double t = t_end * static_cast<double>(i) / static_cast<double>(m.curve_points - 1);
      const double w = m.mode == CompensationMode::dc
                           ? dc_weight(draws.delta_alpha[j], draws.rate[j], t)
                           : ac_weight(draws.delta_alpha[j], draws.rate[j], t, *schedule.omega_ac);
      curves << (j + 1) << ',' << t << ',' << w << '\n';
    }
  }

  ordered_json j = header(Command::compensate);
  j["mode"] = mode_name(m.mode);
  j["seed"] = m.seed;
  j["draws"] = draws.size();
  j["target"] = schedule.target;
  j["t_max"] = schedule.t_max;
  j["omega_ac"] = schedule.omega_ac ? ordered_json(*schedule.omega_ac) : ordered_json(nullptr);
  j["t_min_scheduled"] = *std::min_element(schedule.times.begin(), schedule.times.end());
  j["t_max_scheduled"] = *std::max_element(schedule.times.begin(), schedule.times.end());
  j["max_relative_error"] = schedule.max_relative_error();

  CommandResult result;
  result.files = {{"compensate.json", dump(j)}, {"schedule.csv", sched.str()}, {"weight_curves.csv", curves.str()}};
  std::ostringstream line;
  line << draws.size() << " " << mode_name(m.mode) << " schedules solved; max |tau_j/c - 1| = "
       << schedule.max_relative_error();
  result.summary = line.str();
  return result;
}

CommandResult cmd_montecarlo(const RunConfig& cfg) {
  const auto& m = cfg.montecarlo;
  RatioCurveConfig rc;
  rc.mean_delta_alpha = m.distribution.mean_delta_alpha;
  rc.mean_rate = m.distribution.mean_rate;
  rc.alpha_sum = m.alpha_sum;
  rc.sigma_grid = m.sigma_grid;
  rc.samples = m.samples;
  rc.seed = m.seed;
  rc.mode = m.mode;
  rc.workers = cfg.workers;
  const MonteCarloReport report = sensitivity_ratio_curve(rc);

  std::ostringstream csv;
  write_ratio_curve_csv(csv, report);

  ordered_json j = header(Command::montecarlo);
  j["mode"] = mode_name(m.mode);
  j["seed"] = m.seed;
  j["samples"] = m.samples;
  std::size_t failed = 0;
  for (const auto& p : report.points) failed += p.n_failed;
  j["failed_schedules"] = failed;

  CommandResult result;
  result.files = {{"ratio_curve.csv", csv.str()}, {"montecarlo.json", dump(j)}};
  std::ostringstream line;
  line << "r(sigma') over " << report.points.size() << " grid points, " << m.samples << " samples each";
  if (failed > 0) line << "; " << failed << " schedules failed";
  result.summary = line.str();
  return result;
}

CommandResult run_command(Command command, const RunConfig& config) {
  switch (command) {
    case Command::populations: return cmd_populations(config);
    case Command::sensitivity: return cmd_sensitivity(config);
    case Command::estimate: return cmd_estimate(config);
    case Command::compensate: return cmd_compensate(config);
    case Command::montecarlo: return cmd_montecarlo(config);
  }
  throw std::logic_error("unknown command");
}

void commit_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files) {
  std::filesystem::create_directories(dir);
  for (const auto& f : files) {
    const auto final_path = dir / f.name;
    auto tmp = final_path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
      out << f.content;
      if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, final_path);
  }
}

int run(Command command, const std::filesystem::path& config_path, const Overrides& overrides, std::ostream& out,
        std::ostream& err) {
  try {
    RunConfig cfg = load_config(config_path, command);
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    if (overrides.seed) cfg.montecarlo.seed = *overrides.seed;
    if (overrides.workers) cfg.workers = *overrides.workers;

    const CommandResult result = run_command(command, cfg);
    commit_outputs(cfg.out_dir, result.files);
    for (const auto& f : result.files) out << "wrote " << (cfg.out_dir / f.name).string() << '\n';
    out << result.summary << '\n';
    return result.exit_code;
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return exit_config;
  } catch (const DegenerateSignalError& e) {
    err << "degenerate: " << e.what() << '\n';
    return exit_degenerate;
  } catch (const NoRootError& e) {
    err << "no schedule: " << e.what() << '\n';
    return exit_degenerate;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_internal;
  }
}

}  // namespace nvsense::cli
