#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace nvsense::cli {

using nlohmann::json;

std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::populations: return "populations";
    case Command::sensitivity: return "sensitivity";
    case Command::estimate: return "estimate";
    case Command::compensate: return "compensate";
    case Command::montecarlo: return "montecarlo";
  }
  return "?";
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out = "invalid configuration:";
  for (const auto& s : v) out += "\n  - " + s;
  return out;
}

// Reads typed values out of a JSON object, recording a violation for each
// missing, mistyped or out-of-range entry instead of stopping at the first.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void fail(const std::string& msg) { errors_.push_back(msg); }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    fail(path + ": expected an object");
    return false;
  }

  void known_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) return;
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, _] : j.items()) {
      if (!allowed.count(k)) fail(path + "." + k + ": unknown key");
    }
  }

  std::optional<double> number(const json& j, const std::string& path) {
    if (!j.is_number()) {
      fail(path + ": expected a number");
      return std::nullopt;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      fail(path + ": must be finite");
      return std::nullopt;
    }
    return v;
  }

  void positive(const json& parent, const char* key, const std::string& path, double& out) {
    if (!parent.contains(key)) return;
    const auto v = number(parent[key], path + "." + key);
    if (!v) return;
    if (!(*v > 0.0)) {
      fail(path + "." + key + ": must be > 0");
      return;
    }
    out = *v;
  }

  void non_negative(const json& parent, const char* key, const std::string& path, double& out) {
    if (!parent.contains(key)) return;
    const auto v = number(parent[key], path + "." + key);
    if (!v) return;
    if (!(*v >= 0.0)) {
      fail(path + "." + key + ": must be >= 0");
      return;
    }
    out = *v;
  }

  template <class Int>
  void count(const json& parent, const char* key, const std::string& path, Int& out, Int minimum) {
    if (!parent.contains(key)) return;
    const json& j = parent[key];
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)) {
      fail(path + "." + key + ": expected a non-negative integer");
      return;
    }
    const auto v = j.get<std::uint64_t>();
    if (v < static_cast<std::uint64_t>(minimum)) {
      fail(path + "." + key + ": must be >= " + std::to_string(minimum));
      return;
    }
    out = static_cast<Int>(v);
  }

  std::optional<Vec3> vector3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) {
      fail(path + ": expected an array of three numbers (tesla)");
      return std::nullopt;
    }
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
      const auto x = number(j[i], path + "[" + std::to_string(i) + "]");
      if (!x) return std::nullopt;
      v[i] = *x;
    }
    return v;
  }

  std::optional<std::string> string(const json& j, const std::string& path) {
    if (!j.is_string()) {
      fail(path + ": expected a string");
      return std::nullopt;
    }
    return j.get<std::string>();
  }

 private:
  std::vector<std::string>& errors_;
};

void read_constants(Reader& r, const json& j, RunConfig& cfg) {
  const std::string path = "constants";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"gyromagnetic_ratio", "zero_field_splitting", "selectivity_factor", "rabi"});
  r.positive(j, "gyromagnetic_ratio", path, cfg.constants.gyromagnetic_ratio);
  r.positive(j, "zero_field_splitting", path, cfg.constants.zero_field_splitting);
  r.positive(j, "selectivity_factor", path, cfg.selectivity_factor);
  r.positive(j, "rabi", path, cfg.rabi);
}

void read_axis_fields(Reader& r, const json& j, const std::string& path, AxisParams& a) {
  for (const auto& [key, target] : {std::pair{"alpha0", &a.alpha0}, std::pair{"alpha1", &a.alpha1},
                                    std::pair{"gamma", &a.gamma}, std::pair{"gamma_prime", &a.gamma_prime}}) {
    if (!j.contains(key)) continue;
    if (const auto v = r.number(j[key], path + "." + key)) *target = *v;
  }
}

void read_ensemble(Reader& r, const json& j, RunConfig& cfg) {
  const std::string path = "ensemble";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"homogeneous", "axes"});
  AxisParams base = cfg.ensemble[AxisId(1)];
  if (j.contains("homogeneous")) {
    const json& h = j["homogeneous"];
    if (r.object(h, path + ".homogeneous")) {
      r.known_keys(h, path + ".homogeneous", {"alpha0", "alpha1", "gamma", "gamma_prime"});
      read_axis_fields(r, h, path + ".homogeneous", base);
    }
  }
  std::array<AxisParams, 4> axes{base, base, base, base};
  if (j.contains("axes")) {
    const json& list = j["axes"];
    if (!list.is_array()) {
      r.fail(path + ".axes: expected an array of per-axis overrides");
    } else {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string p = path + ".axes[" + std::to_string(i) + "]";
        const json& entry = list[i];
        if (!r.object(entry, p)) continue;
        r.known_keys(entry, p, {"axis", "alpha0", "alpha1", "gamma", "gamma_prime"});
        if (!entry.contains("axis") || !entry["axis"].is_number_integer() || entry["axis"].get<long long>() < 1 ||
            entry["axis"].get<long long>() > 4) {
          r.fail(p + ".axis: expected an integer in 1..4");
          continue;
        }
        read_axis_fields(r, entry, p, axes[entry["axis"].get<int>() - 1]);
      }
    }
  }
  cfg.ensemble = EnsembleParams(axes);
}

void read_field(Reader& r, const json& j, RunConfig& cfg) {
  const std::string path = "field";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"B", "B_ex", "B_ac", "omega_ac"});
  if (j.contains("B")) {
    if (auto v = r.vector3(j["B"], path + ".B")) cfg.field.B = *v;
  }
  if (j.contains("B_ex")) cfg.field.B_ex = r.vector3(j["B_ex"], path + ".B_ex");
  if (j.contains("B_ac")) {
    if (auto v = r.vector3(j["B_ac"], path + ".B_ac")) cfg.field.B_ac = *v;
  }
  if (j.contains("omega_ac")) {
    double w = 0.0;
    r.positive(j, "omega_ac", path, w);
    if (w > 0.0) cfg.field.omega_ac = w;
  }
}

void read_protocol(Reader& r, const json& j, RunConfig& cfg) {
  const std::string path = "protocol";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"kind", "component", "t", "times", "omega_ac", "signs", "repetitions", "T"});
  auto& p = cfg.protocol;
  if (j.contains("kind")) {
    if (const auto s = r.string(j["kind"], path + ".kind")) {
      try {
        p.kind = protocol_kind_from_string(*s);
      } catch (const std::invalid_argument&) {
        r.fail(path + ".kind: expected one of conv_dc, conv_ac, mf_dc, mf_ac");
      }
    }
  }
  if (j.contains("component")) {
    const auto s = r.string(j["component"], path + ".component");
    if (s && s->size() == 1 && (*s == "x" || *s == "y" || *s == "z")) {
      p.component = component_from_char((*s)[0]);
    } else if (s) {
      r.fail(path + ".component: expected \"x\", \"y\" or \"z\"");
    }
  }
  if (j.contains("t")) {
    if (j["t"].is_string()) {
      if (j["t"].get<std::string>() != "optimal") r.fail(path + ".t: expected a number or \"optimal\"");
    } else {
      double t = 0.0;
      r.positive(j, "t", path, t);
      if (t > 0.0) p.t = t;
    }
  }
  if (j.contains("times")) {
    const json& t = j["times"];
    if (!t.is_array() || t.size() != 4) {
      r.fail(path + ".times: expected four per-axis times");
    } else {
      std::array<double, 4> times{};
      bool ok = true;
      for (int i = 0; i < 4; ++i) {
        const auto v = r.number(t[i], path + ".times[" + std::to_string(i) + "]");
        if (!v || !(*v > 0.0)) {
          if (v) r.fail(path + ".times[" + std::to_string(i) + "]: must be > 0");
          ok = false;
        } else {
          times[i] = *v;
        }
      }
      if (ok) p.times = times;
    }
    if (j.contains("t") && !j["t"].is_string()) r.fail(path + ": give either t or times, not both");
  }
  if (j.contains("omega_ac")) {
    if (j["omega_ac"].is_string()) {
      if (j["omega_ac"].get<std::string>() != "optimal") r.fail(path + ".omega_ac: expected a number or \"optimal\"");
    } else {
      double w = 0.0;
      r.positive(j, "omega_ac", path, w);
      if (w > 0.0) p.omega_ac = w;
    }
  }
  if (j.contains("signs")) {
    const json& s = j["signs"];
    if (!s.is_array() || s.size() != 4) {
      r.fail(path + ".signs: expected four entries of +1 or -1");
    } else {
      std::array<PulseSign, 4> signs{};
      bool ok = true;
      for (int i = 0; i < 4; ++i) {
        if (!s[i].is_number_integer() || (s[i].get<int>() != 1 && s[i].get<int>() != -1)) {
          r.fail(path + ".signs[" + std::to_string(i) + "]: expected +1 or -1");
          ok = false;
        } else {
          signs[i] = pulse_sign_from_int(s[i].get<int>());
        }
      }
      if (ok) p.signs = signs;
    }
  }
  r.count(j, "repetitions", path, p.repetitions, std::size_t{1});
  r.positive(j, "T", path, p.T);
}

std::vector<double> read_grid(Reader& r, const json& j, const std::string& path) {
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (const auto v = r.number(j[i], path + "[" + std::to_string(i) + "]")) out.push_back(*v);
    }
    if (out.empty()) r.fail(path + ": grid is empty");
    return out;
  }
  if (!r.object(j, path)) return out;
  r.known_keys(j, path, {"start", "stop", "points", "scale"});
  double start = 0.0, stop = 0.0;
  std::size_t points = 0;
  if (!j.contains("start") || !j.contains("stop") || !j.contains("points")) {
    r.fail(path + ": a range needs start, stop and points");
    return out;
  }
  r.positive(j, "start", path, start);
  r.positive(j, "stop", path, stop);
  r.count(j, "points", path, points, std::size_t{2});
  std::string scale = "linear";
  if (j.contains("scale")) scale = r.string(j["scale"], path + ".scale").value_or("linear");
  if (scale != "linear" && scale != "log") r.fail(path + ".scale: expected \"linear\" or \"log\"");
  if (!(start > 0.0) || !(stop > start) || points < 2) {
    if (start > 0.0 && stop > 0.0 && !(stop > start)) r.fail(path + ": stop must exceed start");
    return out;
  }
  for (std::size_t i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back(scale == "log" ? start * std::pow(stop / start, f) : start + (stop - start) * f);
  }
  return out;
}

void read_sweep(Reader& r, const json& j, RunConfig& cfg) {
  const std::string path = "sweep";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"parameter", "values"});
  SweepConfig s;
  if (j.contains("parameter")) {
    const auto p = r.string(j["parameter"], path + ".parameter");
    if (p == "t") {
      s.parameter = SweepParameter::t;
    } else if (p == "omega_ac") {
      s.parameter = SweepParameter::omega_ac;
    } else if (p) {
      r.fail(path + ".parameter: expected \"t\" or \"omega_ac\"");
    }
  }
  if (!j.contains("values")) {
    r.fail(path + ".values: required");
  } else {
    s.values = read_grid(r, j["values"], path + ".values");
    for (double v : s.values) {
      if (!(v > 0.0)) {
        r.fail(path + ".values: sweep values must be > 0");
        break;
      }
    }
  }
  if (s.parameter == SweepParameter::omega_ac && !is_ac(cfg.protocol.kind)) {
    r.fail(path + ".parameter: an omega_ac sweep needs an AC protocol kind");
  }
  cfg.sweep = s;
}

void read_montecarlo(Reader& r, const json& j, RunConfig& cfg) {
  const std::string path = "montecarlo";
  if (!r.object(j, path)) return;
  r.known_keys(j, path,
               {"seed", "samples", "sigma_grid", "mean_delta_alpha", "std_delta_alpha", "mean_rate", "std_rate",
                "alpha_sum", "draws", "mode", "trials", "curve_points"});
  auto& m = cfg.montecarlo;
  r.count(j, "seed", path, m.seed, std::uint64_t{0});
  r.count(j, "samples", path, m.samples, std::size_t{1});
  if (j.contains("sigma_grid")) {
    m.sigma_grid = read_grid(r, j["sigma_grid"], path + ".sigma_grid");
    if (std::find(m.sigma_grid.begin(), m.sigma_grid.end(), 0.0) == m.sigma_grid.end()) {
      r.fail(path + ".sigma_grid: must include 0");
    }
    for (double s : m.sigma_grid) {
      if (!(s >= 0.0)) {
        r.fail(path + ".sigma_grid: values must be >= 0");
        break;
      }
    }
  }
  r.positive(j, "mean_delta_alpha", path, m.distribution.mean_delta_alpha);
  r.non_negative(j, "std_delta_alpha", path, m.distribution.std_delta_alpha);
  r.positive(j, "mean_rate", path, m.distribution.mean_rate);
  r.non_negative(j, "std_rate", path, m.distribution.std_rate);
  r.positive(j, "alpha_sum", path, m.alpha_sum);
  r.count(j, "draws", path, m.draws, std::size_t{1});
  r.count(j, "trials", path, m.trials, std::size_t{1});
  r.count(j, "curve_points", path, m.curve_points, std::size_t{2});
  if (j.contains("mode")) {
    const auto s = r.string(j["mode"], path + ".mode");
    if (s == "dc") {
      m.mode = CompensationMode::dc;
    } else if (s == "ac") {
      m.mode = CompensationMode::ac;
    } else if (s) {
      r.fail(path + ".mode: expected \"dc\" or \"ac\"");
    }
  }
  if (!(m.alpha_sum > m.distribution.mean_delta_alpha)) {
    r.fail(path + ".alpha_sum: must exceed mean_delta_alpha (alpha0 + alpha1 > alpha0 - alpha1)");
  }
}

void read_output(Reader& r, const json& j, RunConfig& cfg) {
  const std::string path = "output";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"dir", "shot_records"});
  if (j.contains("dir")) {
    if (const auto s = r.string(j["dir"], path + ".dir")) cfg.out_dir = *s;
  }
  if (j.contains("shot_records")) {
    if (j["shot_records"].is_boolean()) {
      cfg.write_shot_records = j["shot_records"].get<bool>();
    } else {
      r.fail(path + ".shot_records: expected true or false");
    }
  }
}

bool needs_protocol(Command c) {
  return c == Command::populations || c == Command::sensitivity || c == Command::estimate;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

ProtocolPlan make_plan(const RunConfig& config, ProtocolKind kind, Component component) {
  const ProtocolConfig& pc = config.protocol;
  ProtocolPlan plan;
  if (pc.times || pc.t) {
    const std::array<double, 4> times = pc.times ? *pc.times : std::array<double, 4>{*pc.t, *pc.t, *pc.t, *pc.t};
    std::optional<double> omega;
    if (is_ac(kind)) {
      omega = pc.omega_ac ? pc.omega_ac : config.field.omega_ac;
      if (!omega) omega = optimize_theta() / *std::max_element(times.begin(), times.end());
    }
    if (is_conventional(kind)) {
      const auto pair = conventional_pair(component);
      if (times[pair.first.slot()] != times[pair.second.slot()]) {
        throw std::invalid_argument("protocol: conventional plans use one evolution time for both axes");
      }
      plan = ProtocolPlan::conventional(kind, component, times[pair.first.slot()], omega);
    } else {
      plan = ProtocolPlan::multifreq(kind, component, times, omega);
    }
  } else {
    plan = ProtocolPlan::optimal(kind, component, config.ensemble);
    if (is_ac(kind)) {
      if (pc.omega_ac) {
        plan.omega_ac = pc.omega_ac;
      } else if (config.field.omega_ac) {
        plan.omega_ac = config.field.omega_ac;
      }
    }
  }
  if (pc.signs && kind == pc.kind && component == pc.component) {
    if (is_conventional(kind)) throw std::invalid_argument("protocol.signs: sign patterns apply to mf_* kinds only");
    plan.signs = *pc.signs;
  }
  plan.validate();
  return plan;
}

ProtocolPlan make_plan(const RunConfig& config) {
  return make_plan(config, config.protocol.kind, config.protocol.component);
}

RunConfig parse_config(const json& doc, Command command) {
  std::vector<std::string> errors;
  Reader r(errors);
  RunConfig cfg;
  if (!doc.is_object()) throw ConfigError({"configuration root must be a JSON object"});
  r.known_keys(doc, "config",
               {"constants", "ensemble", "field", "protocol", "sweep", "montecarlo", "output", "schema_version"});
  if (doc.contains("schema_version") && doc["schema_version"] != "1") {
    r.fail("schema_version: only \"1\" is supported");
  }
  if (doc.contains("constants")) read_constants(r, doc["constants"], cfg);
  if (doc.contains("ensemble")) read_ensemble(r, doc["ensemble"], cfg);
  if (doc.contains("field")) read_field(r, doc["field"], cfg);
  if (doc.contains("protocol")) read_protocol(r, doc["protocol"], cfg);
  if (doc.contains("sweep")) read_sweep(r, doc["sweep"], cfg);
  if (doc.contains("montecarlo")) read_montecarlo(r, doc["montecarlo"], cfg);
  if (doc.contains("output")) read_output(r, doc["output"], cfg);

  for (const auto& v : cfg.constants.violations()) errors.push_back("constants: " + v);
  if (needs_protocol(command)) {
    for (const auto& v : cfg.ensemble.violations()) errors.push_back("ensemble: " + v);
    if (!doc.contains("protocol")) errors.emplace_back("protocol: block is required for " + std::string(to_string(command)));
    if (!cfg.field.B_ex) errors.emplace_back("field.B_ex: the bias field is required to check frequency selectivity");
    if (command == Command::estimate && (is_ac(cfg.protocol.kind) ? cfg.field.B_ac : cfg.field.B).norm() > 1e-5) {
      errors.emplace_back("field: estimation assumes the linear regime; |B| must be <= 10 uT");
    }
    if (errors.empty()) {
      try {
        (void)make_plan(cfg);
      } catch (const std::invalid_argument& e) {
        errors.emplace_back(e.what());
      }
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, Command command) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError({"config is not valid JSON: " + std::string(e.what())});
  }
  return parse_config(doc, command);
}

}  // namespace nvsense::cli
