#include "nvsense/compensation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "nvsense/dynamics.hpp"
#include "nvsense/parallel.hpp"
#include "nvsense/random.hpp"
#include "nvsense/roots.hpp"

namespace nvsense {

namespace {

// Positive Gaussian value: mean + sd * z, redrawn from `engine` while <= 0.
template <class Engine>
double positive_gaussian(double mean, double sd, double z, Engine& engine) {
  double v = mean + sd * z;
  std::normal_distribution<double> normal;
  while (!(v > 0.0)) v = mean + sd * normal(engine);
  return v;
}

double theta_opt_cached() {
  static const double theta = optimize_theta();
  return theta;
}

constexpr int kAcGridPoints = 64;

}  // namespace

InhomogeneousDraw draw_inhomogeneous(std::uint64_t seed, std::size_t n, const DrawDistribution& dist,
                                     std::uint64_t stream) {
  if (!(dist.mean_delta_alpha > 0.0) || !(dist.mean_rate > 0.0)) {
    throw std::invalid_argument("draw_inhomogeneous: means must be > 0");
  }
  if (!(dist.std_delta_alpha >= 0.0) || !(dist.std_rate >= 0.0)) {
    throw std::invalid_argument("draw_inhomogeneous: standard deviations must be >= 0");
  }
  const std::uint64_t key = random::stream_key(seed, stream);
  InhomogeneousDraw out;
  out.delta_alpha.resize(n);
  out.rate.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::mt19937_64 engine(random::bits_at(key, j));
    std::normal_distribution<double> normal;
    const double z_alpha = normal(engine);
    const double z_rate = normal(engine);
    out.delta_alpha[j] = positive_gaussian(dist.mean_delta_alpha, dist.std_delta_alpha, z_alpha, engine);
    out.rate[j] = positive_gaussian(dist.mean_rate, dist.std_rate, z_rate, engine);
  }
  return out;
}

double dc_weight(double delta_alpha, double gamma, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("dc_weight: t must be >= 0");
  return 0.5 * delta_alpha * std::exp(-2.0 * gamma * t) * t;
}

double ac_weight(double delta_alpha, double gamma_prime, double t, double omega_ac) {
  if (!(t >= 0.0)) throw std::invalid_argument("ac_weight: t must be >= 0");
  if (!(omega_ac > 0.0)) throw std::invalid_argument("ac_weight: omega_ac must be > 0");
  return 0.5 * delta_alpha * std::exp(-2.0 * gamma_prime * t) * echo_filter(omega_ac * t) / omega_ac;
}

double CompensationSchedule::max_relative_error() const noexcept {
  double worst = 0.0;
  for (double w : weights) worst = std::max(worst, std::abs(w / target - 1.0));
  return worst;
}

CompensationSchedule solve_schedule(const InhomogeneousDraw& draws, CompensationMode mode) {
  if (draws.size() == 0 || draws.rate.size() != draws.size()) {
    throw std::invalid_argument("solve_schedule: need a non-empty, consistent draw set");
  }
  for (std::size_t j = 0; j < draws.size(); ++j) {
    if (!(draws.delta_alpha[j] > 0.0) || !(draws.rate[j] > 0.0)) {
      throw std::invalid_argument("solve_schedule: draws must be strictly positive");
    }
  }
  const double da_min = *std::min_element(draws.delta_alpha.begin(), draws.delta_alpha.end());
  const double rate_max = *std::max_element(draws.rate.begin(), draws.rate.end());

  CompensationSchedule s;
  s.mode = mode;
  s.t_max = 1.0 / (4.0 * rate_max);
  const double e_half = std::exp(-0.5);
  if (mode == CompensationMode::dc) {
    s.target = 0.5 * da_min * e_half * s.t_max;
  } else {
    const double theta = theta_opt_cached();
    s.omega_ac = 4.0 * theta * rate_max;
    s.target = 0.5 * da_min * e_half * echo_filter(theta) / *s.omega_ac;
  }

  s.times.resize(draws.size());
  s.weights.resize(draws.size());
  for (std::size_t j = 0; j < draws.size(); ++j) {
    const double da = draws.delta_alpha[j];
    const double rate = draws.rate[j];
    const auto weight = [&](double t) {
      return mode == CompensationMode::dc ? dc_weight(da, rate, t) : ac_weight(da, rate, t, *s.omega_ac);
    };
    const auto excess = [&](double t) { return weight(t) - s.target; };

    const double at_max = excess(s.t_max);
    double t_j = s.t_max;
    if (at_max < 0.0) {
      // The sample that defines (da_min, rate_max) sits exactly on the target
      // at t_max; allow for rounding in e^{-2 rate t_max}.
      if (-at_max > 1e-12 * s.target) {
        throw NoRootError("sample " + std::to_string(j) + " cannot reach the target weight before t_max");
      }
    } else if (at_max > 0.0) {
      double lo = 0.0;
      double hi = s.t_max;
      if (mode == CompensationMode::ac) {
        // Walk down from t_max to the last grid point below target; the root
        // in that cell is the largest one.
        for (int i = kAcGridPoints - 1; i >= 1; --i) {
          const double g = s.t_max * i / kAcGridPoints;
          if (excess(g) < 0.0) {
            lo = g;
            break;
          }
          hi = g;
        }
      }
      t_j = bisect(excess, lo, hi, {1e-12, 200});
    }
    s.times[j] = t_j;
    s.weights[j] = weight(t_j);
  }
  return s;
}

EnsembleParams compensated_params(const InhomogeneousDraw& draws, double alpha_sum) {
  if (draws.size() != 4) throw std::invalid_argument("compensated_params: need exactly four axis draws");
  std::array<AxisParams, 4> axes{};
  for (std::size_t k = 0; k < 4; ++k) {
    const double da = draws.delta_alpha[k];
    if (!(da < alpha_sum)) throw std::invalid_argument("compensated_params: contrast exceeds alpha0 + alpha1");
    axes[k] = {(alpha_sum + da) / 2.0, (alpha_sum - da) / 2.0, draws.rate[k], draws.rate[k]};
  }
  return EnsembleParams(axes);
}

ProtocolPlan compensated_plan(const CompensationSchedule& schedule, Component component) {
  if (schedule.times.size() != 4) throw std::invalid_argument("compensated_plan: need a four-axis schedule");
  const std::array<double, 4> times{schedule.times[0], schedule.times[1], schedule.times[2], schedule.times[3]};
  ProtocolPlan plan = ProtocolPlan::multifreq(
      schedule.mode == CompensationMode::dc ? ProtocolKind::mf_dc : ProtocolKind::mf_ac, component, times,
      schedule.omega_ac);
  plan.cycle_time = schedule.t_max;
  plan.validate();
  return plan;
}

namespace {

// delta_B * sqrt(T) for a compensated four-axis draw.
double compensated_normalized(const InhomogeneousDraw& draws, CompensationMode mode, double alpha_sum) {
  const CompensationSchedule schedule = solve_schedule(draws, mode);
  const EnsembleParams params = compensated_params(draws, alpha_sum);
  const ProtocolPlan plan = compensated_plan(schedule, Component::x);
  return sensitivity(plan, params, PhysicalConstants{}, 1.0).value().normalized;
}

}  // namespace

MonteCarloReport sensitivity_ratio_curve(const RatioCurveConfig& config) {
  if (config.samples < 1) throw std::invalid_argument("ratio curve: samples must be >= 1");
  if (std::find(config.sigma_grid.begin(), config.sigma_grid.end(), 0.0) == config.sigma_grid.end()) {
    throw std::invalid_argument("ratio curve: sigma grid must include 0");
  }
  for (double s : config.sigma_grid) {
    if (!(s >= 0.0)) throw std::invalid_argument("ratio curve: sigma values must be >= 0");
  }

  InhomogeneousDraw homogeneous;
  homogeneous.delta_alpha.assign(4, config.mean_delta_alpha);
  homogeneous.rate.assign(4, config.mean_rate);
  const double reference = compensated_normalized(homogeneous, config.mode, config.alpha_sum);

  const std::size_t n_sigma = config.sigma_grid.size();
  const std::size_t n = config.samples;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> ratios(n_sigma * n, nan);

  const std::uint64_t key = random::stream_key(config.seed, config.mode == CompensationMode::dc ? 0xDC : 0xAC);
  parallel_for(n, config.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      std::mt19937_64 engine(random::bits_at(key, j));
      std::normal_distribution<double> normal;
      std::array<double, 8> z{};
      for (double& v : z) v = normal(engine);

      for (std::size_t i = 0; i < n_sigma; ++i) {
        const double sigma = config.sigma_grid[i];
        std::mt19937_64 redraw(random::bits_at(key ^ random::mix64(i + 1), j));
        InhomogeneousDraw d;
        for (std::size_t k = 0; k < 4; ++k) {
          d.delta_alpha.push_back(
              positive_gaussian(config.mean_delta_alpha, sigma * config.mean_delta_alpha, z[2 * k], redraw));
          d.rate.push_back(positive_gaussian(config.mean_rate, sigma * config.mean_rate, z[2 * k + 1], redraw));
        }
        try {
          ratios[i * n + j] = compensated_normalized(d, config.mode, config.alpha_sum) / reference;
        } catch (const Error&) {
        } catch (const std::invalid_argument&) {
        }
      }
    }
  });

  MonteCarloReport report;
  report.mode = config.mode;
  for (std::size_t i = 0; i < n_sigma; ++i) {
    RatioPoint p;
    p.sigma = config.sigma_grid[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double r = ratios[i * n + j];
      if (std::isnan(r)) {
        ++p.n_failed;
        continue;
      }
      ++p.n_success;
      sum += r;
    }
    if (p.n_success > 0) {
      p.r_mean = sum / static_cast<double>(p.n_success);
      double ss = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double r = ratios[i * n + j];
        if (!std::isnan(r)) ss += (r - p.r_mean) * (r - p.r_mean);
      }
      if (p.n_success > 1) {
        p.r_stderr = std::sqrt(ss / static_cast<double>(p.n_success - 1) / static_cast<double>(p.n_success));
      }
    }
    report.points.push_back(p);
  }
  return report;
}

void write_ratio_curve_csv(std::ostream& out, const MonteCarloReport& report) {
  const auto old = out.precision(17);
  out << "sigma_prime,r_mean,r_stderr,n_success,n_failed\n";
  for (const auto& p : report.points) {
    out << p.sigma << ',' << p.r_mean << ',' << p.r_stderr << ',' << p.n_success << ',' << p.n_failed << '\n';
  }
  out.precision(old);
}

void write_schedule_csv(std::ostream& out, const InhomogeneousDraw& draws, const CompensationSchedule& schedule) {
  const auto old = out.precision(17);
  out << "j,delta_alpha_j,gamma_j,t_j,weight_j\n";
  for (std::size_t j = 0; j < draws.size(); ++j) {
    out << (j + 1) << ',' << draws.delta_alpha[j] << ',' << draws.rate[j] << ',' << schedule.times[j] << ','
        << schedule.weights[j] << '\n';
  }
  out.precision(old);
}

}  // namespace nvsense
