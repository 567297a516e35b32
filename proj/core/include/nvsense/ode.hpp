#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta with per-step error control.
// Intended for small, non-stiff real systems (the 4-component qubit density
// matrix here); the state is a fixed-size std::array.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>

#include "nvsense/errors.hpp"

namespace nvsense::ode {

struct Tolerance {
  double relative = 1e-9;
  double absolute = 1e-12;
  std::size_t max_steps = 1'000'000;
};

struct Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Integrates dy/dt = rhs(t, y) from t0 to t1 (t1 >= t0). `observe(t, y)` is
/// called after every accepted step. Throws IntegrationError when the step
/// size underflows or the step budget is exhausted.
template <std::size_t N, class Rhs, class Observer>
std::array<double, N> integrate(Rhs&& rhs, std::array<double, N> y, double t0, double t1,
                                const Tolerance& tol, Observer&& observe, Stats* stats = nullptr) {
  using State = std::array<double, N>;
  if (!(t1 >= t0)) throw IntegrationError("integration interval must satisfy t1 >= t0");
  if (t1 == t0) return y;

  // Butcher tableau (Dormand & Prince 1980).
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // b - b*, the embedded 4th-order error weights.
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const auto axpy = [](const State& base, double h, std::initializer_list<std::pair<double, const State*>> terms) {
    State out = base;
    for (std::size_t i = 0; i < N; ++i) {
      double acc = 0.0;
      for (const auto& [w, k] : terms) acc += w * (*k)[i];
      out[i] += h * acc;
    }
    return out;
  };

  const double span = t1 - t0;
  double t = t0;
  State k1 = rhs(t, y);

  // Initial step from the derivative scale (Hairer, Norsett & Wanner II.4).
  double h = span;
  {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = tol.absolute + tol.relative * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    const double guess = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    h = std::min(span, std::max(guess, 1e-12 * span));
  }

  constexpr double safety = 0.9, min_scale = 0.2, max_scale = 5.0;
  std::size_t steps = 0;
  while (t < t1) {
    if (++steps > tol.max_steps) {
      throw IntegrationError("step budget exhausted after " + std::to_string(tol.max_steps) + " steps");
    }
    const bool last = t + h >= t1;
    if (last) h = t1 - t;

    const State k2 = rhs(t + c2 * h, axpy(y, h, {{a21, &k1}}));
    const State k3 = rhs(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    const State k4 = rhs(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = rhs(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 =
        rhs(t + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State y_new = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = rhs(t + h, y_new);

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = tol.absolute + tol.relative * std::max(std::abs(y[i]), std::abs(y_new[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / N);

    if (err <= 1.0) {
      t = last ? t1 : t + h;
      y = y_new;
      k1 = k7;  // first-same-as-last
      if (stats) ++stats->accepted;
      observe(t, y);
      const double scale = err == 0.0 ? max_scale : std::clamp(safety * std::pow(err, -0.2), min_scale, max_scale);
      h *= scale;
    } else {
      if (stats) ++stats->rejected;
      h *= std::max(min_scale, safety * std::pow(err, -0.2));
      if (!(h > 1e-15 * span)) {
        throw IntegrationError("step size underflow: tolerance cannot be met");
      }
    }
  }
  return y;
}

template <std::size_t N, class Rhs>
std::array<double, N> integrate(Rhs&& rhs, std::array<double, N> y, double t0, double t1,
                                const Tolerance& tol = {}, Stats* stats = nullptr) {
  return integrate<N>(std::forward<Rhs>(rhs), y, t0, t1, tol, [](double, const std::array<double, N>&) {},
                      stats);
}

}  // namespace nvsense::ode
