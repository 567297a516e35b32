#include "nvsense/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nvsense {

char to_char(Component c) noexcept {
  switch (c) {
    case Component::x: return 'x';
    case Component::y: return 'y';
    case Component::z: return 'z';
  }
  return '?';
}

Component component_from_char(char c) {
  switch (c) {
    case 'x': case 'X': return Component::x;
    case 'y': case 'Y': return Component::y;
    case 'z': case 'Z': return Component::z;
    default: break;
  }
  throw std::invalid_argument(std::string("unknown field component '") + c + "'");
}

AxisId::AxisId(int index) : index_(index) {
  if (index < 1 || index > 4) {
    throw std::invalid_argument("NV axis index must be in 1..4, got " + std::to_string(index));
  }
}

std::array<AxisId, 4> AxisId::all() { return {AxisId(1), AxisId(2), AxisId(3), AxisId(4)}; }

const std::array<Vec3, 4>& AxisSet::directions() {
  static const std::array<Vec3, 4> dirs = [] {
    const double s = 1.0 / std::sqrt(3.0);
    return std::array<Vec3, 4>{Vec3(s, -s, -s), Vec3(-s, s, -s), Vec3(-s, -s, s), Vec3(s, s, s)};
  }();
  return dirs;
}

const Vec3& AxisSet::direction(AxisId axis) { return directions()[axis.slot()]; }

double AxisSet::projection(const Vec3& field, AxisId axis) { return field.dot(direction(axis)); }

void require_finite(const Vec3& field, const char* what) {
  if (!field.allFinite()) {
    throw std::invalid_argument(std::string(what) + " has non-finite components");
  }
}

std::vector<std::string> PhysicalConstants::violations() const {
  std::vector<std::string> out;
  if (!(gyromagnetic_ratio > 0.0) || !std::isfinite(gyromagnetic_ratio)) {
    out.emplace_back("constants.gyromagnetic_ratio must be finite and > 0");
  }
  if (!(zero_field_splitting > 0.0) || !std::isfinite(zero_field_splitting)) {
    out.emplace_back("constants.zero_field_splitting must be finite and > 0");
  }
  return out;
}

void PhysicalConstants::validate() const {
  const auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

bool EnsembleParams::is_homogeneous() const noexcept {
  for (const auto& a : axes_) {
    if (!(a == axes_[0])) return false;
  }
  return true;
}

std::vector<std::string> EnsembleParams::violations() const {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const AxisParams& a = axes_[k];
    std::ostringstream who;
    who << "ensemble axis " << (k + 1) << ": ";
    if (!(a.alpha1 > 0.0 && a.alpha1 < 1.0)) out.push_back(who.str() + "alpha1 must lie in (0, 1)");
    if (!(a.alpha0 > 0.0 && a.alpha0 < 1.0)) out.push_back(who.str() + "alpha0 must lie in (0, 1)");
    if (a.alpha1 > a.alpha0) out.push_back(who.str() + "alpha1 must not exceed alpha0");
    if (!(a.gamma_prime > 0.0) || !std::isfinite(a.gamma_prime)) {
      out.push_back(who.str() + "gamma_prime must be finite and > 0");
    }
    if (!(a.gamma >= a.gamma_prime) || !std::isfinite(a.gamma)) {
      out.push_back(who.str() + "gamma must be finite and >= gamma_prime");
    }
  }
  return out;
}

void EnsembleParams::validate() const {
  const auto v = violations();
  if (!v.empty()) throw std::invalid_argument(v.front());
}

std::array<double, 4> resonance_frequencies(const PhysicalConstants& constants, const Vec3& bias) {
  require_finite(bias, "bias field");
  std::array<double, 4> out{};
  for (AxisId axis : AxisId::all()) {
    out[axis.slot()] = constants.zero_field_splitting +
                       constants.gyromagnetic_ratio * AxisSet::projection(bias, axis);
  }
  return out;
}

SelectivityVerdict check_selectivity(const std::array<double, 4>& frequencies, double rabi,
                                     double factor) {
  if (!(rabi > 0.0)) throw std::invalid_argument("rabi frequency must be > 0");
  if (!(factor > 0.0)) throw std::invalid_argument("selectivity factor must be > 0");

  SelectivityVerdict verdict;
  verdict.threshold = factor * rabi;
  verdict.min_gap = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 4; ++i) {
    for (int j = i + 1; j <= 4; ++j) {
      const double gap = std::abs(frequencies[i - 1] - frequencies[j - 1]);
      verdict.min_gap = std::min(verdict.min_gap, gap);
      if (!(gap > verdict.threshold)) verdict.offending.emplace_back(AxisId(i), AxisId(j));
    }
  }
  verdict.selective = verdict.offending.empty();
  return verdict;
}

}  // namespace nvsense
