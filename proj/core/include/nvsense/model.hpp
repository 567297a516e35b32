#pragma once

// Axis geometry, physical constants and per-axis ensemble parameters for the
// four NV orientation classes of a diamond lattice.
//
// Units: angular frequencies and rates in rad/s (rates in 1/s), fields in
// tesla, times in seconds.

#include <array>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace nvsense {

using Vec3 = Eigen::Vector3d;

/// Cartesian component of the target field.
enum class Component { x = 0, y = 1, z = 2 };

[[nodiscard]] constexpr int index_of(Component c) noexcept { return static_cast<int>(c); }
[[nodiscard]] char to_char(Component c) noexcept;
[[nodiscard]] Component component_from_char(char c);

/// One of the four NV axis classes, 1-based (d_1 .. d_4).
class AxisId {
 public:
  explicit AxisId(int index);

  [[nodiscard]] constexpr int index() const noexcept { return index_; }
  /// 0-based position for array storage.
  [[nodiscard]] constexpr std::size_t slot() const noexcept {
    return static_cast<std::size_t>(index_ - 1);
  }

  [[nodiscard]] static std::array<AxisId, 4> all();

  friend constexpr bool operator==(AxisId, AxisId) = default;
  friend constexpr auto operator<=>(AxisId, AxisId) = default;

 private:
  int index_;
};

/// Tetrahedral NV directions d_1=(1,-1,-1)/sqrt3, d_2=(-1,1,-1)/sqrt3,
/// d_3=(-1,-1,1)/sqrt3, d_4=(1,1,1)/sqrt3.
struct AxisSet {
  [[nodiscard]] static const std::array<Vec3, 4>& directions();
  [[nodiscard]] static const Vec3& direction(AxisId axis);
  /// B . d_k
  [[nodiscard]] static double projection(const Vec3& field, AxisId axis);
};

/// Throws std::invalid_argument when any component is NaN or infinite.
void require_finite(const Vec3& field, const char* what);

struct PhysicalConstants {
  // g mu_B / hbar for the NV electron spin, 2*pi * 28.024 GHz/T.
  double gyromagnetic_ratio = 2.0 * std::numbers::pi * 28.024e9;
  // Zero-field splitting omega_0, 2*pi * 2.87 GHz.
  double zero_field_splitting = 2.0 * std::numbers::pi * 2.87e9;

  /// Empty when valid.
  [[nodiscard]] std::vector<std::string> violations() const;
  void validate() const;
};

struct AxisParams {
  double alpha0 = 0.0;       // photon emission probability from |0>
  double alpha1 = 0.0;       // photon emission probability from |1>
  double gamma = 0.0;        // Ramsey dephasing rate 1/(2 T2*)
  double gamma_prime = 0.0;  // echo dephasing rate 1/(2 T2)

  [[nodiscard]] double contrast() const noexcept { return alpha0 - alpha1; }
  friend bool operator==(const AxisParams&, const AxisParams&) = default;
};

class EnsembleParams {
 public:
  EnsembleParams() = default;
  explicit EnsembleParams(const std::array<AxisParams, 4>& axes) : axes_(axes) {}

  [[nodiscard]] static EnsembleParams homogeneous(const AxisParams& p) {
    return EnsembleParams({p, p, p, p});
  }

  [[nodiscard]] const AxisParams& operator[](AxisId axis) const noexcept { return axes_[axis.slot()]; }
  [[nodiscard]] AxisParams& operator[](AxisId axis) noexcept { return axes_[axis.slot()]; }
  [[nodiscard]] const std::array<AxisParams, 4>& axes() const noexcept { return axes_; }

  [[nodiscard]] bool is_homogeneous() const noexcept;

  /// Every violated constraint, phrased for a user. Zero contrast
  /// (alpha1 == alpha0) is accepted here; it is a physics degeneracy that the
  /// protocol layer reports, not a malformed input.
  [[nodiscard]] std::vector<std::string> violations() const;
  void validate() const;

  friend bool operator==(const EnsembleParams&, const EnsembleParams&) = default;

 private:
  std::array<AxisParams, 4> axes_{};
};

/// omega_k = omega_0 + gyro * (bias . d_k) for k = 1..4.
[[nodiscard]] std::array<double, 4> resonance_frequencies(const PhysicalConstants& constants,
                                                          const Vec3& bias);

struct SelectivityVerdict {
  bool selective = false;
  double min_gap = 0.0;    // smallest pairwise |omega_i - omega_j|
  double threshold = 0.0;  // factor * rabi
  std::vector<std::pair<AxisId, AxisId>> offending;  // pairs with gap <= threshold
};

inline constexpr double kDefaultSelectivityFactor = 10.0;

/// Selective iff every pairwise resonance gap exceeds factor * rabi.
[[nodiscard]] SelectivityVerdict check_selectivity(const std::array<double, 4>& frequencies,
                                                   double rabi,
                                                   double factor = kDefaultSelectivityFactor);

}  // namespace nvsense
