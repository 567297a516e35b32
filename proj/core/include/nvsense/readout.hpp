#pragma once

// Photon statistics of the four-axis ensemble. Each NV emits at most one
// photon per shot; a shot's count is the sum of four independent two-outcome
// trials.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "nvsense/dynamics.hpp"
#include "nvsense/model.hpp"
#include "nvsense/protocol_kind.hpp"

namespace nvsense {

/// Emission probabilities seen by the detector while only `controlled_axis`
/// is driven; the three idle classes stay in |0> and add alpha0 background.
struct EffectiveEmission {
  double alpha_tilde0 = 0.0;  // sum_j alpha0^(j)
  double alpha_tilde1 = 0.0;  // alpha1^(k) + sum_{j != k} alpha0^(j)
};

[[nodiscard]] EffectiveEmission effective_emission(const EnsembleParams& params, AxisId controlled_axis);

/// p0 * alpha~0 + p1 * alpha~1 for a conventional single-axis shot.
[[nodiscard]] double expected_photons_single(const EnsembleParams& params, AxisId axis, const Populations& pop);

/// sum_k p0_k alpha0^(k) + p1_k alpha1^(k) with all four axes driven.
[[nodiscard]] double expected_photons_parallel(const EnsembleParams& params,
                                               const std::array<Populations, 4>& pops);

enum class VarianceModel {
  mean_equals_variance,  // Poisson limit, alpha << 1
  exact_bernoulli,       // sum of p (1 - p)
};

/// Shot-noise variance for a per-shot (or per-repetition) mean count.
[[nodiscard]] double shot_variance(double expected_count);

/// Per-repetition emission probabilities: one row per shot in the repetition,
/// one column per NV axis class.
struct ShotLayout {
  std::vector<std::array<double, 4>> shots;

  [[nodiscard]] double expected_count() const noexcept;
  [[nodiscard]] double variance(VarianceModel model) const noexcept;
};

/// All four axes driven, one shot per repetition.
[[nodiscard]] ShotLayout parallel_layout(const EnsembleParams& params, const std::array<Populations, 4>& pops);

/// One shot per driven axis, in order; idle axes emit alpha0.
[[nodiscard]] ShotLayout sequential_layout(const EnsembleParams& params, std::span<const AxisId> driven,
                                           std::span<const Populations> pops);

struct ShotRecord {
  ProtocolKind protocol = ProtocolKind::mf_dc;
  std::uint64_t seed = 0;
  std::uint64_t params_hash = 0;
  std::size_t repetitions = 0;
  std::size_t shots_per_repetition = 1;
  std::vector<std::uint8_t> counts;  // per shot, repetition-major

  /// Photons summed over the shots of repetition r.
  [[nodiscard]] unsigned repetition_count(std::size_t r) const noexcept;
  [[nodiscard]] double mean_per_repetition() const noexcept;
  /// Unbiased sample variance of the per-repetition totals.
  [[nodiscard]] double variance_per_repetition() const noexcept;
};

/// Stable FNV-1a hash of the parameter values, for provenance in outputs.
[[nodiscard]] std::uint64_t params_hash(const EnsembleParams& params) noexcept;

/// Draws `repetitions` repetitions of `layout`. The photon decision for
/// (repetition r, shot s, axis k) uses counter position r*4*S + s*4 + k of the
/// stream keyed by `seed`, so the record does not depend on `workers`.
[[nodiscard]] ShotRecord sample_shots(std::uint64_t seed, const ShotLayout& layout, std::size_t repetitions,
                                      ProtocolKind protocol, std::uint64_t params_hash_value = 0,
                                      unsigned workers = 1);

/// Sums of the per-repetition totals only; same draws as sample_shots but
/// without materialising the per-shot counts.
struct ShotSummary {
  std::size_t repetitions = 0;
  std::uint64_t total = 0;
  std::uint64_t total_squares = 0;

  [[nodiscard]] double mean() const noexcept;
  [[nodiscard]] double variance() const noexcept;
};

[[nodiscard]] ShotSummary summarize(const ShotRecord& record) noexcept;
[[nodiscard]] ShotSummary sample_summary(std::uint64_t seed, const ShotLayout& layout, std::size_t repetitions,
                                         unsigned workers = 1);

/// First line: '# ' + JSON header (schema_version, protocol, params_hash,
/// seed, repetitions, shots_per_repetition); then "repetition,count" rows.
void write_shot_record_csv(std::ostream& out, const ShotRecord& record);

}  // namespace nvsense
