#include "nvsense/readout.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <mutex>
#include <string>
#include <cstring>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "nvsense/parallel.hpp"
#include "nvsense/random.hpp"

namespace nvsense {

std::string_view to_string(ProtocolKind k) noexcept {
  switch (k) {
    case ProtocolKind::conv_dc: return "conv_dc";
    case ProtocolKind::conv_ac: return "conv_ac";
    case ProtocolKind::mf_dc: return "mf_dc";
    case ProtocolKind::mf_ac: return "mf_ac";
  }
  return "unknown";
}

ProtocolKind protocol_kind_from_string(std::string_view s) {
  std::string lower(s);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "conv_dc") return ProtocolKind::conv_dc;
  if (lower == "conv_ac") return ProtocolKind::conv_ac;
  if (lower == "mf_dc") return ProtocolKind::mf_dc;
  if (lower == "mf_ac") return ProtocolKind::mf_ac;
  throw std::invalid_argument("unknown protocol kind '" + std::string(s) + "'");
}

EffectiveEmission effective_emission(const EnsembleParams& params, AxisId controlled_axis) {
  double background = 0.0;
  for (AxisId j : AxisId::all()) {
    if (j != controlled_axis) background += params[j].alpha0;
  }
  const AxisParams& k = params[controlled_axis];
  return {background + k.alpha0, background + k.alpha1};
}

double expected_photons_single(const EnsembleParams& params, AxisId axis, const Populations& pop) {
  const EffectiveEmission e = effective_emission(params, axis);
  return pop.p0 * e.alpha_tilde0 + pop.p1 * e.alpha_tilde1;
}

double expected_photons_parallel(const EnsembleParams& params, const std::array<Populations, 4>& pops) {
  double total = 0.0;
  for (AxisId k : AxisId::all()) {
    const AxisParams& a = params[k];
    total += pops[k.slot()].p0 * a.alpha0 + pops[k.slot()].p1 * a.alpha1;
  }
  return total;
}

double shot_variance(double expected_count) {
  if (!(expected_count >= 0.0)) throw std::invalid_argument("shot_variance: expected count must be >= 0");
  return expected_count;
}

double ShotLayout::expected_count() const noexcept {
  double total = 0.0;
  for (const auto& shot : shots) total += std::accumulate(shot.begin(), shot.end(), 0.0);
  return total;
}

double ShotLayout::variance(VarianceModel model) const noexcept {
  if (model == VarianceModel::mean_equals_variance) return expected_count();
  double total = 0.0;
  for (const auto& shot : shots) {
    for (double q : shot) total += q * (1.0 - q);
  }
  return total;
}

ShotLayout parallel_layout(const EnsembleParams& params, const std::array<Populations, 4>& pops) {
  std::array<double, 4> shot{};
  for (AxisId k : AxisId::all()) {
    const AxisParams& a = params[k];
    shot[k.slot()] = pops[k.slot()].p0 * a.alpha0 + pops[k.slot()].p1 * a.alpha1;
  }
  return {{shot}};
}

ShotLayout sequential_layout(const EnsembleParams& params, std::span<const AxisId> driven,
                             std::span<const Populations> pops) {
  if (driven.size() != pops.size()) throw std::invalid_argument("sequential_layout: one population per driven axis");
  ShotLayout layout;
  for (std::size_t i = 0; i < driven.size(); ++i) {
    std::array<double, 4> shot{};
    for (AxisId j : AxisId::all()) shot[j.slot()] = params[j].alpha0;
    const AxisParams& a = params[driven[i]];
    shot[driven[i].slot()] = pops[i].p0 * a.alpha0 + pops[i].p1 * a.alpha1;
    layout.shots.push_back(shot);
  }
  return layout;
}

unsigned ShotRecord::repetition_count(std::size_t r) const noexcept {
  unsigned total = 0;
  for (std::size_t s = 0; s < shots_per_repetition; ++s) total += counts[r * shots_per_repetition + s];
  return total;
}

ShotSummary summarize(const ShotRecord& record) noexcept {
  ShotSummary out;
  out.repetitions = record.repetitions;
  for (std::size_t r = 0; r < record.repetitions; ++r) {
    const std::uint64_t c = record.repetition_count(r);
    out.total += c;
    out.total_squares += c * c;
  }
  return out;
}

double ShotRecord::mean_per_repetition() const noexcept { return summarize(*this).mean(); }
double ShotRecord::variance_per_repetition() const noexcept { return summarize(*this).variance(); }

double ShotSummary::mean() const noexcept {
  return repetitions == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(repetitions);
}

double ShotSummary::variance() const noexcept {
  if (repetitions < 2) return 0.0;
  const double n = static_cast<double>(repetitions);
  const double m = mean();
  return (static_cast<double>(total_squares) - n * m * m) / (n - 1.0);
}

std::uint64_t params_hash(const EnsembleParams& params) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& a : params.axes()) {
    feed(a.alpha0);
    feed(a.alpha1);
    feed(a.gamma);
    feed(a.gamma_prime);
  }
  return h;
}

namespace {

struct Thresholds {
  std::vector<std::array<std::uint64_t, 4>> per_shot;
};

Thresholds thresholds_of(const ShotLayout& layout) {
  Thresholds t;
  for (const auto& shot : layout.shots) {
    std::array<std::uint64_t, 4> row{};
    for (std::size_t k = 0; k < 4; ++k) {
      if (!(shot[k] >= 0.0 && shot[k] <= 1.0)) throw std::invalid_argument("emission probability outside [0, 1]");
      row[k] = random::bernoulli_threshold(shot[k]);
    }
    t.per_shot.push_back(row);
  }
  return t;
}

void validate_request(const ShotLayout& layout, std::size_t repetitions) {
  if (repetitions < 1) throw std::invalid_argument("sample_shots: repetitions must be >= 1");
  if (layout.shots.empty()) throw std::invalid_argument("sample_shots: layout has no shots");
}

// Calls emit(r, s, count) for every shot of repetitions [begin, end).
template <class Emit>
void draw_range(std::uint64_t key, const Thresholds& th, std::size_t begin, std::size_t end, Emit&& emit) {
  const std::size_t shots = th.per_shot.size();
  const std::uint64_t stride = 4 * shots;
  for (std::size_t s = 0; s < shots; ++s) {
    const auto [t0, t1, t2, t3] = th.per_shot[s];
    // Counter base for shot s of repetition r is r * stride + 4 * s.
    std::uint64_t index = begin * stride + 4 * s;
    for (std::size_t r = begin; r < end; ++r, index += stride) {
      const unsigned count = (random::bits_at(key, index) < t0 ? 1U : 0U) +
                             (random::bits_at(key, index + 1) < t1 ? 1U : 0U) +
                             (random::bits_at(key, index + 2) < t2 ? 1U : 0U) +
                             (random::bits_at(key, index + 3) < t3 ? 1U : 0U);
      emit(r, s, count);
    }
  }
}

constexpr std::uint64_t kShotStream = 0x53484f54;  // "SHOT"

}  // namespace

ShotRecord sample_shots(std::uint64_t seed, const ShotLayout& layout, std::size_t repetitions, ProtocolKind protocol,
                        std::uint64_t params_hash_value, unsigned workers) {
  validate_request(layout, repetitions);
  const Thresholds th = thresholds_of(layout);
  const std::uint64_t key = random::stream_key(seed, kShotStream);

  ShotRecord record;
  record.protocol = protocol;
  record.seed = seed;
  record.params_hash = params_hash_value;
  record.repetitions = repetitions;
  record.shots_per_repetition = layout.shots.size();
  record.counts.assign(repetitions * record.shots_per_repetition, 0);
  const std::size_t spr = record.shots_per_repetition;
  parallel_for(repetitions, workers, [&](std::size_t begin, std::size_t end) {
    draw_range(key, th, begin, end, [&](std::size_t r, std::size_t s, unsigned c) {
      record.counts[r * spr + s] = static_cast<std::uint8_t>(c);
    });
  });
  return record;
}

ShotSummary sample_summary(std::uint64_t seed, const ShotLayout& layout, std::size_t repetitions, unsigned workers) {
  validate_request(layout, repetitions);
  const Thresholds th = thresholds_of(layout);
  const std::uint64_t key = random::stream_key(seed, kShotStream);
  const std::size_t spr = layout.shots.size();

  // Integer partial sums per chunk; addition is exact so the chunking is
  // irrelevant to the result.
  std::vector<ShotSummary> partial;
  std::mutex guard;
  parallel_for(repetitions, workers, [&](std::size_t begin, std::size_t end) {
    ShotSummary local;
    if (spr == 1) {
      draw_range(key, th, begin, end, [&](std::size_t, std::size_t, unsigned c) {
        local.total += c;
        local.total_squares += c * c;
      });
    } else {
      constexpr std::size_t block = 1 << 14;
      std::vector<std::uint32_t> rep_total(block);
      for (std::size_t b = begin; b < end; b += block) {
        const std::size_t e = std::min(end, b + block);
        std::fill(rep_total.begin(), rep_total.end(), 0U);
        draw_range(key, th, b, e, [&](std::size_t r, std::size_t, unsigned c) { rep_total[r - b] += c; });
        for (std::size_t i = 0; i < e - b; ++i) {
          const std::uint64_t c = rep_total[i];
          local.total += c;
          local.total_squares += c * c;
        }
      }
    }
    local.repetitions = end - begin;
    std::lock_guard lock(guard);
    partial.push_back(local);
  });
  ShotSummary out;
  for (const auto& p : partial) {
    out.repetitions += p.repetitions;
    out.total += p.total;
    out.total_squares += p.total_squares;
  }
  return out;
}

void write_shot_record_csv(std::ostream& out, const ShotRecord& record) {
  out << "# {\"schema_version\":\"1\",\"protocol\":\"" << to_string(record.protocol) << "\",\"params_hash\":\""
      << std::hex << record.params_hash << std::dec << "\",\"seed\":" << record.seed
      << ",\"repetitions\":" << record.repetitions << ",\"shots_per_repetition\":" << record.shots_per_repetition
      << "}\n";
  out << "repetition,count\n";
  for (std::size_t r = 0; r < record.repetitions; ++r) out << r << ',' << record.repetition_count(r) << '\n';
}

}  // namespace nvsense
