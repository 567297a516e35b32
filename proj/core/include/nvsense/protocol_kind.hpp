#pragma once

#include <string>
#include <string_view>

namespace nvsense {

/// Conventional (one axis pair, measured sequentially) or multi-frequency
/// (all four axes in parallel), each for a static (DC) or AC field.
enum class ProtocolKind { conv_dc, conv_ac, mf_dc, mf_ac };

[[nodiscard]] constexpr bool is_conventional(ProtocolKind k) noexcept {
  return k == ProtocolKind::conv_dc || k == ProtocolKind::conv_ac;
}
[[nodiscard]] constexpr bool is_ac(ProtocolKind k) noexcept {
  return k == ProtocolKind::conv_ac || k == ProtocolKind::mf_ac;
}

[[nodiscard]] std::string_view to_string(ProtocolKind k) noexcept;
/// Accepts "conv_dc", "conv_ac", "mf_dc", "mf_ac" (case-insensitive).
[[nodiscard]] ProtocolKind protocol_kind_from_string(std::string_view s);

}  // namespace nvsense
