#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace xmf {

std::string tool_version();

// 64-bit FNV-1a of the canonical configuration text, as 16 hex digits.
std::string config_hash(std::string_view canonical_config);

struct Provenance {
  std::string tool_version = xmf::tool_version();
  std::uint64_t seed = 0;
  std::string config_hash;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

}  // namespace xmf
