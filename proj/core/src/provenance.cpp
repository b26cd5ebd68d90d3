#include "xmf/provenance.hpp"

#include <cstdio>

#ifndef XMF_VERSION
#define XMF_VERSION "0.0.0"
#endif

namespace xmf {

std::string tool_version() { return XMF_VERSION; }

std::string config_hash(std::string_view canonical_config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical_config) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace xmf
