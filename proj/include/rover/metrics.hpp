#pragma once

#include <cstdint>

namespace rover {

/// (actives - aliases) / probes. Throws std::invalid_argument when probes is
/// zero or the counts are inconsistent (aliases > actives or actives > probes).
double non_aliased_hit_rate(std::uint64_t probes, std::uint64_t actives, std::uint64_t aliases);

}  // namespace rover
