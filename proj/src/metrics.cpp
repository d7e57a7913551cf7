#include "rover/metrics.hpp"

#include <stdexcept>

namespace rover {

double non_aliased_hit_rate(std::uint64_t probes, std::uint64_t actives, std::uint64_t aliases) {
  if (probes == 0) throw std::invalid_argument("hit rate undefined for zero probes");
  if (aliases > actives || actives > probes) {
    throw std::invalid_argument("need aliases <= actives <= probes");
  }
  return static_cast<double>(actives - aliases) / static_cast<double>(probes);
}

}  // namespace rover
