#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rover/address.hpp"
#include "rover/generic_pattern.hpp"

namespace rover {

using Rng = std::mt19937_64;

enum class ProbeStatus : std::uint8_t { pending, active, inactive };

/// Every address handed to the prober within one prefix campaign. Entries
/// are never removed; a pending entry resolves exactly once. Open addressing
/// with linear probing, kept at most half full.
class ProbedAddressMap {
 public:
  bool contains(const Ipv6Address& a) const { return find(a) != kMissing; }
  std::optional<ProbeStatus> status(const Ipv6Address& a) const;
  std::size_t size() const { return size_; }

  /// Throws std::logic_error when the address is already present.
  void mark_pending(const Ipv6Address& a);
  /// Throws std::logic_error unless the address is pending.
  void resolve(const Ipv6Address& a, bool active);

 private:
  static constexpr std::size_t kMissing = static_cast<std::size_t>(-1);
  static constexpr std::uint8_t kEmpty = 0;  // slot state; otherwise ProbeStatus + 1

  std::size_t find(const Ipv6Address& a) const;
  void grow();

  std::vector<Ipv6Address> keys_;
  std::vector<std::uint8_t> slots_;
  std::size_t size_ = 0;
};

/// Addresses inside `prefix` whose tail fits `pattern`. Bits between the
/// prefix length and bit 48 are zero; tail nibbles already fixed by the
/// prefix keep the prefix's value.
struct AddressRegion {
  u128 base = 0;
  u128 free = 0;  // bits that vary across the region
  int free_bits = 0;

  AddressRegion(const Prefix& prefix, const GenericPattern& pattern);
  /// Every address in the prefix.
  explicit AddressRegion(const Prefix& prefix);

  bool contains(const Ipv6Address& a) const { return (a.bits() & ~free) == base; }
  /// Deposits the low `free_bits` bits of `index` into the free positions.
  Ipv6Address at(std::uint64_t index) const;
  Ipv6Address random(Rng& rng) const;
  double size() const;
};

/// Batch drawn for one pull. Empty targets with `exhausted` set means no
/// unprobed address is left in the arm's space.
struct ProbeBatch {
  std::vector<Ipv6Address> targets;
  bool exhausted = false;
};

/// Uniform sampling without replacement over the union of one or more
/// regions, skipping anything already in the probed map. Small spaces are
/// enumerated once into a pool; large ones use rejection sampling.
class ArmSampler {
 public:
  static constexpr double kPoolLimit = 65536.0;

  ArmSampler(const Prefix& prefix, std::span<const GenericPattern> members);

  /// Size of the union of member regions.
  double size() const { return size_; }
  bool contains(const Ipv6Address& a) const;

  /// Draws up to `n` distinct unprobed addresses and marks them pending in `probed`.
  ProbeBatch draw(std::size_t n, ProbedAddressMap& probed, Rng& rng);

 private:
  std::size_t covering_regions(const Ipv6Address& a) const;
  Ipv6Address rejection_candidate(Rng& rng) const;
  std::size_t count_unprobed(const ProbedAddressMap& probed) const;

  std::vector<AddressRegion> regions_;
  std::vector<double> cumulative_;  // region size prefix sums
  double size_ = 0.0;
  bool pooled_ = false;
  std::vector<Ipv6Address> pool_;
  std::size_t pool_live_ = 0;
};

/// Free-function form: samples from prefix + pattern with a fresh sampler
/// and an rng seeded from `seed`.
ProbeBatch sample_targets(const GenericPattern& pattern, const Prefix& prefix, std::size_t n,
                          ProbedAddressMap& probed, std::uint64_t seed);

}  // namespace rover
