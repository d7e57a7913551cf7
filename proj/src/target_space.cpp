#include "rover/target_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rover {
namespace {

constexpr int kTailStartNibble = kAddressNibbles - kTailNibbles;  // 12

int popcount128(u128 v) {
  return __builtin_popcountll(static_cast<std::uint64_t>(v)) +
         __builtin_popcountll(static_cast<std::uint64_t>(v >> 64));
}

u128 random_bits(Rng& rng) {
  const u128 high = rng();
  return (high << 64) | rng();
}

}  // namespace

std::size_t ProbedAddressMap::find(const Ipv6Address& a) const {
  if (slots_.empty()) return kMissing;
  const std::size_t mask = slots_.size() - 1;
  for (std::size_t i = Ipv6AddressHash{}(a) & mask;; i = (i + 1) & mask) {
    if (slots_[i] == kEmpty) return kMissing;
    if (keys_[i] == a) return i;
  }
}

void ProbedAddressMap::grow() {
  const std::size_t capacity = slots_.empty() ? 1024 : 2 * slots_.size();
  std::vector<Ipv6Address> keys(capacity);
  std::vector<std::uint8_t> slots(capacity, kEmpty);
  const std::size_t mask = capacity - 1;
  for (std::size_t j = 0; j < slots_.size(); ++j) {
    if (slots_[j] == kEmpty) continue;
    std::size_t i = Ipv6AddressHash{}(keys_[j]) & mask;
    while (slots[i] != kEmpty) i = (i + 1) & mask;
    keys[i] = keys_[j];
    slots[i] = slots_[j];
  }
  keys_ = std::move(keys);
  slots_ = std::move(slots);
}

std::optional<ProbeStatus> ProbedAddressMap::status(const Ipv6Address& a) const {
  const auto i = find(a);
  if (i == kMissing) return std::nullopt;
  return static_cast<ProbeStatus>(slots_[i] - 1);
}

void ProbedAddressMap::mark_pending(const Ipv6Address& a) {
  if (2 * (size_ + 1) > slots_.size()) grow();
  const std::size_t mask = slots_.size() - 1;
  std::size_t i = Ipv6AddressHash{}(a) & mask;
  for (; slots_[i] != kEmpty; i = (i + 1) & mask) {
    if (keys_[i] == a) throw std::logic_error("address probed twice: " + a.to_string());
  }
  keys_[i] = a;
  slots_[i] = static_cast<std::uint8_t>(ProbeStatus::pending) + 1;
  ++size_;
}

void ProbedAddressMap::resolve(const Ipv6Address& a, bool active) {
  const auto i = find(a);
  if (i == kMissing || slots_[i] != static_cast<std::uint8_t>(ProbeStatus::pending) + 1) {
    throw std::logic_error("no pending probe for " + a.to_string());
  }
  slots_[i] = static_cast<std::uint8_t>(active ? ProbeStatus::active : ProbeStatus::inactive) + 1;
}

AddressRegion::AddressRegion(const Prefix& prefix, const GenericPattern& pattern)
    : base(prefix.network().bits()) {
  for (int i = 0; i < kTailNibbles; ++i) {
    if (!pattern.is_wildcard(i)) continue;
    free |= static_cast<u128>(0xF) << (124 - 4 * (kTailStartNibble + i));
  }
  free &= ~prefix.mask();
  free_bits = popcount128(free);
}

AddressRegion::AddressRegion(const Prefix& prefix)
    : base(prefix.network().bits()), free(~prefix.mask()), free_bits(popcount128(free)) {}

Ipv6Address AddressRegion::at(std::uint64_t index) const {
  u128 value = base;
  u128 remaining = free;
  while (remaining != 0 && index != 0) {
    const u128 lowest = remaining & (~remaining + 1);
    if (index & 1u) value |= lowest;
    index >>= 1;
    remaining &= remaining - 1;
  }
  return Ipv6Address(value);
}

Ipv6Address AddressRegion::random(Rng& rng) const {
  return Ipv6Address(base | (random_bits(rng) & free));
}

double AddressRegion::size() const { return std::ldexp(1.0, free_bits); }

ArmSampler::ArmSampler(const Prefix& prefix, std::span<const GenericPattern> members) {
  if (members.empty()) throw std::invalid_argument("arm has no patterns");
  for (const auto& m : members) {
    AddressRegion region(prefix, m);
    const bool duplicate = std::any_of(regions_.begin(), regions_.end(), [&](const AddressRegion& r) {
      return r.base == region.base && r.free == region.free;
    });
    if (duplicate) continue;
    regions_.push_back(region);
    cumulative_.push_back((cumulative_.empty() ? 0.0 : cumulative_.back()) + region.size());
  }

  const double upper = cumulative_.back();
  if (upper <= kPoolLimit) {
    pooled_ = true;
    pool_.reserve(static_cast<std::size_t>(upper));
    for (const auto& r : regions_) {
      // Masked increment walks the subsets of `free` in the same order as at(i).
      u128 offset = 0;
      do {
        pool_.push_back(Ipv6Address(r.base | offset));
        offset = ((offset | ~r.free) + 1) & r.free;
      } while (offset != 0);
    }
    // at() is strictly increasing, so one region is already sorted and distinct.
    if (regions_.size() > 1) {
      std::sort(pool_.begin(), pool_.end());
      pool_.erase(std::unique(pool_.begin(), pool_.end()), pool_.end());
    }
    pool_live_ = pool_.size();
    size_ = static_cast<double>(pool_.size());
  } else {
    // Exact for one region; for several, overlap is negligible at this size.
    size_ = upper;
  }
}

bool ArmSampler::contains(const Ipv6Address& a) const { return covering_regions(a) > 0; }

std::size_t ArmSampler::covering_regions(const Ipv6Address& a) const {
  std::size_t n = 0;
  for (const auto& r : regions_) n += r.contains(a) ? 1 : 0;
  return n;
}

Ipv6Address ArmSampler::rejection_candidate(Rng& rng) const {
  while (true) {
    std::size_t which = 0;
    if (regions_.size() > 1) {
      std::uniform_real_distribution<double> pick(0.0, cumulative_.back());
      const double u = pick(rng);
      which = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
                                       cumulative_.begin());
      which = std::min(which, regions_.size() - 1);
    }
    const auto candidate = regions_[which].random(rng);
    if (regions_.size() == 1) return candidate;
    // Accept with probability 1/k so overlapping addresses are not favoured.
    const auto k = covering_regions(candidate);
    if (k == 1 || std::uniform_int_distribution<std::size_t>(0, k - 1)(rng) == 0) return candidate;
  }
}

std::size_t ArmSampler::count_unprobed(const ProbedAddressMap& probed) const {
  // Only reached for spaces above the pool limit, where this is a safety net.
  std::size_t inside = 0;
  for (const auto& r : regions_) {
    if (r.free_bits > 24) return static_cast<std::size_t>(-1);
    const std::uint64_t count = std::uint64_t{1} << r.free_bits;
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto a = r.at(i);
      if (probed.contains(a)) ++inside;
    }
  }
  return static_cast<std::size_t>(size_) > inside ? static_cast<std::size_t>(size_) - inside : 0;
}

ProbeBatch ArmSampler::draw(std::size_t n, ProbedAddressMap& probed, Rng& rng) {
  ProbeBatch batch;
  if (n == 0) return batch;

  if (pooled_) {
    while (batch.targets.size() < n && pool_live_ > 0) {
      const auto j = std::uniform_int_distribution<std::size_t>(0, pool_live_ - 1)(rng);
      const auto candidate = pool_[j];
      std::swap(pool_[j], pool_[pool_live_ - 1]);
      --pool_live_;
      if (probed.contains(candidate)) continue;
      probed.mark_pending(candidate);
      batch.targets.push_back(candidate);
    }
    batch.exhausted = batch.targets.empty();
    return batch;
  }

  std::size_t attempts = 0;
  std::size_t limit = 64 * n + 1024;
  while (batch.targets.size() < n) {
    if (attempts++ >= limit) {
      const auto remaining = count_unprobed(probed);
      if (remaining == 0) break;
      n = std::min(n, batch.targets.size() + remaining);
      limit += 64 * n + 1024;
      continue;
    }
    const auto candidate = rejection_candidate(rng);
    if (probed.contains(candidate)) continue;
    probed.mark_pending(candidate);
    batch.targets.push_back(candidate);
  }
  batch.exhausted = batch.targets.empty();
  return batch;
}

ProbeBatch sample_targets(const GenericPattern& pattern, const Prefix& prefix, std::size_t n,
                          ProbedAddressMap& probed, std::uint64_t seed) {
  Rng rng(seed);
  ArmSampler sampler(prefix, std::span<const GenericPattern>(&pattern, 1));
  return sampler.draw(n, probed, rng);
}

}  // namespace rover
