#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rover/address.hpp"

namespace rover {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed hitlist file. Addresses are sorted and unique.
struct Hitlist {
  std::vector<Ipv6Address> addresses;
  std::size_t lines = 0;  // non-blank, non-comment lines
  std::size_t malformed = 0;
  std::size_t duplicates = 0;
};

/// One address per line; '#' starts a comment line. Malformed lines are
/// counted. More than half malformed throws IngestError.
Hitlist read_hitlist(std::istream& in);
Hitlist ingest_hitlist(const std::filesystem::path& path);

struct AnnouncedPrefix {
  Prefix prefix;
  std::optional<std::uint32_t> asn;
};

/// "CIDR [ASN]" per line; the ASN column accepts "64500" or "AS64500".
std::vector<AnnouncedPrefix> read_prefix_list(std::istream& in, std::size_t* malformed = nullptr);
std::vector<AnnouncedPrefix> load_prefix_list(const std::filesystem::path& path);

/// CIDR per line; extra columns are ignored.
std::vector<Prefix> read_alias_list(std::istream& in);
std::vector<Prefix> load_alias_list(const std::filesystem::path& path);

/// Seeds mapped to their longest-matching announced prefix. Seeds under a
/// known alias prefix or outside every announced prefix are dropped.
class SeedCorpus {
 public:
  SeedCorpus() = default;

  static SeedCorpus build(std::span<const Ipv6Address> hitlist,
                          std::span<const AnnouncedPrefix> announced,
                          std::span<const Prefix> aliases);

  const std::vector<Ipv6Address>& seeds() const { return seeds_; }
  bool empty() const { return seeds_.empty(); }
  std::size_t size() const { return seeds_.size(); }

  /// Throws std::out_of_range for an address not in the corpus.
  const Prefix& prefix_of(const Ipv6Address& seed) const;
  std::optional<std::uint32_t> asn_of(const Prefix& prefix) const;
  const std::map<Prefix, std::uint32_t>& as_of_prefix() const { return as_of_prefix_; }

  std::size_t alias_excluded() const { return alias_excluded_; }
  std::size_t unrouted() const { return unrouted_; }

 private:
  std::vector<Ipv6Address> seeds_;
  std::vector<Prefix> seed_prefix_;  // parallel to seeds_
  std::map<Prefix, std::uint32_t> as_of_prefix_;
  std::size_t alias_excluded_ = 0;
  std::size_t unrouted_ = 0;
};

/// Announced prefixes holding no corpus seed and not covered by an alias
/// prefix. Input order is kept; duplicates are dropped.
std::vector<Prefix> derive_unseeded(std::span<const Prefix> announced, const SeedCorpus& corpus,
                                    std::span<const Prefix> aliases);

inline constexpr int kTailNibbles = 20;

/// Low 80 bits of a seed (nibbles 12..31); the routing prefix is masked off.
class TruncatedSeed {
 public:
  constexpr TruncatedSeed() = default;
  constexpr TruncatedSeed(std::uint16_t subnet, std::uint64_t iid) : subnet_(subnet), iid_(iid) {}

  static constexpr TruncatedSeed from_address(const Ipv6Address& a) {
    return TruncatedSeed(static_cast<std::uint16_t>(a.high() & 0xFFFF), a.low());
  }

  /// The tail as an address with the top 48 bits zero.
  constexpr Ipv6Address to_address() const { return Ipv6Address::from_halves(subnet_, iid_); }

  /// Tail nibble in [0, 20); tail nibble i is address nibble i + 12.
  constexpr unsigned nibble(int index) const {
    if (index < 4) return (subnet_ >> (12 - 4 * index)) & 0xFu;
    return static_cast<unsigned>(iid_ >> (60 - 4 * (index - 4))) & 0xFu;
  }

  constexpr std::uint16_t subnet() const { return subnet_; }
  constexpr std::uint64_t iid() const { return iid_; }

  friend constexpr bool operator==(const TruncatedSeed&, const TruncatedSeed&) = default;
  friend constexpr auto operator<=>(const TruncatedSeed&, const TruncatedSeed&) = default;

 private:
  std::uint16_t subnet_ = 0;
  std::uint64_t iid_ = 0;
};

struct TruncatedCorpus {
  std::vector<TruncatedSeed> tails;                       // sorted, unique
  std::map<TruncatedSeed, std::set<Prefix>> origins;     // every source prefix per tail
};

TruncatedCorpus seed_truncate(const SeedCorpus& corpus);

}  // namespace rover
