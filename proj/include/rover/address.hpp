#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace rover {

__extension__ typedef unsigned __int128 u128;

inline constexpr int kAddressBits = 128;
inline constexpr int kAddressNibbles = 32;

/// 128-bit IPv6 address. Nibble 0 is the most significant hex digit.
class Ipv6Address {
 public:
  constexpr Ipv6Address() = default;
  constexpr explicit Ipv6Address(u128 bits) : bits_(bits) {}

  static constexpr Ipv6Address from_halves(std::uint64_t high, std::uint64_t low) {
    return Ipv6Address((static_cast<u128>(high) << 64) | low);
  }

  /// Accepts full and "::"-compressed textual forms. Returns nullopt on bad input.
  static std::optional<Ipv6Address> parse(std::string_view text);
  /// Throws std::invalid_argument on bad input.
  static Ipv6Address from_string(std::string_view text);

  /// RFC 5952 canonical text (lowercase, longest zero run compressed).
  std::string to_string() const;

  constexpr u128 bits() const { return bits_; }
  constexpr std::uint64_t high() const { return static_cast<std::uint64_t>(bits_ >> 64); }
  constexpr std::uint64_t low() const { return static_cast<std::uint64_t>(bits_); }

  constexpr unsigned nibble(int index) const {
    return static_cast<unsigned>(bits_ >> (124 - 4 * index)) & 0xFu;
  }

  constexpr Ipv6Address with_nibble(int index, unsigned value) const {
    const int shift = 124 - 4 * index;
    const u128 cleared = bits_ & ~(static_cast<u128>(0xF) << shift);
    return Ipv6Address(cleared | (static_cast<u128>(value & 0xFu) << shift));
  }

  /// Bit `index` counted from the most significant end.
  constexpr bool bit(int index) const { return ((bits_ >> (127 - index)) & 1u) != 0; }

  friend constexpr bool operator==(const Ipv6Address& a, const Ipv6Address& b) {
    return a.bits_ == b.bits_;
  }
  friend constexpr std::strong_ordering operator<=>(const Ipv6Address& a, const Ipv6Address& b) {
    if (a.bits_ == b.bits_) return std::strong_ordering::equal;
    return a.bits_ < b.bits_ ? std::strong_ordering::less : std::strong_ordering::greater;
  }

 private:
  u128 bits_ = 0;
};

/// Mask with the top `length` bits set.
constexpr u128 prefix_mask(int length) {
  if (length <= 0) return 0;
  if (length >= kAddressBits) return ~static_cast<u128>(0);
  return ~static_cast<u128>(0) << (kAddressBits - length);
}

/// CIDR prefix. The network address always has its host bits cleared.
class Prefix {
 public:
  Prefix() = default;
  /// Throws std::invalid_argument unless 1 <= length <= 128. Host bits are masked off.
  Prefix(Ipv6Address network, int length);

  /// Parses "addr/len". Returns nullopt on bad input.
  static std::optional<Prefix> parse(std::string_view text);
  static Prefix from_string(std::string_view text);

  const Ipv6Address& network() const { return network_; }
  int length() const { return length_; }
  u128 mask() const { return prefix_mask(length_); }
  Ipv6Address last() const { return Ipv6Address(network_.bits() | ~mask()); }

  bool contains(const Ipv6Address& address) const {
    return (address.bits() & mask()) == network_.bits();
  }
  /// True when `other` lies entirely inside this prefix.
  bool covers(const Prefix& other) const {
    return length_ <= other.length_ && contains(other.network_);
  }

  std::string to_string() const;

  friend bool operator==(const Prefix&, const Prefix&) = default;
  friend std::strong_ordering operator<=>(const Prefix& a, const Prefix& b) {
    if (auto c = a.network_ <=> b.network_; c != 0) return c;
    return a.length_ <=> b.length_;
  }

 private:
  Ipv6Address network_;
  int length_ = 128;
};

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Ipv6AddressHash {
  std::size_t operator()(const Ipv6Address& a) const noexcept {
    return static_cast<std::size_t>(mix64(a.high() ^ mix64(a.low())));
  }
};

struct PrefixHash {
  std::size_t operator()(const Prefix& p) const noexcept {
    return Ipv6AddressHash{}(p.network()) ^ static_cast<std::size_t>(mix64(p.length()));
  }
};

}  // namespace rover
