#include "rover/address.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <cstring>
#include <stdexcept>

namespace rover {

std::optional<Ipv6Address> Ipv6Address::parse(std::string_view text) {
  if (text.empty() || text.size() >= INET6_ADDRSTRLEN) return std::nullopt;
  char buffer[INET6_ADDRSTRLEN];
  std::memcpy(buffer, text.data(), text.size());
  buffer[text.size()] = '\0';

  unsigned char raw[16];
  if (inet_pton(AF_INET6, buffer, raw) != 1) return std::nullopt;
  u128 bits = 0;
  for (unsigned char byte : raw) bits = (bits << 8) | byte;
  return Ipv6Address(bits);
}

Ipv6Address Ipv6Address::from_string(std::string_view text) {
  auto parsed = parse(text);
  if (!parsed) throw std::invalid_argument("invalid IPv6 address: " + std::string(text));
  return *parsed;
}

std::string Ipv6Address::to_string() const {
  unsigned char raw[16];
  u128 bits = bits_;
  for (int i = 15; i >= 0; --i) {
    raw[i] = static_cast<unsigned char>(bits & 0xFF);
    bits >>= 8;
  }
  char buffer[INET6_ADDRSTRLEN];
  if (inet_ntop(AF_INET6, raw, buffer, sizeof buffer) == nullptr) {
    throw std::runtime_error("inet_ntop failed");
  }
  return buffer;
}

Prefix::Prefix(Ipv6Address network, int length) : length_(length) {
  if (length < 1 || length > kAddressBits) {
    throw std::invalid_argument("prefix length out of range: " + std::to_string(length));
  }
  network_ = Ipv6Address(network.bits() & prefix_mask(length));
}

std::optional<Prefix> Prefix::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto address = Ipv6Address::parse(text.substr(0, slash));
  if (!address) return std::nullopt;

  const auto len_text = text.substr(slash + 1);
  int length = 0;
  auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), length);
  if (ec != std::errc{} || ptr != len_text.data() + len_text.size()) return std::nullopt;
  if (length < 1 || length > kAddressBits) return std::nullopt;
  return Prefix(*address, length);
}

Prefix Prefix::from_string(std::string_view text) {
  auto parsed = parse(text);
  if (!parsed) throw std::invalid_argument("invalid IPv6 prefix: " + std::string(text));
  return *parsed;
}

std::string Prefix::to_string() const {
  return network_.to_string() + "/" + std::to_string(length_);
}

}  // namespace rover
