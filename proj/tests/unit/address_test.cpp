#include <doctest.h>

#include <random>
#include <stdexcept>
#include <vector>

#include "rover/address.hpp"
#include "rover/prefix_trie.hpp"

using namespace rover;

TEST_SUITE("address") {
  TEST_CASE("parse accepts full and compressed forms") {
    const auto full = Ipv6Address::from_string("2001:0db8:0000:0000:0000:0000:0000:0001");
    const auto compressed = Ipv6Address::from_string("2001:db8::1");
    CHECK(full == compressed);
    CHECK(compressed.high() == 0x20010db800000000ULL);
    CHECK(compressed.low() == 1);
    CHECK(compressed.to_string() == "2001:db8::1");
  }

  TEST_CASE("parse rejects garbage") {
    CHECK_FALSE(Ipv6Address::parse("").has_value());
    CHECK_FALSE(Ipv6Address::parse("2001:db8::g").has_value());
    CHECK_FALSE(Ipv6Address::parse("1.2.3.4").has_value());
    CHECK_FALSE(Ipv6Address::parse("2001:db8::1::2").has_value());
    CHECK_THROWS_AS(Ipv6Address::from_string("nope"), std::invalid_argument);
  }

  TEST_CASE("render then parse is the identity on random addresses") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100000; ++i) {
      // Mix in zero runs so compression paths get exercised.
      std::uint64_t hi = rng(), lo = rng();
      if (i % 3 == 0) hi &= 0xFFFF0000FFFF0000ULL;
      if (i % 5 == 0) lo &= 0x00000000FFFFFFFFULL;
      const auto a = Ipv6Address::from_halves(hi, lo);
      const auto back = Ipv6Address::parse(a.to_string());
      REQUIRE(back.has_value());
      REQUIRE(*back == a);
    }
  }

  TEST_CASE("nibble view covers 32 nibbles, most significant first") {
    const auto a = Ipv6Address::from_string("0123:4567:89ab:cdef:fedc:ba98:7654:3210");
    const char* hex = "0123456789abcdeffedcba9876543210";
    for (int i = 0; i < kAddressNibbles; ++i) {
      const unsigned expected = static_cast<unsigned>(std::stoi(std::string(1, hex[i]), nullptr, 16));
      CHECK(a.nibble(i) == expected);
    }
    CHECK(a.with_nibble(0, 0xF).nibble(0) == 0xF);
    CHECK(a.with_nibble(31, 0x7).nibble(31) == 0x7);
  }

  TEST_CASE("prefix masks host bits and tests containment") {
    const auto p = Prefix::from_string("2001:db8:ffff::1/32");
    CHECK(p.to_string() == "2001:db8::/32");
    CHECK(p.contains(Ipv6Address::from_string("2001:db8:1234::5")));
    CHECK_FALSE(p.contains(Ipv6Address::from_string("2001:db9::")));
    CHECK(p.covers(Prefix::from_string("2001:db8:1::/48")));
    CHECK_FALSE(Prefix::from_string("2001:db8:1::/48").covers(p));
    CHECK(p.last() == Ipv6Address::from_string("2001:db8:ffff:ffff:ffff:ffff:ffff:ffff"));
  }

  TEST_CASE("prefix length outside [1, 128] is rejected") {
    CHECK_THROWS_AS(Prefix(Ipv6Address(), 0), std::invalid_argument);
    CHECK_THROWS_AS(Prefix(Ipv6Address(), 129), std::invalid_argument);
    CHECK_FALSE(Prefix::parse("2001:db8::/200").has_value());
    CHECK_FALSE(Prefix::parse("2001:db8::").has_value());
  }

  TEST_CASE("trie longest match agrees with a linear scan") {
    std::mt19937_64 rng(5);
    std::vector<Prefix> prefixes;
    PrefixTrie<std::size_t> trie;
    // Nested prefixes under a few roots so that longest match matters.
    for (int i = 0; i < 10000; ++i) {
      const std::uint64_t root = 0x2001000000000000ULL | ((rng() % 8) << 32);
      const int len = 16 + static_cast<int>(rng() % 49);
      const Prefix p(Ipv6Address::from_halves(root | (rng() & 0xFFFFFFFFULL), 0), len);
      trie.insert(p, prefixes.size());
      prefixes.push_back(p);
    }
    for (int q = 0; q < 2000; ++q) {
      const auto a = Ipv6Address::from_halves(0x2001000000000000ULL | ((rng() % 8) << 32) | (rng() & 0xFFFFFFFFULL),
                                              rng());
      const Prefix* best = nullptr;
      for (const auto& p : prefixes) {
        if (p.contains(a) && (best == nullptr || p.length() > best->length())) best = &p;
      }
      const auto* hit = trie.longest_match(a);
      if (best == nullptr) {
        CHECK(hit == nullptr);
      } else {
        REQUIRE(hit != nullptr);
        CHECK(hit->prefix == *best);
      }
    }
  }

  TEST_CASE("trie covering returns the least specific cover") {
    PrefixTrie<int> trie;
    trie.insert(Prefix::from_string("2001:db8::/32"), 1);
    trie.insert(Prefix::from_string("2001:db8:1::/48"), 2);
    const auto* c = trie.covering(Prefix::from_string("2001:db8:1:2::/64"));
    REQUIRE(c != nullptr);
    CHECK(c->value == 1);
    CHECK(trie.covering(Prefix::from_string("2001::/16")) == nullptr);
    CHECK(trie.find(Prefix::from_string("2001:db8:1::/48"))->value == 2);
  }
}
