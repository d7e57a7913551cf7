#include <doctest.h>

#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rover/corpus.hpp"

using namespace rover;

namespace {

Hitlist hitlist_from(const std::string& text) {
  std::istringstream in(text);
  return read_hitlist(in);
}

std::vector<Ipv6Address> addrs(std::initializer_list<const char*> texts) {
  std::vector<Ipv6Address> out;
  for (const auto* t : texts) out.push_back(Ipv6Address::from_string(t));
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("hitlist ingestion deduplicates") {
    const auto h = hitlist_from("2001:db8::1\n2001:db8::1\n");
    CHECK(h.addresses.size() == 1);
    CHECK(h.duplicates == 1);
  }

  TEST_CASE("empty hitlist gives zero seeds") {
    const auto h = hitlist_from("");
    CHECK(h.addresses.empty());
    CHECK(h.lines == 0);
  }

  TEST_CASE("malformed lines are counted, comments skipped") {
    const auto h = hitlist_from("# seeds\n2001:db8::1\n2001:db8::2\nbogus\n2001:db8::3\n");
    CHECK(h.addresses.size() == 3);
    CHECK(h.malformed == 1);
    CHECK(h.lines == 4);
  }

  TEST_CASE("mostly malformed input is fatal") {
    CHECK_THROWS_AS(hitlist_from("x\ny\n2001:db8::1\n"), IngestError);
    CHECK_THROWS_AS(ingest_hitlist("/nonexistent/hitlist.txt"), IngestError);
  }

  TEST_CASE("prefix list reads optional AS numbers") {
    std::istringstream in("2001:db8::/32 AS64500\n2001:db9::/32 64501\n2001:dba::/32\n");
    const auto list = read_prefix_list(in);
    REQUIRE(list.size() == 3);
    CHECK(list[0].asn == 64500u);
    CHECK(list[1].asn == 64501u);
    CHECK_FALSE(list[2].asn.has_value());
  }

  TEST_CASE("seeds map to the longest announced prefix and skip aliases") {
    const std::vector<AnnouncedPrefix> announced = {{Prefix::from_string("2001:db8::/32"), 1},
                                                    {Prefix::from_string("2001:db8:1::/48"), 2},
                                                    {Prefix::from_string("2001:dead::/32"), 3}};
    const std::vector<Prefix> aliases = {Prefix::from_string("2001:dead:beef::/48")};
    const auto hits = addrs({"2001:db8::5", "2001:db8:1::5", "2001:dead:beef::1", "2001:dead::1", "3fff::1"});
    const auto corpus = SeedCorpus::build(hits, announced, aliases);
    CHECK(corpus.size() == 3);
    CHECK(corpus.alias_excluded() == 1);
    CHECK(corpus.unrouted() == 1);
    CHECK(corpus.prefix_of(Ipv6Address::from_string("2001:db8::5")) == Prefix::from_string("2001:db8::/32"));
    CHECK(corpus.prefix_of(Ipv6Address::from_string("2001:db8:1::5")) == Prefix::from_string("2001:db8:1::/48"));
    CHECK(corpus.asn_of(Prefix::from_string("2001:db8:1::/48")) == 2u);
    CHECK_THROWS_AS(corpus.prefix_of(Ipv6Address::from_string("3fff::1")), std::out_of_range);
  }

  TEST_CASE("unseeded prefixes: worked examples") {
    const std::vector<AnnouncedPrefix> announced = {{Prefix::from_string("2001:db8::/32"), std::nullopt},
                                                    {Prefix::from_string("2001:dead::/32"), std::nullopt}};
    const auto corpus = SeedCorpus::build(addrs({"2001:db8::1"}), announced, {});
    const std::vector<Prefix> g = {announced[0].prefix, announced[1].prefix};
    CHECK(derive_unseeded(g, corpus, {}) == std::vector<Prefix>{Prefix::from_string("2001:dead::/32")});

    const std::vector<Prefix> only = {Prefix::from_string("2001:db8::/32")};
    CHECK(derive_unseeded(only, SeedCorpus{}, only).empty());
    CHECK(derive_unseeded({}, corpus, {}).empty());
  }

  TEST_CASE("unseeded prefixes match a brute-force membership check") {
    std::mt19937_64 rng(3);
    std::vector<AnnouncedPrefix> announced;
    std::vector<Prefix> g;
    for (int i = 0; i < 1000; ++i) {
      const int len = 24 + static_cast<int>(rng() % 25);
      const Prefix p(Ipv6Address::from_halves(0x2a00000000000000ULL | (rng() & 0x0000FFFFFF000000ULL), 0), len);
      announced.push_back({p, std::nullopt});
      g.push_back(p);
    }
    std::vector<Ipv6Address> seeds;
    for (int i = 0; i < 100; ++i) {
      const auto& p = g[rng() % g.size()];
      seeds.emplace_back(p.network().bits() | (static_cast<u128>(rng()) & ~p.mask()));
    }
    const std::vector<Prefix> aliases = {g[0], g[1]};
    const auto corpus = SeedCorpus::build(seeds, announced, aliases);
    const auto unseeded = derive_unseeded(g, corpus, aliases);

    std::set<Prefix> expected;
    for (const auto& p : g) {
      bool keep = true;
      for (const auto& s : corpus.seeds()) keep = keep && !p.contains(s);
      for (const auto& a : aliases) keep = keep && !a.covers(p);
      if (keep) expected.insert(p);
    }
    CHECK(std::set<Prefix>(unseeded.begin(), unseeded.end()) == expected);
    CHECK(std::set<Prefix>(unseeded.begin(), unseeded.end()).size() == unseeded.size());
  }

  TEST_CASE("truncation keeps the low 80 bits") {
    const auto seed = Ipv6Address::from_string("2001:db8:1:2::5");
    const auto tail = TruncatedSeed::from_address(seed);
    CHECK(tail.to_address() == Ipv6Address::from_string("0:0:0:2::5"));
    CHECK(tail.nibble(3) == 2);
    CHECK(tail.nibble(19) == 5);
    for (int i = 0; i < kTailNibbles; ++i) CHECK(tail.nibble(i) == seed.nibble(i + 12));
  }

  TEST_CASE("seeds differing only in the top 48 bits share one tail") {
    const std::vector<AnnouncedPrefix> announced = {{Prefix::from_string("2001:db8::/32"), 1},
                                                    {Prefix::from_string("2001:db9::/32"), 2}};
    const auto corpus = SeedCorpus::build(addrs({"2001:db8:0:7::9", "2001:db9:0:7::9"}), announced, {});
    const auto truncated = seed_truncate(corpus);
    REQUIRE(truncated.tails.size() == 1);
    CHECK(truncated.origins.at(truncated.tails[0]).size() == 2);
  }

  TEST_CASE("truncation agrees with an independent mask on 10k random seeds") {
    std::mt19937_64 rng(17);
    std::vector<AnnouncedPrefix> announced;
    for (int i = 0; i < 16; ++i) {
      announced.push_back({Prefix(Ipv6Address::from_halves(0x2a01000000000000ULL | (std::uint64_t(i) << 32), 0), 32),
                           std::uint32_t(100 + i)});
    }
    std::vector<Ipv6Address> seeds;
    for (int i = 0; i < 10000; ++i) {
      const auto& p = announced[rng() % announced.size()].prefix;
      // Small tail alphabet forces collisions across prefixes.
      seeds.push_back(Ipv6Address::from_halves(p.network().high() | (rng() % 4), rng() % 64));
    }
    const auto corpus = SeedCorpus::build(seeds, announced, {});
    const auto truncated = seed_truncate(corpus);
    std::set<std::pair<std::uint64_t, std::uint64_t>> expected;
    for (const auto& s : corpus.seeds()) {
      const u128 masked = s.bits() & ((static_cast<u128>(1) << 80) - 1);
      expected.insert({static_cast<std::uint64_t>(masked >> 64), static_cast<std::uint64_t>(masked)});
    }
    CHECK(truncated.tails.size() <= corpus.size());
    REQUIRE(truncated.tails.size() == expected.size());
    for (const auto& t : truncated.tails) {
      const auto a = t.to_address();
      CHECK(expected.count({a.high(), a.low()}) == 1);
    }
  }
}
