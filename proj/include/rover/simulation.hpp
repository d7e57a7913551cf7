#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rover/corpus.hpp"
#include "rover/generic_pattern.hpp"
#include "rover/prefix_trie.hpp"
#include "rover/prober.hpp"
#include "rover/target_space.hpp"

namespace rover {

struct PlantedPattern {
  GenericPattern pattern;
  double density = 0.0;  // in [0, 1]
};

struct ScenarioPrefix {
  Prefix prefix;
  bool alias = false;
  std::vector<PlantedPattern> planted;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground truth for a simulated network. Text form:
///
///   seed 42
///   2a02:1::/32 alias
///   2a02:2::/32 live 0000:0000:0000:00**:*000@0.4
///
/// Blank lines and '#' comments are ignored.
struct Scenario {
  std::uint64_t seed = 0;
  std::vector<ScenarioPrefix> prefixes;

  /// Throws ScenarioError on malformed lines, overlapping prefixes, or
  /// densities outside [0, 1].
  static Scenario read(std::istream& in);
  static Scenario load(const std::string& path);
  void write(std::ostream& out) const;

  std::size_t alias_count() const;
};

/// Deterministic stand-in for the Internet. An alias prefix answers every
/// probe. Elsewhere an address answers when it fits a planted pattern of its
/// prefix and a keyed hash of (seed, address) falls below that pattern's
/// density, so repeated probes of one address always agree.
class SimulatedNetwork final : public Prober {
 public:
  explicit SimulatedNetwork(Scenario scenario);

  std::vector<ProbeResult> probe(std::span<const Ipv6Address> targets) override;
  std::uint64_t probes_sent() const override { return sent_; }

  bool responsive(const Ipv6Address& a) const;
  /// Probes that landed inside alias prefixes.
  std::uint64_t alias_probes() const { return alias_sent_; }
  const Scenario& scenario() const { return scenario_; }

 private:
  bool answers(std::size_t index, const Ipv6Address& a) const;

  Scenario scenario_;
  std::vector<std::vector<AddressRegion>> regions_;  // per prefix, parallel to planted
  PrefixTrie<std::size_t> index_;
  std::uint64_t sent_ = 0;
  std::uint64_t alias_sent_ = 0;
};

/// Uniform value in [0, 1) that depends only on (seed, address).
double address_coin(std::uint64_t seed, const Ipv6Address& a);

struct WorldParams {
  std::uint64_t seed = 1;
  std::size_t families = 6;  // each a 3 -> 4 -> 5 wildcard chain
  std::size_t seeded_prefixes = 60;
  std::size_t seeds_per_pattern = 40;  // per (prefix, pattern) pair
  std::size_t unseeded_prefixes = 100;
  double alias_fraction = 0.2;
  std::size_t planted_per_prefix = 1;
  double density_min = 0.3;
  double density_max = 0.5;
  /// Smallest library patterns draw from the top third of the density
  /// range, largest from the bottom third.
  bool sparser_when_larger = true;
};

/// A synthetic measurement world: a hitlist mined from planted families of
/// nested patterns, the routing table that covers it, a known alias list,
/// and a scenario describing the unseeded prefixes.
struct World {
  std::vector<GenericPattern> library;  // canonical order
  std::vector<Ipv6Address> hitlist;     // sorted
  std::vector<AnnouncedPrefix> announced;
  std::vector<Prefix> known_aliases;
  Scenario scenario;  // unseeded prefixes only
};

/// Throws std::invalid_argument on inconsistent parameters.
World synthesize_world(const WorldParams& params);

void write_hitlist(std::ostream& out, std::span<const Ipv6Address> hitlist);
void write_prefix_list(std::ostream& out, std::span<const AnnouncedPrefix> announced);
void write_alias_list(std::ostream& out, std::span<const Prefix> aliases);

}  // namespace rover
