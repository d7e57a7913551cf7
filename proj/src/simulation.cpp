#include "rover/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "rover/target_space.hpp"

namespace rover {
namespace {

constexpr int kTailStart = kAddressNibbles - kTailNibbles;

double parse_density(const std::string& text, std::size_t line_no) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !(value >= 0.0 && value <= 1.0)) {
    throw ScenarioError("line " + std::to_string(line_no) + ": bad density '" + text + "'");
  }
  return value;
}

std::string format_density(double d) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, ptr);
}

Ipv6Address place_tail(const Prefix& prefix, const GenericPattern& pattern, Rng& rng) {
  std::uniform_int_distribution<unsigned> digit(1, 15);
  Ipv6Address a = prefix.network();
  for (int i = 0; i < kTailNibbles; ++i) {
    if (pattern.is_wildcard(i)) a = a.with_nibble(kTailStart + i, digit(rng));
  }
  return a;
}

Prefix slash32(std::uint64_t top16, std::uint64_t index) {
  return Prefix(Ipv6Address::from_halves((top16 << 48) | (index << 32), 0), 32);
}

}  // namespace

Scenario Scenario::read(std::istream& in) {
  Scenario scenario;
  bool have_seed = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string head;
    if (!(fields >> head)) continue;

    if (head == "seed") {
      std::string value;
      if (have_seed || !(fields >> value)) throw ScenarioError("line " + std::to_string(line_no) + ": bad seed line");
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), scenario.seed);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ScenarioError("line " + std::to_string(line_no) + ": bad seed '" + value + "'");
      }
      have_seed = true;
      continue;
    }

    ScenarioPrefix entry;
    const auto prefix = Prefix::parse(head);
    if (!prefix) throw ScenarioError("line " + std::to_string(line_no) + ": bad prefix '" + head + "'");
    entry.prefix = *prefix;
    std::string kind;
    if (!(fields >> kind) || (kind != "alias" && kind != "live")) {
      throw ScenarioError("line " + std::to_string(line_no) + ": expected 'alias' or 'live'");
    }
    entry.alias = kind == "alias";
    std::string item;
    while (fields >> item) {
      const auto at = item.find('@');
      if (at == std::string::npos) throw ScenarioError("line " + std::to_string(line_no) + ": expected pattern@density");
      const auto pattern = GenericPattern::parse(item.substr(0, at));
      if (!pattern) throw ScenarioError("line " + std::to_string(line_no) + ": bad pattern '" + item.substr(0, at) + "'");
      entry.planted.push_back({*pattern, parse_density(item.substr(at + 1), line_no)});
    }
    scenario.prefixes.push_back(std::move(entry));
  }

  std::vector<Prefix> sorted;
  for (const auto& p : scenario.prefixes) sorted.push_back(p.prefix);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    // Sorted by network, so any overlap shows up between neighbours.
    if (sorted[i - 1].covers(sorted[i]) || sorted[i].covers(sorted[i - 1])) {
      throw ScenarioError("overlapping prefixes " + sorted[i - 1].to_string() + " and " + sorted[i].to_string());
    }
  }
  return scenario;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario " + path);
  return read(in);
}

void Scenario::write(std::ostream& out) const {
  out << "seed " << seed << '\n';
  for (const auto& p : prefixes) {
    out << p.prefix.to_string() << (p.alias ? " alias" : " live");
    for (const auto& planted : p.planted) {
      out << ' ' << planted.pattern.to_string() << '@' << format_density(planted.density);
    }
    out << '\n';
  }
}

std::size_t Scenario::alias_count() const {
  return static_cast<std::size_t>(
      std::count_if(prefixes.begin(), prefixes.end(), [](const ScenarioPrefix& p) { return p.alias; }));
}

double address_coin(std::uint64_t seed, const Ipv6Address& a) {
  const std::uint64_t h = mix64(mix64(seed ^ a.high()) ^ a.low());
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

SimulatedNetwork::SimulatedNetwork(Scenario scenario) : scenario_(std::move(scenario)) {
  for (std::size_t i = 0; i < scenario_.prefixes.size(); ++i) {
    const auto& entry = scenario_.prefixes[i];
    index_.insert(entry.prefix, i);
    auto& regions = regions_.emplace_back();
    for (const auto& planted : entry.planted) regions.emplace_back(entry.prefix, planted.pattern);
  }
}

bool SimulatedNetwork::responsive(const Ipv6Address& a) const {
  const auto* hit = index_.longest_match(a);
  return hit != nullptr && answers(hit->value, a);
}

bool SimulatedNetwork::answers(std::size_t index, const Ipv6Address& a) const {
  const auto& entry = scenario_.prefixes[index];
  if (entry.alias) return true;
  const auto& regions = regions_[index];
  double density = 0.0;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    if (regions[k].contains(a)) density = std::max(density, entry.planted[k].density);
  }
  return density > 0.0 && address_coin(scenario_.seed, a) < density;
}

std::vector<ProbeResult> SimulatedNetwork::probe(std::span<const Ipv6Address> targets) {
  std::vector<ProbeResult> results;
  results.reserve(targets.size());
  for (const auto& t : targets) {
    const auto* hit = index_.longest_match(t);
    if (hit != nullptr && scenario_.prefixes[hit->value].alias) ++alias_sent_;
    results.push_back({t, hit != nullptr && answers(hit->value, t)});
  }
  sent_ += targets.size();
  return results;
}

World synthesize_world(const WorldParams& params) {
  if (params.families == 0) throw std::invalid_argument("need at least one pattern family");
  if (params.seeded_prefixes < 2 || params.seeded_prefixes > 0xFFFF) {
    throw std::invalid_argument("seeded_prefixes must be in [2, 65535]");
  }
  if (params.unseeded_prefixes > 0xFFFF) throw std::invalid_argument("unseeded_prefixes must be at most 65535");
  if (params.seeds_per_pattern == 0) throw std::invalid_argument("seeds_per_pattern must be positive");
  if (!(params.alias_fraction >= 0.0 && params.alias_fraction <= 1.0)) {
    throw std::invalid_argument("alias_fraction must be in [0, 1]");
  }
  if (!(params.density_min >= 0.0 && params.density_min <= params.density_max && params.density_max <= 1.0)) {
    throw std::invalid_argument("need 0 <= density_min <= density_max <= 1");
  }

  Rng rng(mix64(params.seed));
  World world;

  // Families: nested wildcard sets of size 3, 4 and 5 over random tail nibbles.
  std::set<GenericPattern::Mask> masks;
  std::size_t attempts = 0;
  while (masks.size() < 3 * params.families) {
    if (++attempts > 10000) throw std::invalid_argument("cannot draw that many distinct pattern families");
    std::vector<int> positions(kTailNibbles);
    std::iota(positions.begin(), positions.end(), 0);
    std::shuffle(positions.begin(), positions.end(), rng);
    GenericPattern::Mask chain[3] = {0, 0, 0};
    GenericPattern::Mask m = 0;
    for (int k = 0; k < 5; ++k) {
      m |= GenericPattern::Mask{1} << positions[k];
      if (k >= 2) chain[k - 2] = m;
    }
    if (masks.count(chain[0]) || masks.count(chain[1]) || masks.count(chain[2])) continue;
    masks.insert(chain, chain + 3);
  }
  for (const auto m : masks) world.library.emplace_back(m);
  std::sort(world.library.begin(), world.library.end(), canonical_less);
  const std::size_t library_size = world.library.size();

  // Seeded prefixes; neighbours share an AS. Each pattern lands under at
  // least two prefixes.
  std::vector<Prefix> seeded;
  for (std::size_t i = 0; i < params.seeded_prefixes; ++i) {
    seeded.push_back(slash32(0x2a01, i + 1));
    world.announced.push_back({seeded.back(), static_cast<std::uint32_t>(64512 + i / 2)});
  }
  std::set<std::pair<std::size_t, std::size_t>> placements;  // (prefix, pattern)
  for (std::size_t j = 0; j < library_size; ++j) {
    placements.insert({(2 * j) % seeded.size(), j});
    placements.insert({(2 * j + 1) % seeded.size(), j});
  }
  for (std::size_t i = 0; i < seeded.size(); ++i) placements.insert({i, i % library_size});
  for (const auto& [pi, pj] : placements) {
    for (std::size_t s = 0; s < params.seeds_per_pattern; ++s) {
      world.hitlist.push_back(place_tail(seeded[pi], world.library[pj], rng));
    }
  }

  // A known alias prefix that also shows up in the hitlist.
  const auto alias_prefix = slash32(0x2a03, 0);
  world.known_aliases.push_back(alias_prefix);
  world.announced.push_back({alias_prefix, 64999});
  for (std::size_t s = 0; s < params.seeds_per_pattern; ++s) {
    world.hitlist.push_back(place_tail(alias_prefix, world.library.front(), rng));
  }
  std::sort(world.hitlist.begin(), world.hitlist.end());
  world.hitlist.erase(std::unique(world.hitlist.begin(), world.hitlist.end()), world.hitlist.end());

  // Unseeded prefixes, a fixed share of them aliased.
  const auto n = params.unseeded_prefixes;
  const auto alias_total =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * params.alias_fraction));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_alias(n, false);
  for (std::size_t k = 0; k < alias_total; ++k) is_alias[order[k]] = true;

  int fewest = kTailNibbles, most = 0;
  for (const auto& g : world.library) {
    fewest = std::min(fewest, g.wildcard_count());
    most = std::max(most, g.wildcard_count());
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto draw_density = [&](const GenericPattern& g) {
    double position = unit(rng);  // 0 is the densest end
    if (params.sparser_when_larger && most > fewest) {
      const double size_rank = static_cast<double>(g.wildcard_count() - fewest) / (most - fewest);
      position = (2.0 * size_rank + position) / 3.0;
    }
    const double d = params.density_max - position * (params.density_max - params.density_min);
    return std::clamp(std::round(d * 1000.0) / 1000.0, params.density_min, params.density_max);
  };
  world.scenario.seed = mix64(params.seed ^ 0x5ce7a110ULL);
  for (std::size_t i = 0; i < n; ++i) {
    ScenarioPrefix entry;
    entry.prefix = slash32(0x2a02, i + 1);
    entry.alias = is_alias[i];
    world.announced.push_back({entry.prefix, static_cast<std::uint32_t>(65000 + i)});
    if (!entry.alias) {
      std::vector<std::size_t> picks(library_size);
      std::iota(picks.begin(), picks.end(), 0);
      std::shuffle(picks.begin(), picks.end(), rng);
      const auto count = std::min(params.planted_per_prefix, library_size);
      for (std::size_t k = 0; k < count; ++k) {
        const auto& g = world.library[picks[k]];
        entry.planted.push_back({g, draw_density(g)});
      }
    }
    world.scenario.prefixes.push_back(std::move(entry));
  }
  return world;
}

void write_hitlist(std::ostream& out, std::span<const Ipv6Address> hitlist) {
  for (const auto& a : hitlist) out << a.to_string() << '\n';
}

void write_prefix_list(std::ostream& out, std::span<const AnnouncedPrefix> announced) {
  for (const auto& p : announced) {
    out << p.prefix.to_string();
    if (p.asn) out << " AS" << *p.asn;
    out << '\n';
  }
}

void write_alias_list(std::ostream& out, std::span<const Prefix> aliases) {
  for (const auto& p : aliases) out << p.to_string() << '\n';
}

}  // namespace rover
