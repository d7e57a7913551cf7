#include "rover/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "rover/prefix_trie.hpp"

namespace rover {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string_view first_field(std::string_view s, std::string_view* rest = nullptr) {
  const auto end = s.find_first_of(" \t");
  if (end == std::string_view::npos) {
    if (rest) *rest = {};
    return s;
  }
  if (rest) *rest = trim(s.substr(end));
  return s.substr(0, end);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read " + path.string());
  return in;
}

void check_malformed_ratio(std::size_t malformed, std::size_t lines, const char* what) {
  if (lines > 0 && malformed * 2 > lines) {
    std::ostringstream msg;
    msg << what << ": " << malformed << " of " << lines
        << " lines are malformed; this does not look like the right file";
    throw IngestError(msg.str());
  }
}

std::optional<std::uint32_t> parse_asn(std::string_view field) {
  if (field.size() > 2 && (field[0] == 'A' || field[0] == 'a') && (field[1] == 'S' || field[1] == 's')) {
    field.remove_prefix(2);
  }
  std::uint32_t asn = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), asn);
  if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
  return asn;
}

}  // namespace

Hitlist read_hitlist(std::istream& in) {
  Hitlist result;
  std::string line;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    ++result.lines;
    if (auto address = Ipv6Address::parse(first_field(text))) {
      result.addresses.push_back(*address);
    } else {
      ++result.malformed;
    }
  }
  check_malformed_ratio(result.malformed, result.lines, "hitlist");

  std::sort(result.addresses.begin(), result.addresses.end());
  const auto unique_end = std::unique(result.addresses.begin(), result.addresses.end());
  result.duplicates = static_cast<std::size_t>(result.addresses.end() - unique_end);
  result.addresses.erase(unique_end, result.addresses.end());
  return result;
}

Hitlist ingest_hitlist(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_hitlist(in);
}

std::vector<AnnouncedPrefix> read_prefix_list(std::istream& in, std::size_t* malformed_out) {
  std::vector<AnnouncedPrefix> result;
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    ++lines;
    std::string_view rest;
    auto prefix = Prefix::parse(first_field(text, &rest));
    if (!prefix) {
      ++malformed;
      continue;
    }
    AnnouncedPrefix entry{*prefix, std::nullopt};
    if (!rest.empty()) {
      entry.asn = parse_asn(first_field(rest));
      if (!entry.asn) {
        ++malformed;
        continue;
      }
    }
    result.push_back(entry);
  }
  check_malformed_ratio(malformed, lines, "prefix list");
  if (malformed_out) *malformed_out = malformed;
  return result;
}

std::vector<AnnouncedPrefix> load_prefix_list(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_prefix_list(in);
}

std::vector<Prefix> read_alias_list(std::istream& in) {
  std::vector<Prefix> result;
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    ++lines;
    if (auto prefix = Prefix::parse(first_field(text))) {
      result.push_back(*prefix);
    } else {
      ++malformed;
    }
  }
  check_malformed_ratio(malformed, lines, "alias list");
  return result;
}

std::vector<Prefix> load_alias_list(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_alias_list(in);
}

SeedCorpus SeedCorpus::build(std::span<const Ipv6Address> hitlist,
                             std::span<const AnnouncedPrefix> announced,
                             std::span<const Prefix> aliases) {
  PrefixTrie<std::optional<std::uint32_t>> routes;
  for (const auto& entry : announced) routes.insert(entry.prefix, entry.asn);
  PrefixTrie<bool> alias_trie;
  for (const auto& alias : aliases) alias_trie.insert(alias, true);

  std::vector<Ipv6Address> sorted(hitlist.begin(), hitlist.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  SeedCorpus corpus;
  for (const auto& address : sorted) {
    if (alias_trie.longest_match(address) != nullptr) {
      ++corpus.alias_excluded_;
      continue;
    }
    const auto* route = routes.longest_match(address);
    if (route == nullptr) {
      ++corpus.unrouted_;
      continue;
    }
    corpus.seeds_.push_back(address);
    corpus.seed_prefix_.push_back(route->prefix);
    if (route->value) corpus.as_of_prefix_[route->prefix] = *route->value;
  }
  return corpus;
}

const Prefix& SeedCorpus::prefix_of(const Ipv6Address& seed) const {
  const auto it = std::lower_bound(seeds_.begin(), seeds_.end(), seed);
  if (it == seeds_.end() || *it != seed) {
    throw std::out_of_range("address not in corpus: " + seed.to_string());
  }
  return seed_prefix_[static_cast<std::size_t>(it - seeds_.begin())];
}

std::optional<std::uint32_t> SeedCorpus::asn_of(const Prefix& prefix) const {
  const auto it = as_of_prefix_.find(prefix);
  if (it == as_of_prefix_.end()) return std::nullopt;
  return it->second;
}

std::vector<Prefix> derive_unseeded(std::span<const Prefix> announced, const SeedCorpus& corpus,
                                    std::span<const Prefix> aliases) {
  PrefixTrie<bool> alias_trie;
  for (const auto& alias : aliases) alias_trie.insert(alias, true);

  const auto& seeds = corpus.seeds();
  std::set<Prefix> seen;
  std::vector<Prefix> result;
  for (const auto& prefix : announced) {
    if (!seen.insert(prefix).second) continue;
    if (alias_trie.covering(prefix) != nullptr) continue;
    const auto it = std::lower_bound(seeds.begin(), seeds.end(), prefix.network());
    if (it != seeds.end() && prefix.contains(*it)) continue;
    result.push_back(prefix);
  }
  return result;
}

TruncatedCorpus seed_truncate(const SeedCorpus& corpus) {
  TruncatedCorpus result;
  for (const auto& seed : corpus.seeds()) {
    const auto tail = TruncatedSeed::from_address(seed);
    result.origins[tail].insert(corpus.prefix_of(seed));
  }
  result.tails.reserve(result.origins.size());
  for (const auto& [tail, prefixes] : result.origins) result.tails.push_back(tail);
  return result;
}

}  // namespace rover
