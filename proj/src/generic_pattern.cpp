#include "rover/generic_pattern.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rover {
namespace {

bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

std::string strip_cr(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  return line;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

bool intersects(const auto& a, const auto& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      return true;
    }
  }
  return false;
}

}  // namespace

std::optional<GenericPattern> GenericPattern::parse(std::string_view text) {
  auto cells = parse_tail_cells(text);
  if (!cells) return std::nullopt;
  Mask mask = 0;
  for (int i = 0; i < kTailNibbles; ++i) {
    if ((*cells)[i] == Pattern::kWildcard) {
      mask |= Mask{1} << i;
    } else if ((*cells)[i] != 0) {
      return std::nullopt;
    }
  }
  return GenericPattern(mask);
}

GenericPattern GenericPattern::from_string(std::string_view text) {
  auto parsed = parse(text);
  if (!parsed) throw std::invalid_argument("invalid generic pattern: " + std::string(text));
  return *parsed;
}

double GenericPattern::space_size() const { return std::ldexp(1.0, 4 * wildcard_count()); }

bool GenericPattern::matches(const TruncatedSeed& seed) const {
  for (int i = 0; i < kTailNibbles; ++i) {
    if (!is_wildcard(i) && seed.nibble(i) != 0) return false;
  }
  return true;
}

std::string GenericPattern::to_string() const {
  std::array<std::uint8_t, kTailNibbles> cells{};
  for (int i = 0; i < kTailNibbles; ++i) cells[i] = is_wildcard(i) ? Pattern::kWildcard : 0;
  return format_tail_cells(cells);
}

void GenericPattern::merge_provenance(const GenericPattern& other) {
  prefixes_.insert(other.prefixes_.begin(), other.prefixes_.end());
  ases_.insert(other.ases_.begin(), other.ases_.end());
}

bool canonical_less(const GenericPattern& a, const GenericPattern& b) {
  if (a.wildcard_count() != b.wildcard_count()) return a.wildcard_count() < b.wildcard_count();
  return a.to_string() < b.to_string();
}

GenericPattern pattern_degrade(const Pattern& pattern) {
  GenericPattern::Mask mask = 0;
  for (int i = 0; i < kTailNibbles; ++i) {
    if (pattern.cell(i) != 0) mask |= GenericPattern::Mask{1} << i;
  }
  return GenericPattern(mask);
}

std::vector<GenericPattern> degrade_with_provenance(std::span<const Pattern> patterns,
                                                    const TruncatedCorpus& truncated,
                                                    const SeedCorpus& corpus) {
  std::vector<GenericPattern> result;
  result.reserve(patterns.size());
  for (const auto& pattern : patterns) {
    GenericPattern generic = pattern_degrade(pattern);
    for (const auto& seed : pattern.seeds()) {
      const auto it = truncated.origins.find(seed);
      if (it == truncated.origins.end()) continue;
      for (const auto& prefix : it->second) {
        generic.add_prefix(prefix);
        if (auto asn = corpus.asn_of(prefix)) generic.add_as(*asn);
      }
    }
    result.push_back(std::move(generic));
  }
  return result;
}

std::vector<GenericPattern> filter_shared(std::span<const GenericPattern> generics) {
  std::map<GenericPattern::Mask, GenericPattern> merged;
  for (const auto& g : generics) {
    auto [it, inserted] = merged.try_emplace(g.wildcard_mask(), g);
    if (!inserted) it->second.merge_provenance(g);
  }
  std::vector<GenericPattern> result;
  for (auto& [mask, g] : merged) {
    if (g.shared()) result.push_back(std::move(g));
  }
  std::sort(result.begin(), result.end(), canonical_less);
  return result;
}

bool is_sub_pattern(const GenericPattern& a, const GenericPattern& b) {
  return (a.wildcard_mask() & ~b.wildcard_mask()) == 0;
}

DependencyGraph::DependencyGraph(std::vector<GenericPattern> nodes) : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end(), canonical_less);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i].wildcard_mask(), i).second) {
      throw std::invalid_argument("duplicate generic pattern " + nodes_[i].to_string());
    }
  }
  out_.resize(nodes_.size());
}

std::optional<std::size_t> DependencyGraph::index_of(const GenericPattern& p) const {
  const auto it = index_.find(p.wildcard_mask());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void DependencyGraph::add_edge(const GenericPattern& from, const GenericPattern& to) {
  const auto a = index_of(from);
  const auto b = index_of(to);
  if (!a || !b) throw std::invalid_argument("edge references an unknown pattern");
  if (from.wildcard_count() >= to.wildcard_count()) {
    throw std::invalid_argument("edge must increase the wildcard count: " + from.to_string() + " -> " +
                                to.to_string());
  }
  auto& list = out_[*a];
  const auto pos = std::lower_bound(list.begin(), list.end(), *b);
  if (pos == list.end() || *pos != *b) list.insert(pos, *b);
}

std::size_t DependencyGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& list : out_) n += list.size();
  return n;
}

std::vector<std::pair<std::size_t, std::size_t>> DependencyGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> result;
  for (std::size_t a = 0; a < out_.size(); ++a) {
    for (auto b : out_[a]) result.emplace_back(a, b);
  }
  return result;
}

std::vector<GenericPattern> DependencyGraph::successors(const GenericPattern& p) const {
  const auto idx = index_of(p);
  if (!idx) throw std::out_of_range("pattern not in dependency graph: " + p.to_string());
  // Node indices follow canonical order, so the adjacency list already is.
  std::vector<GenericPattern> result;
  result.reserve(out_[*idx].size());
  for (auto b : out_[*idx]) result.push_back(nodes_[b]);
  return result;
}

std::vector<std::size_t> DependencyGraph::topological_order() const {
  std::vector<std::size_t> indegree(nodes_.size(), 0);
  for (const auto& list : out_) {
    for (auto b : list) ++indegree[b];
  }
  std::vector<std::size_t> order;
  std::vector<std::size_t> ready;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  while (!ready.empty()) {
    const auto n = ready.back();
    ready.pop_back();
    order.push_back(n);
    for (auto b : out_[n]) {
      if (--indegree[b] == 0) ready.push_back(b);
    }
  }
  if (order.size() != nodes_.size()) throw std::logic_error("dependency graph has a cycle");
  return order;
}

std::size_t DependencyGraph::longest_path() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t longest = 0;
  for (auto n : topological_order()) {
    for (auto b : out_[n]) {
      depth[b] = std::max(depth[b], depth[n] + 1);
      longest = std::max(longest, depth[b]);
    }
  }
  return longest;
}

DependencyGraph construct_dependency(std::span<const GenericPattern> generics) {
  DependencyGraph graph(std::vector<GenericPattern>(generics.begin(), generics.end()));
  const auto& nodes = graph.nodes();
  for (const auto& a : nodes) {
    for (const auto& b : nodes) {
      const int gap = b.wildcard_count() - a.wildcard_count();
      if (gap <= 0) continue;
      const bool co_occur = gap == 1 && (intersects(a.prefixes(), b.prefixes()) ||
                                         intersects(a.ases(), b.ases()));
      if (co_occur || is_sub_pattern(a, b)) graph.add_edge(a, b);
    }
  }
  return graph;
}

void write_generic_patterns(std::ostream& out, std::span<const GenericPattern> generics) {
  for (const auto& g : generics) out << g.to_string() << '\n';
}

std::vector<GenericPattern> read_generic_patterns(std::istream& in) {
  std::vector<GenericPattern> result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    line = strip_cr(line);
    const auto field = line.substr(0, line.find('\t'));
    auto parsed = GenericPattern::parse(field);
    if (!parsed) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": not a generic pattern: " + field);
    }
    result.push_back(*parsed);
  }
  return result;
}

void write_provenance(std::ostream& out, std::span<const GenericPattern> generics) {
  for (const auto& g : generics) {
    out << g.to_string() << '\t';
    bool first = true;
    for (const auto& p : g.prefixes()) {
      out << (first ? "" : ",") << p.to_string();
      first = false;
    }
    out << '\t';
    first = true;
    for (auto asn : g.ases()) {
      out << (first ? "" : ",") << asn;
      first = false;
    }
    out << '\n';
  }
}

std::vector<GenericPattern> read_provenance(std::istream& in) {
  std::vector<GenericPattern> result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    line = strip_cr(line);
    std::vector<std::string> columns;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      columns.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    auto g = GenericPattern::parse(columns[0]);
    if (!g) throw std::invalid_argument("line " + std::to_string(line_no) + ": bad pattern");
    if (columns.size() > 1) {
      for (const auto& text : split(columns[1], ',')) g->add_prefix(Prefix::from_string(text));
    }
    if (columns.size() > 2) {
      for (const auto& text : split(columns[2], ',')) g->add_as(static_cast<std::uint32_t>(std::stoul(text)));
    }
    result.push_back(std::move(*g));
  }
  return result;
}

void write_graph(std::ostream& out, const DependencyGraph& graph) {
  const auto& nodes = graph.nodes();
  for (const auto& [a, b] : graph.edges()) {
    out << nodes[a].to_string() << '\t' << nodes[b].to_string() << '\n';
  }
}

DependencyGraph read_graph(std::istream& in, std::vector<GenericPattern> nodes) {
  DependencyGraph graph(std::move(nodes));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    line = strip_cr(line);
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument("graph line " + std::to_string(line_no) + ": expected FROM<TAB>TO");
    }
    auto from = GenericPattern::parse(line.substr(0, tab));
    auto to = GenericPattern::parse(line.substr(tab + 1));
    if (!from || !to) throw std::invalid_argument("graph line " + std::to_string(line_no) + ": bad pattern");
    graph.add_edge(*from, *to);
  }
  return graph;
}

}  // namespace rover
