#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rover/corpus.hpp"
#include "rover/pattern.hpp"

namespace rover {

/// Tail template over {0, *} only, carrying the prefixes and ASes whose
/// seeds produced it. Bit i of the wildcard mask marks tail nibble i.
class GenericPattern {
 public:
  using Mask = std::uint32_t;
  static constexpr Mask kFullMask = (Mask{1} << kTailNibbles) - 1;

  GenericPattern() = default;
  explicit GenericPattern(Mask wildcards) : mask_(wildcards & kFullMask) {}

  /// Accepts only '0' and '*' cells.
  static std::optional<GenericPattern> parse(std::string_view text);
  static GenericPattern from_string(std::string_view text);

  Mask wildcard_mask() const { return mask_; }
  bool is_wildcard(int index) const { return ((mask_ >> index) & 1u) != 0; }
  int wildcard_count() const { return __builtin_popcount(mask_); }
  /// 16^wildcard_count.
  double space_size() const;
  bool matches(const TruncatedSeed& seed) const;
  std::string to_string() const;

  const std::set<Prefix>& prefixes() const { return prefixes_; }
  const std::set<std::uint32_t>& ases() const { return ases_; }
  void add_prefix(const Prefix& p) { prefixes_.insert(p); }
  void add_as(std::uint32_t asn) { ases_.insert(asn); }
  void merge_provenance(const GenericPattern& other);

  /// Seen under at least two prefixes or two ASes.
  bool shared() const { return prefixes_.size() >= 2 || ases_.size() >= 2; }

  /// Wildcard count first, then pattern string.
  friend bool canonical_less(const GenericPattern& a, const GenericPattern& b);
  friend bool same_shape(const GenericPattern& a, const GenericPattern& b) { return a.mask_ == b.mask_; }

 private:
  Mask mask_ = 0;
  std::set<Prefix> prefixes_;
  std::set<std::uint32_t> ases_;
};

bool canonical_less(const GenericPattern& a, const GenericPattern& b);

/// Non-zero digits and wildcards become wildcards; zero digits stay zero.
GenericPattern pattern_degrade(const Pattern& pattern);

/// Degrades every pattern and attaches provenance from the source prefixes
/// of its seeds (and their ASes).
std::vector<GenericPattern> degrade_with_provenance(std::span<const Pattern> patterns,
                                                    const TruncatedCorpus& truncated,
                                                    const SeedCorpus& corpus);

/// Merges identical templates (provenance unioned), then keeps only shared
/// ones. Output is in canonical order.
std::vector<GenericPattern> filter_shared(std::span<const GenericPattern> generics);

/// Wildcards of `a` are a subset of the wildcards of `b`.
bool is_sub_pattern(const GenericPattern& a, const GenericPattern& b);

/// DAG over generic patterns; every edge strictly increases wildcard count.
class DependencyGraph {
 public:
  DependencyGraph() = default;
  /// Throws std::invalid_argument on duplicate templates.
  explicit DependencyGraph(std::vector<GenericPattern> nodes);

  /// Throws std::invalid_argument for unknown nodes or a non-increasing edge.
  void add_edge(const GenericPattern& from, const GenericPattern& to);

  const std::vector<GenericPattern>& nodes() const { return nodes_; }
  std::size_t edge_count() const;
  /// Edges as node index pairs, sorted.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  bool contains(const GenericPattern& p) const { return index_.count(p.wildcard_mask()) != 0; }
  std::optional<std::size_t> index_of(const GenericPattern& p) const;

  /// Out-neighbours ordered by (wildcard count, pattern string). Throws
  /// std::out_of_range for a pattern that is not a node.
  std::vector<GenericPattern> successors(const GenericPattern& p) const;

  std::vector<std::size_t> topological_order() const;
  /// Edge count of the longest path.
  std::size_t longest_path() const;

 private:
  std::vector<GenericPattern> nodes_;
  std::unordered_map<GenericPattern::Mask, std::size_t> index_;
  std::vector<std::vector<std::size_t>> out_;
};

/// Adds an edge a -> b (wildcards(a) < wildcards(b)) when the two share a
/// prefix or AS and differ by exactly one wildcard, or when a is a
/// sub-pattern of b.
DependencyGraph construct_dependency(std::span<const GenericPattern> generics);

/// One template per line. Lines starting with '#' are comments.
void write_generic_patterns(std::ostream& out, std::span<const GenericPattern> generics);
std::vector<GenericPattern> read_generic_patterns(std::istream& in);

/// "PATTERN<TAB>prefix,prefix<TAB>asn,asn" per line.
void write_provenance(std::ostream& out, std::span<const GenericPattern> generics);
std::vector<GenericPattern> read_provenance(std::istream& in);

/// "FROM<TAB>TO" per line.
void write_graph(std::ostream& out, const DependencyGraph& graph);
DependencyGraph read_graph(std::istream& in, std::vector<GenericPattern> nodes);

}  // namespace rover
