#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rover/corpus.hpp"

namespace rover {

/// Renders 20 tail cells as "xxxx:xxxx:xxxx:xxxx:xxxx" where a cell value
/// of 16 or more prints as '*'.
std::string format_tail_cells(std::span<const std::uint8_t, kTailNibbles> cells);

/// Parses the grouped 20-cell form (colons optional). Cells come back as
/// 0..15 or 16 for '*'.
std::optional<std::array<std::uint8_t, kTailNibbles>> parse_tail_cells(std::string_view text);

/// Address pattern over the 80-bit tail: each cell is a fixed hex digit or a
/// wildcard. Records the seeds it was mined from.
class Pattern {
 public:
  static constexpr std::uint8_t kWildcard = 16;

  Pattern() { cells_.fill(0); }
  static Pattern from_seed(const TruncatedSeed& seed);
  static std::optional<Pattern> parse(std::string_view text);

  std::uint8_t cell(int index) const { return cells_[index]; }
  bool is_wildcard(int index) const { return cells_[index] == kWildcard; }
  void set_digit(int index, unsigned digit) { cells_[index] = static_cast<std::uint8_t>(digit & 0xF); }
  void set_wildcard(int index) { cells_[index] = kWildcard; }

  int wildcard_count() const;
  /// 16^wildcard_count.
  double space_size() const;
  bool matches(const TruncatedSeed& seed) const;
  std::string to_string() const;

  const std::vector<TruncatedSeed>& seeds() const { return seeds_; }
  void set_seeds(std::vector<TruncatedSeed> seeds) { seeds_ = std::move(seeds); }

  friend bool operator==(const Pattern& a, const Pattern& b) { return a.cells_ == b.cells_; }

 private:
  std::array<std::uint8_t, kTailNibbles> cells_;
  std::vector<TruncatedSeed> seeds_;
};

/// Node of the divisive clustering tree. Children partition `members` by
/// the value at `split_nibble`; a leaf has no split nibble.
struct DhcNode {
  std::vector<TruncatedSeed> members;
  std::optional<int> split_nibble;
  std::vector<DhcNode> children;

  bool is_leaf() const { return !split_nibble.has_value(); }
};

/// Shannon entropy, in bits, of the value histogram at tail nibble `index`.
double nibble_entropy(std::span<const TruncatedSeed> tails, int index);

/// Recursively splits on the minimum-entropy non-constant nibble (lowest
/// index on ties). A node with at most `min_cluster` members, or with every
/// nibble constant, is a leaf. Input is sorted and deduplicated first.
DhcNode build_dhc_tree(std::span<const TruncatedSeed> tails, std::size_t min_cluster);

/// Summarises each leaf as a pattern (constant nibble -> digit, varying
/// nibble -> wildcard). Throws std::invalid_argument on empty input or
/// min_cluster == 0. Output is sorted by pattern string.
std::vector<Pattern> mine_patterns(std::span<const TruncatedSeed> tails, std::size_t min_cluster = 16);

void write_patterns(std::ostream& out, std::span<const Pattern> patterns);

}  // namespace rover
