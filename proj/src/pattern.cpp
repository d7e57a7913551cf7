#include "rover/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace rover {
namespace {

using Histogram = std::array<std::array<std::uint32_t, 16>, kTailNibbles>;

Histogram histogram_of(std::span<const TruncatedSeed> tails) {
  Histogram h{};
  for (const auto& tail : tails) {
    for (int i = 0; i < kTailNibbles; ++i) ++h[i][tail.nibble(i)];
  }
  return h;
}

// Distinct count multisets can share an entropy ({4,2,1,1,1,1} and {2,2,2,2,2}
// both give log2(10) - 1), so split() compares with a tolerance.
constexpr double kEntropyTie = 1e-12;

double entropy_of(const std::array<std::uint32_t, 16>& counts, std::size_t total) {
  double entropy = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    entropy -= p * std::log2(p);
  }
  return entropy;
}

bool constant(const std::array<std::uint32_t, 16>& counts, std::size_t total) {
  return std::any_of(counts.begin(), counts.end(), [&](std::uint32_t c) { return c == total; });
}

void split(DhcNode& node, std::size_t min_cluster) {
  const std::size_t total = node.members.size();
  if (total <= min_cluster) return;

  const auto h = histogram_of(node.members);
  int best = -1;
  double best_entropy = 0.0;
  for (int i = 0; i < kTailNibbles; ++i) {
    if (constant(h[i], total)) continue;
    const double e = entropy_of(h[i], total);
    if (best < 0 || e < best_entropy - kEntropyTie) {
      best = i;
      best_entropy = e;
    }
  }
  if (best < 0) return;

  node.split_nibble = best;
  std::array<std::vector<TruncatedSeed>, 16> buckets;
  for (const auto& tail : node.members) buckets[tail.nibble(best)].push_back(tail);
  for (auto& bucket : buckets) {
    if (bucket.empty()) continue;
    DhcNode child;
    child.members = std::move(bucket);
    split(child, min_cluster);
    node.children.push_back(std::move(child));
  }
}

void collect_leaves(const DhcNode& node, std::vector<const DhcNode*>& out) {
  if (node.is_leaf()) {
    out.push_back(&node);
    return;
  }
  for (const auto& child : node.children) collect_leaves(child, out);
}

Pattern summarise(const DhcNode& leaf) {
  Pattern pattern = Pattern::from_seed(leaf.members.front());
  for (const auto& tail : leaf.members) {
    for (int i = 0; i < kTailNibbles; ++i) {
      if (!pattern.is_wildcard(i) && pattern.cell(i) != tail.nibble(i)) pattern.set_wildcard(i);
    }
  }
  pattern.set_seeds(leaf.members);
  return pattern;
}

}  // namespace

std::string format_tail_cells(std::span<const std::uint8_t, kTailNibbles> cells) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(kTailNibbles + 4);
  for (int i = 0; i < kTailNibbles; ++i) {
    if (i > 0 && i % 4 == 0) out.push_back(':');
    out.push_back(cells[i] >= 16 ? '*' : kHex[cells[i]]);
  }
  return out;
}

std::optional<std::array<std::uint8_t, kTailNibbles>> parse_tail_cells(std::string_view text) {
  std::array<std::uint8_t, kTailNibbles> cells{};
  int count = 0;
  for (char ch : text) {
    if (ch == ':') continue;
    if (count == kTailNibbles) return std::nullopt;
    if (ch == '*') {
      cells[count++] = Pattern::kWildcard;
    } else if (ch >= '0' && ch <= '9') {
      cells[count++] = static_cast<std::uint8_t>(ch - '0');
    } else if (ch >= 'a' && ch <= 'f') {
      cells[count++] = static_cast<std::uint8_t>(ch - 'a' + 10);
    } else if (ch >= 'A' && ch <= 'F') {
      cells[count++] = static_cast<std::uint8_t>(ch - 'A' + 10);
    } else {
      return std::nullopt;
    }
  }
  if (count != kTailNibbles) return std::nullopt;
  return cells;
}

Pattern Pattern::from_seed(const TruncatedSeed& seed) {
  Pattern p;
  for (int i = 0; i < kTailNibbles; ++i) p.cells_[i] = static_cast<std::uint8_t>(seed.nibble(i));
  return p;
}

std::optional<Pattern> Pattern::parse(std::string_view text) {
  auto cells = parse_tail_cells(text);
  if (!cells) return std::nullopt;
  Pattern p;
  p.cells_ = *cells;
  return p;
}

int Pattern::wildcard_count() const {
  return static_cast<int>(std::count(cells_.begin(), cells_.end(), kWildcard));
}

double Pattern::space_size() const { return std::ldexp(1.0, 4 * wildcard_count()); }

bool Pattern::matches(const TruncatedSeed& seed) const {
  for (int i = 0; i < kTailNibbles; ++i) {
    if (!is_wildcard(i) && cells_[i] != seed.nibble(i)) return false;
  }
  return true;
}

std::string Pattern::to_string() const { return format_tail_cells(cells_); }

double nibble_entropy(std::span<const TruncatedSeed> tails, int index) {
  if (tails.empty()) throw std::invalid_argument("entropy of an empty set");
  if (index < 0 || index >= kTailNibbles) throw std::out_of_range("nibble index out of range");
  std::array<std::uint32_t, 16> counts{};
  for (const auto& tail : tails) ++counts[tail.nibble(index)];
  return entropy_of(counts, tails.size());
}

DhcNode build_dhc_tree(std::span<const TruncatedSeed> tails, std::size_t min_cluster) {
  if (tails.empty()) throw std::invalid_argument("cannot mine patterns from an empty seed set");
  if (min_cluster == 0) throw std::invalid_argument("min_cluster must be at least 1");
  DhcNode root;
  root.members.assign(tails.begin(), tails.end());
  std::sort(root.members.begin(), root.members.end());
  root.members.erase(std::unique(root.members.begin(), root.members.end()), root.members.end());
  split(root, min_cluster);
  return root;
}

std::vector<Pattern> mine_patterns(std::span<const TruncatedSeed> tails, std::size_t min_cluster) {
  const DhcNode root = build_dhc_tree(tails, min_cluster);
  std::vector<const DhcNode*> leaves;
  collect_leaves(root, leaves);

  std::vector<Pattern> patterns;
  patterns.reserve(leaves.size());
  for (const auto* leaf : leaves) patterns.push_back(summarise(*leaf));
  std::stable_sort(patterns.begin(), patterns.end(), [](const Pattern& a, const Pattern& b) {
    return a.to_string() < b.to_string();
  });
  return patterns;
}

void write_patterns(std::ostream& out, std::span<const Pattern> patterns) {
  for (const auto& p : patterns) out << p.to_string() << '\n';
}

}  // namespace rover
