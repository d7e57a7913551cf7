#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rover/address.hpp"

namespace rover {

/// Binary trie keyed on address bits, one level per bit. Supports
/// longest-prefix match and "is this prefix covered by any entry".
template <typename Value>
class PrefixTrie {
 public:
  struct Entry {
    Prefix prefix;
    Value value;
  };

  PrefixTrie() : nodes_(1) {}

  /// Inserts or replaces the value stored for `prefix`.
  void insert(const Prefix& prefix, Value value) {
    std::uint32_t node = 0;
    for (int depth = 0; depth < prefix.length(); ++depth) {
      const int branch = prefix.network().bit(depth) ? 1 : 0;
      if (nodes_[node].child[branch] == 0) {
        nodes_[node].child[branch] = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
      }
      node = nodes_[node].child[branch];
    }
    if (nodes_[node].entry >= 0) {
      entries_[nodes_[node].entry].value = std::move(value);
    } else {
      nodes_[node].entry = static_cast<std::int32_t>(entries_.size());
      entries_.push_back(Entry{prefix, std::move(value)});
    }
  }

  /// Most specific stored prefix containing `address`, or nullptr.
  const Entry* longest_match(const Ipv6Address& address) const {
    return walk(address, kAddressBits, false);
  }

  /// Least specific stored prefix that covers all of `prefix`, or nullptr.
  const Entry* covering(const Prefix& prefix) const {
    return walk(prefix.network(), prefix.length(), true);
  }

  const Entry* find(const Prefix& prefix) const {
    std::uint32_t node = 0;
    for (int depth = 0; depth < prefix.length(); ++depth) {
      node = nodes_[node].child[prefix.network().bit(depth) ? 1 : 0];
      if (node == 0) return nullptr;
    }
    return nodes_[node].entry >= 0 ? &entries_[nodes_[node].entry] : nullptr;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  struct Node {
    std::array<std::uint32_t, 2> child{0, 0};
    std::int32_t entry = -1;
  };

  const Entry* walk(const Ipv6Address& key, int max_depth, bool stop_at_first) const {
    const Entry* best = nullptr;
    std::uint32_t node = 0;
    for (int depth = 0;; ++depth) {
      if (nodes_[node].entry >= 0) {
        best = &entries_[nodes_[node].entry];
        if (stop_at_first) return best;
      }
      if (depth == max_depth) break;
      node = nodes_[node].child[key.bit(depth) ? 1 : 0];
      if (node == 0) break;
    }
    return best;
  }

  std::vector<Node> nodes_;
  std::vector<Entry> entries_;
};

}  // namespace rover
