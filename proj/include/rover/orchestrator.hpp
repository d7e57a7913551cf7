#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rover/bandit.hpp"
#include "rover/generic_pattern.hpp"
#include "rover/prober.hpp"

namespace rover {

enum class Execution {
  aggregated,  // every live prefix proposes once per global round, one probe call per round
  sequential,  // prefixes run one after another, one probe call per proposal
};

struct CampaignConfig {
  BanditParams bandit;
  int initial_wildcards = 3;
  std::size_t max_concurrent = 0;  // 0 means every prefix at once
  std::uint64_t budget = 10'000'000;
  std::uint64_t seed = 1;
  Execution execution = Execution::aggregated;

  /// Throws std::invalid_argument on a zero budget or bad bandit params.
  void validate() const;
};

/// Single-pattern arms for every pattern with exactly `wildcards` wildcards,
/// then one merged arm over everything smaller. Throws std::invalid_argument
/// ("no initial arms") when both groups are empty.
std::vector<Arm> initial_arms(std::span<const GenericPattern> generics, int wildcards = 3);

/// Routes each in-flight target back to the bandit that proposed it.
class AddressFilter {
 public:
  /// Throws std::invalid_argument when the address is already routed.
  void add(const Ipv6Address& target, std::size_t bandit_id);
  /// Throws std::out_of_range for an unknown address.
  std::size_t route(const Ipv6Address& target) const;
  std::size_t size() const { return routes_.size(); }
  void clear() { routes_.clear(); }

 private:
  std::unordered_map<Ipv6Address, std::size_t, Ipv6AddressHash> routes_;
};

struct Proposal {
  std::size_t bandit_id = 0;
  std::vector<Ipv6Address> targets;
};

struct AggregatedRound {
  std::vector<Ipv6Address> targets;
  AddressFilter filter;
};

/// Concatenates the proposals. Throws std::invalid_argument on a repeated
/// bandit id or a target proposed by two bandits.
AggregatedRound aggregate_round(std::span<const Proposal> proposals);

/// Splits results by bandit id; ids with no results are absent.
std::unordered_map<std::size_t, std::vector<ProbeResult>> route_results(const AddressFilter& filter,
                                                                        std::span<const ProbeResult> results);

struct PrescanRecord {
  Prefix prefix;
  std::uint64_t probes = 0;
  std::uint64_t responsive = 0;
  bool aliased = false;
};

struct RoundRecord {
  Prefix prefix;
  std::size_t round = 0;  // from 1
  std::vector<std::string> arms;
  std::uint64_t probes = 0;
  std::uint64_t actives = 0;
  std::uint64_t aliased_hits = 0;
  std::vector<std::string> effective;
  std::uint64_t pulls = 0;
  std::string stop_reason;
  bool partial = false;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

/// One probe call: a lock-step round when aggregated, a single proposal when
/// sequential.
struct StepRecord {
  std::size_t step = 0;  // from 1
  std::uint64_t probes = 0;
  std::uint64_t actives = 0;
  std::uint64_t aliases = 0;
};

struct PrefixResult {
  Prefix prefix;
  bool aliased = false;
  std::uint64_t probes = 0;
  std::uint64_t aliased_hits = 0;
  std::vector<Ipv6Address> actives;      // sorted
  std::vector<std::string> effective;    // member patterns of effective arms, canonical order
  std::vector<RoundRecord> rounds;
  std::string error;

  friend bool operator==(const PrefixResult&, const PrefixResult&) = default;
};

struct CampaignReport {
  std::vector<PrefixResult> prefixes;  // input order; prefixes never started are absent
  std::vector<StepRecord> steps;
  std::uint64_t probes = 0;
  std::uint64_t actives = 0;
  std::uint64_t aliased_hits = 0;
  bool partial = false;
  std::string error;

  std::size_t alias_prefixes() const;
  /// Non-aliased hit rate over the whole campaign; 0 when nothing was sent.
  double hit_rate() const;
};

/// Receives records as they complete so an interrupted campaign still
/// leaves its finished rounds behind.
class CampaignSink {
 public:
  virtual ~CampaignSink() = default;
  virtual void on_prescan(const PrescanRecord&) {}
  virtual void on_round(const RoundRecord&) {}
  virtual void on_step(const StepRecord&) {}
};

/// Explores every unseeded prefix: a prefix alias pre-scan, then rounds of
/// bandits whose effective arms enqueue their graph successors. Stops
/// cleanly (report.partial) when the next probe batch would exceed the
/// budget, when `interrupt` becomes true, or when the prober fails
/// (report.error also set).
CampaignReport run_campaign(std::span<const Prefix> unseeded, std::span<const GenericPattern> generics,
                            const DependencyGraph& graph, const CampaignConfig& config, Prober& prober,
                            CampaignSink* sink = nullptr, const std::atomic<bool>* interrupt = nullptr);

/// Seed for one prefix, derived from the root seed.
std::uint64_t prefix_seed(std::uint64_t root, const Prefix& prefix);

}  // namespace rover
