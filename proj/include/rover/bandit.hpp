#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rover/generic_pattern.hpp"
#include "rover/prober.hpp"
#include "rover/target_space.hpp"

namespace rover {

enum class SelectionPolicy {
  ucb,
  round_robin,  // uniform arm cycling, kept as a baseline
};

struct BanditParams {
  std::uint64_t max_iter_per_arm = 100;
  double c_ucb = 50.0;
  double exit_threshold = 0.025;
  double budget_ratio = 0.1;
  double effective_threshold = 0.05;
  double alpha = 1.0;
  std::size_t min_pull = 16;
  std::size_t max_pull = 1024;
  std::size_t pattern_alias_samples = kPatternAliasSamples;  // 0 turns the check off
  SelectionPolicy policy = SelectionPolicy::ucb;

  /// Throws std::invalid_argument on non-positive values or ratios outside (0, 1].
  void validate() const;
};

/// Addresses drawn per pull: clamp(ceil(budget_ratio * space), min_pull,
/// max_pull), never more than the space itself.
std::size_t pull_size(double space, const BanditParams& params);

/// One selectable arm: a single generic pattern, or the merged arm that
/// samples across the union of several small patterns.
struct Arm {
  std::vector<GenericPattern> members;
  bool merged = false;

  static Arm single(GenericPattern pattern);
  static Arm merge(std::vector<GenericPattern> patterns);

  std::string label() const;
};

struct ArmState {
  Arm arm;
  double q = 0.0;
  std::uint64_t n = 0;
  bool aliased = false;
  bool retired = false;  // space exhausted
  std::size_t pull = 0;
  double space = 0.0;
  std::uint64_t probes = 0;
  std::uint64_t actives = 0;
  std::uint64_t iteration_pulls = 0;  // pulls after the pre-scan

  bool enabled() const { return !aliased && !retired; }
  double hit_rate() const { return pull == 0 ? 0.0 : q / static_cast<double>(pull); }
};

/// argmax over enabled arms of q + c * sqrt(ln t / n); ties go to the lowest
/// index. Throws std::invalid_argument when no arm is enabled.
std::size_t ucb_select(std::span<const ArmState> arms, std::uint64_t t, double c);

/// actives, or -alpha * actives when the responses were aliased.
double reward(std::uint64_t actives, bool aliased, double alpha);

/// Incremental mean: (q * n + r) / (n + 1). The caller increments n.
double q_update(double q, std::uint64_t n, double r);

struct BanditOutcome {
  std::vector<Arm> effective;
  std::vector<Ipv6Address> actives;  // sorted, de-aliased
  std::uint64_t probes_used = 0;
  std::uint64_t aliased_hits = 0;
  std::uint64_t steps = 0;  // t at stop
  std::string stop_reason;
};

/// UCB bandit over a fixed arm set for one prefix, driven step by step:
/// propose() a batch, probe it elsewhere, accept() the results. The first
/// batch checks each arm for aliasing, the second pre-scans each arm once,
/// and every later batch is a single pull.
class Bandit {
 public:
  /// `probed` must outlive the bandit.
  Bandit(std::vector<Arm> arms, const Prefix& prefix, const BanditParams& params, std::uint64_t seed,
         ProbedAddressMap& probed);

  /// Next batch of targets, already marked pending in the probed map. Empty
  /// once the bandit is done.
  std::vector<Ipv6Address> propose();
  /// Results for the last proposal, in any order.
  void accept(std::span<const ProbeResult> results);
  /// Stops without waiting for the outstanding proposal.
  void abort(const std::string& reason);

  bool done() const { return phase_ == Phase::done; }
  bool awaiting() const { return awaiting_; }
  std::uint64_t steps() const { return t_; }
  std::span<const ArmState> arms() const { return arms_; }
  const std::vector<Ipv6Address>& actives() const { return actives_; }
  std::uint64_t probes_used() const { return probes_used_; }
  std::uint64_t aliased_hits() const { return aliased_hits_; }

  /// Arms whose estimated hit rate is at least the effective threshold.
  std::vector<Arm> effective() const;
  BanditOutcome outcome() const;

  /// "pattern<TAB>Q<TAB>N<TAB>aliased" per arm.
  void write_state(std::ostream& out) const;

 private:
  enum class Phase { alias_check, prescan, iterate, done };
  struct Pending {
    std::size_t arm;
    std::size_t begin;
    std::size_t end;
  };

  bool should_stop();
  std::size_t select_arm();
  void finish(std::string reason);

  std::vector<ArmState> arms_;
  std::vector<ArmSampler> samplers_;
  BanditParams params_;
  ProbedAddressMap* probed_;
  Rng rng_;
  Phase phase_ = Phase::alias_check;
  bool awaiting_ = false;
  std::vector<Ipv6Address> outstanding_;
  std::vector<Pending> pending_;
  std::uint64_t t_ = 0;
  std::size_t cursor_ = 0;  // round-robin position
  std::vector<Ipv6Address> actives_;
  std::uint64_t probes_used_ = 0;
  std::uint64_t aliased_hits_ = 0;
  std::string stop_reason_;
};

class BanditError : public std::runtime_error {
 public:
  BanditError(const std::string& what, BanditOutcome partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const BanditOutcome& partial() const { return partial_; }

 private:
  BanditOutcome partial_;
};

/// Runs a bandit to completion against `prober`. A prober failure is
/// rethrown as BanditError carrying the results gathered so far.
BanditOutcome run_bandit(std::vector<Arm> arms, const Prefix& prefix, const BanditParams& params, Prober& prober,
                         ProbedAddressMap& probed, std::uint64_t seed);

}  // namespace rover
