#include "rover/orchestrator.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>

#include "rover/metrics.hpp"

namespace rover {
namespace {

constexpr std::uint64_t kPrescanSalt = 0x70726573ULL;

std::vector<std::string> labels(std::span<const Arm> arms) {
  std::vector<std::string> out;
  out.reserve(arms.size());
  for (const auto& a : arms) out.push_back(a.label());
  return out;
}

// Pre-scan, then bandit rounds until the pattern queue runs dry.
class PrefixCampaign {
 public:
  PrefixCampaign(const Prefix& prefix, const std::vector<Arm>& initial, const std::string& init_error,
                 const DependencyGraph& graph, const CampaignConfig& config)
      : graph_(&graph), config_(&config), seed_(prefix_seed(config.seed, prefix)) {
    result_.prefix = prefix;
    if (!init_error.empty()) {
      result_.error = init_error;
      state_ = State::done;
      return;
    }
    for (const auto& arm : initial) enqueue(arm);
  }

  bool done() const { return state_ == State::done; }
  std::uint64_t aliased_hits() const { return result_.aliased_hits + (bandit_ ? bandit_->aliased_hits() : 0); }

  // Empty only once the campaign is done.
  std::vector<Ipv6Address> propose(CampaignSink* sink) {
    if (state_ == State::prescan) {
      prescan_targets_ = random_prefix_addresses(result_.prefix, kPrefixAliasSamples, mix64(seed_ ^ kPrescanSalt));
      for (const auto& t : prescan_targets_) probed_.mark_pending(t);
      return prescan_targets_;
    }
    while (state_ == State::explore) {
      if (!bandit_) {
        if (queue_.empty()) {
          state_ = State::done;
          break;
        }
        ++round_;
        bandit_ = std::make_unique<Bandit>(std::move(queue_), result_.prefix, config_->bandit, mix64(seed_ + round_),
                                           probed_);
        queue_.clear();
      }
      auto targets = bandit_->propose();
      if (!targets.empty()) return targets;
      finish_round(false, sink);
    }
    return {};
  }

  void accept(std::span<const ProbeResult> results, CampaignSink* sink) {
    if (state_ != State::prescan) {
      bandit_->accept(results);
      return;
    }
    if (results.size() != prescan_targets_.size()) throw std::invalid_argument("result count does not match proposal");
    PrescanRecord record{result_.prefix, results.size(), 0, false};
    for (const auto& r : results) {
      probed_.resolve(r.target, r.responsive);
      if (r.responsive) ++record.responsive;
    }
    record.aliased = record.responsive > 0;
    result_.probes += record.probes;
    result_.aliased = record.aliased;
    result_.aliased_hits += record.responsive;
    state_ = record.aliased ? State::done : State::explore;
    if (sink) sink->on_prescan(record);
  }

  // Abandons the in-flight round, keeping what it learned so far.
  void stop(const std::string& reason, CampaignSink* sink) {
    if (bandit_) {
      bandit_->abort(reason);
      finish_round(true, sink);
    }
    state_ = State::done;
  }

  PrefixResult take_result() {
    std::sort(result_.actives.begin(), result_.actives.end());
    std::vector<GenericPattern> effective;
    for (const auto& e : effective_) effective.emplace_back(e);
    std::sort(effective.begin(), effective.end(), canonical_less);
    for (const auto& e : effective) result_.effective.push_back(e.to_string());
    return std::move(result_);
  }

 private:
  enum class State { prescan, explore, done };

  void enqueue(const Arm& arm) {
    for (const auto& m : arm.members) explored_.insert(m.wildcard_mask());
    queue_.push_back(arm);
  }

  void finish_round(bool partial, CampaignSink* sink) {
    const auto outcome = bandit_->outcome();
    RoundRecord record;
    record.prefix = result_.prefix;
    record.round = round_;
    std::vector<Arm> arms;
    for (const auto& s : bandit_->arms()) arms.push_back(s.arm);
    record.arms = labels(arms);
    record.probes = outcome.probes_used;
    record.actives = outcome.actives.size();
    record.aliased_hits = outcome.aliased_hits;
    record.effective = labels(outcome.effective);
    record.pulls = outcome.steps;
    record.stop_reason = outcome.stop_reason;
    record.partial = partial;

    result_.probes += outcome.probes_used;
    result_.aliased_hits += outcome.aliased_hits;
    result_.actives.insert(result_.actives.end(), outcome.actives.begin(), outcome.actives.end());
    for (const auto& arm : outcome.effective) {
      for (const auto& m : arm.members) {
        effective_.insert(m.wildcard_mask());
        if (partial || !graph_->contains(m)) continue;
        for (const auto& next : graph_->successors(m)) {
          if (!explored_.count(next.wildcard_mask())) enqueue(Arm::single(next));
        }
      }
    }
    result_.rounds.push_back(record);
    bandit_.reset();
    if (sink) sink->on_round(record);
  }

  const DependencyGraph* graph_;
  const CampaignConfig* config_;
  std::uint64_t seed_;
  State state_ = State::prescan;
  ProbedAddressMap probed_;
  std::vector<Ipv6Address> prescan_targets_;
  std::vector<Arm> queue_;
  std::set<GenericPattern::Mask> explored_;  // every pattern ever enqueued
  std::set<GenericPattern::Mask> effective_;
  std::unique_ptr<Bandit> bandit_;
  std::size_t round_ = 0;
  PrefixResult result_;
};

struct Tally {
  std::uint64_t probes = 0;
  std::uint64_t responsive = 0;
};

Tally tally(std::span<const ProbeResult> results) {
  Tally t{results.size(), 0};
  for (const auto& r : results) t.responsive += r.responsive ? 1 : 0;
  return t;
}

class CampaignRunner {
 public:
  CampaignRunner(std::span<const Prefix> unseeded, std::span<const GenericPattern> generics,
                 const DependencyGraph& graph, const CampaignConfig& config, Prober& prober, CampaignSink* sink,
                 const std::atomic<bool>* interrupt)
      : unseeded_(unseeded), graph_(graph), config_(config), prober_(prober), sink_(sink), interrupt_(interrupt) {
    try {
      initial_ = initial_arms(generics, config.initial_wildcards);
    } catch (const std::invalid_argument& e) {
      init_error_ = e.what();
    }
    slots_.resize(unseeded.size());
  }

  CampaignReport run() {
    if (config_.execution == Execution::aggregated) {
      run_aggregated();
    } else {
      run_sequential();
    }
    for (auto& slot : slots_) {
      if (slot) report_.prefixes.push_back(slot->take_result());
    }
    report_.probes = 0;
    report_.actives = 0;
    report_.aliased_hits = 0;
    for (const auto& s : report_.steps) {
      report_.probes += s.probes;
      report_.actives += s.actives;
      report_.aliased_hits += s.aliases;
    }
    return std::move(report_);
  }

 private:
  PrefixCampaign& start(std::size_t i) {
    slots_[i].emplace(unseeded_[i], initial_, init_error_, graph_, config_);
    return *slots_[i];
  }

  bool over_budget(std::size_t batch) const { return spent_ + batch > config_.budget; }
  bool interrupted() const { return interrupt_ != nullptr && interrupt_->load(); }

  // Name of the reason to stop before sending `batch` probes, or empty.
  std::string stop_reason(std::size_t batch) const {
    if (interrupted()) return "interrupted";
    if (over_budget(batch)) return "budget";
    return {};
  }

  void record_step(const Tally& t, std::uint64_t aliases) {
    StepRecord s{report_.steps.size() + 1, t.probes, t.responsive - aliases, aliases};
    spent_ += t.probes;
    report_.steps.push_back(s);
    if (sink_) sink_->on_step(s);
  }

  void halt(const std::vector<std::size_t>& live, const std::string& reason) {
    report_.partial = true;
    for (const auto i : live) slots_[i]->stop(reason, sink_);
  }

  void run_sequential() {
    for (std::size_t i = 0; i < unseeded_.size(); ++i) {
      auto& campaign = start(i);
      while (true) {
        const auto targets = campaign.propose(sink_);
        if (targets.empty()) break;
        if (const auto reason = stop_reason(targets.size()); !reason.empty()) {
          halt({i}, reason);
          return;
        }
        std::vector<ProbeResult> results;
        try {
          results = prober_.probe(targets);
        } catch (const ProberError& e) {
          report_.error = e.what();
          halt({i}, "prober_error");
          return;
        }
        const auto before = campaign.aliased_hits();
        campaign.accept(results, sink_);
        record_step(tally(results), campaign.aliased_hits() - before);
      }
    }
  }

  void run_aggregated() {
    const std::size_t limit = config_.max_concurrent == 0 ? unseeded_.size() : config_.max_concurrent;
    std::size_t next = 0;
    std::vector<std::size_t> live;
    while (true) {
      while (live.size() < limit && next < unseeded_.size()) {
        start(next);
        live.push_back(next++);
      }

      std::vector<Proposal> proposals;
      std::vector<std::size_t> still_live;
      for (const auto i : live) {
        auto targets = slots_[i]->propose(sink_);
        if (targets.empty()) continue;
        still_live.push_back(i);
        proposals.push_back({i, std::move(targets)});
      }
      live = std::move(still_live);
      if (proposals.empty()) {
        if (next >= unseeded_.size()) return;
        continue;
      }

      auto round = aggregate_round(proposals);
      if (const auto reason = stop_reason(round.targets.size()); !reason.empty()) {
        halt(live, reason);
        return;
      }
      std::vector<ProbeResult> results;
      try {
        results = prober_.probe(round.targets);
      } catch (const ProberError& e) {
        report_.error = e.what();
        halt(live, "prober_error");
        return;
      }
      auto routed = route_results(round.filter, results);
      std::uint64_t aliases = 0;
      for (const auto& p : proposals) {
        auto& campaign = *slots_[p.bandit_id];
        const auto before = campaign.aliased_hits();
        campaign.accept(routed[p.bandit_id], sink_);
        aliases += campaign.aliased_hits() - before;
      }
      record_step(tally(results), aliases);
    }
  }

  std::span<const Prefix> unseeded_;
  const DependencyGraph& graph_;
  const CampaignConfig& config_;
  Prober& prober_;
  CampaignSink* sink_;
  const std::atomic<bool>* interrupt_;
  std::vector<Arm> initial_;
  std::string init_error_;
  std::vector<std::optional<PrefixCampaign>> slots_;
  std::uint64_t spent_ = 0;
  CampaignReport report_;
};

}  // namespace

void CampaignConfig::validate() const {
  bandit.validate();
  if (budget == 0) throw std::invalid_argument("budget must be at least 1");
  if (initial_wildcards < 1 || initial_wildcards > kTailNibbles) {
    throw std::invalid_argument("initial_wildcards must be in [1, 20]");
  }
}

std::vector<Arm> initial_arms(std::span<const GenericPattern> generics, int wildcards) {
  std::vector<Arm> arms;
  std::vector<GenericPattern> small;
  for (const auto& g : generics) {
    if (g.wildcard_count() == wildcards) arms.push_back(Arm::single(g));
    if (g.wildcard_count() < wildcards) small.push_back(g);
  }
  if (!small.empty()) arms.push_back(Arm::merge(std::move(small)));
  if (arms.empty()) throw std::invalid_argument("no initial arms");
  return arms;
}

void AddressFilter::add(const Ipv6Address& target, std::size_t bandit_id) {
  if (!routes_.emplace(target, bandit_id).second) {
    throw std::invalid_argument("target " + target.to_string() + " proposed twice in one round");
  }
}

std::size_t AddressFilter::route(const Ipv6Address& target) const {
  const auto it = routes_.find(target);
  if (it == routes_.end()) throw std::out_of_range("no bandit for " + target.to_string());
  return it->second;
}

AggregatedRound aggregate_round(std::span<const Proposal> proposals) {
  AggregatedRound round;
  std::set<std::size_t> ids;
  std::size_t total = 0;
  for (const auto& p : proposals) total += p.targets.size();
  round.targets.reserve(total);
  for (const auto& p : proposals) {
    if (!ids.insert(p.bandit_id).second) {
      throw std::invalid_argument("bandit " + std::to_string(p.bandit_id) + " proposed twice");
    }
    for (const auto& t : p.targets) {
      round.filter.add(t, p.bandit_id);
      round.targets.push_back(t);
    }
  }
  return round;
}

std::unordered_map<std::size_t, std::vector<ProbeResult>> route_results(const AddressFilter& filter,
                                                                        std::span<const ProbeResult> results) {
  std::unordered_map<std::size_t, std::vector<ProbeResult>> routed;
  for (const auto& r : results) routed[filter.route(r.target)].push_back(r);
  return routed;
}

std::size_t CampaignReport::alias_prefixes() const {
  return static_cast<std::size_t>(
      std::count_if(prefixes.begin(), prefixes.end(), [](const PrefixResult& p) { return p.aliased; }));
}

double CampaignReport::hit_rate() const {
  if (probes == 0) return 0.0;
  return non_aliased_hit_rate(probes, actives + aliased_hits, aliased_hits);
}

CampaignReport run_campaign(std::span<const Prefix> unseeded, std::span<const GenericPattern> generics,
                            const DependencyGraph& graph, const CampaignConfig& config, Prober& prober,
                            CampaignSink* sink, const std::atomic<bool>* interrupt) {
  config.validate();
  return CampaignRunner(unseeded, generics, graph, config, prober, sink, interrupt).run();
}

std::uint64_t prefix_seed(std::uint64_t root, const Prefix& prefix) {
  const auto& net = prefix.network();
  return mix64(root ^ mix64(net.high() ^ mix64(net.low() ^ static_cast<std::uint64_t>(prefix.length()))));
}

}  // namespace rover
