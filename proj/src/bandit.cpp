#include "rover/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

namespace rover {

void BanditParams::validate() const {
  if (max_iter_per_arm == 0) throw std::invalid_argument("max_iter_per_arm must be positive");
  if (!(c_ucb >= 0.0)) throw std::invalid_argument("c_ucb must be non-negative");
  if (!(exit_threshold >= 0.0 && exit_threshold <= 1.0)) throw std::invalid_argument("exit_threshold must be in [0, 1]");
  if (!(budget_ratio > 0.0 && budget_ratio <= 1.0)) throw std::invalid_argument("budget_ratio must be in (0, 1]");
  if (!(effective_threshold >= 0.0 && effective_threshold <= 1.0)) {
    throw std::invalid_argument("effective_threshold must be in [0, 1]");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (min_pull == 0 || max_pull < min_pull) throw std::invalid_argument("need 0 < min_pull <= max_pull");
}

std::size_t pull_size(double space, const BanditParams& params) {
  if (!(space >= 1.0)) return 0;
  const double wanted = std::ceil(params.budget_ratio * space);
  const double clamped = std::clamp(wanted, static_cast<double>(params.min_pull), static_cast<double>(params.max_pull));
  return static_cast<std::size_t>(std::min(clamped, space));
}

Arm Arm::single(GenericPattern pattern) {
  Arm arm;
  arm.members.push_back(std::move(pattern));
  return arm;
}

Arm Arm::merge(std::vector<GenericPattern> patterns) {
  if (patterns.empty()) throw std::invalid_argument("merged arm needs at least one pattern");
  std::sort(patterns.begin(), patterns.end(), canonical_less);
  Arm arm;
  arm.members = std::move(patterns);
  arm.merged = true;
  return arm;
}

std::string Arm::label() const {
  std::string out;
  for (const auto& m : members) {
    if (!out.empty()) out += '+';
    out += m.to_string();
  }
  return out;
}

std::size_t ucb_select(std::span<const ArmState> arms, std::uint64_t t, double c) {
  std::size_t best = arms.size();
  double best_value = -std::numeric_limits<double>::infinity();
  const double log_t = std::log(static_cast<double>(std::max<std::uint64_t>(t, 1)));
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const auto& a = arms[i];
    if (!a.enabled()) continue;
    const double value = a.n == 0 ? std::numeric_limits<double>::infinity()
                                  : a.q + c * std::sqrt(log_t / static_cast<double>(a.n));
    if (best == arms.size() || value > best_value) {
      best = i;
      best_value = value;
    }
  }
  if (best == arms.size()) throw std::invalid_argument("no enabled arm to select");
  return best;
}

double reward(std::uint64_t actives, bool aliased, double alpha) {
  const double base = static_cast<double>(actives);
  return aliased ? -alpha * base : base;
}

double q_update(double q, std::uint64_t n, double r) {
  const double count = static_cast<double>(n);
  return (q * count + r) / (count + 1.0);
}

Bandit::Bandit(std::vector<Arm> arms, const Prefix& prefix, const BanditParams& params, std::uint64_t seed,
               ProbedAddressMap& probed)
    : params_(params), probed_(&probed), rng_(seed) {
  params_.validate();
  if (arms.empty()) throw std::invalid_argument("bandit needs at least one arm");
  arms_.reserve(arms.size());
  samplers_.reserve(arms.size());
  for (auto& arm : arms) {
    samplers_.emplace_back(prefix, arm.members);
    ArmState state;
    state.space = samplers_.back().size();
    state.pull = pull_size(state.space, params_);
    state.arm = std::move(arm);
    arms_.push_back(std::move(state));
  }
}

std::vector<Ipv6Address> Bandit::propose() {
  if (awaiting_) throw std::logic_error("previous proposal not yet accepted");
  outstanding_.clear();
  pending_.clear();

  while (phase_ != Phase::done) {
    if (phase_ == Phase::alias_check) {
      const std::size_t samples = params_.pattern_alias_samples;
      if (samples > 0) {
        for (std::size_t i = 0; i < arms_.size(); ++i) {
          if (arms_[i].space < static_cast<double>(samples)) continue;
          const auto batch = samplers_[i].draw(samples, *probed_, rng_);
          if (batch.targets.empty()) continue;
          pending_.push_back({i, outstanding_.size(), outstanding_.size() + batch.targets.size()});
          outstanding_.insert(outstanding_.end(), batch.targets.begin(), batch.targets.end());
        }
      }
      if (!outstanding_.empty()) break;
      phase_ = Phase::prescan;
      continue;
    }

    if (phase_ == Phase::prescan) {
      for (std::size_t i = 0; i < arms_.size(); ++i) {
        if (!arms_[i].enabled()) continue;
        const auto batch = samplers_[i].draw(arms_[i].pull, *probed_, rng_);
        if (batch.exhausted) {
          arms_[i].retired = true;
          continue;
        }
        pending_.push_back({i, outstanding_.size(), outstanding_.size() + batch.targets.size()});
        outstanding_.insert(outstanding_.end(), batch.targets.begin(), batch.targets.end());
      }
      if (!outstanding_.empty()) break;
      t_ = arms_.size();
      phase_ = Phase::iterate;
      continue;
    }

    if (should_stop()) break;
    const auto i = select_arm();
    const auto batch = samplers_[i].draw(arms_[i].pull, *probed_, rng_);
    if (batch.exhausted) {
      arms_[i].retired = true;
      continue;
    }
    pending_.push_back({i, 0, batch.targets.size()});
    outstanding_ = batch.targets;
    break;
  }

  awaiting_ = !outstanding_.empty();
  return outstanding_;
}

void Bandit::accept(std::span<const ProbeResult> results) {
  if (!awaiting_) throw std::logic_error("no outstanding proposal");
  if (results.size() != outstanding_.size()) throw std::invalid_argument("result count does not match proposal");
  // Results usually come back in proposal order; only reorder when they do not.
  std::vector<bool> answered(outstanding_.size());
  bool in_order = true;
  for (std::size_t k = 0; k < results.size() && in_order; ++k) {
    in_order = results[k].target == outstanding_[k];
    answered[k] = results[k].responsive;
  }
  if (!in_order) {
    std::unordered_map<Ipv6Address, bool, Ipv6AddressHash> by_target;
    by_target.reserve(results.size());
    for (const auto& r : results) by_target[r.target] = r.responsive;
    if (by_target.size() != outstanding_.size()) throw std::invalid_argument("result count does not match proposal");
    for (std::size_t k = 0; k < outstanding_.size(); ++k) {
      const auto it = by_target.find(outstanding_[k]);
      if (it == by_target.end()) throw std::invalid_argument("missing result for " + outstanding_[k].to_string());
      answered[k] = it->second;
    }
  }

  for (const auto& p : pending_) {
    auto& arm = arms_[p.arm];
    std::uint64_t responsive = 0;
    std::vector<Ipv6Address> hits;
    for (std::size_t k = p.begin; k < p.end; ++k) {
      const auto& target = outstanding_[k];
      probed_->resolve(target, answered[k]);
      if (answered[k]) {
        ++responsive;
        hits.push_back(target);
      }
    }
    const std::uint64_t count = p.end - p.begin;
    arm.probes += count;
    probes_used_ += count;

    if (phase_ == Phase::alias_check && responsive == count) {
      arm.aliased = true;
      arm.q = reward(responsive, true, params_.alpha);
      arm.n = 1;
      aliased_hits_ += responsive;
      continue;
    }
    arm.actives += responsive;
    actives_.insert(actives_.end(), hits.begin(), hits.end());
    if (phase_ == Phase::alias_check) continue;

    const double r = reward(responsive, false, params_.alpha);
    arm.q = q_update(arm.q, arm.n, r);
    ++arm.n;
    if (phase_ == Phase::iterate) {
      ++arm.iteration_pulls;
      ++t_;
    }
  }

  if (phase_ == Phase::alias_check) {
    phase_ = Phase::prescan;
  } else if (phase_ == Phase::prescan) {
    t_ = arms_.size();
    phase_ = Phase::iterate;
  }
  outstanding_.clear();
  pending_.clear();
  awaiting_ = false;
}

void Bandit::abort(const std::string& reason) {
  awaiting_ = false;
  outstanding_.clear();
  pending_.clear();
  finish(reason);
}

bool Bandit::should_stop() {
  if (t_ >= params_.max_iter_per_arm * arms_.size()) {
    finish("iteration_cap");
    return true;
  }
  double sum = 0.0;
  std::size_t enabled = 0;
  for (const auto& a : arms_) {
    if (!a.enabled()) continue;
    sum += a.hit_rate();
    ++enabled;
  }
  if (enabled == 0) {
    finish("arms_exhausted");
    return true;
  }
  if (sum / static_cast<double>(enabled) <= params_.exit_threshold) {
    finish("exit_threshold");
    return true;
  }
  return false;
}

std::size_t Bandit::select_arm() {
  if (params_.policy == SelectionPolicy::ucb) return ucb_select(arms_, t_, params_.c_ucb);
  for (std::size_t step = 0; step < arms_.size(); ++step) {
    const std::size_t i = (cursor_ + step) % arms_.size();
    if (!arms_[i].enabled()) continue;
    cursor_ = (i + 1) % arms_.size();
    return i;
  }
  throw std::invalid_argument("no enabled arm to select");
}

void Bandit::finish(std::string reason) {
  phase_ = Phase::done;
  if (stop_reason_.empty()) stop_reason_ = std::move(reason);
}

std::vector<Arm> Bandit::effective() const {
  std::vector<Arm> out;
  for (const auto& a : arms_) {
    if (a.aliased || a.n == 0 || a.pull == 0) continue;
    if (a.hit_rate() >= params_.effective_threshold) out.push_back(a.arm);
  }
  return out;
}

BanditOutcome Bandit::outcome() const {
  BanditOutcome out;
  out.effective = effective();
  out.actives = actives_;
  std::sort(out.actives.begin(), out.actives.end());
  out.probes_used = probes_used_;
  out.aliased_hits = aliased_hits_;
  out.steps = t_;
  out.stop_reason = stop_reason_;
  return out;
}

void Bandit::write_state(std::ostream& out) const {
  for (const auto& a : arms_) {
    out << a.arm.label() << '\t' << a.q << '\t' << a.n << '\t' << (a.aliased ? "aliased" : "-") << '\n';
  }
}

BanditOutcome run_bandit(std::vector<Arm> arms, const Prefix& prefix, const BanditParams& params, Prober& prober,
                         ProbedAddressMap& probed, std::uint64_t seed) {
  Bandit bandit(std::move(arms), prefix, params, seed, probed);
  while (true) {
    const auto targets = bandit.propose();
    if (targets.empty()) break;
    std::vector<ProbeResult> results;
    try {
      results = prober.probe(targets);
    } catch (const ProberError& e) {
      bandit.abort("prober_error");
      throw BanditError(e.what(), bandit.outcome());
    }
    bandit.accept(results);
  }
  return bandit.outcome();
}

}  // namespace rover
