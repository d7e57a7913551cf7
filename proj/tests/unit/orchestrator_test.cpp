#include <doctest.h>

#include <atomic>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rover/orchestrator.hpp"
#include "rover/simulation.hpp"
#include "test_probers.hpp"

using namespace rover;
using rover::testing::PredicateProber;

namespace {

const char* const kA = "0000:0000:0000:0000:0***";
const char* const kB = "0000:0000:0000:0000:****";
const char* const kC = "0000:0000:0000:***0:0000";
const char* const kD = "0000:0000:0000:0000:00**";

GenericPattern shared(const char* text, const char* p1, const char* p2) {
  auto g = GenericPattern::from_string(text);
  g.add_prefix(Prefix::from_string(p1));
  g.add_prefix(Prefix::from_string(p2));
  return g;
}

struct Fixture {
  std::vector<GenericPattern> generics = {shared(kA, "2a01:1::/32", "2a01:2::/32"),
                                          shared(kB, "2a01:1::/32", "2a01:2::/32"),
                                          shared(kC, "2a01:3::/32", "2a01:4::/32"),
                                          shared(kD, "2a01:5::/32", "2a01:6::/32")};
  DependencyGraph graph = construct_dependency(generics);
  std::vector<Prefix> unseeded = {Prefix::from_string("2a02:1::/32"), Prefix::from_string("2a02:2::/32"),
                                  Prefix::from_string("2a02:3::/32")};
  Scenario scenario;

  Fixture() {
    std::istringstream in(
        "seed 4\n"
        "2a02:1::/32 live 0000:0000:0000:0000:****@0.3\n"
        "2a02:2::/32 live\n"
        "2a02:3::/32 alias\n");
    scenario = Scenario::read(in);
  }
};

struct RecordingSink final : CampaignSink {
  std::vector<PrescanRecord> prescans;
  std::vector<RoundRecord> rounds;
  std::vector<StepRecord> steps;
  void on_prescan(const PrescanRecord& r) override { prescans.push_back(r); }
  void on_round(const RoundRecord& r) override { rounds.push_back(r); }
  void on_step(const StepRecord& s) override { steps.push_back(s); }
};

}  // namespace

TEST_SUITE("orchestrator") {
  TEST_CASE("initial arms: exact-size singles plus one merged arm of smaller ones") {
    const Fixture f;
    const auto arms = initial_arms(f.generics, 3);
    REQUIRE(arms.size() == 3);
    CHECK(arms[0].label() == kA);
    CHECK(arms[1].label() == kC);
    CHECK(arms[2].merged);
    CHECK(arms[2].label() == kD);
    CHECK(initial_arms(f.generics, 2).size() == 1);
    const std::vector<GenericPattern> big = {GenericPattern::from_string(kB)};
    CHECK_THROWS_WITH_AS(initial_arms(big, 3), "no initial arms", std::invalid_argument);
  }

  TEST_CASE("aggregated rounds route every result back to its proposer") {
    std::vector<Proposal> proposals;
    std::uint64_t next = 1;
    for (std::size_t id = 0; id < 100; ++id) {
      Proposal p{id * 7, {}};
      for (std::size_t k = 0; k < id % 13; ++k) p.targets.push_back(Ipv6Address::from_halves(0x2001, next++));
      proposals.push_back(std::move(p));
    }
    const auto round = aggregate_round(proposals);
    CHECK(round.targets.size() == next - 1);
    CHECK(round.filter.size() == next - 1);
    std::vector<ProbeResult> results;
    for (auto it = round.targets.rbegin(); it != round.targets.rend(); ++it) results.push_back({*it, it->low() % 2 == 0});
    const auto routed = route_results(round.filter, results);
    for (const auto& p : proposals) {
      if (p.targets.empty()) {
        CHECK(routed.count(p.bandit_id) == 0);
        continue;
      }
      const auto& got = routed.at(p.bandit_id);
      REQUIRE(got.size() == p.targets.size());
      std::set<Ipv6Address> want(p.targets.begin(), p.targets.end());
      for (const auto& r : got) CHECK(want.count(r.target) == 1);
    }
  }

  TEST_CASE("aggregation rejects collisions") {
    const auto a = Ipv6Address::from_string("2001:db8::1");
    const std::vector<Proposal> twice_id = {{1, {a}}, {1, {Ipv6Address::from_string("2001:db8::2")}}};
    CHECK_THROWS_AS(aggregate_round(twice_id), std::invalid_argument);
    const std::vector<Proposal> twice_target = {{1, {a}}, {2, {a}}};
    CHECK_THROWS_AS(aggregate_round(twice_target), std::invalid_argument);
    AddressFilter filter;
    CHECK_THROWS_AS(filter.route(a), std::out_of_range);
  }

  TEST_CASE("live, dead and alias prefixes take their distinct paths") {
    const Fixture f;
    SimulatedNetwork net(f.scenario);
    RecordingSink sink;
    CampaignConfig config;
    const auto report = run_campaign(f.unseeded, f.generics, f.graph, config, net, &sink);
    REQUIRE(report.prefixes.size() == 3);
    CHECK_FALSE(report.partial);

    const auto& live = report.prefixes[0];
    CHECK_FALSE(live.aliased);
    REQUIRE(live.rounds.size() == 2);
    CHECK(live.rounds[1].arms == std::vector<std::string>{kB});
    CHECK(live.effective == std::vector<std::string>{kD, kA, kB});
    CHECK_FALSE(live.actives.empty());
    for (const auto& a : live.actives) CHECK(net.responsive(a));

    const auto& dead = report.prefixes[1];
    REQUIRE(dead.rounds.size() == 1);
    CHECK(dead.rounds[0].stop_reason == "exit_threshold");
    CHECK(dead.rounds[0].pulls == dead.rounds[0].arms.size());
    CHECK(dead.actives.empty());

    const auto& alias = report.prefixes[2];
    CHECK(alias.aliased);
    CHECK(alias.rounds.empty());
    CHECK(alias.probes == kPrefixAliasSamples);
    CHECK(report.alias_prefixes() == 1);

    CHECK(report.probes == net.probes_sent());
    std::uint64_t per_prefix = 0;
    for (const auto& p : report.prefixes) per_prefix += p.probes;
    CHECK(per_prefix == report.probes);
    CHECK(sink.prescans.size() == 3);
    CHECK(sink.rounds.size() == 3);
    CHECK(sink.steps.size() == report.steps.size());
    CHECK(report.aliased_hits == kPrefixAliasSamples);
  }

  TEST_CASE("a pattern is explored at most once per prefix") {
    const Fixture f;
    SimulatedNetwork net(f.scenario);
    const auto report = run_campaign(f.unseeded, f.generics, f.graph, CampaignConfig{}, net);
    for (const auto& p : report.prefixes) {
      std::set<std::string> seen;
      for (const auto& r : p.rounds) {
        for (const auto& arm : r.arms) CHECK(seen.insert(arm).second);
      }
    }
  }

  TEST_CASE("execution order does not change per-prefix results") {
    const Fixture f;
    CampaignConfig config;
    SimulatedNetwork net_a(f.scenario), net_b(f.scenario), net_c(f.scenario);
    const auto aggregated = run_campaign(f.unseeded, f.generics, f.graph, config, net_a);
    config.execution = Execution::sequential;
    const auto sequential = run_campaign(f.unseeded, f.generics, f.graph, config, net_b);
    config.execution = Execution::aggregated;
    config.max_concurrent = 1;
    const auto one_at_a_time = run_campaign(f.unseeded, f.generics, f.graph, config, net_c);
    CHECK(aggregated.prefixes == sequential.prefixes);
    CHECK(aggregated.prefixes == one_at_a_time.prefixes);
    CHECK(aggregated.probes == sequential.probes);
    CHECK(sequential.steps.size() > aggregated.steps.size());
  }

  TEST_CASE("budget stops before the batch that would overrun it") {
    const Fixture f;
    SimulatedNetwork net(f.scenario);
    CampaignConfig config;
    config.budget = 1000;
    RecordingSink sink;
    const auto report = run_campaign(f.unseeded, f.generics, f.graph, config, net, &sink);
    CHECK(report.partial);
    CHECK(report.probes <= 1000);
    CHECK(net.probes_sent() == report.probes);
    bool saw_partial = false;
    for (const auto& r : sink.rounds) saw_partial = saw_partial || (r.partial && r.stop_reason == "budget");
    CHECK(saw_partial);
  }

  TEST_CASE("interrupt and prober failure end the campaign cleanly") {
    const Fixture f;
    {
      SimulatedNetwork net(f.scenario);
      const std::atomic<bool> stop{true};
      const auto report = run_campaign(f.unseeded, f.generics, f.graph, CampaignConfig{}, net, nullptr, &stop);
      CHECK(report.partial);
      CHECK(report.probes == 0);
      CHECK(net.probes_sent() == 0);
    }
    {
      SimulatedNetwork net(f.scenario);
      PredicateProber prober([&](const Ipv6Address& a) { return net.responsive(a); });
      prober.fail_after(2);
      const auto report = run_campaign(f.unseeded, f.generics, f.graph, CampaignConfig{}, prober);
      CHECK(report.partial);
      CHECK(report.error == "scanner went away");
      CHECK(report.steps.size() == 2);
      CHECK(report.probes == prober.probes_sent());
    }
  }

  TEST_CASE("empty inputs and missing initial arms") {
    const Fixture f;
    SimulatedNetwork net(f.scenario);
    const auto empty = run_campaign({}, f.generics, f.graph, CampaignConfig{}, net);
    CHECK(empty.prefixes.empty());
    CHECK(empty.probes == 0);
    CHECK(empty.hit_rate() == 0.0);

    const std::vector<GenericPattern> only_big = {GenericPattern::from_string(kB)};
    const auto no_arms = run_campaign(f.unseeded, only_big, construct_dependency(only_big), CampaignConfig{}, net);
    REQUIRE(no_arms.prefixes.size() == 3);
    for (const auto& p : no_arms.prefixes) {
      CHECK(p.error == "no initial arms");
      CHECK(p.probes == 0);
    }
    CHECK(net.probes_sent() == 0);
  }

  TEST_CASE("configuration validation and seed derivation") {
    CampaignConfig config;
    config.budget = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = {};
    config.initial_wildcards = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    const auto p1 = Prefix::from_string("2a02:1::/32");
    const auto p2 = Prefix::from_string("2a02:2::/32");
    CHECK(prefix_seed(1, p1) == prefix_seed(1, p1));
    CHECK(prefix_seed(1, p1) != prefix_seed(1, p2));
    CHECK(prefix_seed(1, p1) != prefix_seed(2, p1));
    CHECK(prefix_seed(1, p1) != prefix_seed(1, Prefix::from_string("2a02:1::/48")));
  }
}
