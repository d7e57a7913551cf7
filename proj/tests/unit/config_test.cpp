#include <doctest.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rover/config.hpp"

using namespace rover;

namespace {

std::map<std::string, std::string> kv(const std::string& text) {
  std::istringstream in(text);
  return read_key_values(in);
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("key=value lines with comments and overrides") {
    const auto values = kv("# campaign\n c-ucb = 10 \nbudget=500 # trailing\n\nc-ucb=20\n");
    CHECK(values.size() == 2);
    CHECK(values.at("c-ucb") == "20");
    CHECK(values.at("budget") == "500");
    CHECK_THROWS_AS(kv("just words\n"), ConfigError);
    CHECK_THROWS_AS(kv("= 4\n"), ConfigError);
  }

  TEST_CASE("every key reaches its field") {
    CampaignConfig c;
    apply_config(kv("max-iter-per-arm=7\nc-ucb=2.5\nexit-threshold=0.01\nbudget-ratio=0.2\n"
                    "effective-threshold=0.1\nalpha=3\nmin-pull=8\nmax-pull=64\npattern-alias-samples=0\n"
                    "policy=round-robin\ninitial-wildcards=4\nmax-concurrent=12\nbudget=99\nseed=5\n"
                    "execution=sequential\n"),
                 c);
    CHECK(c.bandit.max_iter_per_arm == 7);
    CHECK(c.bandit.c_ucb == 2.5);
    CHECK(c.bandit.exit_threshold == 0.01);
    CHECK(c.bandit.budget_ratio == 0.2);
    CHECK(c.bandit.effective_threshold == 0.1);
    CHECK(c.bandit.alpha == 3.0);
    CHECK(c.bandit.min_pull == 8);
    CHECK(c.bandit.max_pull == 64);
    CHECK(c.bandit.pattern_alias_samples == 0);
    CHECK(c.bandit.policy == SelectionPolicy::round_robin);
    CHECK(c.initial_wildcards == 4);
    CHECK(c.max_concurrent == 12);
    CHECK(c.budget == 99);
    CHECK(c.seed == 5);
    CHECK(c.execution == Execution::sequential);
  }

  TEST_CASE("unknown keys and bad values are errors") {
    CampaignConfig c;
    CHECK_THROWS_WITH_AS(apply_config(kv("c_ucb=1\n"), c), "unknown config key 'c_ucb'", ConfigError);
    CHECK_THROWS_AS(apply_config(kv("budget=lots\n"), c), ConfigError);
    CHECK_THROWS_AS(apply_config(kv("budget=-5\n"), c), ConfigError);
    CHECK_THROWS_AS(apply_config(kv("policy=greedy\n"), c), ConfigError);
    CHECK_THROWS_AS(apply_config(kv("execution=parallel\n"), c), ConfigError);
  }

  TEST_CASE("policy names") {
    CHECK(parse_policy("ucb") == SelectionPolicy::ucb);
    CHECK(parse_policy("round_robin") == SelectionPolicy::round_robin);
    CHECK(policy_name(SelectionPolicy::round_robin) == "round-robin");
  }

  TEST_CASE("canonical form is sorted and sensitive to every setting") {
    const CampaignConfig defaults;
    const auto text = canonical_config(defaults);
    CHECK(text.rfind("alpha=1\n", 0) == 0);
    CHECK(text.find("c-ucb=50\n") != std::string::npos);
    CHECK(text.find("policy=ucb\n") != std::string::npos);
    // Re-applying the canonical form reproduces it.
    CampaignConfig again;
    again.seed = 77;
    apply_config(kv(text), again);
    CHECK(canonical_config(again) == text);
    CampaignConfig changed;
    changed.bandit.alpha = 2;
    CHECK(canonical_config(changed) != text);
  }

  TEST_CASE("FNV-1a reference values and file digests") {
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
    const auto path = std::filesystem::temp_directory_path() / "rover-config-digest.txt";
    {
      std::ofstream out(path, std::ios::binary);
      out << "foobar";
    }
    CHECK(file_digest(path) == "85944171f73967e8");
    CHECK_THROWS_AS(file_digest("/nonexistent/file"), std::runtime_error);
  }
}
