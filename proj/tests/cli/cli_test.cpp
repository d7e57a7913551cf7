#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FIXTURE_DIR;

struct Run {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Removed on scope exit; unique per process and instance.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("rover_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

Run rover(const TempDir& dir, const std::string& args) {
  const auto log = dir / "cli.log";
  const std::string cmd = quote(ROVER_BIN) + " " + args + " > " + quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

std::string fixture(const std::string& name) { return quote((kFixtures / "tiny" / name).string()); }

std::string mine_args(const fs::path& out) {
  return "mine --hitlist " + fixture("hitlist.txt") + " --prefixes " + fixture("prefixes.txt") +
         " --aliases " + fixture("aliases.txt") + " --min-cluster 4 --assume-live --out " + quote(out.string());
}

std::string campaign_args(const fs::path& mined, const fs::path& report) {
  return "campaign --generic " + quote((mined / "generic.txt").string()) + " --graph " +
         quote((mined / "graph.tsv").string()) + " --unseeded " + fixture("unseeded.txt") + " --sim-scenario " +
         fixture("scenario.txt") + " --seed 3 --out " + quote(report.string());
}

nlohmann::json last_line(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return nlohmann::json::parse(last);
}

std::size_t count_lines_ending(const std::string& text, const std::string& suffix) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line))
    if (line.size() >= suffix.size() && line.compare(line.size() - suffix.size(), suffix.size(), suffix) == 0) ++n;
  return n;
}

std::size_t count_body_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++n;
  return n;
}

}  // namespace

TEST_SUITE("cli.mine") {
  TEST_CASE("golden fixture output is stable") {
    TempDir dir;
    const auto r1 = rover(dir, mine_args(dir / "a"));
    REQUIRE_MESSAGE(r1.exit_code == 0, r1.output);
    const auto r2 = rover(dir, mine_args(dir / "b"));
    REQUIRE_MESSAGE(r2.exit_code == 0, r2.output);
    CHECK(r1.output.find("seeds 20") != std::string::npos);
    for (const char* name : {"patterns.txt", "generic.txt", "generic_provenance.tsv", "graph.tsv", "unseeded.txt"})
      CHECK_MESSAGE(slurp(dir / "a" / name) == slurp(dir / "b" / name), name);
    CHECK(slurp(dir / "a" / "generic.txt") == slurp(kFixtures / "tiny" / "expected_generic.txt"));
    CHECK(slurp(dir / "a" / "graph.tsv") == slurp(kFixtures / "tiny" / "expected_graph.tsv"));
    // Announced prefixes without seeds, minus the alias list.
    const auto unseeded = slurp(dir / "a" / "unseeded.txt");
    CHECK(unseeded.find("2a02:1::/32") != std::string::npos);
    CHECK(unseeded.find("2a02:2::/32") != std::string::npos);
    CHECK(unseeded.find("2a03::/32") == std::string::npos);
  }

  TEST_CASE("output headers carry the input digests") {
    TempDir dir;
    REQUIRE(rover(dir, mine_args(dir / "a")).exit_code == 0);
    const auto text = slurp(dir / "a" / "patterns.txt");
    CHECK(text.rfind("# rover mine seed=0 config=", 0) == 0);
    CHECK(text.find("# input hitlist ") != std::string::npos);
    CHECK(text.find("# input prefixes ") != std::string::npos);
  }

  TEST_CASE("empty hitlist is a usage error") {
    TempDir dir;
    std::ofstream(dir / "empty.txt") << "# nothing here\n";
    const auto r = rover(dir, "mine --hitlist " + quote((dir / "empty.txt").string()) + " --prefixes " +
                                  fixture("prefixes.txt") + " --assume-live --out " + quote((dir / "o").string()));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("no seeds") != std::string::npos);
  }

  TEST_CASE("seeds all under aliases give empty pattern files and a warning") {
    TempDir dir;
    std::ofstream(dir / "aliases.txt") << "2a01::/16\n";
    const auto r = rover(dir, "mine --hitlist " + fixture("hitlist.txt") + " --prefixes " + fixture("prefixes.txt") +
                                  " --aliases " + quote((dir / "aliases.txt").string()) + " --assume-live --out " +
                                  quote((dir / "o").string()));
    CHECK_MESSAGE(r.exit_code == 0, r.output);
    CHECK(r.output.find("warning") != std::string::npos);
    CHECK(count_body_lines(slurp(dir / "o" / "patterns.txt")) == 0);
    CHECK(count_body_lines(slurp(dir / "o" / "generic.txt")) == 0);
  }

  TEST_CASE("liveness must be asserted") {
    TempDir dir;
    const auto r = rover(dir, "mine --hitlist " + fixture("hitlist.txt") + " --prefixes " + fixture("prefixes.txt") +
                                  " --out " + quote((dir / "o").string()));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("--assume-live") != std::string::npos);
  }

  TEST_CASE("unknown flags and missing files exit 2") {
    TempDir dir;
    CHECK(rover(dir, "mine --bogus").exit_code == 2);
    CHECK(rover(dir, "mine --hitlist /nonexistent/h --prefixes " + fixture("prefixes.txt") +
                         " --assume-live --out " + quote((dir / "o").string()))
              .exit_code == 2);
  }
}

TEST_SUITE("cli.campaign") {
  TEST_CASE("zero budget writes a header and an empty summary") {
    TempDir dir;
    REQUIRE(rover(dir, mine_args(dir / "m")).exit_code == 0);
    const auto r = rover(dir, campaign_args(dir / "m", dir / "r.jsonl") + " --budget 0");
    CHECK_MESSAGE(r.exit_code == 0, r.output);
    const auto text = slurp(dir / "r.jsonl");
    CHECK(nlohmann::json::parse(text.substr(0, text.find('\n'))).at("type") == "header");
    const auto summary = last_line(text);
    CHECK(summary.at("type") == "summary");
    CHECK(summary.at("probes") == 0);
  }

  TEST_CASE("missing graph file exits 2") {
    TempDir dir;
    REQUIRE(rover(dir, mine_args(dir / "m")).exit_code == 0);
    fs::remove(dir / "m" / "graph.tsv");
    const auto r = rover(dir, campaign_args(dir / "m", dir / "r.jsonl"));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("graph") != std::string::npos);
  }

  TEST_CASE("a campaign needs a prober") {
    TempDir dir;
    REQUIRE(rover(dir, mine_args(dir / "m")).exit_code == 0);
    const auto r = rover(dir, "campaign --generic " + quote((dir / "m" / "generic.txt").string()) + " --graph " +
                                  quote((dir / "m" / "graph.tsv").string()) + " --unseeded " +
                                  fixture("unseeded.txt") + " --out " + quote((dir / "r.jsonl").string()));
    CHECK(r.exit_code == 2);
  }

  TEST_CASE("simulated campaign is deterministic and finds the planted block") {
    TempDir dir;
    REQUIRE(rover(dir, mine_args(dir / "m")).exit_code == 0);
    const auto r1 = rover(dir, campaign_args(dir / "m", dir / "r1.jsonl") + " --actives-out " +
                                   quote((dir / "a1.txt").string()));
    REQUIRE_MESSAGE(r1.exit_code == 0, r1.output);
    const auto r2 = rover(dir, campaign_args(dir / "m", dir / "r2.jsonl"));
    REQUIRE_MESSAGE(r2.exit_code == 0, r2.output);
    CHECK(slurp(dir / "r1.jsonl") == slurp(dir / "r2.jsonl"));

    const auto summary = last_line(slurp(dir / "r1.jsonl"));
    CHECK(summary.at("prefixes") == 2);
    CHECK(summary.at("alias_prefixes") == 1);
    CHECK(summary.at("actives").get<std::uint64_t>() > 0);
    // The live block holds 256 addresses; the alias prefix only sees its prescan.
    CHECK(summary.at("probes").get<std::uint64_t>() <= 256 + 20);
    CHECK(count_body_lines(slurp(dir / "a1.txt")) == summary.at("actives").get<std::size_t>());
  }

  TEST_CASE("flags override the config file") {
    TempDir dir;
    REQUIRE(rover(dir, mine_args(dir / "m")).exit_code == 0);
    std::ofstream(dir / "c.conf") << "# test settings\nbudget = 100\n";
    const auto base = campaign_args(dir / "m", dir / "r.jsonl") + " --config " + quote((dir / "c.conf").string());
    REQUIRE(rover(dir, base).exit_code == 0);
    CHECK(last_line(slurp(dir / "r.jsonl")).at("probes").get<std::uint64_t>() <= 100);
    REQUIRE(rover(dir, base + " --budget 50").exit_code == 0);
    const auto summary = last_line(slurp(dir / "r.jsonl"));
    CHECK(summary.at("probes").get<std::uint64_t>() <= 50);
    CHECK(summary.at("partial") == true);
  }

  TEST_CASE("bad config keys exit 2") {
    TempDir dir;
    REQUIRE(rover(dir, mine_args(dir / "m")).exit_code == 0);
    std::ofstream(dir / "c.conf") << "no_such_key = 1\n";
    const auto r =
        rover(dir, campaign_args(dir / "m", dir / "r.jsonl") + " --config " + quote((dir / "c.conf").string()));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("no_such_key") != std::string::npos);
  }
}

TEST_SUITE("cli.simulate_gen") {
  TEST_CASE("alias fraction sets the alias count") {
    TempDir dir;
    const auto r = rover(dir, "simulate-gen --prefixes 100 --alias-fraction 0.2 --seed 7 --out " +
                                  quote((dir / "w").string()));
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(count_lines_ending(slurp(dir / "w" / "scenario.txt"), " alias") == 20);
    for (const char* name : {"hitlist.txt", "prefixes.txt", "aliases.txt"}) CHECK(fs::exists(dir / "w" / name));
  }

  TEST_CASE("fraction zero plants no aliases") {
    TempDir dir;
    REQUIRE(rover(dir, "simulate-gen --prefixes 100 --alias-fraction 0 --seed 7 --out " +
                           quote((dir / "w").string()))
                .exit_code == 0);
    CHECK(count_lines_ending(slurp(dir / "w" / "scenario.txt"), " alias") == 0);
  }

  TEST_CASE("same flags give identical files") {
    TempDir dir;
    const std::string flags = "simulate-gen --prefixes 30 --seed 5 --out ";
    REQUIRE(rover(dir, flags + quote((dir / "a").string())).exit_code == 0);
    REQUIRE(rover(dir, flags + quote((dir / "b").string())).exit_code == 0);
    for (const char* name : {"hitlist.txt", "prefixes.txt", "aliases.txt", "scenario.txt"})
      CHECK_MESSAGE(slurp(dir / "a" / name) == slurp(dir / "b" / name), name);
  }

  TEST_CASE("invalid parameters exit 2") {
    TempDir dir;
    CHECK(rover(dir, "simulate-gen --alias-fraction 1.5 --out " + quote((dir / "w").string())).exit_code == 2);
  }
}

TEST_SUITE("cli.report") {
  TEST_CASE("verify accepts a real report and rejects a tampered one") {
    TempDir dir;
    REQUIRE(rover(dir, mine_args(dir / "m")).exit_code == 0);
    REQUIRE(rover(dir, campaign_args(dir / "m", dir / "r.jsonl")).exit_code == 0);

    const auto ok = rover(dir, "report --verify " + quote((dir / "r.jsonl").string()));
    CHECK_MESSAGE(ok.exit_code == 0, ok.output);
    CHECK(ok.output.find("verify: ok") != std::string::npos);

    auto text = slurp(dir / "r.jsonl");
    const auto at = text.find("\"type\":\"summary\",\"probes\":");
    REQUIRE(at != std::string::npos);
    const auto digits = at + std::string("\"type\":\"summary\",\"probes\":").size();
    text.insert(digits, "9");
    std::ofstream(dir / "t.jsonl", std::ios::binary) << text;
    const auto bad = rover(dir, "report --verify " + quote((dir / "t.jsonl").string()));
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("inconsistent:") != std::string::npos);
  }

  TEST_CASE("summary without verify") {
    TempDir dir;
    REQUIRE(rover(dir, mine_args(dir / "m")).exit_code == 0);
    REQUIRE(rover(dir, campaign_args(dir / "m", dir / "r.jsonl")).exit_code == 0);
    const auto r = rover(dir, "report " + quote((dir / "r.jsonl").string()));
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("probes ") != std::string::npos);
    CHECK(r.output.find("verify") == std::string::npos);
  }

  TEST_CASE("unreadable or malformed reports exit 2") {
    TempDir dir;
    CHECK(rover(dir, "report /nonexistent/r.jsonl").exit_code == 2);
    std::ofstream(dir / "junk.jsonl") << "not json\n";
    CHECK(rover(dir, "report " + quote((dir / "junk.jsonl").string())).exit_code == 2);
  }
}
