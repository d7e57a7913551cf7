#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rover/config.hpp"
#include "rover/corpus.hpp"
#include "rover/generic_pattern.hpp"
#include "rover/orchestrator.hpp"
#include "rover/pattern.hpp"
#include "rover/prober.hpp"
#include "rover/report.hpp"
#include "rover/simulation.hpp"

namespace fs = std::filesystem;
using namespace rover;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_interrupt{false};

extern "C" void on_signal(int) { g_interrupt.store(true); }

// Bad input or invocation; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const fs::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + what + " " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct Provenance {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> inputs;
};

void write_comment_header(std::ostream& out, const Provenance& p) {
  out << "# rover " << p.command << " seed=" << p.seed << " config=" << p.config_hash << '\n';
  for (const auto& [name, digest] : p.inputs) out << "# input " << name << ' ' << digest << '\n';
}

// ---- mine -------------------------------------------------------------

struct MineOptions {
  std::string hitlist;
  std::string prefixes;
  std::string aliases;
  std::string out;
  std::size_t min_cluster = 16;
  bool assume_live = false;
};

int cmd_mine(const MineOptions& o) {
  if (!o.assume_live) {
    throw UsageError("mine needs --assume-live: the hitlist must already be curated for liveness");
  }
  if (o.min_cluster == 0) throw UsageError("--min-cluster must be positive");

  Hitlist hitlist;
  std::vector<AnnouncedPrefix> announced;
  std::vector<Prefix> aliases;
  try {
    hitlist = ingest_hitlist(o.hitlist);
    announced = load_prefix_list(o.prefixes);
    if (!o.aliases.empty()) aliases = load_alias_list(o.aliases);
  } catch (const IngestError& e) {
    throw UsageError(e.what());
  }
  if (hitlist.malformed > 0) std::cerr << "warning: " << hitlist.malformed << " malformed hitlist lines skipped\n";
  if (hitlist.addresses.empty()) throw UsageError("no seeds");

  const auto corpus = SeedCorpus::build(hitlist.addresses, announced, aliases);
  if (corpus.alias_excluded() > 0) std::cerr << "note: " << corpus.alias_excluded() << " seeds under alias prefixes dropped\n";
  if (corpus.unrouted() > 0) std::cerr << "note: " << corpus.unrouted() << " seeds outside every announced prefix dropped\n";

  std::vector<Pattern> patterns;
  std::vector<GenericPattern> generics;
  if (corpus.empty()) {
    std::cerr << "warning: no seeds left after exclusion; writing empty pattern files\n";
  } else {
    const auto truncated = seed_truncate(corpus);
    patterns = mine_patterns(truncated.tails, o.min_cluster);
    generics = filter_shared(degrade_with_provenance(patterns, truncated, corpus));
  }
  const auto graph = construct_dependency(generics);

  std::vector<Prefix> announced_prefixes;
  for (const auto& a : announced) announced_prefixes.push_back(a.prefix);
  const auto unseeded = derive_unseeded(announced_prefixes, corpus, aliases);

  Provenance prov;
  prov.command = "mine";
  prov.config_hash = hex64(fnv1a64("min-cluster=" + std::to_string(o.min_cluster) + "\n"));
  prov.inputs = {{"hitlist", file_digest(o.hitlist)}, {"prefixes", file_digest(o.prefixes)}};
  if (!o.aliases.empty()) prov.inputs.emplace_back("aliases", file_digest(o.aliases));

  const fs::path dir(o.out);
  {
    auto out = open_output(dir / "patterns.txt");
    write_comment_header(out, prov);
    write_patterns(out, patterns);
  }
  {
    auto out = open_output(dir / "generic.txt");
    write_comment_header(out, prov);
    write_generic_patterns(out, generics);
  }
  {
    auto out = open_output(dir / "generic_provenance.tsv");
    write_comment_header(out, prov);
    write_provenance(out, generics);
  }
  {
    auto out = open_output(dir / "graph.tsv");
    write_comment_header(out, prov);
    write_graph(out, graph);
  }
  {
    auto out = open_output(dir / "unseeded.txt");
    write_comment_header(out, prov);
    for (const auto& p : unseeded) out << p.to_string() << '\n';
  }
  std::cerr << "seeds " << corpus.size() << ", patterns " << patterns.size() << ", generic " << generics.size()
            << ", edges " << graph.edge_count() << ", unseeded prefixes " << unseeded.size() << '\n';
  return kExitOk;
}

// ---- graph ------------------------------------------------------------

int cmd_graph(const std::string& provenance_path, const std::string& out_path) {
  auto in = open_input(provenance_path, "provenance file");
  std::vector<GenericPattern> generics;
  try {
    generics = read_provenance(in);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto graph = construct_dependency(generics);
  Provenance prov;
  prov.command = "graph";
  prov.config_hash = hex64(fnv1a64(""));
  prov.inputs = {{"provenance", file_digest(provenance_path)}};
  auto out = open_output(out_path);
  write_comment_header(out, prov);
  write_graph(out, graph);
  std::cerr << "nodes " << graph.nodes().size() << ", edges " << graph.edge_count() << '\n';
  return kExitOk;
}

// ---- campaign ---------------------------------------------------------

struct CampaignOptions {
  std::string generic;
  std::string graph;
  std::string unseeded;
  std::string out;
  std::string config_file;
  std::string scenario;
  std::string scanner_cmd;
  std::string scanner_workdir;
  std::string actives_out;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
  std::size_t max_concurrent = 0;
  std::string policy;
  double c_ucb = 0, exit_threshold = 0, budget_ratio = 0, effective_threshold = 0, alpha = 0;
  std::uint64_t max_iter_per_arm = 0;
  std::size_t pattern_alias_samples = 0;
  bool sequential = false;
};

int cmd_campaign(const CampaignOptions& o, const CLI::App& sub) {
  CampaignConfig config;
  if (!o.config_file.empty()) {
    auto in = open_input(o.config_file, "config file");
    try {
      apply_config(read_key_values(in), config);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  const auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--budget")) config.budget = o.budget;
  if (given("--seed")) config.seed = o.seed;
  if (given("--max-concurrent")) config.max_concurrent = o.max_concurrent;
  if (given("--sequential")) config.execution = o.sequential ? Execution::sequential : Execution::aggregated;
  if (given("--policy")) {
    try {
      config.bandit.policy = parse_policy(o.policy);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (given("--c-ucb")) config.bandit.c_ucb = o.c_ucb;
  if (given("--exit-threshold")) config.bandit.exit_threshold = o.exit_threshold;
  if (given("--budget-ratio")) config.bandit.budget_ratio = o.budget_ratio;
  if (given("--effective-threshold")) config.bandit.effective_threshold = o.effective_threshold;
  if (given("--alpha")) config.bandit.alpha = o.alpha;
  if (given("--max-iter-per-arm")) config.bandit.max_iter_per_arm = o.max_iter_per_arm;
  if (given("--pattern-alias-samples")) config.bandit.pattern_alias_samples = o.pattern_alias_samples;
  try {
    config.bandit.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  if (!fs::exists(o.graph)) throw UsageError("missing graph file " + o.graph);
  std::vector<GenericPattern> generics;
  DependencyGraph graph;
  std::vector<Prefix> unseeded;
  try {
    auto generic_in = open_input(o.generic, "generic pattern file");
    generics = read_generic_patterns(generic_in);
    auto graph_in = open_input(o.graph, "graph file");
    graph = read_graph(graph_in, generics);
    unseeded = load_alias_list(o.unseeded);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const IngestError& e) {
    throw UsageError(e.what());
  }

  std::unique_ptr<Prober> prober;
  Provenance prov;
  prov.inputs = {{"generic", file_digest(o.generic)},
                 {"graph", file_digest(o.graph)},
                 {"unseeded", file_digest(o.unseeded)}};
  if (!o.scenario.empty()) {
    try {
      prober = std::make_unique<SimulatedNetwork>(Scenario::load(o.scenario));
    } catch (const ScenarioError& e) {
      throw UsageError(e.what());
    }
    prov.inputs.emplace_back("scenario", file_digest(o.scenario));
  } else {
    const auto workdir = o.scanner_workdir.empty() ? o.out + ".scanner" : o.scanner_workdir;
    try {
      prober = std::make_unique<ExternalScanner>(o.scanner_cmd, workdir);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

  auto out = open_output(o.out);
  JsonLinesReport report(out);
  report.header({"campaign", config.seed, hex64(fnv1a64(canonical_config(config))), prov.inputs});

  if (config.budget == 0) {
    report.summary(ReportSummary{});
    std::cerr << "budget 0: nothing probed\n";
    return kExitOk;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto result = run_campaign(unseeded, generics, graph, config, *prober, &report, &g_interrupt);
  const auto summary = summarize(result);
  report.summary(summary);

  if (!o.actives_out.empty()) {
    auto actives = open_output(o.actives_out);
    std::vector<Ipv6Address> all;
    for (const auto& p : result.prefixes) all.insert(all.end(), p.actives.begin(), p.actives.end());
    std::sort(all.begin(), all.end());
    for (const auto& a : all) actives << a.to_string() << '\n';
  }

  std::cerr << "probes " << summary.probes << ", actives " << summary.actives << ", aliased hits "
            << summary.aliased_hits << ", hit rate " << summary.hit_rate << ", prefixes " << summary.prefixes
            << " (" << summary.alias_prefixes << " aliased)" << (summary.partial ? ", partial" : "") << '\n';
  if (!result.error.empty()) {
    std::cerr << "error: " << result.error << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// ---- simulate-gen -----------------------------------------------------

int cmd_simulate_gen(const WorldParams& params, const std::string& out_dir) {
  World world;
  try {
    world = synthesize_world(params);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir(out_dir);
  const auto banner = "# rover simulate-gen seed=" + std::to_string(params.seed) + "\n";
  {
    auto out = open_output(dir / "hitlist.txt");
    out << banner;
    write_hitlist(out, world.hitlist);
  }
  {
    auto out = open_output(dir / "prefixes.txt");
    out << banner;
    write_prefix_list(out, world.announced);
  }
  {
    auto out = open_output(dir / "aliases.txt");
    out << banner;
    write_alias_list(out, world.known_aliases);
  }
  {
    auto out = open_output(dir / "scenario.txt");
    out << banner;
    world.scenario.write(out);
  }
  std::cerr << "seeds " << world.hitlist.size() << ", library patterns " << world.library.size()
            << ", scenario prefixes " << world.scenario.prefixes.size() << " (" << world.scenario.alias_count()
            << " alias)\n";
  return kExitOk;
}

// ---- report -----------------------------------------------------------

int cmd_report(const std::string& path, bool verify) {
  auto in = open_input(path, "report");
  ParsedReport parsed;
  try {
    parsed = read_report(in);
  } catch (const ReportError& e) {
    throw UsageError(e.what());
  }
  if (parsed.summary) {
    const auto& s = *parsed.summary;
    std::cout << "probes " << s.probes << "\nactives " << s.actives << "\naliased_hits " << s.aliased_hits
              << "\nhit_rate " << s.hit_rate << "\nprefixes " << s.prefixes << "\nalias_prefixes "
              << s.alias_prefixes << "\nrounds " << parsed.rounds.size() << "\nsteps " << parsed.steps.size()
              << "\npartial " << (s.partial ? "yes" : "no") << '\n';
  }
  if (!verify) return kExitOk;
  const auto problems = verify_report(parsed);
  for (const auto& p : problems) std::cout << "inconsistent: " << p << '\n';
  if (!problems.empty()) return kExitRuntime;
  std::cout << "verify: ok\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pattern mining and bandit-driven probing of unseeded IPv6 prefixes"};
  app.require_subcommand(1);

  MineOptions mine;
  auto* mine_cmd = app.add_subcommand("mine", "Mine generic patterns and the dependency graph from a hitlist");
  mine_cmd->add_option("--hitlist", mine.hitlist, "Seed addresses, one per line")->required();
  mine_cmd->add_option("--prefixes", mine.prefixes, "Announced prefixes: CIDR [ASN] per line")->required();
  mine_cmd->add_option("--aliases", mine.aliases, "Known alias prefixes, one CIDR per line");
  mine_cmd->add_option("--out", mine.out, "Output directory")->required();
  mine_cmd->add_option("--min-cluster", mine.min_cluster, "Clusters at or below this size become patterns")
      ->capture_default_str();
  mine_cmd->add_flag("--assume-live", mine.assume_live, "Trust the hitlist as already checked for liveness");

  std::string graph_in, graph_out;
  auto* graph_cmd = app.add_subcommand("graph", "Rebuild the dependency graph from a provenance file");
  graph_cmd->add_option("--provenance", graph_in, "generic_provenance.tsv from mine")->required();
  graph_cmd->add_option("--out", graph_out, "Graph file to write")->required();

  CampaignOptions camp;
  auto* camp_cmd = app.add_subcommand("campaign", "Probe unseeded prefixes with parallel bandits");
  camp_cmd->add_option("--generic", camp.generic, "generic.txt from mine")->required();
  camp_cmd->add_option("--graph", camp.graph, "graph.tsv from mine")->required();
  camp_cmd->add_option("--unseeded", camp.unseeded, "Prefixes to explore, one CIDR per line")->required();
  camp_cmd->add_option("--out", camp.out, "Report file (JSON lines)")->required();
  camp_cmd->add_option("--config", camp.config_file, "key=value settings; flags take precedence");
  auto* sim_opt = camp_cmd->add_option("--sim-scenario", camp.scenario, "Probe a simulated network");
  auto* scan_opt =
      camp_cmd->add_option("--scanner-cmd", camp.scanner_cmd, "External scanner command with {input} and {output}");
  sim_opt->excludes(scan_opt);
  camp_cmd->add_option("--scanner-workdir", camp.scanner_workdir, "Exchange file directory (default <out>.scanner)");
  camp_cmd->add_option("--actives-out", camp.actives_out, "Write discovered addresses here");
  camp_cmd->add_option("--budget", camp.budget, "Total probe budget");
  camp_cmd->add_option("--seed", camp.seed, "Root random seed");
  camp_cmd->add_option("--max-concurrent", camp.max_concurrent, "Prefixes explored at once (0 = all)");
  camp_cmd->add_flag("--sequential", camp.sequential, "Run prefixes one after another instead of in lock step");
  camp_cmd->add_option("--policy", camp.policy, "Arm selection: ucb or round-robin");
  camp_cmd->add_option("--c-ucb", camp.c_ucb, "Exploration constant");
  camp_cmd->add_option("--exit-threshold", camp.exit_threshold, "Stop when the mean arm hit rate falls to this");
  camp_cmd->add_option("--budget-ratio", camp.budget_ratio, "Share of an arm's space probed per pull");
  camp_cmd->add_option("--effective-threshold", camp.effective_threshold, "Hit rate for an arm to count as effective");
  camp_cmd->add_option("--alpha", camp.alpha, "Penalty weight for aliased responses");
  camp_cmd->add_option("--max-iter-per-arm", camp.max_iter_per_arm, "Iteration cap per arm");
  camp_cmd->add_option("--pattern-alias-samples", camp.pattern_alias_samples, "Per-arm alias check size (0 = off)");

  WorldParams world;
  std::string sim_out;
  auto* sim_cmd = app.add_subcommand("simulate-gen", "Write a synthetic hitlist, routing table and scenario");
  sim_cmd->add_option("--out", sim_out, "Output directory")->required();
  sim_cmd->add_option("--seed", world.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--prefixes", world.unseeded_prefixes, "Unseeded prefixes in the scenario")->capture_default_str();
  sim_cmd->add_option("--alias-fraction", world.alias_fraction, "Share of unseeded prefixes that are aliased")
      ->capture_default_str();
  sim_cmd->add_option("--planted", world.planted_per_prefix, "Patterns planted per live prefix")->capture_default_str();
  sim_cmd->add_option("--density-min", world.density_min, "Lowest planted density")->capture_default_str();
  sim_cmd->add_option("--density-max", world.density_max, "Highest planted density")->capture_default_str();
  sim_cmd->add_option("--families", world.families, "Nested pattern families")->capture_default_str();
  sim_cmd->add_option("--seeded-prefixes", world.seeded_prefixes, "Prefixes carrying hitlist seeds")
      ->capture_default_str();
  sim_cmd->add_option("--seeds-per-pattern", world.seeds_per_pattern, "Seeds per prefix and pattern")
      ->capture_default_str();

  std::string report_path;
  bool verify = false;
  auto* report_cmd = app.add_subcommand("report", "Summarize or check a campaign report");
  report_cmd->add_option("report", report_path, "Report file")->required();
  report_cmd->add_flag("--verify", verify, "Recompute the summary from the records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*mine_cmd) return cmd_mine(mine);
    if (*graph_cmd) return cmd_graph(graph_in, graph_out);
    if (*camp_cmd) {
      if (camp.scenario.empty() && camp.scanner_cmd.empty()) {
        throw UsageError("campaign needs --sim-scenario or --scanner-cmd");
      }
      return cmd_campaign(camp, *camp_cmd);
    }
    if (*sim_cmd) return cmd_simulate_gen(world, sim_out);
    if (*report_cmd) return cmd_report(report_path, verify);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
