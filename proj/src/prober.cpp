#include "rover/prober.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace rover {
namespace {

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

std::string shell_quote(const std::string& s) { return "'" + replace_all(s, "'", "'\\''") + "'"; }

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

ExternalScanner::ExternalScanner(std::string command_template, std::filesystem::path work_dir)
    : command_template_(std::move(command_template)), work_dir_(std::move(work_dir)) {
  if (command_template_.find("{input}") == std::string::npos ||
      command_template_.find("{output}") == std::string::npos) {
    throw std::invalid_argument("scanner command must contain {input} and {output}");
  }
  std::filesystem::create_directories(work_dir_);
}

std::vector<ProbeResult> ExternalScanner::probe(std::span<const Ipv6Address> targets) {
  if (targets.empty()) return {};
  ++batch_;
  const auto input = work_dir_ / ("targets-" + std::to_string(batch_) + ".txt");
  const auto output = work_dir_ / ("responses-" + std::to_string(batch_) + ".txt");
  const auto log = work_dir_ / ("scanner-" + std::to_string(batch_) + ".log");
  {
    std::ofstream out(input);
    for (const auto& t : targets) out << t.to_string() << '\n';
    if (!out) throw ProberError("cannot write scanner input " + input.string());
  }
  std::filesystem::remove(output);

  auto command = replace_all(command_template_, "{input}", shell_quote(input.string()));
  command = replace_all(command, "{output}", shell_quote(output.string()));
  // The newline keeps a trailing comment in the template from eating the redirect.
  command = "(" + command + "\n) > " + shell_quote(log.string()) + " 2>&1";

  const int status = std::system(command.c_str());
  sent_ += targets.size();
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw ProberError("scanner failed (status " + std::to_string(status) + "): " + command, slurp(log));
  }
  if (!std::filesystem::exists(output)) {
    throw ProberError("scanner wrote no output file " + output.string(), slurp(log));
  }

  std::unordered_set<Ipv6Address, Ipv6AddressHash> responsive;
  std::ifstream in(output);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto address = Ipv6Address::parse(line);
    if (!address) throw ProberError("malformed scanner output line: " + line, slurp(output));
    responsive.insert(*address);
  }

  std::vector<ProbeResult> results;
  results.reserve(targets.size());
  for (const auto& t : targets) results.push_back({t, responsive.count(t) != 0});
  return results;
}

std::vector<Ipv6Address> random_prefix_addresses(const Prefix& prefix, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  const AddressRegion region(prefix);
  if (region.size() <= static_cast<double>(count)) {
    std::vector<Ipv6Address> all;
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << region.free_bits); ++i) all.push_back(region.at(i));
    return all;
  }
  std::vector<Ipv6Address> picked;
  while (picked.size() < count) {
    const auto a = region.random(rng);
    if (std::find(picked.begin(), picked.end(), a) == picked.end()) picked.push_back(a);
  }
  return picked;
}

AliasVerdict prescan_prefix_alias(const Prefix& prefix, Prober& prober, std::uint64_t seed) {
  AliasVerdict verdict;
  verdict.subject = prefix.to_string();
  const auto targets = random_prefix_addresses(prefix, kPrefixAliasSamples, seed);
  verdict.evidence = prober.probe(targets);
  verdict.aliased = std::any_of(verdict.evidence.begin(), verdict.evidence.end(),
                                [](const ProbeResult& r) { return r.responsive; });
  return verdict;
}

AliasVerdict prescan_pattern_alias(const GenericPattern& pattern, const Prefix& prefix, Prober& prober,
                                   std::uint64_t seed) {
  AliasVerdict verdict;
  verdict.subject = pattern.to_string() + "@" + prefix.to_string();
  const AddressRegion region(prefix, pattern);
  if (region.size() < static_cast<double>(kPatternAliasSamples)) {
    verdict.skipped = true;
    return verdict;
  }
  ProbedAddressMap scratch;
  const auto batch = sample_targets(pattern, prefix, kPatternAliasSamples, scratch, seed);
  verdict.evidence = prober.probe(batch.targets);
  verdict.aliased = std::all_of(verdict.evidence.begin(), verdict.evidence.end(),
                                [](const ProbeResult& r) { return r.responsive; });
  return verdict;
}

}  // namespace rover
