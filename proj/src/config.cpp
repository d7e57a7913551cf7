#include "rover/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace rover {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad value for " + key + ": '" + text + "'");
  return value;
}

std::string format_double(double d) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, ptr);
}

}  // namespace

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    values[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return values;
}

SelectionPolicy parse_policy(std::string_view name) {
  if (name == "ucb") return SelectionPolicy::ucb;
  if (name == "round-robin" || name == "round_robin") return SelectionPolicy::round_robin;
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

std::string_view policy_name(SelectionPolicy policy) {
  return policy == SelectionPolicy::ucb ? "ucb" : "round-robin";
}

void apply_config(const std::map<std::string, std::string>& values, CampaignConfig& config) {
  auto& b = config.bandit;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
      {"max-iter-per-arm", [&](auto& k, auto& v) { b.max_iter_per_arm = parse_number<std::uint64_t>(k, v); }},
      {"c-ucb", [&](auto& k, auto& v) { b.c_ucb = parse_number<double>(k, v); }},
      {"exit-threshold", [&](auto& k, auto& v) { b.exit_threshold = parse_number<double>(k, v); }},
      {"budget-ratio", [&](auto& k, auto& v) { b.budget_ratio = parse_number<double>(k, v); }},
      {"effective-threshold", [&](auto& k, auto& v) { b.effective_threshold = parse_number<double>(k, v); }},
      {"alpha", [&](auto& k, auto& v) { b.alpha = parse_number<double>(k, v); }},
      {"min-pull", [&](auto& k, auto& v) { b.min_pull = parse_number<std::size_t>(k, v); }},
      {"max-pull", [&](auto& k, auto& v) { b.max_pull = parse_number<std::size_t>(k, v); }},
      {"pattern-alias-samples",
       [&](auto& k, auto& v) { b.pattern_alias_samples = parse_number<std::size_t>(k, v); }},
      {"policy", [&](auto&, auto& v) { b.policy = parse_policy(v); }},
      {"initial-wildcards", [&](auto& k, auto& v) { config.initial_wildcards = parse_number<int>(k, v); }},
      {"max-concurrent", [&](auto& k, auto& v) { config.max_concurrent = parse_number<std::size_t>(k, v); }},
      {"budget", [&](auto& k, auto& v) { config.budget = parse_number<std::uint64_t>(k, v); }},
      {"seed", [&](auto& k, auto& v) { config.seed = parse_number<std::uint64_t>(k, v); }},
      {"execution",
       [&](auto&, auto& v) {
         if (v == "aggregated") {
           config.execution = Execution::aggregated;
         } else if (v == "sequential") {
           config.execution = Execution::sequential;
         } else {
           throw ConfigError("unknown execution '" + v + "'");
         }
       }},
  };
  for (const auto& [key, value] : values) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }
}

std::string canonical_config(const CampaignConfig& config) {
  const auto& b = config.bandit;
  std::map<std::string, std::string> values = {
      {"max-iter-per-arm", std::to_string(b.max_iter_per_arm)},
      {"c-ucb", format_double(b.c_ucb)},
      {"exit-threshold", format_double(b.exit_threshold)},
      {"budget-ratio", format_double(b.budget_ratio)},
      {"effective-threshold", format_double(b.effective_threshold)},
      {"alpha", format_double(b.alpha)},
      {"min-pull", std::to_string(b.min_pull)},
      {"max-pull", std::to_string(b.max_pull)},
      {"pattern-alias-samples", std::to_string(b.pattern_alias_samples)},
      {"policy", std::string(policy_name(b.policy))},
      {"initial-wildcards", std::to_string(config.initial_wildcards)},
      {"max-concurrent", std::to_string(config.max_concurrent)},
      {"budget", std::to_string(config.budget)},
      {"seed", std::to_string(config.seed)},
      {"execution", config.execution == Execution::aggregated ? "aggregated" : "sequential"},
  };
  std::ostringstream out;
  for (const auto& [k, v] : values) out << k << '=' << v << '\n';
  return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[value & 0xF];
    value >>= 4;
  }
  return std::string(buf, 16);
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream content;
  content << in.rdbuf();
  return hex64(fnv1a64(content.str()));
}

}  // namespace rover
