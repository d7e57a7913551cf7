#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rover/orchestrator.hpp"

namespace rover {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "key = value" lines; '#' starts a comment. Later keys override earlier ones.
std::map<std::string, std::string> read_key_values(std::istream& in);

/// Applies recognised keys to `config`. Throws ConfigError on an unknown key
/// or an unparsable value.
void apply_config(const std::map<std::string, std::string>& values, CampaignConfig& config);

SelectionPolicy parse_policy(std::string_view name);
std::string_view policy_name(SelectionPolicy policy);

/// Every campaign setting as sorted "key=value" lines.
std::string canonical_config(const CampaignConfig& config);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
/// FNV-1a of the file contents, as 16 hex digits. Throws std::runtime_error
/// when the file cannot be read.
std::string file_digest(const std::filesystem::path& path);

}  // namespace rover
