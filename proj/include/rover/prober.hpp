#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rover/address.hpp"
#include "rover/generic_pattern.hpp"
#include "rover/target_space.hpp"

namespace rover {

struct ProbeResult {
  Ipv6Address target;
  bool responsive = false;

  friend bool operator==(const ProbeResult&, const ProbeResult&) = default;
};

class ProberError : public std::runtime_error {
 public:
  ProberError(const std::string& what, std::string raw_output = {})
      : std::runtime_error(what), raw_output_(std::move(raw_output)) {}
  const std::string& raw_output() const { return raw_output_; }

 private:
  std::string raw_output_;
};

/// Sends one probe per target and reports which answered.
class Prober {
 public:
  virtual ~Prober() = default;
  /// One result per target, in target order. Targets must be distinct.
  virtual std::vector<ProbeResult> probe(std::span<const Ipv6Address> targets) = 0;
  virtual std::uint64_t probes_sent() const = 0;
};

/// Hands each batch to an external high-rate scanner through files. The
/// command template must contain {input} and {output}; the scanner reads
/// targets (one per line) from {input} and writes responsive addresses to
/// {output}.
class ExternalScanner final : public Prober {
 public:
  ExternalScanner(std::string command_template, std::filesystem::path work_dir);

  std::vector<ProbeResult> probe(std::span<const Ipv6Address> targets) override;
  std::uint64_t probes_sent() const override { return sent_; }

 private:
  std::string command_template_;
  std::filesystem::path work_dir_;
  std::uint64_t sent_ = 0;
  std::uint64_t batch_ = 0;
};

inline constexpr std::size_t kPrefixAliasSamples = 10;
inline constexpr std::size_t kPatternAliasSamples = 5;

struct AliasVerdict {
  std::string subject;  // prefix or pattern@prefix
  bool aliased = false;
  bool skipped = false;
  std::vector<ProbeResult> evidence;
};

/// Distinct uniform-random addresses inside `prefix` (fewer only when the
/// prefix is smaller than `count`).
std::vector<Ipv6Address> random_prefix_addresses(const Prefix& prefix, std::size_t count, std::uint64_t seed);

/// Ten random addresses in the prefix; any response marks the prefix aliased.
AliasVerdict prescan_prefix_alias(const Prefix& prefix, Prober& prober, std::uint64_t seed);

/// Five addresses fitting the pattern; all five responding marks it aliased.
/// Spaces smaller than five addresses skip the check.
AliasVerdict prescan_pattern_alias(const GenericPattern& pattern, const Prefix& prefix, Prober& prober,
                                   std::uint64_t seed);

}  // namespace rover
