#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rover/orchestrator.hpp"

namespace rover {

struct ReportHeader {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> inputs;  // name, digest
};

struct ReportSummary {
  std::uint64_t probes = 0;
  std::uint64_t actives = 0;  // non-aliased
  std::uint64_t aliased_hits = 0;
  std::uint64_t responsive = 0;
  double hit_rate = 0.0;
  std::uint64_t prefixes = 0;  // prefixes that were pre-scanned
  std::uint64_t alias_prefixes = 0;
  bool partial = false;
  std::string error;

  friend bool operator==(const ReportSummary&, const ReportSummary&) = default;
};

ReportSummary summarize(const CampaignReport& report);

/// Streams one JSON object per line: a header, records as the campaign
/// produces them, then a summary.
class JsonLinesReport final : public CampaignSink {
 public:
  explicit JsonLinesReport(std::ostream& out) : out_(&out) {}

  void header(const ReportHeader& h);
  void on_prescan(const PrescanRecord& r) override;
  void on_round(const RoundRecord& r) override;
  void on_step(const StepRecord& s) override;
  void summary(const ReportSummary& s);

 private:
  std::ostream* out_;
};

struct ParsedReport {
  std::optional<ReportHeader> header;
  std::vector<PrescanRecord> prescans;
  std::vector<RoundRecord> rounds;
  std::vector<StepRecord> steps;
  std::optional<ReportSummary> summary;
};

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ReportError on lines that are not report records.
ParsedReport read_report(std::istream& in);

/// Recomputes the summary twice, from the prefix records and from the step
/// records, and lists every disagreement. Empty means consistent.
std::vector<std::string> verify_report(const ParsedReport& report);

}  // namespace rover
