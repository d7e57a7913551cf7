#include "rover/report.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

#include "rover/metrics.hpp"

namespace rover {
namespace {

using Json = nlohmann::ordered_json;

double rate(std::uint64_t probes, std::uint64_t actives, std::uint64_t aliases) {
  return probes == 0 ? 0.0 : non_aliased_hit_rate(probes, actives + aliases, aliases);
}

Prefix prefix_field(const Json& j) {
  const auto p = Prefix::parse(j.at("prefix").get<std::string>());
  if (!p) throw ReportError("bad prefix in report: " + j.at("prefix").get<std::string>());
  return *p;
}

}  // namespace

ReportSummary summarize(const CampaignReport& report) {
  ReportSummary s;
  s.probes = report.probes;
  s.actives = report.actives;
  s.aliased_hits = report.aliased_hits;
  s.responsive = report.actives + report.aliased_hits;
  s.hit_rate = rate(report.probes, report.actives, report.aliased_hits);
  for (const auto& p : report.prefixes) {
    if (p.probes == 0) continue;
    ++s.prefixes;
    if (p.aliased) ++s.alias_prefixes;
  }
  s.partial = report.partial;
  s.error = report.error;
  return s;
}

void JsonLinesReport::header(const ReportHeader& h) {
  Json inputs = Json::object();
  for (const auto& [name, digest] : h.inputs) inputs[name] = digest;
  const Json j = {{"type", "header"},  {"tool", "rover"},        {"command", h.command},
                  {"seed", h.seed},    {"config_hash", h.config_hash}, {"inputs", inputs}};
  *out_ << j.dump() << '\n' << std::flush;
}

void JsonLinesReport::on_prescan(const PrescanRecord& r) {
  const Json j = {{"type", "prescan"},
                  {"prefix", r.prefix.to_string()},
                  {"probes", r.probes},
                  {"responsive", r.responsive},
                  {"aliased", r.aliased}};
  *out_ << j.dump() << '\n';
}

void JsonLinesReport::on_round(const RoundRecord& r) {
  const Json j = {{"type", "round"},
                  {"prefix", r.prefix.to_string()},
                  {"round", r.round},
                  {"arms", r.arms},
                  {"probes", r.probes},
                  {"actives", r.actives},
                  {"aliased_hits", r.aliased_hits},
                  {"effective", r.effective},
                  {"pulls", r.pulls},
                  {"stop_reason", r.stop_reason},
                  {"partial", r.partial}};
  *out_ << j.dump() << '\n' << std::flush;
}

void JsonLinesReport::on_step(const StepRecord& s) {
  const Json j = {{"type", "step"},
                  {"step", s.step},
                  {"probes", s.probes},
                  {"actives", s.actives},
                  {"aliases", s.aliases},
                  {"hit_rate", rate(s.probes, s.actives, s.aliases)}};
  *out_ << j.dump() << '\n';
}

void JsonLinesReport::summary(const ReportSummary& s) {
  Json j = {{"type", "summary"},
            {"probes", s.probes},
            {"actives", s.actives},
            {"aliased_hits", s.aliased_hits},
            {"responsive", s.responsive},
            {"hit_rate", s.hit_rate},
            {"prefixes", s.prefixes},
            {"alias_prefixes", s.alias_prefixes},
            {"partial", s.partial}};
  if (!s.error.empty()) j["error"] = s.error;
  *out_ << j.dump() << '\n' << std::flush;
}

ParsedReport read_report(std::istream& in) {
  ParsedReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = Json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        ReportHeader h;
        h.command = j.at("command").get<std::string>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& [name, digest] : j.at("inputs").items()) h.inputs.emplace_back(name, digest.get<std::string>());
        report.header = std::move(h);
      } else if (type == "prescan") {
        report.prescans.push_back({prefix_field(j), j.at("probes").get<std::uint64_t>(),
                                   j.at("responsive").get<std::uint64_t>(), j.at("aliased").get<bool>()});
      } else if (type == "round") {
        RoundRecord r;
        r.prefix = prefix_field(j);
        r.round = j.at("round").get<std::size_t>();
        r.arms = j.at("arms").get<std::vector<std::string>>();
        r.probes = j.at("probes").get<std::uint64_t>();
        r.actives = j.at("actives").get<std::uint64_t>();
        r.aliased_hits = j.at("aliased_hits").get<std::uint64_t>();
        r.effective = j.at("effective").get<std::vector<std::string>>();
        r.pulls = j.at("pulls").get<std::uint64_t>();
        r.stop_reason = j.at("stop_reason").get<std::string>();
        r.partial = j.at("partial").get<bool>();
        report.rounds.push_back(std::move(r));
      } else if (type == "step") {
        report.steps.push_back({j.at("step").get<std::size_t>(), j.at("probes").get<std::uint64_t>(),
                                j.at("actives").get<std::uint64_t>(), j.at("aliases").get<std::uint64_t>()});
      } else if (type == "summary") {
        ReportSummary s;
        s.probes = j.at("probes").get<std::uint64_t>();
        s.actives = j.at("actives").get<std::uint64_t>();
        s.aliased_hits = j.at("aliased_hits").get<std::uint64_t>();
        s.responsive = j.at("responsive").get<std::uint64_t>();
        s.hit_rate = j.at("hit_rate").get<double>();
        s.prefixes = j.at("prefixes").get<std::uint64_t>();
        s.alias_prefixes = j.at("alias_prefixes").get<std::uint64_t>();
        s.partial = j.at("partial").get<bool>();
        if (j.contains("error")) s.error = j.at("error").get<std::string>();
        report.summary = std::move(s);
      } else {
        throw ReportError("unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ReportError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return report;
}

std::vector<std::string> verify_report(const ParsedReport& report) {
  std::vector<std::string> problems;
  if (!report.header) problems.push_back("missing header");
  if (!report.summary) {
    problems.push_back("missing summary");
    return problems;
  }
  const auto& s = *report.summary;

  std::uint64_t probes = 0, actives = 0, aliased = 0, alias_prefixes = 0;
  for (const auto& p : report.prescans) {
    probes += p.probes;
    aliased += p.responsive;
    if (p.aliased) ++alias_prefixes;
  }
  for (const auto& r : report.rounds) {
    probes += r.probes;
    actives += r.actives;
    aliased += r.aliased_hits;
  }
  std::uint64_t step_probes = 0, step_actives = 0, step_aliased = 0;
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto& st = report.steps[i];
    if (st.step != i + 1) problems.push_back("step " + std::to_string(st.step) + " out of sequence");
    step_probes += st.probes;
    step_actives += st.actives;
    step_aliased += st.aliases;
  }

  const auto check = [&](const std::string& what, std::uint64_t stated, std::uint64_t recomputed,
                         const std::string& source) {
    if (stated != recomputed) {
      problems.push_back(what + ": summary says " + std::to_string(stated) + ", " + source + " give " +
                         std::to_string(recomputed));
    }
  };
  check("probes", s.probes, probes, "prefix records");
  check("actives", s.actives, actives, "prefix records");
  check("aliased_hits", s.aliased_hits, aliased, "prefix records");
  check("probes", s.probes, step_probes, "step records");
  check("actives", s.actives, step_actives, "step records");
  check("aliased_hits", s.aliased_hits, step_aliased, "step records");
  check("responsive", s.responsive, s.actives + s.aliased_hits, "actives + aliased_hits");
  check("prefixes", s.prefixes, report.prescans.size(), "prescan records");
  check("alias_prefixes", s.alias_prefixes, alias_prefixes, "prescan records");
  try {
    const double expected = rate(probes, actives, aliased);
    if (s.hit_rate != expected) {
      problems.push_back("hit_rate: summary says " + std::to_string(s.hit_rate) + ", records give " +
                         std::to_string(expected));
    }
  } catch (const std::invalid_argument& e) {
    problems.push_back(std::string("hit_rate: records are inconsistent: ") + e.what());
  }
  return problems;
}

}  // namespace rover
