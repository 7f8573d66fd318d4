#include "fsmscg/scoring.hpp"

#include <cstdio>

#include "json.hpp"

namespace fsmscg {

std::optional<int> severity_score(Severity level) {
  switch (level) {
    case Severity::High: return 3;
    case Severity::Medium: return 2;
    case Severity::Low: return 1;
    case Severity::Informational:
    case Severity::Optimization: return std::nullopt;
  }
  return std::nullopt;
}

int confidence_score(Confidence level) {
  switch (level) {
    case Confidence::High: return 3;
    case Confidence::Medium: return 2;
    case Confidence::Low: return 1;
  }
  return 1;
}

std::optional<int> severity_score(std::string_view level) {
  auto parsed = parse_severity(level);
  if (!parsed)
    throw UnknownLevel("unknown severity level \"" + std::string(level) + "\"");
  return severity_score(*parsed);
}

int confidence_score(std::string_view level) {
  auto parsed = parse_confidence(level);
  if (!parsed)
    throw UnknownLevel("unknown confidence level \"" + std::string(level) +
                       "\"");
  return confidence_score(*parsed);
}

namespace {

bool is_counted(const Finding& finding, const ScoringConfig& config) {
  return severity_score(finding.severity).has_value() ||
         config.count_informational;
}

}  // namespace

double vrs(bool compiled, const std::vector<Finding>& findings,
           const ScoringConfig& config) {
  if (!compiled) return 10.0;
  double sum = 0.0;
  int n = 0;
  for (const Finding& finding : findings) {
    if (!is_counted(finding, config)) continue;
    int severity = severity_score(finding.severity).value_or(0);
    sum += severity * confidence_score(finding.confidence);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

ContractScore score_contract(const CompileResult& compile,
                             const std::optional<AnalysisResult>& analysis,
                             const ScoringConfig& config) {
  if (!compile.success && analysis.has_value())
    throw InconsistentInput("analysis supplied for a failed compile");
  if (compile.success && !analysis.has_value())
    throw InconsistentInput("compiled contract is missing its analysis");
  if (analysis && !analysis->ran)
    throw InconsistentInput("analyzer did not run; cannot score");

  ContractScore score;
  score.compiled = compile.success;
  if (!score.compiled) {
    score.vrs = 10.0;
    return score;
  }

  const std::vector<Finding>& findings = analysis->findings;
  score.vrs = vrs(true, findings, config);
  for (const Finding& finding : findings) {
    if (!is_counted(finding, config)) continue;
    ++score.counted_findings;
    if (finding.severity == Severity::High) score.has_high_severity = true;
  }
  score.zero_risk = score.vrs == 0.0;
  return score;
}

MetricsSummary aggregate(const std::vector<ContractScore>& scores) {
  if (scores.empty()) throw EmptyBatch("no contract scores to aggregate");

  MetricsSummary summary;
  summary.total = static_cast<int>(scores.size());
  int zero = 0, high = 0;
  double vrs_sum = 0.0;
  for (const ContractScore& score : scores) {
    if (score.compiled) ++summary.compiled;
    if (score.zero_risk) ++zero;
    if (score.has_high_severity) ++high;
    vrs_sum += score.vrs;
  }
  summary.cpr = 100.0 * summary.compiled / summary.total;
  summary.zrcp = 100.0 * zero / summary.total;
  summary.hrcp = 100.0 * high / summary.total;
  summary.mean_vrs = vrs_sum / summary.total;
  return summary;
}

std::string MetricsSummary::to_json() const {
  nlohmann::ordered_json doc;
  doc["total"] = total;
  doc["compiled"] = compiled;
  doc["cpr"] = cpr;
  doc["zrcp"] = zrcp;
  doc["hrcp"] = hrcp;
  doc["mean_vrs"] = mean_vrs;
  return doc.dump(2) + "\n";
}

std::string MetricsSummary::to_table() const {
  char line1[128], line2[128];
  std::snprintf(line1, sizeof(line1), "%-10s %-10s %-10s %-10s", "ZRCP(up)",
                "HRCP(down)", "VRS(down)", "CPR(up)");
  char zrcp_s[24], hrcp_s[24], cpr_s[24];
  std::snprintf(zrcp_s, sizeof(zrcp_s), "%.2f%%", zrcp);
  std::snprintf(hrcp_s, sizeof(hrcp_s), "%.2f%%", hrcp);
  std::snprintf(cpr_s, sizeof(cpr_s), "%.2f%%", cpr);
  std::snprintf(line2, sizeof(line2), "%-10s %-10s %-10.4f %-10s", zrcp_s,
                hrcp_s, mean_vrs, cpr_s);
  return std::string(line1) + "\n" + line2 + "\n";
}

}  // namespace fsmscg
