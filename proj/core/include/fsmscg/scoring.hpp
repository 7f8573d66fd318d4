#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsmscg/errors.hpp"
#include "fsmscg/toolchain.hpp"

namespace fsmscg {

class UnknownLevel : public Error {
 public:
  using Error::Error;
};
class InconsistentInput : public Error {
 public:
  using Error::Error;
};
class EmptyBatch : public Error {
 public:
  using Error::Error;
};

struct ScoringConfig {
  // Informational/optimization findings sit outside the 3/2/1 scale; by
  // default they do not count toward n, the risk score, or zero-risk.
  // When counted they contribute severity score 0.
  bool count_informational = false;
};

// 3 (high), 2 (medium), 1 (low); nullopt for levels outside the scale.
std::optional<int> severity_score(Severity level);
int confidence_score(Confidence level);
// String forms; throw UnknownLevel on anything outside the enumerations.
std::optional<int> severity_score(std::string_view level);
int confidence_score(std::string_view level);

// Mean of severity*confidence over counted findings; 0 with none; 10 when
// the contract did not compile.
double vrs(bool compiled, const std::vector<Finding>& findings,
           const ScoringConfig& config = {});

struct ContractScore {
  bool compiled = false;
  double vrs = 10.0;
  bool zero_risk = false;
  bool has_high_severity = false;
  int counted_findings = 0;
  bool operator==(const ContractScore&) const = default;
};

// `analysis` must be present exactly when the compile succeeded (failed
// code is never analyzed); otherwise InconsistentInput. An analysis with
// ran=false is also rejected: an analyzer that did not run certifies
// nothing.
ContractScore score_contract(const CompileResult& compile,
                             const std::optional<AnalysisResult>& analysis,
                             const ScoringConfig& config = {});

struct MetricsSummary {
  int total = 0;
  int compiled = 0;
  double cpr = 0.0;   // percentages in [0,100]
  double zrcp = 0.0;
  double hrcp = 0.0;
  double mean_vrs = 0.0;
  bool operator==(const MetricsSummary&) const = default;

  std::string to_json() const;
  // Aligned table with ZRCP(up), HRCP(down), VRS(down), CPR(up) columns.
  std::string to_table() const;
};

// Exact ratios over the batch; non-compiling contracts contribute their
// VRS of 10 to the mean. Throws EmptyBatch.
MetricsSummary aggregate(const std::vector<ContractScore>& scores);

}  // namespace fsmscg
