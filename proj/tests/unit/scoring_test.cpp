#include "fsmscg/scoring.hpp"

#include <algorithm>
#include <random>

#include "doctest.h"

using namespace fsmscg;

namespace {

Finding finding(Severity severity, Confidence confidence) {
  return {"check", severity, confidence, "", std::nullopt};
}

CompileResult compiled_ok() {
  CompileResult r;
  r.success = true;
  r.compiler_version = "0.8.24";
  return r;
}

CompileResult compiled_fail() {
  CompileResult r;
  r.success = false;
  CompileIssue issue;
  issue.severity = IssueSeverity::Error;
  issue.message = "boom";
  r.issues.push_back(issue);
  return r;
}

AnalysisResult ran_with(std::vector<Finding> findings) {
  AnalysisResult a;
  a.ran = true;
  a.findings = std::move(findings);
  return a;
}

}  // namespace

TEST_CASE("severity and confidence scores") {
  CHECK(severity_score(Severity::High) == 3);
  CHECK(severity_score(Severity::Medium) == 2);
  CHECK(severity_score(Severity::Low) == 1);
  CHECK_FALSE(severity_score(Severity::Informational).has_value());
  CHECK_FALSE(severity_score(Severity::Optimization).has_value());
  CHECK(confidence_score(Confidence::High) == 3);
  CHECK(confidence_score(Confidence::Low) == 1);

  CHECK(severity_score("high") == 3);
  CHECK(severity_score("LOW") == 1);
  CHECK(confidence_score("medium") == 2);
  CHECK_THROWS_AS(severity_score("critical"), UnknownLevel);
  CHECK_THROWS_AS(confidence_score("exact"), UnknownLevel);
}

TEST_CASE("vrs formula") {
  CHECK(vrs(true, {}) == 0.0);
  CHECK(vrs(false, {}) == 10.0);
  CHECK(vrs(true, {finding(Severity::High, Confidence::High),
                   finding(Severity::Low, Confidence::Medium)}) ==
        doctest::Approx(5.5).epsilon(1e-12));
  CHECK(vrs(true, {finding(Severity::Informational, Confidence::High)}) == 0.0);
  SUBCASE("permutation invariance and duplication stability") {
    std::vector<Finding> findings = {
        finding(Severity::High, Confidence::Low),
        finding(Severity::Medium, Confidence::Medium),
        finding(Severity::Low, Confidence::High)};
    double base = vrs(true, findings);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
      std::shuffle(findings.begin(), findings.end(), rng);
      CHECK(vrs(true, findings) == doctest::Approx(base).epsilon(1e-12));
    }
    std::vector<Finding> doubled = findings;
    doubled.insert(doubled.end(), findings.begin(), findings.end());
    CHECK(vrs(true, doubled) == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("range bound") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> sev(0, 4), conf(0, 2), count(0, 6);
    for (int i = 0; i < 300; ++i) {
      std::vector<Finding> findings;
      int n = count(rng);
      for (int j = 0; j < n; ++j)
        findings.push_back(finding(static_cast<Severity>(sev(rng)),
                                   static_cast<Confidence>(conf(rng))));
      double value = vrs(true, findings);
      CHECK(value >= 0.0);
      CHECK(value <= 9.0);  // compiled code cannot reach 10
    }
  }
}

TEST_CASE("score_contract") {
  SUBCASE("compile failure pins the score") {
    ContractScore score = score_contract(compiled_fail(), std::nullopt);
    CHECK_FALSE(score.compiled);
    CHECK(score.vrs == 10.0);
    CHECK_FALSE(score.zero_risk);
    CHECK_FALSE(score.has_high_severity);
  }
  SUBCASE("one high/high finding") {
    ContractScore score = score_contract(
        compiled_ok(), ran_with({finding(Severity::High, Confidence::High)}));
    CHECK(score.vrs == 9.0);
    CHECK(score.has_high_severity);
    CHECK_FALSE(score.zero_risk);
    CHECK(score.counted_findings == 1);
  }
  SUBCASE("informational findings leave the contract zero-risk") {
    ContractScore score = score_contract(
        compiled_ok(),
        ran_with({finding(Severity::Informational, Confidence::High),
                  finding(Severity::Optimization, Confidence::Low)}));
    CHECK(score.vrs == 0.0);
    CHECK(score.zero_risk);
    CHECK(score.counted_findings == 0);
  }
  SUBCASE("inconsistent inputs are rejected") {
    CHECK_THROWS_AS(score_contract(compiled_fail(), ran_with({})),
                    InconsistentInput);
    CHECK_THROWS_AS(score_contract(compiled_ok(), std::nullopt),
                    InconsistentInput);
    AnalysisResult not_run;
    not_run.ran = false;
    CHECK_THROWS_AS(score_contract(compiled_ok(), not_run),
                    InconsistentInput);
  }
}

TEST_CASE("aggregate") {
  ContractScore zero{true, 0.0, true, false, 0};
  ContractScore risky{true, 5.5, false, true, 2};
  ContractScore broken{false, 10.0, false, false, 0};

  SUBCASE("hand-computed batch") {
    MetricsSummary summary = aggregate({zero, risky, broken});
    CHECK(summary.total == 3);
    CHECK(summary.compiled == 2);
    CHECK(summary.cpr == doctest::Approx(100.0 * 2 / 3).epsilon(1e-12));
    CHECK(summary.zrcp == doctest::Approx(100.0 / 3).epsilon(1e-12));
    CHECK(summary.hrcp == doctest::Approx(100.0 / 3).epsilon(1e-12));
    CHECK(summary.mean_vrs ==
          doctest::Approx(15.5 / 3).epsilon(1e-12));
  }
  SUBCASE("degenerate all-clean batch") {
    MetricsSummary summary = aggregate({zero, zero});
    CHECK(summary.cpr == 100.0);
    CHECK(summary.zrcp == 100.0);
    CHECK(summary.hrcp == 0.0);
    CHECK(summary.mean_vrs == 0.0);
  }
  SUBCASE("singleton failure") {
    MetricsSummary summary = aggregate({broken});
    CHECK(summary.cpr == 0.0);
    CHECK(summary.mean_vrs == 10.0);
  }
  SUBCASE("empty batch throws") {
    CHECK_THROWS_AS(aggregate({}), EmptyBatch);
  }
  SUBCASE("permutation invariance") {
    std::vector<ContractScore> scores = {zero, risky, broken, risky, zero};
    MetricsSummary base = aggregate(scores);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
      std::shuffle(scores.begin(), scores.end(), rng);
      CHECK(aggregate(scores) == base);
    }
  }
}

TEST_CASE("summary renderings") {
  MetricsSummary summary = aggregate(
      {ContractScore{true, 0.0, true, false, 0},
       ContractScore{false, 10.0, false, false, 0}});
  std::string table = summary.to_table();
  CHECK(table.find("ZRCP") != std::string::npos);
  CHECK(table.find("CPR") != std::string::npos);
  CHECK(table.find("50.00%") != std::string::npos);
  std::string json = summary.to_json();
  CHECK(json.find("\"cpr\": 50.0") != std::string::npos);
}
