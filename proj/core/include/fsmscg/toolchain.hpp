#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsmscg/errors.hpp"
#include "fsmscg/semver.hpp"

namespace fsmscg {

class ToolNotFound : public Error {
 public:
  using Error::Error;
};
class ToolTimeout : public Error {
 public:
  using Error::Error;
};
// Tool exited abnormally without parseable output.
class ToolCrashed : public Error {
 public:
  using Error::Error;
};
class AnalyzerParseError : public Error {
 public:
  using Error::Error;
};
class NoSatisfyingVersion : public Error {
 public:
  using Error::Error;
};

enum class IssueSeverity { Error, Warning };

enum class Severity { High, Medium, Low, Informational, Optimization };
enum class Confidence { High, Medium, Low };

std::string to_string(IssueSeverity severity);
std::string to_string(Severity severity);
std::string to_string(Confidence confidence);
// Case-insensitive; nullopt on anything outside the enumeration.
std::optional<Severity> parse_severity(std::string_view text);
std::optional<Confidence> parse_confidence(std::string_view text);

struct SourceSpan {
  std::string file;
  long start = -1;
  long end = -1;
  bool operator==(const SourceSpan&) const = default;
};

struct CompileIssue {
  IssueSeverity severity = IssueSeverity::Error;
  std::string message;
  std::optional<std::string> error_code;
  std::optional<SourceSpan> location;
  std::string formatted_message;
  bool operator==(const CompileIssue&) const = default;
};

struct CompileResult {
  bool success = false;  // true iff no error-severity issue
  std::vector<CompileIssue> issues;
  std::string compiler_version;
  std::optional<bool> artifacts;  // bytecode was produced
  bool operator==(const CompileResult&) const = default;
};

struct FindingLocation {
  std::string file;
  std::vector<int> lines;
  std::string function_name;
  bool operator==(const FindingLocation&) const = default;
};

struct Finding {
  std::string check_id;  // e.g. "locked-ether"
  Severity severity = Severity::Informational;
  Confidence confidence = Confidence::Low;
  std::string description;
  std::optional<FindingLocation> location;
  bool operator==(const Finding&) const = default;
};

struct AnalysisResult {
  std::vector<Finding> findings;
  std::string analyzer_version;
  // False only when the analyzer could not be run at all; an empty
  // findings list with ran=true is a genuine clean result.
  bool ran = false;
  bool operator==(const AnalysisResult&) const = default;
};

// JSON (de)serialization used by run artifacts and fixture tooling.
std::string compile_result_to_json(const CompileResult& result);
CompileResult compile_result_from_json(std::string_view text);
std::string analysis_result_to_json(const AnalysisResult& result);
AnalysisResult analysis_result_from_json(std::string_view text);

struct ToolchainConfig {
  // Binary discovery order: explicit path here, then the FSMSCG_SOLC_PATH /
  // FSMSCG_SLITHER_PATH environment variables, then PATH lookup.
  std::optional<std::string> solc_path;
  std::optional<std::string> slither_path;
  std::string default_solc_version = "0.8.24";
  // When set, compile/analyze replay recorded outputs keyed by source
  // content hash instead of invoking any binary.
  std::optional<std::filesystem::path> fixture_dir;
  int compile_timeout_s = 60;
  int analyze_timeout_s = 120;
};

// Hash used to key fixture files: FNV-1a 64 over the raw source bytes,
// 16 lowercase hex digits.
std::string source_content_hash(std::string_view source);

class Toolchain {
 public:
  explicit Toolchain(ToolchainConfig config = {});

  const ToolchainConfig& config() const { return config_; }
  bool fixture_mode() const { return config_.fixture_dir.has_value(); }

  // Versions the caller may pass to compile_contract. Fixture mode offers
  // the configured default; live mode offers the discovered binary's
  // version.
  std::vector<SemVer> available_versions() const;

  // Lowest available version satisfying the source's first
  // `pragma solidity` range; the configured default when there is no
  // pragma. Throws NoSatisfyingVersion when nothing matches.
  SemVer select_compiler_version(std::string_view source,
                                 const std::vector<SemVer>& available) const;

  // Standard-JSON compiler invocation (or fixture replay). Never throws
  // for bad source; that is a failed CompileResult.
  CompileResult compile_contract(std::string_view source,
                                 const SemVer& version) const;

  // Security analyzer invocation (or fixture replay). A thrown error
  // means "did not run"; callers must not treat it as a clean pass.
  AnalysisResult analyze_contract(std::string_view source,
                                  const SemVer& version) const;

 private:
  std::string resolve_solc() const;
  std::string resolve_slither() const;

  ToolchainConfig config_;
  mutable std::optional<SemVer> cached_solc_version_;
  mutable std::optional<std::string> cached_slither_version_;
};

}  // namespace fsmscg
