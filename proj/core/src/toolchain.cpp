#include "fsmscg/toolchain.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "subprocess.hpp"

namespace fsmscg {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string lowercased(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return std::string{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
}

// Fixture files wrap the recorded tool output with the tool version:
// {"version": "...", "output": {...}}.
json load_fixture(const std::filesystem::path& dir, const char* kind,
                  std::string_view source) {
  std::filesystem::path path =
      dir / kind / (source_content_hash(source) + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec))
    throw ToolNotFound("no recorded " + std::string(kind) + " fixture at " +
                       path.string());
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw AnalyzerParseError("corrupt fixture " + path.string() + ": " +
                             e.what());
  }
}

std::optional<SourceSpan> map_source_location(const json& entry) {
  auto it = entry.find("sourceLocation");
  if (it == entry.end() || !it->is_object()) return std::nullopt;
  SourceSpan span;
  span.file = it->value("file", "");
  span.start = it->value("start", -1L);
  span.end = it->value("end", -1L);
  return span;
}

CompileResult map_standard_json_output(const json& output,
                                       const std::string& version) {
  CompileResult result;
  result.compiler_version = version;

  if (auto errors = output.find("errors"); errors != output.end()) {
    for (const json& entry : *errors) {
      CompileIssue issue;
      std::string severity = entry.value("severity", "warning");
      issue.severity = severity == "error" ? IssueSeverity::Error
                                           : IssueSeverity::Warning;
      issue.message = entry.value("message", "");
      if (auto code = entry.find("errorCode");
          code != entry.end() && code->is_string())
        issue.error_code = code->get<std::string>();
      issue.location = map_source_location(entry);
      issue.formatted_message = entry.value("formattedMessage", "");
      result.issues.push_back(std::move(issue));
    }
  }
  result.success =
      std::none_of(result.issues.begin(), result.issues.end(),
                   [](const CompileIssue& issue) {
                     return issue.severity == IssueSeverity::Error;
                   });

  if (auto contracts = output.find("contracts"); contracts != output.end()) {
    bool any_bytecode = false;
    for (const auto& [file, by_name] : contracts->items())
      for (const auto& [name, desc] : by_name.items()) {
        (void)file;
        (void)name;
        if (desc.contains("evm") && desc["evm"].contains("bytecode") &&
            !desc["evm"]["bytecode"].value("object", "").empty())
          any_bytecode = true;
      }
    result.artifacts = any_bytecode;
  }
  return result;
}

AnalysisResult map_analyzer_output(const json& output,
                                   const std::string& version) {
  AnalysisResult result;
  result.analyzer_version = version;
  result.ran = true;

  const json* detectors = nullptr;
  if (auto results = output.find("results"); results != output.end())
    if (auto d = results->find("detectors"); d != results->end())
      detectors = &*d;
  if (detectors == nullptr) {
    // a clean run still carries the results object; anything else is not
    // analyzer output
    if (!output.contains("results"))
      throw AnalyzerParseError("analyzer output has no results object");
    return result;
  }

  for (const json& entry : *detectors) {
    Finding finding;
    finding.check_id = entry.value("check", "");
    if (finding.check_id.empty())
      throw AnalyzerParseError("detector entry without check id");

    std::string impact = entry.value("impact", "");
    auto severity = parse_severity(impact);
    if (!severity)
      throw AnalyzerParseError("unknown impact level \"" + impact + "\"");
    finding.severity = *severity;

    std::string confidence = entry.value("confidence", "");
    auto conf = parse_confidence(confidence);
    if (!conf)
      throw AnalyzerParseError("unknown confidence level \"" + confidence +
                               "\"");
    finding.confidence = *conf;

    finding.description = entry.value("description", "");

    if (auto elements = entry.find("elements");
        elements != entry.end() && elements->is_array()) {
      FindingLocation location;
      bool have_mapping = false;
      for (const json& element : *elements) {
        if (!have_mapping && element.contains("source_mapping")) {
          const json& mapping = element["source_mapping"];
          location.file = mapping.value("filename_relative",
                                        mapping.value("filename", ""));
          if (auto lines = mapping.find("lines");
              lines != mapping.end() && lines->is_array())
            for (const json& line : *lines)
              if (line.is_number_integer()) location.lines.push_back(line);
          have_mapping = true;
        }
        if (location.function_name.empty() &&
            element.value("type", "") == "function")
          location.function_name = element.value("name", "");
      }
      if (have_mapping || !location.function_name.empty())
        finding.location = std::move(location);
    }
    result.findings.push_back(std::move(finding));
  }
  return result;
}

}  // namespace

std::string to_string(IssueSeverity severity) {
  return severity == IssueSeverity::Error ? "error" : "warning";
}

std::string to_string(Severity severity) {
  switch (severity) {
    case Severity::High: return "high";
    case Severity::Medium: return "medium";
    case Severity::Low: return "low";
    case Severity::Informational: return "informational";
    case Severity::Optimization: return "optimization";
  }
  return "informational";
}

std::string to_string(Confidence confidence) {
  switch (confidence) {
    case Confidence::High: return "high";
    case Confidence::Medium: return "medium";
    case Confidence::Low: return "low";
  }
  return "low";
}

std::optional<Severity> parse_severity(std::string_view text) {
  std::string t = lowercased(text);
  if (t == "high") return Severity::High;
  if (t == "medium") return Severity::Medium;
  if (t == "low") return Severity::Low;
  if (t == "informational") return Severity::Informational;
  if (t == "optimization") return Severity::Optimization;
  return std::nullopt;
}

std::optional<Confidence> parse_confidence(std::string_view text) {
  std::string t = lowercased(text);
  if (t == "high") return Confidence::High;
  if (t == "medium") return Confidence::Medium;
  if (t == "low") return Confidence::Low;
  return std::nullopt;
}

std::string source_content_hash(std::string_view source) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : source) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string(buf);
}

std::string compile_result_to_json(const CompileResult& result) {
  ordered_json doc;
  doc["success"] = result.success;
  doc["compiler_version"] = result.compiler_version;
  doc["artifacts"] =
      result.artifacts ? ordered_json(*result.artifacts) : ordered_json(nullptr);
  ordered_json issues = ordered_json::array();
  for (const CompileIssue& issue : result.issues) {
    ordered_json ij;
    ij["severity"] = to_string(issue.severity);
    ij["message"] = issue.message;
    ij["code"] = issue.error_code ? ordered_json(*issue.error_code)
                                  : ordered_json(nullptr);
    if (issue.location) {
      ij["location"] = {{"file", issue.location->file},
                        {"start", issue.location->start},
                        {"end", issue.location->end}};
    } else {
      ij["location"] = nullptr;
    }
    ij["formatted"] = issue.formatted_message;
    issues.push_back(std::move(ij));
  }
  doc["issues"] = std::move(issues);
  return doc.dump(2) + "\n";
}

CompileResult compile_result_from_json(std::string_view text) {
  json doc = json::parse(text);
  CompileResult result;
  result.success = doc.at("success").get<bool>();
  result.compiler_version = doc.value("compiler_version", "");
  if (doc.contains("artifacts") && !doc["artifacts"].is_null())
    result.artifacts = doc["artifacts"].get<bool>();
  for (const json& ij : doc.value("issues", json::array())) {
    CompileIssue issue;
    issue.severity = ij.value("severity", "warning") == "error"
                         ? IssueSeverity::Error
                         : IssueSeverity::Warning;
    issue.message = ij.value("message", "");
    if (ij.contains("code") && !ij["code"].is_null())
      issue.error_code = ij["code"].get<std::string>();
    if (ij.contains("location") && !ij["location"].is_null()) {
      SourceSpan span;
      span.file = ij["location"].value("file", "");
      span.start = ij["location"].value("start", -1L);
      span.end = ij["location"].value("end", -1L);
      issue.location = span;
    }
    issue.formatted_message = ij.value("formatted", "");
    result.issues.push_back(std::move(issue));
  }
  return result;
}

std::string analysis_result_to_json(const AnalysisResult& result) {
  ordered_json doc;
  doc["ran"] = result.ran;
  doc["analyzer_version"] = result.analyzer_version;
  ordered_json findings = ordered_json::array();
  for (const Finding& finding : result.findings) {
    ordered_json fj;
    fj["check"] = finding.check_id;
    fj["severity"] = to_string(finding.severity);
    fj["confidence"] = to_string(finding.confidence);
    fj["description"] = finding.description;
    if (finding.location) {
      fj["location"] = {{"file", finding.location->file},
                        {"lines", finding.location->lines},
                        {"function", finding.location->function_name}};
    } else {
      fj["location"] = nullptr;
    }
    findings.push_back(std::move(fj));
  }
  doc["findings"] = std::move(findings);
  return doc.dump(2) + "\n";
}

AnalysisResult analysis_result_from_json(std::string_view text) {
  json doc = json::parse(text);
  AnalysisResult result;
  result.ran = doc.at("ran").get<bool>();
  result.analyzer_version = doc.value("analyzer_version", "");
  for (const json& fj : doc.value("findings", json::array())) {
    Finding finding;
    finding.check_id = fj.value("check", "");
    auto severity = parse_severity(fj.value("severity", ""));
    auto confidence = parse_confidence(fj.value("confidence", ""));
    if (!severity || !confidence)
      throw AnalyzerParseError("bad severity/confidence in stored analysis");
    finding.severity = *severity;
    finding.confidence = *confidence;
    finding.description = fj.value("description", "");
    if (fj.contains("location") && !fj["location"].is_null()) {
      FindingLocation location;
      location.file = fj["location"].value("file", "");
      for (const json& line : fj["location"].value("lines", json::array()))
        location.lines.push_back(line);
      location.function_name = fj["location"].value("function", "");
      finding.location = std::move(location);
    }
    result.findings.push_back(std::move(finding));
  }
  return result;
}

Toolchain::Toolchain(ToolchainConfig config) : config_(std::move(config)) {}

std::string Toolchain::resolve_solc() const {
  if (config_.solc_path) return *config_.solc_path;
  if (const char* env = std::getenv("FSMSCG_SOLC_PATH")) return env;
  return "solc";
}

std::string Toolchain::resolve_slither() const {
  if (config_.slither_path) return *config_.slither_path;
  if (const char* env = std::getenv("FSMSCG_SLITHER_PATH")) return env;
  return "slither";
}

std::vector<SemVer> Toolchain::available_versions() const {
  if (fixture_mode()) {
    auto v = SemVer::parse(config_.default_solc_version);
    if (!v)
      throw ConfigError("bad default_solc_version \"" +
                        config_.default_solc_version + "\"");
    return {*v};
  }
  if (!cached_solc_version_) {
    std::string solc = resolve_solc();
    if (!internal::executable_exists(solc))
      throw ToolNotFound("compiler binary \"" + solc + "\" not found");
    auto res = internal::run_process({solc, "--version"}, "",
                                     std::chrono::seconds(15));
    // version line looks like "Version: 0.8.24+commit...."
    std::size_t pos = res.out.find("Version:");
    std::string tail = pos == std::string::npos ? res.out
                                                : res.out.substr(pos + 8);
    std::size_t digit = tail.find_first_of("0123456789");
    if (digit == std::string::npos)
      throw ToolCrashed("cannot parse compiler version from: " + res.out);
    std::size_t end = tail.find_first_of("+- \n\r\t", digit);
    auto v = SemVer::parse(tail.substr(digit, end - digit));
    if (!v) throw ToolCrashed("cannot parse compiler version from: " + res.out);
    cached_solc_version_ = *v;
  }
  return {*cached_solc_version_};
}

SemVer Toolchain::select_compiler_version(
    std::string_view source, const std::vector<SemVer>& available) const {
  if (available.empty())
    throw ContractViolation("select_compiler_version: empty available list");

  auto pragma = find_solidity_pragma(source);
  if (!pragma) {
    auto fallback = SemVer::parse(config_.default_solc_version);
    if (!fallback)
      throw ConfigError("bad default_solc_version \"" +
                        config_.default_solc_version + "\"");
    return *fallback;
  }

  VersionConstraint constraint = VersionConstraint::parse(*pragma);
  std::vector<SemVer> sorted = available;
  std::sort(sorted.begin(), sorted.end());
  for (const SemVer& candidate : sorted)
    if (constraint.satisfied_by(candidate)) return candidate;
  throw NoSatisfyingVersion("no available compiler satisfies \"" + *pragma +
                            "\"");
}

CompileResult Toolchain::compile_contract(std::string_view source,
                                          const SemVer& version) const {
  if (fixture_mode()) {
    json fixture = load_fixture(*config_.fixture_dir, "compile", source);
    return map_standard_json_output(fixture.at("output"),
                                    fixture.value("version",
                                                  version.to_string()));
  }

  std::string solc = resolve_solc();
  if (!internal::executable_exists(solc))
    throw ToolNotFound("compiler binary \"" + solc + "\" not found");

  json input;
  input["language"] = "Solidity";
  input["sources"]["contract.sol"]["content"] = std::string(source);
  input["settings"]["outputSelection"]["*"]["*"] =
      json::array({"evm.bytecode"});

  auto res = internal::run_process(
      {solc, "--standard-json"}, input.dump(),
      std::chrono::seconds(config_.compile_timeout_s));
  if (res.timed_out) throw ToolTimeout("compiler timed out");

  json output;
  try {
    output = json::parse(res.out);
  } catch (const json::parse_error&) {
    throw ToolCrashed("compiler produced no parseable output (exit " +
                      std::to_string(res.exit_code) + "): " + res.err);
  }
  return map_standard_json_output(output, version.to_string());
}

AnalysisResult Toolchain::analyze_contract(std::string_view source,
                                           const SemVer& version) const {
  (void)version;
  if (fixture_mode()) {
    json fixture = load_fixture(*config_.fixture_dir, "analysis", source);
    return map_analyzer_output(fixture.at("output"),
                               fixture.value("version", ""));
  }

  std::string slither = resolve_slither();
  if (!internal::executable_exists(slither))
    throw ToolNotFound("analyzer binary \"" + slither + "\" not found");

  // slither wants a file on disk; give each invocation its own directory
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() /
                 ("fsmscg-analyze-" + source_content_hash(source) + "-" +
                  std::to_string(::getpid()));
  fs::create_directories(dir);
  fs::path file = dir / "contract.sol";
  {
    std::ofstream out(file, std::ios::binary);
    out << source;
  }

  auto res = internal::run_process(
      {slither, file.string(), "--json", "-"}, "",
      std::chrono::seconds(config_.analyze_timeout_s));
  std::error_code ec;
  fs::remove_all(dir, ec);
  if (res.timed_out) throw ToolTimeout("analyzer timed out");

  json output;
  try {
    output = json::parse(res.out);
  } catch (const json::parse_error&) {
    throw AnalyzerParseError("analyzer produced no parseable output (exit " +
                             std::to_string(res.exit_code) + "): " + res.err);
  }

  if (!cached_slither_version_) {
    auto vres = internal::run_process({slither, "--version"}, "",
                                      std::chrono::seconds(15));
    std::string v = vres.out;
    while (!v.empty() && (v.back() == '\n' || v.back() == '\r')) v.pop_back();
    cached_slither_version_ = v;
  }
  return map_analyzer_output(output, *cached_slither_version_);
}

}  // namespace fsmscg
