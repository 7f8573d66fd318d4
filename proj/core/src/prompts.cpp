#include "fsmscg/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "fsmscg/fsm.hpp"

namespace fsmscg {

namespace {

constexpr std::string_view kTruncatedMarker = "(truncated)";

constexpr const char* kDefaultR2f =
    "You are a smart contract designer. Read the user requirements below and "
    "model the contract as a finite state machine covering its states, "
    "variables, functions, events, and state transitions.\n"
    "\n"
    "Return only the FSM content as a single JSON object, without any other "
    "information.\n"
    "\n"
    "The FSM must follow this JSON format exactly:\n"
    "{{fsm_schema}}\n"
    "\n"
    "User requirements:\n"
    "{{requirements}}\n";

constexpr const char* kDefaultF2c =
    "Implement the smart contract in Solidity for the FSM you produced "
    "earlier in this conversation. Cover every state, variable, function, "
    "event, and transition the FSM defines, and keep the state transfer "
    "logic faithful to it.\n"
    "\n"
    "Return the smart contract code, without any other information.\n";

constexpr const char* kDefaultCompileFeedback =
    "The smart contract you produced does not compile. The compiler "
    "reported:\n"
    "\n"
    "{{errors}}\n"
    "\n"
    "Fix these errors and return the complete corrected smart contract, "
    "without any other information.\n";

constexpr const char* kDefaultSecurityFeedback =
    "A security analysis of the smart contract you produced detected the "
    "following vulnerabilities:\n"
    "\n"
    "{{findings}}\n"
    "\n"
    "Fix these vulnerabilities and return the complete corrected smart "
    "contract, without any other information.\n";

const std::map<PromptKind, std::vector<std::string>>& required_placeholders() {
  static const std::map<PromptKind, std::vector<std::string>> table = {
      {PromptKind::R2F, {"fsm_schema", "requirements"}},
      {PromptKind::F2C, {}},
      {PromptKind::CompileFeedback, {"errors"}},
      {PromptKind::SecurityFeedback, {"findings"}},
  };
  return table;
}

void validate_template(const PromptTemplate& tpl) {
  std::vector<std::string> markers = template_placeholders(tpl.body);
  const std::vector<std::string>& required =
      required_placeholders().at(tpl.kind);
  for (const std::string& name : required) {
    auto count = std::count(markers.begin(), markers.end(), name);
    if (count != 1)
      throw TemplateError("template for " + to_string(tpl.kind) +
                          " must reference {{" + name + "}} exactly once");
  }
  for (const std::string& name : markers)
    if (std::find(required.begin(), required.end(), name) == required.end())
      throw TemplateError("template for " + to_string(tpl.kind) +
                          " references unknown placeholder {{" + name + "}}");
}

int severity_rank(Severity severity) {
  switch (severity) {
    case Severity::High: return 0;
    case Severity::Medium: return 1;
    case Severity::Low: return 2;
    case Severity::Informational: return 3;
    case Severity::Optimization: return 4;
  }
  return 5;
}

// Joins as many whole blocks as fit within `budget` characters of list
// text, appending the marker when anything was dropped.
std::string join_within(const std::vector<std::string>& blocks,
                        std::size_t budget) {
  std::string joined;
  std::size_t kept = 0;
  for (const std::string& block : blocks) {
    std::size_t extra = (joined.empty() ? 0 : 1) + block.size();
    std::size_t reserve_marker =
        kept + 1 < blocks.size() ? kTruncatedMarker.size() + 1 : 0;
    if (joined.size() + extra + reserve_marker > budget && kept > 0) break;
    if (joined.size() + extra > budget) break;
    if (!joined.empty()) joined.push_back('\n');
    joined += block;
    ++kept;
  }
  if (kept < blocks.size()) {
    if (!joined.empty()) joined.push_back('\n');
    joined += kTruncatedMarker;
  }
  return joined;
}

}  // namespace

std::string to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::R2F: return "r2f";
    case PromptKind::F2C: return "f2c";
    case PromptKind::CompileFeedback: return "compile_feedback";
    case PromptKind::SecurityFeedback: return "security_feedback";
  }
  return "unknown";
}

std::vector<std::string> template_placeholders(std::string_view body) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string_view::npos) {
    std::size_t end = body.find("}}", pos + 2);
    if (end == std::string_view::npos) break;
    out.emplace_back(body.substr(pos + 2, end - pos - 2));
    pos = end + 2;
  }
  return out;
}

std::string render_template(std::string_view body,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(body.size());
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t open = body.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(body.substr(pos));
      break;
    }
    std::size_t close = body.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(body.substr(pos));
      break;
    }
    out.append(body.substr(pos, open - pos));
    std::string name(body.substr(open + 2, close - open - 2));
    auto it = values.find(name);
    if (it == values.end())
      throw TemplateError("no value for placeholder {{" + name + "}}");
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

TemplateSet TemplateSet::defaults() {
  TemplateSet set{{PromptKind::R2F, kDefaultR2f},
                  {PromptKind::F2C, kDefaultF2c},
                  {PromptKind::CompileFeedback, kDefaultCompileFeedback},
                  {PromptKind::SecurityFeedback, kDefaultSecurityFeedback}};
  validate_template(set.r2f);
  validate_template(set.f2c);
  validate_template(set.compile_feedback);
  validate_template(set.security_feedback);
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet set = defaults();
  auto maybe_read = [&](const char* file, PromptTemplate& slot) {
    std::filesystem::path path = dir / file;
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TemplateError("cannot read template " + path.string());
    slot.body = std::string(std::istreambuf_iterator<char>(in),
                            std::istreambuf_iterator<char>());
    validate_template(slot);
  };
  maybe_read("r2f.txt", set.r2f);
  maybe_read("f2c.txt", set.f2c);
  maybe_read("compile_feedback.txt", set.compile_feedback);
  maybe_read("security_feedback.txt", set.security_feedback);
  return set;
}

const PromptTemplate& TemplateSet::for_kind(PromptKind kind) const {
  switch (kind) {
    case PromptKind::R2F: return r2f;
    case PromptKind::F2C: return f2c;
    case PromptKind::CompileFeedback: return compile_feedback;
    case PromptKind::SecurityFeedback: return security_feedback;
  }
  return r2f;
}

std::string describe_issue(const CompileIssue& issue, std::size_t index) {
  std::ostringstream out;
  out << index << ". " << to_string(issue.severity) << ": " << issue.message;
  if (issue.error_code) out << "\n   code: " << *issue.error_code;
  if (issue.location)
    out << "\n   location: " << issue.location->file << " bytes "
        << issue.location->start << ".." << issue.location->end;
  if (!issue.formatted_message.empty() &&
      issue.formatted_message != issue.message) {
    // indent the compiler's own rendering under the entry
    out << "\n   ";
    for (char c : issue.formatted_message) {
      if (c == '\n')
        out << "\n   ";
      else
        out << c;
    }
  }
  return out.str();
}

std::string describe_finding(const Finding& finding, std::size_t index) {
  std::ostringstream out;
  out << index << ". " << finding.check_id
      << " (severity: " << to_string(finding.severity)
      << ", confidence: " << to_string(finding.confidence) << ")";
  if (finding.location) {
    out << "\n   location: " << finding.location->file;
    if (!finding.location->lines.empty()) {
      out << " lines ";
      for (std::size_t i = 0; i < finding.location->lines.size(); ++i) {
        if (i > 0) out << ",";
        out << finding.location->lines[i];
      }
    }
    if (!finding.location->function_name.empty())
      out << ", function " << finding.location->function_name;
  }
  if (!finding.description.empty()) out << "\n   reason: " << finding.description;
  return out.str();
}

PromptForge::PromptForge(TemplateSet templates, PromptConfig config)
    : templates_(std::move(templates)), config_(config) {}

Prompt PromptForge::finalize(PromptKind kind,
                             std::map<std::string, std::string> values) const {
  const PromptTemplate& tpl = templates_.for_kind(kind);
  std::string text = render_template(tpl.body, values);
  if (text.size() > config_.char_budget)
    throw ConfigError("prompt exceeds char budget even after truncation; "
                      "budget " +
                      std::to_string(config_.char_budget) +
                      " is too small for the template");
  return Prompt{kind, std::move(text), std::move(values)};
}

Prompt PromptForge::build_r2f(std::string_view requirements) const {
  std::string_view trimmed = requirements;
  while (!trimmed.empty() &&
         std::isspace(static_cast<unsigned char>(trimmed.front())))
    trimmed.remove_prefix(1);
  while (!trimmed.empty() &&
         std::isspace(static_cast<unsigned char>(trimmed.back())))
    trimmed.remove_suffix(1);
  if (trimmed.empty())
    throw EmptyRequirement("requirements are empty after trimming");

  const std::string& body = templates_.r2f.body;
  std::size_t fixed = body.size();
  for (std::string_view marker : {"{{fsm_schema}}", "{{requirements}}"})
    fixed -= marker.size();
  fixed += canonical_fsm_schema().size();

  std::string req(requirements);
  if (fixed + req.size() > config_.char_budget) {
    std::size_t room = config_.char_budget > fixed + kTruncatedMarker.size() + 1
                           ? config_.char_budget - fixed -
                                 kTruncatedMarker.size() - 1
                           : 0;
    req = req.substr(0, room) + "\n" + std::string(kTruncatedMarker);
  }

  return finalize(PromptKind::R2F,
                  {{"fsm_schema", canonical_fsm_schema()},
                   {"requirements", std::move(req)}});
}

Prompt PromptForge::build_f2c() const {
  return finalize(PromptKind::F2C, {});
}

Prompt PromptForge::build_compile_feedback(
    const std::vector<CompileIssue>& issues) const {
  if (issues.empty()) throw EmptyIssueList("no compile issues to report");

  std::vector<std::string> blocks;
  blocks.reserve(issues.size());
  for (std::size_t i = 0; i < issues.size(); ++i)
    blocks.push_back(describe_issue(issues[i], i + 1));

  std::size_t fixed = templates_.compile_feedback.body.size() -
                      std::string_view("{{errors}}").size();
  std::size_t budget =
      config_.char_budget > fixed ? config_.char_budget - fixed : 0;
  return finalize(PromptKind::CompileFeedback,
                  {{"errors", join_within(blocks, budget)}});
}

Prompt PromptForge::build_security_feedback(
    const std::vector<Finding>& findings) const {
  if (findings.empty()) throw EmptyFindingList("no findings to report");

  std::vector<Finding> ordered(findings.begin(), findings.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Finding& a, const Finding& b) {
                     return severity_rank(a.severity) < severity_rank(b.severity);
                   });

  std::vector<std::string> blocks;
  blocks.reserve(ordered.size());
  for (std::size_t i = 0; i < ordered.size(); ++i)
    blocks.push_back(describe_finding(ordered[i], i + 1));

  std::size_t fixed = templates_.security_feedback.body.size() -
                      std::string_view("{{findings}}").size();
  std::size_t budget =
      config_.char_budget > fixed ? config_.char_budget - fixed : 0;
  return finalize(PromptKind::SecurityFeedback,
                  {{"findings", join_within(blocks, budget)}});
}

}  // namespace fsmscg
