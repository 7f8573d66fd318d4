#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fsmscg/errors.hpp"
#include "fsmscg/toolchain.hpp"

namespace fsmscg {

class EmptyRequirement : public Error {
 public:
  using Error::Error;
};
class EmptyIssueList : public Error {
 public:
  using Error::Error;
};
class EmptyFindingList : public Error {
 public:
  using Error::Error;
};
class TemplateError : public Error {
 public:
  using Error::Error;
};

enum class PromptKind { R2F, F2C, CompileFeedback, SecurityFeedback };

std::string to_string(PromptKind kind);

// A template body uses {{name}} placeholders. Each kind references a fixed
// placeholder set: R2F uses {{fsm_schema}} and {{requirements}},
// CompileFeedback uses {{errors}}, SecurityFeedback uses {{findings}}, and
// F2C uses none.
struct PromptTemplate {
  PromptKind kind;
  std::string body;
};

struct Prompt {
  PromptKind kind;
  std::string text;
  // placeholder name -> the value that filled it
  std::map<std::string, std::string> provenance;
};

// Substitutes `values` into `body` in one pass: substituted values are
// never rescanned, so "{{" inside a value survives verbatim. Throws
// TemplateError on a placeholder with no value.
std::string render_template(std::string_view body,
                            const std::map<std::string, std::string>& values);

// Placeholder names referenced by `body`, in order of appearance.
std::vector<std::string> template_placeholders(std::string_view body);

struct TemplateSet {
  PromptTemplate r2f;
  PromptTemplate f2c;
  PromptTemplate compile_feedback;
  PromptTemplate security_feedback;

  static TemplateSet defaults();
  // Reads <dir>/{r2f,f2c,compile_feedback,security_feedback}.txt;
  // missing files keep their default. Throws TemplateError when a file
  // does not reference its kind's placeholders exactly once each.
  static TemplateSet load(const std::filesystem::path& dir);

  const PromptTemplate& for_kind(PromptKind kind) const;
};

struct PromptConfig {
  // Hard upper bound on rendered prompt size. Feedback lists are cut at
  // issue granularity with a "(truncated)" marker; oversized requirement
  // text is cut at the boundary with the same marker.
  std::size_t char_budget = 12000;
};

class PromptForge {
 public:
  explicit PromptForge(TemplateSet templates = TemplateSet::defaults(),
                       PromptConfig config = {});

  // Task description, output constraint, the canonical FSM schema, then
  // the requirements, in that order.
  Prompt build_r2f(std::string_view requirements) const;

  // Fixed text; relies on the FSM already being a turn in the session, so
  // the FSM is not embedded.
  Prompt build_f2c() const;

  Prompt build_compile_feedback(const std::vector<CompileIssue>& issues) const;

  // Findings are rendered worst-severity first.
  Prompt build_security_feedback(const std::vector<Finding>& findings) const;

  const TemplateSet& templates() const { return templates_; }
  const PromptConfig& config() const { return config_; }

 private:
  Prompt finalize(PromptKind kind,
                  std::map<std::string, std::string> values) const;

  TemplateSet templates_;
  PromptConfig config_;
};

// Text block for one compile issue / finding as embedded in feedback
// prompts; exposed for golden tests.
std::string describe_issue(const CompileIssue& issue, std::size_t index);
std::string describe_finding(const Finding& finding, std::size_t index);

}  // namespace fsmscg
