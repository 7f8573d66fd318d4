#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsmscg/errors.hpp"

namespace fsmscg {

struct SemVer {
  int major = 0;
  int minor = 0;
  int patch = 0;

  auto operator<=>(const SemVer&) const = default;
  std::string to_string() const;

  // "0.8.24" (missing components default to 0). Nullopt on junk.
  static std::optional<SemVer> parse(std::string_view text);
};

// npm-style version range as used by `pragma solidity` directives:
// comparators (=, >, >=, <, <=), caret, tilde, x/* wildcards,
// space-separated conjunction, and `||` disjunction.
class VersionConstraint {
 public:
  // Throws ParseError (offset within `text`) on an unparseable range.
  static VersionConstraint parse(std::string_view text);

  bool satisfied_by(const SemVer& version) const;
  const std::string& text() const { return text_; }

 private:
  struct Comparator {
    enum class Op { Eq, Gt, Ge, Lt, Le } op;
    SemVer version;
  };
  // Disjunction of conjunctions.
  std::vector<std::vector<Comparator>> alternatives_;
  std::string text_;
};

// The version-range expression of the first `pragma solidity` directive in
// `source`, with comments and string literals skipped. Nullopt when the
// source has no such pragma.
std::optional<std::string> find_solidity_pragma(std::string_view source);

}  // namespace fsmscg
