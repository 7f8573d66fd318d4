#include "fsmscg/semver.hpp"

#include <cctype>

#include "soliditytext.hpp"

namespace fsmscg {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void skip_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }
  bool eat(char c) {
    if (!done() && peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }
};

// One dotted version pattern, wildcards allowed: "1", "0.8", "0.8.x",
// "*", "0.8.24". -1 marks a missing/wildcard component.
struct Pattern {
  int major = -1, minor = -1, patch = -1;
};

std::optional<int> read_component(Cursor& cur) {
  if (cur.done()) return std::nullopt;
  char c = cur.peek();
  if (c == '*' || c == 'x' || c == 'X') {
    ++cur.pos;
    return -1;
  }
  if (!is_digit(c)) return std::nullopt;
  long value = 0;
  while (!cur.done() && is_digit(cur.peek())) {
    value = value * 10 + (cur.peek() - '0');
    if (value > 1'000'000) return std::nullopt;
    ++cur.pos;
  }
  return static_cast<int>(value);
}

std::optional<Pattern> read_pattern(Cursor& cur) {
  Pattern p;
  auto major = read_component(cur);
  if (!major) return std::nullopt;
  p.major = *major;
  if (!cur.eat('.')) return p;
  auto minor = read_component(cur);
  if (!minor) return std::nullopt;
  p.minor = *minor;
  if (!cur.eat('.')) return p;
  auto patch = read_component(cur);
  if (!patch) return std::nullopt;
  p.patch = *patch;
  // ignore a prerelease/build suffix such as "-alpha" or "+commit"
  while (!cur.done() && (std::isalnum(static_cast<unsigned char>(cur.peek())) ||
                         cur.peek() == '-' || cur.peek() == '+' ||
                         cur.peek() == '.'))
    ++cur.pos;
  return p;
}

SemVer lower_of(const Pattern& p) {
  return {p.major < 0 ? 0 : p.major, p.minor < 0 ? 0 : p.minor,
          p.patch < 0 ? 0 : p.patch};
}

}  // namespace

std::string SemVer::to_string() const {
  return std::to_string(major) + "." + std::to_string(minor) + "." +
         std::to_string(patch);
}

std::optional<SemVer> SemVer::parse(std::string_view text) {
  Cursor cur{text};
  cur.skip_ws();
  auto p = read_pattern(cur);
  cur.skip_ws();
  if (!p || !cur.done()) return std::nullopt;
  if (p->major < 0 || p->minor < 0 || p->patch < 0) {
    // exact versions may omit trailing components but not wildcard them
    Pattern q = *p;
    if (q.major < 0) return std::nullopt;
    return SemVer{q.major, q.minor < 0 ? 0 : q.minor,
                  q.patch < 0 ? 0 : q.patch};
  }
  return SemVer{p->major, p->minor, p->patch};
}

VersionConstraint VersionConstraint::parse(std::string_view text) {
  VersionConstraint out;
  out.text_ = std::string(text);

  Cursor cur{text};
  std::vector<Comparator> conjunction;

  auto fail = [&]() -> void {
    throw ParseError("unparseable version constraint \"" + out.text_ + "\"",
                     cur.pos);
  };

  auto flush = [&]() {
    if (conjunction.empty()) fail();
    out.alternatives_.push_back(std::move(conjunction));
    conjunction.clear();
  };

  while (true) {
    cur.skip_ws();
    if (cur.done()) break;

    if (cur.peek() == '|') {
      ++cur.pos;
      if (!cur.eat('|')) fail();
      flush();
      continue;
    }

    using Op = Comparator::Op;
    if (cur.eat('^')) {
      cur.skip_ws();
      auto p = read_pattern(cur);
      if (!p) fail();
      SemVer lo = lower_of(*p);
      // upper bound bumps the leftmost nonzero (or wildcarded) component
      SemVer hi;
      if (lo.major > 0)
        hi = {lo.major + 1, 0, 0};
      else if (p->minor < 0)
        hi = {1, 0, 0};
      else if (lo.minor > 0)
        hi = {0, lo.minor + 1, 0};
      else if (p->patch < 0)
        hi = {0, 1, 0};
      else
        hi = {0, 0, lo.patch + 1};
      conjunction.push_back({Op::Ge, lo});
      conjunction.push_back({Op::Lt, hi});
    } else if (cur.eat('~')) {
      cur.skip_ws();
      auto p = read_pattern(cur);
      if (!p) fail();
      SemVer lo = lower_of(*p);
      SemVer hi = p->minor < 0 ? SemVer{lo.major + 1, 0, 0}
                               : SemVer{lo.major, lo.minor + 1, 0};
      conjunction.push_back({Op::Ge, lo});
      conjunction.push_back({Op::Lt, hi});
    } else if (cur.peek() == '>' || cur.peek() == '<' || cur.peek() == '=') {
      char c = cur.peek();
      ++cur.pos;
      bool eq = cur.eat('=');
      Op op = c == '=' ? Op::Eq
              : c == '>' ? (eq ? Op::Ge : Op::Gt)
                         : (eq ? Op::Le : Op::Lt);
      cur.skip_ws();
      auto p = read_pattern(cur);
      if (!p) fail();
      if (p->minor < 0 || p->patch < 0) {
        // wildcard after a comparator widens to the pattern's range
        SemVer lo = lower_of(*p);
        SemVer hi = p->minor < 0 ? SemVer{lo.major + 1, 0, 0}
                                 : SemVer{lo.major, lo.minor + 1, 0};
        switch (op) {
          case Op::Eq:
            conjunction.push_back({Op::Ge, lo});
            conjunction.push_back({Op::Lt, hi});
            break;
          case Op::Ge:
            conjunction.push_back({Op::Ge, lo});
            break;
          case Op::Gt:
            conjunction.push_back({Op::Ge, hi});
            break;
          case Op::Le:
            conjunction.push_back({Op::Lt, hi});
            break;
          case Op::Lt:
            conjunction.push_back({Op::Lt, lo});
            break;
        }
      } else {
        conjunction.push_back({op, lower_of(*p)});
      }
    } else if (is_digit(cur.peek()) || cur.peek() == '*' || cur.peek() == 'x' ||
               cur.peek() == 'X') {
      auto p = read_pattern(cur);
      if (!p) fail();
      if (p->major < 0) {
        // bare "*" matches everything
        conjunction.push_back({Op::Ge, {0, 0, 0}});
      } else if (p->minor < 0) {
        conjunction.push_back({Op::Ge, lower_of(*p)});
        conjunction.push_back({Op::Lt, {p->major + 1, 0, 0}});
      } else if (p->patch < 0) {
        conjunction.push_back({Op::Ge, lower_of(*p)});
        conjunction.push_back({Op::Lt, {p->major, p->minor + 1, 0}});
      } else {
        conjunction.push_back({Op::Eq, lower_of(*p)});
      }
    } else {
      fail();
    }
  }
  flush();
  return out;
}

bool VersionConstraint::satisfied_by(const SemVer& version) const {
  for (const std::vector<Comparator>& conjunction : alternatives_) {
    bool all = true;
    for (const Comparator& c : conjunction) {
      using Op = Comparator::Op;
      bool ok = false;
      switch (c.op) {
        case Op::Eq: ok = version == c.version; break;
        case Op::Gt: ok = version > c.version; break;
        case Op::Ge: ok = version >= c.version; break;
        case Op::Lt: ok = version < c.version; break;
        case Op::Le: ok = version <= c.version; break;
      }
      if (!ok) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

std::optional<std::string> find_solidity_pragma(std::string_view source) {
  using internal::SpanKind;
  auto is_ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };

  for (const internal::SourceSpan& span : internal::scan_spans(source)) {
    if (span.kind != SpanKind::Code) continue;
    std::string_view code = source.substr(span.begin, span.end - span.begin);
    std::size_t pos = 0;
    while ((pos = code.find("pragma", pos)) != std::string_view::npos) {
      bool word_start = pos == 0 || !is_ident(code[pos - 1]);
      std::size_t after = pos + 6;
      bool word_end = after >= code.size() || !is_ident(code[after]);
      if (!word_start || !word_end) {
        pos = after;
        continue;
      }
      std::size_t i = after;
      while (i < code.size() &&
             std::isspace(static_cast<unsigned char>(code[i])))
        ++i;
      if (code.compare(i, 8, "solidity") == 0) {
        i += 8;
        std::size_t semi = code.find(';', i);
        std::string_view expr = code.substr(
            i, semi == std::string_view::npos ? std::string_view::npos
                                              : semi - i);
        std::size_t b = 0, e = expr.size();
        while (b < e && std::isspace(static_cast<unsigned char>(expr[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(expr[e - 1])))
          --e;
        return std::string(expr.substr(b, e - b));
      }
      pos = after;
    }
  }
  return std::nullopt;
}

}  // namespace fsmscg
