#include "soliditytext.hpp"

#include <cctype>

namespace fsmscg::internal {

std::vector<SourceSpan> scan_spans(std::string_view source) {
  std::vector<SourceSpan> spans;
  const std::size_t n = source.size();
  std::size_t i = 0;
  std::size_t code_begin = 0;

  auto flush_code = [&](std::size_t upto) {
    if (upto > code_begin)
      spans.push_back({SpanKind::Code, code_begin, upto});
  };

  while (i < n) {
    char c = source[i];
    if (c == '/' && i + 1 < n && source[i + 1] == '/') {
      flush_code(i);
      std::size_t begin = i;
      i += 2;
      while (i < n && source[i] != '\n') ++i;
      spans.push_back({SpanKind::LineComment, begin, i});
      code_begin = i;
    } else if (c == '/' && i + 1 < n && source[i + 1] == '*') {
      flush_code(i);
      std::size_t begin = i;
      i += 2;
      while (i + 1 < n && !(source[i] == '*' && source[i + 1] == '/')) ++i;
      i = (i + 1 < n) ? i + 2 : n;  // unterminated comment runs to EOF
      spans.push_back({SpanKind::BlockComment, begin, i});
      code_begin = i;
    } else if (c == '"' || c == '\'') {
      flush_code(i);
      std::size_t begin = i;
      char quote = c;
      ++i;
      while (i < n) {
        if (source[i] == '\\' && i + 1 < n) {
          i += 2;
        } else if (source[i] == quote) {
          ++i;
          break;
        } else {
          ++i;
        }
      }
      spans.push_back({SpanKind::StringLiteral, begin, i});
      code_begin = i;
    } else {
      ++i;
    }
  }
  flush_code(n);
  return spans;
}

std::string strip_comments_and_normalize(std::string_view source) {
  std::string out;
  out.reserve(source.size());
  bool pending_space = false;
  for (const SourceSpan& span : scan_spans(source)) {
    if (span.kind == SpanKind::LineComment || span.kind == SpanKind::BlockComment) {
      pending_space = true;  // a comment separates tokens like whitespace
      continue;
    }
    for (std::size_t i = span.begin; i < span.end; ++i) {
      char c = source[i];
      if (span.kind == SpanKind::Code &&
          std::isspace(static_cast<unsigned char>(c))) {
        pending_space = true;
        continue;
      }
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> tokenize_code(std::string_view source) {
  auto is_ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
  };

  std::vector<std::string> tokens;
  for (const SourceSpan& span : scan_spans(source)) {
    if (span.kind == SpanKind::LineComment || span.kind == SpanKind::BlockComment)
      continue;
    if (span.kind == SpanKind::StringLiteral) {
      tokens.emplace_back("<str>");
      continue;
    }
    std::size_t i = span.begin;
    while (i < span.end) {
      char c = source[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (is_ident(c)) {
        std::size_t begin = i;
        while (i < span.end && is_ident(source[i])) ++i;
        tokens.emplace_back(source.substr(begin, i - begin));
      } else {
        tokens.emplace_back(1, c);
        ++i;
      }
    }
  }
  return tokens;
}

}  // namespace fsmscg::internal
