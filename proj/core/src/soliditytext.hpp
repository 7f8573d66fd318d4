#pragma once

// Internal single-pass scanner that segments Solidity-ish source into
// code, comment, and string-literal spans. Shared by pragma extraction,
// corpus normalization, and annotation/function pairing, which all need
// to ignore the same things.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fsmscg::internal {

enum class SpanKind { Code, LineComment, BlockComment, StringLiteral };

struct SourceSpan {
  SpanKind kind;
  std::size_t begin;  // byte offsets into the scanned text
  std::size_t end;
};

// Spans are contiguous and cover the whole input. Line-comment spans
// include the `//` marker but not the newline; block-comment spans include
// both delimiters; string spans include the quotes.
std::vector<SourceSpan> scan_spans(std::string_view source);

// Source with all comments removed and every whitespace run collapsed to a
// single space; used for content fingerprints.
std::string strip_comments_and_normalize(std::string_view source);

// Identifier/number/operator tokens of the comment-stripped source.
// String literals collapse to the placeholder token "<str>".
std::vector<std::string> tokenize_code(std::string_view source);

}  // namespace fsmscg::internal
