#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fsmscg {

// Root of all library errors. Module-specific errors that need extra
// payload (e.g. the last CheckReport) live in their module headers.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed document syntax. `offset` is the 0-based byte offset of the
// first unusable byte.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Structurally valid document that violates the canonical schema
// (missing section, duplicate name, wrong value type). `subject` names
// the offending key path or duplicate name.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::string subject)
      : Error(what), subject_(std::move(subject)) {}
  const std::string& subject() const { return subject_; }

 private:
  std::string subject_;
};

// Caller handed a value that breaks a documented precondition or type
// invariant. Always a bug on the calling side, never input-dependent.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsmscg
