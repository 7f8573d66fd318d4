#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsmscg/errors.hpp"

namespace fsmscg {

// SmartFsm is the five-section contract abstraction: basic information,
// states, variables, functions, and events, plus the transition list.
// All types here are immutable values after construction and compare
// field-for-field.

struct BasicInfo {
  std::string name;
  std::string description;
  bool operator==(const BasicInfo&) const = default;
};

struct TypedName {
  std::string name;
  std::string type_name;  // opaque type label, not interpreted
  bool operator==(const TypedName&) const = default;
};

struct VariableDecl {
  std::string name;
  std::string type_name;
  std::string description;
  bool operator==(const VariableDecl&) const = default;
};

struct FunctionDecl {
  std::string name;
  std::string description;
  std::vector<TypedName> inputs;
  bool operator==(const FunctionDecl&) const = default;
};

struct EventDecl {
  std::string name;
  std::vector<TypedName> parameters;
  std::string description;
  bool operator==(const EventDecl&) const = default;
};

struct Transition {
  std::string source;
  std::string trigger;
  std::string target;
  std::optional<std::string> condition;           // free-text guard
  std::optional<std::vector<std::string>> emits;  // event names
  bool operator==(const Transition&) const = default;
};

struct SmartFsm {
  BasicInfo basic_info;
  std::vector<std::string> states;
  std::string initial_state;
  std::vector<VariableDecl> variables;
  std::vector<FunctionDecl> functions;
  std::vector<EventDecl> events;
  std::vector<Transition> transitions;
  bool operator==(const SmartFsm&) const = default;
};

// The formal sets the validator works on. S preserves declaration order;
// X and T keep first-occurrence order with duplicates collapsed; triples
// preserve declaration order including duplicates.
struct TransitionTriple {
  std::string source;
  std::string trigger;
  std::string target;
  bool operator==(const TransitionTriple&) const = default;
};

struct FsmSets {
  std::vector<std::string> states;           // S
  std::vector<std::string> triggers;         // X
  std::vector<std::string> targets;          // T
  std::vector<TransitionTriple> transitions; // delta

  bool has_state(std::string_view name) const;
};

// Parses the canonical FSM document (UTF-8 JSON). Unknown keys are
// skipped; when `warnings` is non-null one entry per skipped key is
// appended. Throws ParseError on malformed syntax (0-based byte offset)
// and SchemaError on missing sections, wrong value types, empty or
// duplicate names.
SmartFsm parse_fsm(std::string_view document,
                   std::vector<std::string>* warnings = nullptr);

// Renders the canonical serialized form: fixed key order, 2-space
// indentation, trailing newline. Deterministic; serialize-parse-serialize
// is byte-identical. Throws ContractViolation if `fsm` breaks a type
// invariant.
std::string serialize_fsm(const SmartFsm& fsm);

// Pure projection of the formal sets from a parsed FSM.
FsmSets extract_sets(const SmartFsm& fsm);

// Returns a description of the first violated type invariant, or nullopt
// when `fsm` is well-formed.
std::optional<std::string> invariant_breach(const SmartFsm& fsm);

// The canonical document schema as shown to models, byte-stable. Embedded
// verbatim into FSM-generation prompts so prompts, parser, and fixtures
// agree on one format.
const std::string& canonical_fsm_schema();

}  // namespace fsmscg
