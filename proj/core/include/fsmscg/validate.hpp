#pragma once

#include <string>
#include <vector>

#include "fsmscg/fsm.hpp"

namespace fsmscg {

enum class ViolationCode {
  InitialStateUndefined,
  TargetUndefined,
  TriggerUndeclared,
  UnreachableState,
  SelfLoop,
  NoCycle,
  DuplicateTransition,
};

std::string to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  // The offending state/trigger name, or "(s, x, t)" for per-transition
  // codes. Empty for the graph-wide NoCycle verdict.
  std::string subject;
  std::string message;
  bool operator==(const Violation&) const = default;
};

// The cycle requirement has no escape hatch in its source formulation, so
// the default treats NoCycle as an error; `Warn` keeps the finding without
// failing the report and `Off` suppresses it. Single-state machines are
// always exempt.
enum class CycleRule { Error, Warn, Off };

// Which declaration sections a transition trigger may resolve against.
enum class TriggerNamespace { Functions, Events, Both };

struct ValidatorConfig {
  CycleRule cycle_rule = CycleRule::Error;
  TriggerNamespace trigger_namespace = TriggerNamespace::Both;
};

struct CheckReport {
  std::vector<Violation> format_violations;
  std::vector<Violation> graph_violations;
  bool passed = false;

  bool has(ViolationCode code) const;
  // Stable-keyed JSON rendering consumed by the CLI `check-fsm` command.
  std::string to_json(const ValidatorConfig& config = {}) const;
};

// True when `code` fails the report under `config` (NoCycle demotes to a
// warning under CycleRule::Warn; everything else is always an error).
bool is_error_class(ViolationCode code, const ValidatorConfig& config);

// Structural rules: the initial state and every transition target must be
// declared states, triggers must resolve to a declared function or event,
// and no (source, trigger, target) triple may repeat. `sets` must be
// extract_sets(fsm). Violations come out in declaration order.
std::vector<Violation> format_check(const SmartFsm& fsm, const FsmSets& sets,
                                    const ValidatorConfig& config = {});

// Graph rules over nodes S and the edges of well-formed transitions (both
// endpoints declared): every state reachable from the initial state, no
// self-loop transitions, and at least one directed cycle when the machine
// has more than one state.
std::vector<Violation> graph_check(const SmartFsm& fsm, const FsmSets& sets,
                                   const ValidatorConfig& config = {});

// extract_sets + format_check + graph_check. `passed` is true iff no
// error-class violation was found under `config`.
CheckReport validate(const SmartFsm& fsm, const ValidatorConfig& config = {});

}  // namespace fsmscg
