#pragma once

// Seeded FSM generators shared by property tests and the acceptance
// suite. `arbitrary_fsm` draws unconstrained graphs for oracle
// comparison; `valid_fsm` builds machines that pass every check (a
// spanning tree from the initial state plus at least one cycle edge) so
// corruption tests can break exactly one rule at a time.

#include <random>
#include <string>
#include <vector>

#include "fsmscg/fsm.hpp"

namespace testsupport {

inline std::string state_name(std::size_t i) {
  return "S" + std::to_string(i);
}

inline fsmscg::SmartFsm arbitrary_fsm(std::mt19937_64& rng,
                                      std::size_t max_states = 10,
                                      std::size_t max_transitions = 20) {
  std::uniform_int_distribution<std::size_t> state_count(1, max_states);
  std::size_t n = state_count(rng);

  fsmscg::SmartFsm fsm;
  fsm.basic_info = {"Random", "randomly generated machine"};
  for (std::size_t i = 0; i < n; ++i) fsm.states.push_back(state_name(i));
  fsm.initial_state = fsm.states[0];
  fsm.functions.push_back({"go", "declared trigger", {}});

  std::uniform_int_distribution<std::size_t> transition_count(
      0, max_transitions);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t m = transition_count(rng);
  for (std::size_t i = 0; i < m; ++i)
    fsm.transitions.push_back({fsm.states[pick(rng)], "go",
                               fsm.states[pick(rng)], std::nullopt,
                               std::nullopt});
  return fsm;
}

struct ValidFsm {
  fsmscg::SmartFsm fsm;
  // transition indices of the spanning tree (reachability backbone) and
  // of the extra edges (cycle makers)
  std::vector<std::size_t> tree_edges;
  std::vector<std::size_t> extra_edges;
};

inline ValidFsm valid_fsm(std::mt19937_64& rng, std::size_t min_states = 3,
                          std::size_t max_states = 8) {
  std::uniform_int_distribution<std::size_t> state_count(min_states,
                                                         max_states);
  std::size_t n = state_count(rng);

  ValidFsm out;
  fsmscg::SmartFsm& fsm = out.fsm;
  fsm.basic_info = {"Generated", "valid machine for corruption tests"};
  for (std::size_t i = 0; i < n; ++i) fsm.states.push_back(state_name(i));
  fsm.initial_state = fsm.states[0];

  auto trigger_name = [](std::size_t i) { return "t" + std::to_string(i); };

  // spanning tree: state i hangs off a random earlier state
  std::size_t trigger = 0;
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> parent(0, i - 1);
    std::size_t p = parent(rng);
    out.tree_edges.push_back(fsm.transitions.size());
    fsm.transitions.push_back({fsm.states[p], trigger_name(trigger++),
                               fsm.states[i], std::nullopt, std::nullopt});
  }
  // one cycle edge: from a random non-root back to the root
  std::uniform_int_distribution<std::size_t> source(1, n - 1);
  out.extra_edges.push_back(fsm.transitions.size());
  fsm.transitions.push_back({fsm.states[source(rng)], trigger_name(trigger++),
                             fsm.states[0], std::nullopt, std::nullopt});

  for (std::size_t i = 0; i < trigger; ++i)
    fsm.functions.push_back({trigger_name(i), "transition trigger", {}});
  return out;
}

}  // namespace testsupport
