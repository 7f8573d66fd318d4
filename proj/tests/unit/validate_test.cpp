#include "fsmscg/validate.hpp"

#include <algorithm>
#include <random>

#include "doctest.h"
#include "graph_oracle.hpp"
#include "random_fsm.hpp"
#include "test_util.hpp"

using namespace fsmscg;
using testsupport::fixtures_dir;
using testsupport::read_file;

namespace {

SmartFsm three_state() {
  SmartFsm fsm;
  fsm.basic_info = {"T", ""};
  fsm.states = {"Created", "Active", "Closed"};
  fsm.initial_state = "Created";
  fsm.functions = {{"activate", "", {}}, {"close", "", {}}, {"reopen", "", {}}};
  fsm.transitions = {
      {"Created", "activate", "Active", std::nullopt, std::nullopt},
      {"Active", "close", "Closed", std::nullopt, std::nullopt},
      {"Closed", "reopen", "Active", std::nullopt, std::nullopt},
  };
  return fsm;
}

std::vector<ViolationCode> codes(const std::vector<Violation>& violations) {
  std::vector<ViolationCode> out;
  for (const Violation& v : violations) out.push_back(v.code);
  return out;
}

}  // namespace

TEST_CASE("format_check rules") {
  SUBCASE("undefined initial state") {
    SmartFsm fsm = three_state();
    fsm.initial_state = "Start";
    auto violations = format_check(fsm, extract_sets(fsm));
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == ViolationCode::InitialStateUndefined);
    CHECK(violations[0].subject == "Start");
  }
  SUBCASE("dangling target") {
    SmartFsm fsm = three_state();
    fsm.functions.push_back({"refund", "", {}});
    fsm.transitions.push_back(
        {"Active", "refund", "Refunded", std::nullopt, std::nullopt});
    auto violations = format_check(fsm, extract_sets(fsm));
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == ViolationCode::TargetUndefined);
  }
  SUBCASE("undeclared trigger") {
    SmartFsm fsm = three_state();
    fsm.transitions.push_back(
        {"Active", "burn", "Closed", std::nullopt, std::nullopt});
    auto violations = format_check(fsm, extract_sets(fsm));
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == ViolationCode::TriggerUndeclared);
    CHECK(violations[0].subject == "burn");
  }
  SUBCASE("duplicate transition") {
    SmartFsm fsm = three_state();
    fsm.transitions.push_back(fsm.transitions[0]);
    auto violations = format_check(fsm, extract_sets(fsm));
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == ViolationCode::DuplicateTransition);
  }
  SUBCASE("event names count as triggers under the default namespace") {
    SmartFsm fsm = three_state();
    fsm.functions.clear();
    fsm.events = {{"activate", {}, ""}, {"close", {}, ""}, {"reopen", {}, ""}};
    CHECK(format_check(fsm, extract_sets(fsm)).empty());

    ValidatorConfig functions_only;
    functions_only.trigger_namespace = TriggerNamespace::Functions;
    auto violations = format_check(fsm, extract_sets(fsm), functions_only);
    CHECK(violations.size() == 3);
    CHECK(std::all_of(violations.begin(), violations.end(),
                      [](const Violation& v) {
                        return v.code == ViolationCode::TriggerUndeclared;
                      }));
  }
}

TEST_CASE("graph_check rules") {
  SUBCASE("healthy cycle passes") {
    SmartFsm fsm = three_state();
    CHECK(graph_check(fsm, extract_sets(fsm)).empty());
  }
  SUBCASE("unreachable state and acyclic graph") {
    SmartFsm fsm;
    fsm.basic_info = {"T", ""};
    fsm.states = {"A", "B", "C"};
    fsm.initial_state = "A";
    fsm.functions = {{"go", "", {}}};
    fsm.transitions = {{"A", "go", "B", std::nullopt, std::nullopt}};
    auto violations = graph_check(fsm, extract_sets(fsm));
    CHECK(codes(violations) == std::vector<ViolationCode>{
                                   ViolationCode::UnreachableState,
                                   ViolationCode::NoCycle});
    CHECK(violations[0].subject == "C");
  }
  SUBCASE("self loop is flagged per transition") {
    SmartFsm fsm = three_state();
    fsm.functions.push_back({"ping", "", {}});
    fsm.transitions.push_back(
        {"Active", "ping", "Active", std::nullopt, std::nullopt});
    auto violations = graph_check(fsm, extract_sets(fsm));
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == ViolationCode::SelfLoop);
  }
  SUBCASE("undeclared initial state makes everything unreachable") {
    SmartFsm fsm = three_state();
    fsm.initial_state = "Nowhere";
    auto violations = graph_check(fsm, extract_sets(fsm));
    int unreachable = 0;
    for (const Violation& v : violations)
      if (v.code == ViolationCode::UnreachableState) ++unreachable;
    CHECK(unreachable == 3);
  }
}

TEST_CASE("validate composes checks and the severity policy") {
  SUBCASE("valid fixture passes with empty lists") {
    SmartFsm fsm =
        parse_fsm(read_file(fixtures_dir() / "fsm" / "nft_mint.json"));
    CheckReport report = validate(fsm);
    CHECK(report.passed);
    CHECK(report.format_violations.empty());
    CHECK(report.graph_violations.empty());
  }
  SUBCASE("dangling target fails") {
    SmartFsm fsm =
        parse_fsm(read_file(fixtures_dir() / "fsm" / "dangling_target.json"));
    CheckReport report = validate(fsm);
    CHECK_FALSE(report.passed);
    CHECK(report.has(ViolationCode::TargetUndefined));
  }
  SUBCASE("single-state machine is exempt from the cycle rule") {
    SmartFsm fsm =
        parse_fsm(read_file(fixtures_dir() / "fsm" / "single_state.json"));
    CheckReport report = validate(fsm);
    CHECK(report.passed);
    CHECK_FALSE(report.has(ViolationCode::NoCycle));
  }
  SUBCASE("cycle rule severity is configurable") {
    SmartFsm fsm = parse_fsm(read_file(fixtures_dir() / "fsm" / "acyclic.json"));

    CheckReport hard = validate(fsm);
    CHECK_FALSE(hard.passed);
    CHECK(hard.has(ViolationCode::NoCycle));

    ValidatorConfig warn;
    warn.cycle_rule = CycleRule::Warn;
    CheckReport soft = validate(fsm, warn);
    CHECK(soft.passed);
    CHECK(soft.has(ViolationCode::NoCycle));

    ValidatorConfig off;
    off.cycle_rule = CycleRule::Off;
    CheckReport silent = validate(fsm, off);
    CHECK(silent.passed);
    CHECK_FALSE(silent.has(ViolationCode::NoCycle));
  }
  SUBCASE("self-loop fixture fails regardless of cycle config") {
    SmartFsm fsm =
        parse_fsm(read_file(fixtures_dir() / "fsm" / "selfloop.json"));
    ValidatorConfig off;
    off.cycle_rule = CycleRule::Off;
    CheckReport report = validate(fsm, off);
    CHECK_FALSE(report.passed);
    CHECK(report.has(ViolationCode::SelfLoop));
  }
}

TEST_CASE("report JSON is stable and severity-annotated") {
  SmartFsm fsm = parse_fsm(read_file(fixtures_dir() / "fsm" / "acyclic.json"));
  ValidatorConfig warn;
  warn.cycle_rule = CycleRule::Warn;
  CheckReport report = validate(fsm, warn);
  std::string json = report.to_json(warn);
  CHECK(json.find("\"passed\": true") != std::string::npos);
  CHECK(json.find("\"NO_CYCLE\"") != std::string::npos);
  CHECK(json.find("\"warning\"") != std::string::npos);
  CHECK(json == report.to_json(warn));
}

TEST_CASE("validator agrees with the brute-force oracle") {
  std::mt19937_64 rng(424242);
  for (int trial = 0; trial < 1000; ++trial) {
    SmartFsm fsm = testsupport::arbitrary_fsm(rng);
    FsmSets sets = extract_sets(fsm);
    auto violations = graph_check(fsm, sets);

    oracle::Digraph graph(fsm.states.size());
    for (const TransitionTriple& t : sets.transitions) {
      auto si = std::find(fsm.states.begin(), fsm.states.end(), t.source);
      auto ti = std::find(fsm.states.begin(), fsm.states.end(), t.target);
      graph.add_edge(static_cast<std::size_t>(si - fsm.states.begin()),
                     static_cast<std::size_t>(ti - fsm.states.begin()));
    }

    std::vector<bool> reachable = oracle::reachable_from(graph, 0);
    std::vector<std::string> expected_unreachable;
    for (std::size_t i = 0; i < fsm.states.size(); ++i)
      if (!reachable[i]) expected_unreachable.push_back(fsm.states[i]);

    std::vector<std::string> got_unreachable;
    int got_self_loops = 0;
    bool got_no_cycle = false;
    for (const Violation& v : violations) {
      if (v.code == ViolationCode::UnreachableState)
        got_unreachable.push_back(v.subject);
      if (v.code == ViolationCode::SelfLoop) ++got_self_loops;
      if (v.code == ViolationCode::NoCycle) got_no_cycle = true;
    }

    REQUIRE(got_unreachable == expected_unreachable);

    int expected_self_loops = 0;
    for (const TransitionTriple& t : sets.transitions)
      if (t.source == t.target) ++expected_self_loops;
    REQUIRE(got_self_loops == expected_self_loops);

    bool expected_no_cycle =
        !oracle::has_cycle(graph) && fsm.states.size() > 1;
    REQUIRE(got_no_cycle == expected_no_cycle);
  }
}

TEST_CASE("adding a transition never breaks prior reachability") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    SmartFsm fsm = testsupport::arbitrary_fsm(rng, 8, 12);
    FsmSets sets = extract_sets(fsm);
    auto before = graph_check(fsm, sets);
    std::vector<std::string> unreachable_before;
    for (const Violation& v : before)
      if (v.code == ViolationCode::UnreachableState)
        unreachable_before.push_back(v.subject);

    std::uniform_int_distribution<std::size_t> pick(0, fsm.states.size() - 1);
    fsm.transitions.push_back({fsm.states[pick(rng)], "go",
                               fsm.states[pick(rng)], std::nullopt,
                               std::nullopt});
    auto after = graph_check(fsm, extract_sets(fsm));
    std::vector<std::string> unreachable_after;
    for (const Violation& v : after)
      if (v.code == ViolationCode::UnreachableState)
        unreachable_after.push_back(v.subject);

    for (const std::string& state : unreachable_after)
      CHECK(std::find(unreachable_before.begin(), unreachable_before.end(),
                      state) != unreachable_before.end());
  }
}
