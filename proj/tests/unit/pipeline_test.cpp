#include "fsmscg/pipeline.hpp"

#include "doctest.h"
#include "pipeline_harness.hpp"
#include "test_util.hpp"

using namespace fsmscg;
using namespace testsupport;

TEST_CASE("generate_fsm") {
  TempDir dir;
  PipelineConfig config = scenario_config(dir.path());
  Pipeline pipeline(config);

  SUBCASE("valid on the first attempt") {
    Session session = open_scripted_session({{0, valid_fsm_reply()}});
    FsmGeneration generation = pipeline.generate_fsm(session, "a gate");
    CHECK(generation.attempts == 1);
    CHECK(generation.fsm == small_machine());
  }
  SUBCASE("invalid then valid takes two attempts") {
    Session session = open_scripted_session(
        {{0, selfloop_fsm_reply()}, {1, valid_fsm_reply()}});
    FsmGeneration generation = pipeline.generate_fsm(session, "a gate");
    CHECK(generation.attempts == 2);
    // the retry prompt carried the violation back to the model
    CHECK(session.turns()[2].text.find("SELF_LOOP") != std::string::npos);
  }
  SUBCASE("extraction and schema failures also consume attempts") {
    Session session = open_scripted_session({{0, "no payload here"},
                                             {1, schema_bad_reply()},
                                             {2, valid_fsm_reply()}});
    FsmGeneration generation = pipeline.generate_fsm(session, "a gate");
    CHECK(generation.attempts == 3);
  }
  SUBCASE("bound exhaustion carries the last report") {
    Session session = open_scripted_session({{0, selfloop_fsm_reply()},
                                             {1, selfloop_fsm_reply()},
                                             {2, selfloop_fsm_reply()}});
    try {
      pipeline.generate_fsm(session, "a gate");
      FAIL("expected FsmGenerationFailed");
    } catch (const FsmGenerationFailed& e) {
      CHECK(e.last_report().has(ViolationCode::SelfLoop));
    }
    CHECK(session.turns().size() == 6);  // three sends, no more
  }
}

TEST_CASE("refine_contract") {
  TempDir dir;
  PipelineConfig config = scenario_config(dir.path());

  SUBCASE("broken then fixed via compile feedback") {
    Pipeline pipeline(config);
    Session session = open_scripted_session(
        {{0, fenced(kBrokenContract)}, {1, fenced(kCleanContract)}});
    Refinement refinement =
        pipeline.refine_contract(session, small_machine());
    CHECK(refinement.success);
    REQUIRE(refinement.iterations.size() == 2);
    CHECK_FALSE(refinement.iterations[0].produced_by.has_value());
    CHECK(refinement.iterations[0].compile.success == false);
    CHECK(refinement.iterations[1].produced_by ==
          PromptKind::CompileFeedback);
    CHECK(refinement.code == kCleanContract);
    // the feedback prompt named the compiler message
    CHECK(session.turns()[2].text.find("Undeclared identifier undeclared") !=
          std::string::npos);
  }
  SUBCASE("insecure then secured via security feedback") {
    Pipeline pipeline(config);
    Session session = open_scripted_session(
        {{0, fenced(kInsecureContract)}, {1, fenced(kSecuredContract)}});
    Refinement refinement =
        pipeline.refine_contract(session, small_machine());
    CHECK(refinement.success);
    REQUIRE(refinement.iterations.size() == 2);
    CHECK(refinement.iterations[1].produced_by ==
          PromptKind::SecurityFeedback);
    CHECK(session.turns()[2].text.find("reentrancy-eth") !=
          std::string::npos);
  }
  SUBCASE("zero rounds exhaust immediately") {
    PipelineConfig tight = config;
    tight.compile_feedback_rounds = 0;
    tight.security_feedback_rounds = 0;
    Pipeline pipeline(tight);
    Session session = open_scripted_session({{0, fenced(kBrokenContract)}});
    Refinement refinement =
        pipeline.refine_contract(session, small_machine());
    CHECK_FALSE(refinement.success);
    CHECK(refinement.iterations.size() == 1);
  }
  SUBCASE("medium finding blocks at the default threshold") {
    Pipeline pipeline(config);
    Session session = open_scripted_session(
        {{0, fenced(kMediumRiskContract)}, {1, fenced(kSecuredContract)}});
    Refinement refinement =
        pipeline.refine_contract(session, small_machine());
    CHECK(refinement.success);
    CHECK(refinement.iterations.size() == 2);
  }
  SUBCASE("raising the threshold lets medium findings pass") {
    PipelineConfig lax = config;
    lax.security_pass_threshold = Severity::High;
    Pipeline pipeline(lax);
    Session session =
        open_scripted_session({{0, fenced(kMediumRiskContract)}});
    Refinement refinement =
        pipeline.refine_contract(session, small_machine());
    CHECK(refinement.success);
    CHECK(refinement.iterations.size() == 1);
  }
  SUBCASE("informational findings never block") {
    Pipeline pipeline(config);
    Session session = open_scripted_session({{0, fenced(kInfoOnlyContract)}});
    Refinement refinement =
        pipeline.refine_contract(session, small_machine());
    CHECK(refinement.success);
    CHECK(refinement.iterations.size() == 1);
  }
  SUBCASE("reply without code counts as a failed compile of that round") {
    Pipeline pipeline(config);
    Session session = open_scripted_session(
        {{0, "chatty model says hi"}, {1, fenced(kCleanContract)}});
    Refinement refinement =
        pipeline.refine_contract(session, small_machine());
    CHECK(refinement.success);
    REQUIRE(refinement.iterations.size() == 2);
    CHECK(refinement.iterations[0].code.empty());
    CHECK_FALSE(refinement.iterations[0].compile.success);
  }
}

TEST_CASE("run persists a complete deterministic record") {
  TempDir dir;
  PipelineConfig config = scenario_config(dir.path());
  write_script(dir.path() / "script.json",
               {{0, valid_fsm_reply()}, {1, fenced(kCleanContract)}});
  Pipeline pipeline(config);

  RunRecord record = pipeline.run("a gate contract", "golden");
  CHECK(record.status == RunStatus::Success);
  CHECK(record.fsm_attempts == 1);
  CHECK(record.final_contract == kCleanContract);
  REQUIRE(record.final_score.has_value());
  CHECK(record.final_score->zero_risk);

  fs::path run_dir = dir.path() / "runs" / "golden";
  CHECK(read_file(run_dir / "fsm.json") == valid_fsm_reply());
  CHECK(read_file(run_dir / "requirement.txt") == "a gate contract\n");
  CHECK(read_file(run_dir / "iterations" / "1" / "contract.sol") ==
        kCleanContract);
  CHECK(fs::exists(run_dir / "transcript.json"));
  CHECK(fs::exists(run_dir / "report.json"));

  SUBCASE("re-scoring the persisted artifacts reproduces the score") {
    auto rescored = rescore_run(run_dir);
    REQUIRE(rescored.has_value());
    CHECK(*rescored == *record.final_score);
  }
  SUBCASE("a second identical run produces byte-identical artifacts") {
    TempDir other;
    PipelineConfig config2 = scenario_config(other.path());
    write_script(other.path() / "script.json",
                 {{0, valid_fsm_reply()}, {1, fenced(kCleanContract)}});
    Pipeline second(config2);
    second.run("a gate contract", "golden");
    fs::path other_dir = other.path() / "runs" / "golden";
    CHECK(read_file(other_dir / "fsm.json") == read_file(run_dir / "fsm.json"));
    CHECK(read_file(other_dir / "report.json") ==
          read_file(run_dir / "report.json"));
    CHECK(read_file(other_dir / "transcript.json") ==
          read_file(run_dir / "transcript.json"));
  }
}

TEST_CASE("run isolates failures into statuses") {
  TempDir dir;
  PipelineConfig config = scenario_config(dir.path());

  SUBCASE("fsm never valid means no contract work at all") {
    write_script(dir.path() / "script.json",
                 {{0, selfloop_fsm_reply()},
                  {1, selfloop_fsm_reply()},
                  {2, selfloop_fsm_reply()}});
    Pipeline pipeline(config);
    RunRecord record = pipeline.run("a gate", "fsmfail");
    CHECK(record.status == RunStatus::FsmFailed);
    CHECK(record.iterations.empty());
    CHECK_FALSE(record.final_score.has_value());
    CHECK_FALSE(fs::exists(record.artifact_dir / "fsm.json"));
  }
  SUBCASE("backend unreachable surfaces as backend_error") {
    PipelineConfig bad = config;
    bad.backend.kind = BackendKind::HttpChat;
    bad.backend.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    bad.backend.model = "m";
    bad.backend.timeout_s = 1;
    bad.backend.max_retries = 0;
    Pipeline pipeline(bad);
    RunRecord record = pipeline.run("a gate", "unreachable");
    CHECK(record.status == RunStatus::BackendError);
    CHECK(record.final_contract.empty());
    CHECK(record.iterations.empty());
  }
  SUBCASE("script exhaustion mid-run is a backend error") {
    write_script(dir.path() / "script.json", {{0, valid_fsm_reply()}});
    Pipeline pipeline(config);
    RunRecord record = pipeline.run("a gate", "exhausted-script");
    CHECK(record.status == RunStatus::BackendError);
  }
  SUBCASE("exhausted refinement keeps the best-effort code") {
    write_script(dir.path() / "script.json",
                 {{0, valid_fsm_reply()},
                  {1, fenced(kBrokenContract)},
                  {2, fenced(kStillBrokenContract)}});
    Pipeline pipeline(config);
    RunRecord record = pipeline.run("a gate", "exhausted");
    CHECK(record.status == RunStatus::Exhausted);
    CHECK(record.final_contract == kStillBrokenContract);
    REQUIRE(record.final_score.has_value());
    CHECK(record.final_score->vrs == 10.0);
  }
}

TEST_CASE("evaluate_batch aggregates hand-countable outcomes") {
  TempDir dir;
  PipelineConfig config = scenario_config(dir.path());
  // ok requirements yield a clean contract; bad ones never produce a
  // valid machine
  write_script(dir.path() / "script.json",
               {{std::string("req-ok"), valid_fsm_reply()},
                {std::string("Implement the smart contract"),
                 fenced(kCleanContract)},
                {std::string("req-bad"), selfloop_fsm_reply()},
                {std::string("rejected by validation"), selfloop_fsm_reply()},
                {std::string("rejected by validation"), selfloop_fsm_reply()}});

  std::vector<std::string> requirements = {"req-ok alpha", "req-ok beta",
                                           "req-bad gamma"};
  Pipeline pipeline(config);
  BatchResult batch = pipeline.evaluate_batch(requirements, 2);

  REQUIRE(batch.records.size() == 6);
  CHECK(batch.summary.total == 6);
  CHECK(batch.summary.compiled == 4);
  CHECK(batch.summary.cpr == doctest::Approx(100.0 * 4 / 6).epsilon(1e-9));
  CHECK(batch.summary.zrcp == doctest::Approx(100.0 * 4 / 6).epsilon(1e-9));
  CHECK(batch.summary.mean_vrs ==
        doctest::Approx(20.0 / 6).epsilon(1e-9));
  CHECK(batch.records[0].run_id == "r000-s1");
  CHECK(batch.records[5].status == RunStatus::FsmFailed);

  SUBCASE("singleton batch") {
    TempDir solo;
    PipelineConfig solo_config = scenario_config(solo.path());
    write_script(solo.path() / "script.json",
                 {{std::string("req-ok"), valid_fsm_reply()},
                  {std::string("Implement the smart contract"),
                   fenced(kCleanContract)}});
    Pipeline solo_pipeline(solo_config);
    BatchResult one = solo_pipeline.evaluate_batch({"req-ok solo"}, 1);
    CHECK(one.summary.cpr == 100.0);
    CHECK(one.summary.total == 1);
  }
  SUBCASE("empty batch throws") {
    CHECK_THROWS_AS(pipeline.evaluate_batch({}, 1), EmptyBatch);
    CHECK_THROWS_AS(pipeline.evaluate_batch({"x"}, 0), EmptyBatch);
  }
  SUBCASE("parallel execution yields the same summary") {
    TempDir par;
    PipelineConfig par_config = scenario_config(par.path());
    par_config.parallel_runs = 4;
    write_script(par.path() / "script.json",
                 {{std::string("req-ok"), valid_fsm_reply()},
                  {std::string("Implement the smart contract"),
                   fenced(kCleanContract)},
                  {std::string("req-bad"), selfloop_fsm_reply()},
                  {std::string("rejected by validation"),
                   selfloop_fsm_reply()},
                  {std::string("rejected by validation"),
                   selfloop_fsm_reply()}});
    Pipeline parallel(par_config);
    BatchResult again = parallel.evaluate_batch(requirements, 2);
    CHECK(again.summary == batch.summary);
    CHECK(again.records[0].run_id == "r000-s1");
  }
}

TEST_CASE("bounded backend calls per run") {
  TempDir dir;
  PipelineConfig config = scenario_config(dir.path());
  write_script(dir.path() / "script.json",
               {{0, valid_fsm_reply()},
                {1, fenced(kBrokenContract)},
                {2, fenced(kInsecureContract)},
                {3, fenced(kSecuredContract)}});
  Pipeline pipeline(config);
  RunRecord record = pipeline.run("a gate", "bounded");
  CHECK(record.status == RunStatus::Success);

  int user_turns = 0;
  for (const ChatTurn& turn : record.transcript)
    if (turn.role == "user") ++user_turns;
  int bound = config.max_fsm_attempts + 1 + config.compile_feedback_rounds +
              config.security_feedback_rounds;
  CHECK(user_turns <= bound);
  // compile branch then security branch, per the loop ordering
  REQUIRE(record.iterations.size() == 3);
  CHECK(record.iterations[1].produced_by == PromptKind::CompileFeedback);
  CHECK(record.iterations[2].produced_by == PromptKind::SecurityFeedback);
}

TEST_CASE("fresh_session_per_stage embeds the machine for stage two") {
  TempDir dir;
  PipelineConfig config = scenario_config(dir.path());
  config.fresh_session_per_stage = true;
  write_script(dir.path() / "script.json",
               {{std::string("Return only the FSM"), valid_fsm_reply()},
                {std::string("Implement the smart contract"),
                 fenced(kCleanContract)}});
  Pipeline pipeline(config);
  RunRecord record = pipeline.run("a gate", "fresh");
  CHECK(record.status == RunStatus::Success);
  // stage-two session starts fresh, so its prompt carries the FSM text
  bool embedded = false;
  for (const ChatTurn& turn : record.transcript)
    if (turn.role == "user" &&
        turn.text.find("Implement the smart contract") != std::string::npos &&
        turn.text.find("\"Gate\"") != std::string::npos)
      embedded = true;
  CHECK(embedded);
}

TEST_CASE("config files load with path rebasing and bounds") {
  TempDir dir;
  write_file(dir.path() / "script.json", "[]");
  write_file(dir.path() / "config.json", R"({
    "backend": {"kind": "scripted-mock", "script": "script.json"},
    "pipeline": {"max_fsm_attempts": 5, "compile_feedback_rounds": 2,
                 "security_pass_threshold": "high", "parallel_runs": 2},
    "validator": {"cycle_rule": "warn", "trigger_namespace": "functions"},
    "toolchain": {"fixture_dir": "fixtures", "default_solc_version": "0.8.19"},
    "artifact_root": "out"
  })");

  PipelineConfig config =
      PipelineConfig::from_json_file(dir.path() / "config.json");
  CHECK(config.max_fsm_attempts == 5);
  CHECK(config.compile_feedback_rounds == 2);
  CHECK(config.security_pass_threshold == Severity::High);
  CHECK(config.parallel_runs == 2);
  CHECK(config.validator.cycle_rule == CycleRule::Warn);
  CHECK(config.validator.trigger_namespace == TriggerNamespace::Functions);
  CHECK(config.backend.script_path == dir.path() / "script.json");
  CHECK(config.toolchain.fixture_dir == dir.path() / "fixtures");
  CHECK(config.artifact_root == dir.path() / "out");

  SUBCASE("bound violations are rejected") {
    CHECK_THROWS_AS(
        PipelineConfig::from_json(R"({"pipeline": {"max_fsm_attempts": 0}})"),
        ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(
                        R"({"pipeline": {"compile_feedback_rounds": -1}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        PipelineConfig::from_json(R"({"backend": {"kind": "telepathy"}})"),
        ConfigError);
  }
}
