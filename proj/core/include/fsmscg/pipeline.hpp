#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fsmscg/fsm.hpp"
#include "fsmscg/gateway.hpp"
#include "fsmscg/prompts.hpp"
#include "fsmscg/scoring.hpp"
#include "fsmscg/toolchain.hpp"
#include "fsmscg/validate.hpp"

namespace fsmscg {

class FsmGenerationFailed : public Error {
 public:
  FsmGenerationFailed(const std::string& what, CheckReport last_report)
      : Error(what), last_report_(std::move(last_report)) {}
  const CheckReport& last_report() const { return last_report_; }

 private:
  CheckReport last_report_;
};

enum class RunStatus { Success, FsmFailed, Exhausted, BackendError };
std::string to_string(RunStatus status);

struct PipelineConfig {
  int max_fsm_attempts = 3;
  int compile_feedback_rounds = 1;
  int security_feedback_rounds = 1;
  // Findings at or above this severity keep a run from succeeding.
  Severity security_pass_threshold = Severity::Medium;
  // Ablation switch: give contract generation its own session, with the
  // FSM embedded in the prompt since it is no longer in context.
  bool fresh_session_per_stage = false;
  int parallel_runs = 1;

  BackendConfig backend;
  std::optional<std::filesystem::path> template_dir;
  PromptConfig prompt;
  ValidatorConfig validator;
  ScoringConfig scoring;
  ToolchainConfig toolchain;
  std::filesystem::path artifact_root = "runs";

  // Throws ConfigError when a bound is violated.
  void check() const;

  static PipelineConfig from_json(std::string_view text);
  // Relative paths in the file resolve against the file's directory.
  static PipelineConfig from_json_file(const std::filesystem::path& path);
};

struct IterationRecord {
  std::string code;
  CompileResult compile;
  std::optional<AnalysisResult> analysis;  // present iff compile succeeded
  // Feedback prompt that produced this code; nullopt on the first
  // iteration (which comes from the FSM-to-contract prompt).
  std::optional<PromptKind> produced_by;
};

struct RunRecord {
  std::string run_id;
  std::string requirement;
  std::optional<SmartFsm> fsm;
  std::string fsm_raw_reply;
  int fsm_attempts = 0;
  std::vector<IterationRecord> iterations;
  std::string final_contract;
  std::optional<ContractScore> final_score;
  RunStatus status = RunStatus::BackendError;
  std::string error;  // diagnostic detail when status != Success
  double wall_time_ms = 0.0;
  std::vector<ChatTurn> transcript;
  std::filesystem::path artifact_dir;
};

struct FsmGeneration {
  SmartFsm fsm;
  int attempts = 0;
  std::string raw_reply;
};

struct Refinement {
  std::string code;
  std::vector<IterationRecord> iterations;
  bool success = false;  // compiled and no blocking finding
};

struct BatchResult {
  MetricsSummary summary;
  std::vector<RunRecord> records;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  const PromptForge& forge() const { return forge_; }

  // Requirement-to-FSM loop: send the FSM prompt, extract, parse, and
  // validate; on failure retry on the same session with the violations
  // embedded, up to max_fsm_attempts. Throws FsmGenerationFailed with the
  // last CheckReport, or propagates backend errors.
  FsmGeneration generate_fsm(Session& session,
                             std::string_view requirement) const;

  // Contract loop, compile check first: failed compiles consume compile
  // feedback rounds, blocking findings consume security rounds, and the
  // loop stops when both checks pass or the budgets run out. A reply
  // without extractable code is treated as a failed compile of that
  // round. Tool and backend errors propagate.
  Refinement refine_contract(Session& session, const SmartFsm& fsm) const;

  // Full run: FSM stage, contract stage, scoring, and artifact
  // persistence. Backend and tool failures land in the record's status,
  // never as exceptions. An empty run_id derives a deterministic one from
  // the requirement.
  RunRecord run(std::string_view requirement, std::string run_id = "") const;

  // |requirements| * samples runs, each on a fresh session, aggregated
  // into batch metrics. Runs execute on up to parallel_runs threads;
  // record order matches input order. Throws EmptyBatch.
  BatchResult evaluate_batch(const std::vector<std::string>& requirements,
                             int samples) const;

 private:
  struct CompileOutcome {
    CompileResult result;
    SemVer version;
  };
  CompileOutcome compile_step(const std::string& code) const;
  bool is_blocking(const Finding& finding) const;
  void persist(RunRecord& record) const;

  PipelineConfig config_;
  PromptForge forge_;
  Toolchain toolchain_;
};

// Recomputes the ContractScore of a persisted run from its last
// iteration's compile.json/analysis.json. Nullopt when the run has no
// scoreable iteration.
std::optional<ContractScore> rescore_run(const std::filesystem::path& run_dir,
                                         const ScoringConfig& config = {});

}  // namespace fsmscg
