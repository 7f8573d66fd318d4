#include "fsmscg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace fsmscg {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

int severity_rank(Severity severity) {
  switch (severity) {
    case Severity::High: return 0;
    case Severity::Medium: return 1;
    case Severity::Low: return 2;
    case Severity::Informational: return 3;
    case Severity::Optimization: return 4;
  }
  return 5;
}

std::string describe_report(const CheckReport& report) {
  std::ostringstream out;
  for (const Violation& v : report.format_violations)
    out << "- " << to_string(v.code) << ": " << v.message << "\n";
  for (const Violation& v : report.graph_violations)
    out << "- " << to_string(v.code) << ": " << v.message << "\n";
  return out.str();
}

std::string fsm_retry_prompt(const std::string& failure_details) {
  return "The FSM you returned was rejected by validation:\n\n" +
         failure_details +
         "\nRegenerate the complete FSM for the same requirements, fixing "
         "every problem listed above. Return only the FSM content as a "
         "single JSON object following the same format.";
}

CompileResult synthetic_failure(const std::string& message,
                                const std::string& version) {
  CompileResult result;
  result.success = false;
  result.compiler_version = version;
  CompileIssue issue;
  issue.severity = IssueSeverity::Error;
  issue.message = message;
  issue.formatted_message = message;
  result.issues.push_back(std::move(issue));
  return result;
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::string transcript_to_json(const std::vector<ChatTurn>& turns) {
  ordered_json arr = ordered_json::array();
  for (const ChatTurn& turn : turns)
    arr.push_back({{"role", turn.role}, {"text", turn.text}});
  ordered_json doc;
  doc["turns"] = std::move(arr);
  return doc.dump(2) + "\n";
}

ordered_json score_to_json(const ContractScore& score) {
  ordered_json doc;
  doc["compiled"] = score.compiled;
  doc["vrs"] = score.vrs;
  doc["zero_risk"] = score.zero_risk;
  doc["has_high_severity"] = score.has_high_severity;
  doc["counted_findings"] = score.counted_findings;
  return doc;
}

}  // namespace

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Success: return "success";
    case RunStatus::FsmFailed: return "fsm_failed";
    case RunStatus::Exhausted: return "exhausted";
    case RunStatus::BackendError: return "backend_error";
  }
  return "backend_error";
}

void PipelineConfig::check() const {
  if (max_fsm_attempts < 1)
    throw ConfigError("max_fsm_attempts must be >= 1");
  if (compile_feedback_rounds < 0 || security_feedback_rounds < 0)
    throw ConfigError("feedback rounds must be >= 0");
  if (parallel_runs < 1) throw ConfigError("parallel_runs must be >= 1");
  if (backend.temperature < 0) throw ConfigError("temperature must be >= 0");
  if (backend.timeout_s <= 0) throw ConfigError("timeout_s must be > 0");
  if (backend.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

PipelineConfig PipelineConfig::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }

  PipelineConfig config;

  if (auto b = doc.find("backend"); b != doc.end()) {
    std::string kind = b->value("kind", "scripted-mock");
    if (kind == "scripted-mock")
      config.backend.kind = BackendKind::ScriptedMock;
    else if (kind == "http-chat")
      config.backend.kind = BackendKind::HttpChat;
    else
      throw ConfigError("unknown backend kind \"" + kind + "\"");
    config.backend.endpoint = b->value("endpoint", "");
    config.backend.model = b->value("model", "");
    config.backend.script_path = b->value("script", "");
    config.backend.temperature =
        b->value("temperature", config.backend.temperature);
    config.backend.timeout_s = b->value("timeout_s", config.backend.timeout_s);
    config.backend.max_retries =
        b->value("max_retries", config.backend.max_retries);
    config.backend.backoff_base_ms =
        b->value("backoff_base_ms", config.backend.backoff_base_ms);
    config.backend.max_prompt_chars =
        b->value("max_prompt_chars", config.backend.max_prompt_chars);
    config.backend.api_key_env =
        b->value("api_key_env", config.backend.api_key_env);
  }

  if (auto p = doc.find("pipeline"); p != doc.end()) {
    config.max_fsm_attempts =
        p->value("max_fsm_attempts", config.max_fsm_attempts);
    config.compile_feedback_rounds =
        p->value("compile_feedback_rounds", config.compile_feedback_rounds);
    config.security_feedback_rounds =
        p->value("security_feedback_rounds", config.security_feedback_rounds);
    if (auto threshold = p->find("security_pass_threshold");
        threshold != p->end()) {
      auto severity = parse_severity(threshold->get<std::string>());
      if (!severity)
        throw ConfigError("unknown security_pass_threshold \"" +
                          threshold->get<std::string>() + "\"");
      config.security_pass_threshold = *severity;
    }
    config.fresh_session_per_stage =
        p->value("fresh_session_per_stage", config.fresh_session_per_stage);
    config.parallel_runs = p->value("parallel_runs", config.parallel_runs);
  }

  if (auto v = doc.find("validator"); v != doc.end()) {
    std::string cycle = v->value("cycle_rule", "error");
    if (cycle == "error")
      config.validator.cycle_rule = CycleRule::Error;
    else if (cycle == "warn")
      config.validator.cycle_rule = CycleRule::Warn;
    else if (cycle == "off")
      config.validator.cycle_rule = CycleRule::Off;
    else
      throw ConfigError("unknown cycle_rule \"" + cycle + "\"");
    std::string ns = v->value("trigger_namespace", "both");
    if (ns == "functions")
      config.validator.trigger_namespace = TriggerNamespace::Functions;
    else if (ns == "events")
      config.validator.trigger_namespace = TriggerNamespace::Events;
    else if (ns == "both")
      config.validator.trigger_namespace = TriggerNamespace::Both;
    else
      throw ConfigError("unknown trigger_namespace \"" + ns + "\"");
  }

  if (auto p = doc.find("prompts"); p != doc.end()) {
    if (p->contains("template_dir") && !(*p)["template_dir"].is_null())
      config.template_dir = (*p)["template_dir"].get<std::string>();
    config.prompt.char_budget =
        p->value("char_budget", config.prompt.char_budget);
  }

  if (auto s = doc.find("scoring"); s != doc.end())
    config.scoring.count_informational =
        s->value("count_informational", config.scoring.count_informational);

  if (auto t = doc.find("toolchain"); t != doc.end()) {
    if (t->contains("solc_path") && !(*t)["solc_path"].is_null())
      config.toolchain.solc_path = (*t)["solc_path"].get<std::string>();
    if (t->contains("slither_path") && !(*t)["slither_path"].is_null())
      config.toolchain.slither_path = (*t)["slither_path"].get<std::string>();
    config.toolchain.default_solc_version = t->value(
        "default_solc_version", config.toolchain.default_solc_version);
    if (t->contains("fixture_dir") && !(*t)["fixture_dir"].is_null())
      config.toolchain.fixture_dir = (*t)["fixture_dir"].get<std::string>();
    config.toolchain.compile_timeout_s =
        t->value("compile_timeout_s", config.toolchain.compile_timeout_s);
    config.toolchain.analyze_timeout_s =
        t->value("analyze_timeout_s", config.toolchain.analyze_timeout_s);
  }

  if (doc.contains("artifact_root"))
    config.artifact_root = doc["artifact_root"].get<std::string>();

  config.check();
  return config;
}

PipelineConfig PipelineConfig::from_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::string text{std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>()};
  PipelineConfig config = from_json(text);

  // paths in the file are relative to the file
  fs::path base = path.parent_path();
  auto rebase = [&base](fs::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  rebase(config.backend.script_path);
  if (config.template_dir) rebase(*config.template_dir);
  if (config.toolchain.fixture_dir) rebase(*config.toolchain.fixture_dir);
  rebase(config.artifact_root);
  return config;
}

Pipeline::Pipeline(PipelineConfig config)
    : config_(std::move(config)),
      forge_(config_.template_dir ? TemplateSet::load(*config_.template_dir)
                                  : TemplateSet::defaults(),
             config_.prompt),
      toolchain_(config_.toolchain) {
  config_.check();
}

bool Pipeline::is_blocking(const Finding& finding) const {
  if (!severity_score(finding.severity) && !config_.scoring.count_informational)
    return false;
  return severity_rank(finding.severity) <=
         severity_rank(config_.security_pass_threshold);
}

FsmGeneration Pipeline::generate_fsm(Session& session,
                                     std::string_view requirement) const {
  Prompt first = forge_.build_r2f(requirement);

  CheckReport last_report;
  std::string last_failure;
  for (int attempt = 1; attempt <= config_.max_fsm_attempts; ++attempt) {
    std::string reply = attempt == 1
                            ? send(session, first)
                            : send(session, fsm_retry_prompt(last_failure));
    try {
      std::string payload = extract_fsm_payload(reply);
      SmartFsm fsm = parse_fsm(payload);
      CheckReport report = validate(fsm, config_.validator);
      if (report.passed) return {std::move(fsm), attempt, std::move(reply)};
      last_report = std::move(report);
      last_failure = describe_report(last_report);
    } catch (const NoPayloadFound& e) {
      last_report = CheckReport{};
      last_failure = std::string("- the reply contained no FSM document (") +
                     e.what() + ")\n";
    } catch (const ParseError& e) {
      last_report = CheckReport{};
      last_failure = std::string("- the FSM document is not valid JSON: ") +
                     e.what() + "\n";
    } catch (const SchemaError& e) {
      last_report = CheckReport{};
      last_failure =
          std::string("- the FSM document violates the schema: ") + e.what() +
          "\n";
    }
  }
  throw FsmGenerationFailed("no valid FSM after " +
                                std::to_string(config_.max_fsm_attempts) +
                                " attempts",
                            std::move(last_report));
}

Pipeline::CompileOutcome Pipeline::compile_step(const std::string& code) const {
  SemVer fallback =
      SemVer::parse(config_.toolchain.default_solc_version).value_or(SemVer{});
  if (code.empty())
    return {synthetic_failure(
                "the reply contained no extractable smart contract code",
                fallback.to_string()),
            fallback};
  SemVer version = fallback;
  try {
    version =
        toolchain_.select_compiler_version(code, toolchain_.available_versions());
  } catch (const NoSatisfyingVersion& e) {
    return {synthetic_failure(e.what(), fallback.to_string()), fallback};
  } catch (const ParseError& e) {
    return {synthetic_failure(
                std::string("unparseable solidity pragma: ") + e.what(),
                fallback.to_string()),
            fallback};
  }
  return {toolchain_.compile_contract(code, version), version};
}

Refinement Pipeline::refine_contract(Session& session,
                                     const SmartFsm& fsm) const {
  Prompt f2c = forge_.build_f2c();
  std::string first_prompt = f2c.text;
  if (config_.fresh_session_per_stage)
    first_prompt += "\nThe FSM to implement:\n" + serialize_fsm(fsm);

  std::string reply = send(session, first_prompt);

  auto try_extract = [](const std::string& text) -> std::string {
    try {
      return extract_code_payload(text);
    } catch (const NoPayloadFound&) {
      return "";
    }
  };

  Refinement refinement;
  int compile_rounds_left = config_.compile_feedback_rounds;
  int security_rounds_left = config_.security_feedback_rounds;
  std::optional<PromptKind> produced_by;
  std::string code = try_extract(reply);

  while (true) {
    IterationRecord iteration;
    iteration.code = code;
    iteration.produced_by = produced_by;

    CompileOutcome outcome = compile_step(code);
    iteration.compile = outcome.result;

    if (!outcome.result.success) {
      refinement.iterations.push_back(std::move(iteration));
      if (compile_rounds_left > 0) {
        --compile_rounds_left;
        std::vector<CompileIssue> errors;
        for (const CompileIssue& issue :
             refinement.iterations.back().compile.issues)
          if (issue.severity == IssueSeverity::Error) errors.push_back(issue);
        reply = send(session, forge_.build_compile_feedback(errors));
        code = try_extract(reply);
        produced_by = PromptKind::CompileFeedback;
        continue;
      }
      refinement.code = code;
      refinement.success = false;
      return refinement;
    }

    AnalysisResult analysis = toolchain_.analyze_contract(code, outcome.version);
    iteration.analysis = analysis;
    refinement.iterations.push_back(std::move(iteration));

    bool blocked = std::any_of(
        analysis.findings.begin(), analysis.findings.end(),
        [this](const Finding& finding) { return is_blocking(finding); });
    if (!blocked) {
      refinement.code = code;
      refinement.success = true;
      return refinement;
    }
    if (security_rounds_left > 0) {
      --security_rounds_left;
      reply = send(session, forge_.build_security_feedback(analysis.findings));
      code = try_extract(reply);
      produced_by = PromptKind::SecurityFeedback;
      continue;
    }
    refinement.code = code;
    refinement.success = false;
    return refinement;
  }
}

RunRecord Pipeline::run(std::string_view requirement, std::string run_id) const {
  auto started = std::chrono::steady_clock::now();

  RunRecord record;
  record.requirement = std::string(requirement);
  if (run_id.empty())
    run_id = "run-" + source_content_hash(requirement);

  // keep ids unique within the artifact root
  fs::path dir = config_.artifact_root / run_id;
  for (int suffix = 2; fs::exists(dir); ++suffix)
    dir = config_.artifact_root / (run_id + "-" + std::to_string(suffix));
  record.run_id = dir.filename().string();
  record.artifact_dir = dir;

  try {
    Session session = open_session(config_.backend);
    try {
      FsmGeneration generation = generate_fsm(session, requirement);
      record.fsm = std::move(generation.fsm);
      record.fsm_attempts = generation.attempts;
      record.fsm_raw_reply = std::move(generation.raw_reply);
    } catch (const FsmGenerationFailed& e) {
      record.status = RunStatus::FsmFailed;
      record.error = e.what();
      record.fsm_attempts = config_.max_fsm_attempts;
      record.transcript = session.turns();
      record.wall_time_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - started)
                                .count();
      persist(record);
      return record;
    }

    Session contract_session = config_.fresh_session_per_stage
                                   ? open_session(config_.backend)
                                   : Session{};
    Session& stage =
        config_.fresh_session_per_stage ? contract_session : session;

    Refinement refinement = refine_contract(stage, *record.fsm);
    record.iterations = std::move(refinement.iterations);
    record.final_contract = std::move(refinement.code);
    record.status =
        refinement.success ? RunStatus::Success : RunStatus::Exhausted;

    record.transcript = session.turns();
    if (config_.fresh_session_per_stage)
      record.transcript.insert(record.transcript.end(),
                               contract_session.turns().begin(),
                               contract_session.turns().end());
  } catch (const Error& e) {
    record.status = RunStatus::BackendError;
    record.error = e.what();
  }

  if (!record.iterations.empty()) {
    const IterationRecord& last = record.iterations.back();
    try {
      record.final_score =
          score_contract(last.compile, last.analysis, config_.scoring);
    } catch (const InconsistentInput&) {
      // compile succeeded but the analyzer never ran; leave unscored
    }
  }

  record.wall_time_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  persist(record);
  return record;
}

BatchResult Pipeline::evaluate_batch(
    const std::vector<std::string>& requirements, int samples) const {
  if (requirements.empty() || samples < 1)
    throw EmptyBatch("evaluate_batch needs requirements and samples >= 1");

  struct Task {
    std::size_t slot;
    std::size_t requirement;
    int sample;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < requirements.size(); ++i)
    for (int j = 1; j <= samples; ++j)
      tasks.push_back({tasks.size(), i, j});

  std::vector<RunRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t index = next.fetch_add(1);
      if (index >= tasks.size()) break;
      const Task& task = tasks[index];
      char id[64];
      std::snprintf(id, sizeof(id), "r%03zu-s%d", task.requirement,
                    task.sample);
      records[task.slot] = run(requirements[task.requirement], id);
    }
  };

  int threads = std::min<int>(config_.parallel_runs,
                              static_cast<int>(tasks.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<ContractScore> scores;
  scores.reserve(records.size());
  for (const RunRecord& record : records) {
    if (record.final_score) {
      scores.push_back(*record.final_score);
    } else {
      // no contract came out of the run; it counts as non-compiling
      ContractScore failed;
      failed.compiled = false;
      failed.vrs = 10.0;
      scores.push_back(failed);
    }
  }
  return {aggregate(scores), std::move(records)};
}

void Pipeline::persist(RunRecord& record) const {
  fs::create_directories(record.artifact_dir);

  write_file(record.artifact_dir / "requirement.txt",
             record.requirement.ends_with('\n') ? record.requirement
                                                : record.requirement + "\n");
  if (record.fsm)
    write_file(record.artifact_dir / "fsm.json", serialize_fsm(*record.fsm));
  write_file(record.artifact_dir / "transcript.json",
             transcript_to_json(record.transcript));

  for (std::size_t i = 0; i < record.iterations.size(); ++i) {
    const IterationRecord& iteration = record.iterations[i];
    fs::path iter_dir =
        record.artifact_dir / "iterations" / std::to_string(i + 1);
    fs::create_directories(iter_dir);
    write_file(iter_dir / "contract.sol", iteration.code);
    write_file(iter_dir / "compile.json",
               compile_result_to_json(iteration.compile));
    if (iteration.analysis)
      write_file(iter_dir / "analysis.json",
                 analysis_result_to_json(*iteration.analysis));
  }

  ordered_json report;
  report["run_id"] = record.run_id;
  report["status"] = to_string(record.status);
  report["requirement"] = record.requirement;
  report["fsm_attempts"] = record.fsm_attempts;
  ordered_json iterations = ordered_json::array();
  for (std::size_t i = 0; i < record.iterations.size(); ++i) {
    const IterationRecord& iteration = record.iterations[i];
    ordered_json ij;
    ij["index"] = i + 1;
    ij["produced_by"] = iteration.produced_by
                            ? ordered_json(to_string(*iteration.produced_by))
                            : ordered_json(nullptr);
    ij["compile_success"] = iteration.compile.success;
    int errors = 0;
    for (const CompileIssue& issue : iteration.compile.issues)
      if (issue.severity == IssueSeverity::Error) ++errors;
    ij["error_count"] = errors;
    if (iteration.analysis) {
      ij["finding_count"] =
          static_cast<int>(iteration.analysis->findings.size());
      int blocking = 0;
      for (const Finding& finding : iteration.analysis->findings)
        if (is_blocking(finding)) ++blocking;
      ij["blocking_findings"] = blocking;
    } else {
      ij["finding_count"] = nullptr;
      ij["blocking_findings"] = nullptr;
    }
    iterations.push_back(std::move(ij));
  }
  report["iterations"] = std::move(iterations);
  report["final_score"] = record.final_score
                              ? score_to_json(*record.final_score)
                              : ordered_json(nullptr);
  report["error"] =
      record.error.empty() ? ordered_json(nullptr) : ordered_json(record.error);
  write_file(record.artifact_dir / "report.json", report.dump(2) + "\n");

  // wall time is host-dependent and lives outside the deterministic record
  ordered_json timing;
  timing["wall_time_ms"] = record.wall_time_ms;
  write_file(record.artifact_dir / "timing.json", timing.dump(2) + "\n");
}

std::optional<ContractScore> rescore_run(const fs::path& run_dir,
                                         const ScoringConfig& config) {
  fs::path iterations_dir = run_dir / "iterations";
  std::error_code ec;
  if (!fs::exists(iterations_dir, ec)) return std::nullopt;

  int last = 0;
  for (const auto& entry : fs::directory_iterator(iterations_dir)) {
    int index = std::atoi(entry.path().filename().string().c_str());
    last = std::max(last, index);
  }
  if (last == 0) return std::nullopt;

  fs::path iter_dir = iterations_dir / std::to_string(last);
  std::ifstream compile_in(iter_dir / "compile.json", std::ios::binary);
  if (!compile_in) return std::nullopt;
  std::string compile_text{std::istreambuf_iterator<char>(compile_in),
                           std::istreambuf_iterator<char>()};
  CompileResult compile = compile_result_from_json(compile_text);

  std::optional<AnalysisResult> analysis;
  std::ifstream analysis_in(iter_dir / "analysis.json", std::ios::binary);
  if (analysis_in) {
    std::string analysis_text{std::istreambuf_iterator<char>(analysis_in),
                              std::istreambuf_iterator<char>()};
    analysis = analysis_result_from_json(analysis_text);
  }
  try {
    return score_contract(compile, analysis, config);
  } catch (const InconsistentInput&) {
    return std::nullopt;
  }
}

}  // namespace fsmscg
