#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsmscg/dataset.hpp"
#include "fsmscg/pipeline.hpp"
#include "json.hpp"

namespace {

using namespace fsmscg;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsageError = 2;

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
}

// Requirements file: JSON array of strings for *.json, otherwise one
// requirement per line with blank lines skipped.
std::vector<std::string> load_requirements(const fs::path& path) {
  auto text = read_file(path);
  if (!text) throw ConfigError("cannot read requirements " + path.string());
  std::vector<std::string> requirements;
  if (path.extension() == ".json") {
    nlohmann::json doc = nlohmann::json::parse(*text);
    if (!doc.is_array())
      throw ConfigError("requirements JSON must be an array of strings");
    for (const auto& entry : doc) requirements.push_back(entry.get<std::string>());
  } else {
    std::istringstream in(*text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      requirements.push_back(line);
    }
  }
  return requirements;
}

PipelineConfig load_config(const std::string& config_flag) {
  std::string path = config_flag;
  if (path.empty())
    if (const char* env = std::getenv("FSMSCG_CONFIG")) path = env;
  if (path.empty()) return PipelineConfig{};
  return PipelineConfig::from_json_file(path);
}

int cmd_check_fsm(const std::string& path, const std::string& report_path,
                  const std::string& cycle_rule,
                  const std::string& trigger_namespace, bool as_json) {
  auto document = read_file(path);
  if (!document) {
    std::cerr << "error: cannot read " << path << "\n";
    return kUsageError;
  }

  ValidatorConfig config;
  if (cycle_rule == "error")
    config.cycle_rule = CycleRule::Error;
  else if (cycle_rule == "warn")
    config.cycle_rule = CycleRule::Warn;
  else if (cycle_rule == "off")
    config.cycle_rule = CycleRule::Off;
  else {
    std::cerr << "error: unknown --cycle-rule \"" << cycle_rule << "\"\n";
    return kUsageError;
  }
  if (trigger_namespace == "functions")
    config.trigger_namespace = TriggerNamespace::Functions;
  else if (trigger_namespace == "events")
    config.trigger_namespace = TriggerNamespace::Events;
  else if (trigger_namespace == "both")
    config.trigger_namespace = TriggerNamespace::Both;
  else {
    std::cerr << "error: unknown --trigger-namespace \"" << trigger_namespace
              << "\"\n";
    return kUsageError;
  }

  std::vector<std::string> warnings;
  SmartFsm fsm;
  try {
    fsm = parse_fsm(*document, &warnings);
  } catch (const ParseError& e) {
    std::cerr << "parse error at byte " << e.offset() << ": " << e.what()
              << "\n";
    return kDomainFailure;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kDomainFailure;
  }
  for (const std::string& warning : warnings)
    std::cerr << "warning: " << warning << "\n";

  CheckReport report = validate(fsm, config);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << report_path << "\n";
      return kUsageError;
    }
    out << report.to_json(config);
  }

  if (as_json) {
    std::cout << report.to_json(config);
  } else {
    for (const Violation& v : report.format_violations)
      std::cout << "format: " << to_string(v.code) << " " << v.subject << ": "
                << v.message << "\n";
    for (const Violation& v : report.graph_violations)
      std::cout << "graph: " << to_string(v.code)
                << (v.subject.empty() ? "" : " " + v.subject) << ": "
                << v.message << "\n";
    std::cout << (report.passed ? "PASS" : "FAIL") << "\n";
  }
  return report.passed ? kOk : kDomainFailure;
}

int cmd_generate(const std::string& requirement_text,
                 const std::string& requirements_path,
                 const std::string& config_flag, const std::string& out_dir,
                 bool as_json) {
  std::vector<std::string> requirements;
  try {
    PipelineConfig config = load_config(config_flag);
    if (!out_dir.empty()) config.artifact_root = out_dir;

    if (!requirement_text.empty())
      requirements.push_back(requirement_text);
    else
      requirements = load_requirements(requirements_path);
    if (requirements.empty()) {
      std::cerr << "error: no requirements given\n";
      return kUsageError;
    }

    Pipeline pipeline(std::move(config));
    bool all_ok = true;
    nlohmann::ordered_json report = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < requirements.size(); ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "r%03zu", i);
      RunRecord record = pipeline.run(requirements[i], id);
      if (as_json) {
        nlohmann::ordered_json entry;
        entry["run_id"] = record.run_id;
        entry["status"] = to_string(record.status);
        entry["fsm_attempts"] = record.fsm_attempts;
        entry["iterations"] = record.iterations.size();
        entry["vrs"] = record.final_score
                           ? nlohmann::ordered_json(record.final_score->vrs)
                           : nlohmann::ordered_json(nullptr);
        report.push_back(std::move(entry));
      } else {
        std::cout << record.run_id << " " << to_string(record.status);
        if (record.final_score) std::cout << " vrs=" << record.final_score->vrs;
        std::cout << "\n";
      }
      if (record.status != RunStatus::Success) {
        all_ok = false;
        if (!record.error.empty())
          std::cerr << record.run_id << ": " << record.error << "\n";
      }
    }
    if (as_json) std::cout << report.dump(2) << "\n";
    return all_ok ? kOk : kDomainFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
}

int cmd_score(const std::string& contracts_dir, const std::string& fixtures_dir,
              const std::string& config_flag, bool as_json) {
  try {
    PipelineConfig config = load_config(config_flag);
    if (!fixtures_dir.empty()) config.toolchain.fixture_dir = fixtures_dir;

    std::error_code ec;
    if (!fs::is_directory(contracts_dir, ec)) {
      std::cerr << "error: " << contracts_dir << " is not a directory\n";
      return kUsageError;
    }
    std::vector<fs::path> paths;
    for (const auto& entry : fs::recursive_directory_iterator(contracts_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".sol")
        paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) {
      std::cerr << "error: no .sol files under " << contracts_dir << "\n";
      return kUsageError;
    }

    Toolchain toolchain(config.toolchain);
    std::vector<ContractScore> scores;
    for (const fs::path& path : paths) {
      auto source = read_file(path);
      if (!source) {
        std::cerr << "error: cannot read " << path << "\n";
        return kUsageError;
      }
      SemVer version = toolchain.select_compiler_version(
          *source, toolchain.available_versions());
      CompileResult compile = toolchain.compile_contract(*source, version);
      std::optional<AnalysisResult> analysis;
      if (compile.success)
        analysis = toolchain.analyze_contract(*source, version);
      ContractScore score = score_contract(compile, analysis, config.scoring);
      std::cerr << path.filename().string() << ": "
                << (score.compiled ? "compiled" : "failed")
                << " vrs=" << score.vrs << "\n";
      scores.push_back(score);
    }

    MetricsSummary summary = aggregate(scores);
    std::cout << (as_json ? summary.to_json() : summary.to_table());
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
}

int cmd_bench(const std::string& requirements_path, int samples,
              const std::string& config_flag, const std::string& out_dir,
              bool as_json) {
  if (samples < 1) {
    std::cerr << "error: --samples must be >= 1\n";
    return kUsageError;
  }
  try {
    PipelineConfig config = load_config(config_flag);
    if (!out_dir.empty()) config.artifact_root = out_dir;
    std::vector<std::string> requirements =
        load_requirements(requirements_path);
    if (requirements.empty()) {
      std::cerr << "error: requirements file is empty\n";
      return kUsageError;
    }

    Pipeline pipeline(std::move(config));
    BatchResult batch = pipeline.evaluate_batch(requirements, samples);
    for (const RunRecord& record : batch.records)
      std::cerr << record.run_id << " " << to_string(record.status) << "\n";
    std::cout << (as_json ? batch.summary.to_json() : batch.summary.to_table());
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
}

int cmd_dataset_build(const std::string& corpus_dir, const std::string& out_dir,
                      const std::string& subsets_csv, double threshold,
                      int quality_filter, const std::string& config_flag,
                      bool as_json) {
  std::set<SubsetKind> which;
  {
    std::istringstream in(subsets_csv);
    std::string name;
    while (std::getline(in, name, ',')) {
      if (name.empty()) continue;
      auto kind = parse_subset_name(name);
      if (!kind) {
        std::cerr << "error: unknown subset \"" << name << "\"\n";
        return kUsageError;
      }
      which.insert(*kind);
    }
  }
  if (threshold <= 0.0 || threshold > 1.0) {
    std::cerr << "error: --threshold must be in (0, 1]\n";
    return kUsageError;
  }
  if (quality_filter < 0 || quality_filter > 10) {
    std::cerr << "error: --quality-filter must be in [0, 10]\n";
    return kUsageError;
  }

  try {
    PipelineConfig config = load_config(config_flag);

    std::vector<CorpusItem> corpus;
    try {
      corpus = load_corpus(corpus_dir);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsageError;
    }
    std::vector<CorpusItem> survivors = dedupe_corpus(corpus, threshold);
    std::cerr << "corpus: " << corpus.size() << " files, " << survivors.size()
              << " after dedupe\n";

    SynthesisTemplates templates =
        config.template_dir ? SynthesisTemplates::load(*config.template_dir)
                            : SynthesisTemplates::defaults();

    std::vector<MainItem> items;
    for (const CorpusItem& item : survivors) {
      Session session = open_session(config.backend);
      MainItem main =
          synthesize_rf(item.code, session, templates, config.validator);
      main.source_path = item.source_path.string();
      if (quality_filter > 0)
        apply_quality_filter(main, session, quality_filter, templates);
      std::cerr << item.source_path.filename().string() << ": "
                << (main.usable() ? "ok" : "filtered (" +
                                               main.filtered_reason + ")")
                << "\n";
      items.push_back(std::move(main));
    }

    fs::create_directories(out_dir);
    nlohmann::ordered_json counts;
    auto write_lines = [&](const std::string& name,
                           const std::vector<std::string>& lines) {
      std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
      if (!out) throw Error("cannot write " + name);
      for (const std::string& line : lines) out << line;
      counts[name] = lines.size();
      if (!as_json)
        std::cout << name << ": " << lines.size() << " records\n";
    };

    std::vector<std::string> main_lines;
    std::vector<MainItem> usable;
    for (const MainItem& item : items) {
      main_lines.push_back(main_item_to_json_line(item));
      if (item.usable()) usable.push_back(item);
    }
    write_lines("main.jsonl", main_lines);

    std::string f2c_instruction = PromptForge().build_f2c().text;
    for (SubsetKind kind : which) {
      std::vector<std::string> lines;
      for (const ChatRecord& record :
           build_subset(usable, kind, f2c_instruction))
        lines.push_back(chat_record_to_json_line(record));
      write_lines(to_string(kind) + ".jsonl", lines);
    }

    std::vector<std::string> a2c_lines;
    for (const CorpusItem& item : survivors)
      for (const AnnotationPair& pair : extract_a2c(item.code))
        a2c_lines.push_back(chat_record_to_json_line(
            ChatRecord{{{"user", pair.annotation}, {"assistant", pair.code}}}));
    write_lines("a2c.jsonl", a2c_lines);

    if (as_json) std::cout << counts.dump(2) << "\n";
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
}

int cmd_dataset_a2c(const std::string& corpus_dir, const std::string& out_dir,
                    bool as_json) {
  try {
    std::vector<CorpusItem> corpus;
    try {
      corpus = load_corpus(corpus_dir);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsageError;
    }

    std::vector<std::string> lines;
    for (const CorpusItem& item : corpus)
      for (const AnnotationPair& pair : extract_a2c(item.code))
        lines.push_back(chat_record_to_json_line(
            ChatRecord{{{"user", pair.annotation}, {"assistant", pair.code}}}));

    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "a2c.jsonl", std::ios::binary);
    if (!out) throw Error("cannot write a2c.jsonl");
    for (const std::string& line : lines) out << line;
    if (as_json)
      std::cout << "{\"a2c.jsonl\": " << lines.size() << "}\n";
    else
      std::cout << "a2c.jsonl: " << lines.size() << " records\n";
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FSM-guided smart contract generation toolkit"};
  app.require_subcommand(1);

  // check-fsm
  auto* check = app.add_subcommand(
      "check-fsm", "Validate an FSM document (format and graph checks)");
  std::string check_path, check_report, check_cycle = "error",
                                        check_ns = "both";
  bool check_json = false;
  check->add_option("path", check_path, "FSM document")->required();
  check->add_option("--report", check_report, "write the JSON report here");
  check->add_option("--cycle-rule", check_cycle, "error|warn|off");
  check->add_option("--trigger-namespace", check_ns, "functions|events|both");
  check->add_flag("--json", check_json, "print the JSON report on stdout");

  // generate
  auto* generate = app.add_subcommand(
      "generate", "Run the generation pipeline for requirements");
  std::string gen_requirement, gen_requirements, gen_config, gen_out;
  bool gen_json = false;
  generate->add_option("--requirement", gen_requirement,
                       "one requirement, inline");
  generate->add_option("--requirements", gen_requirements,
                       "file of requirements (lines or JSON array)");
  generate->add_option("--config", gen_config, "pipeline config JSON");
  generate->add_option("--out", gen_out, "artifact root directory");
  generate->add_flag("--json", gen_json, "print run summaries as JSON");

  // score
  auto* score = app.add_subcommand(
      "score", "Compile, analyze, and score a directory of contracts");
  std::string score_contracts, score_fixtures, score_config;
  bool score_json = false;
  score->add_option("--contracts", score_contracts, "directory of .sol files")
      ->required();
  score->add_option("--fixtures", score_fixtures,
                    "recorded tool outputs (hermetic replay)");
  score->add_option("--config", score_config, "pipeline config JSON");
  score->add_flag("--json", score_json, "print JSON instead of the table");

  // bench
  auto* bench = app.add_subcommand(
      "bench", "Batch-evaluate requirements and print the metrics table");
  std::string bench_requirements, bench_config, bench_out;
  int bench_samples = 1;
  bool bench_json = false;
  bench->add_option("--requirements", bench_requirements, "requirements file")
      ->required();
  bench->add_option("--samples", bench_samples, "samples per requirement");
  bench->add_option("--config", bench_config, "pipeline config JSON");
  bench->add_option("--out", bench_out, "artifact root directory");
  bench->add_flag("--json", bench_json, "print JSON instead of the table");

  // dataset
  auto* dataset = app.add_subcommand(
      "dataset", "Build fine-tuning datasets from a contract corpus");
  dataset->require_subcommand(1);
  auto* build = dataset->add_subcommand(
      "build", "Dedupe, synthesize R/F, and emit subset jsonl files");
  std::string ds_corpus, ds_out, ds_subsets = "r2f2c,r2f,f2c,c2f,r2c",
                                 ds_config;
  double ds_threshold = 0.9;
  int ds_quality = 0;
  bool ds_json = false;
  build->add_option("--corpus", ds_corpus, "directory of .sol files")
      ->required();
  build->add_option("--out", ds_out, "output directory")->required();
  build->add_option("--subsets", ds_subsets, "comma list of subsets");
  build->add_option("--threshold", ds_threshold,
                    "near-duplicate Jaccard threshold");
  build->add_option("--quality-filter", ds_quality,
                    "minimum backend quality rating 1..10 (0 disables)");
  build->add_option("--config", ds_config, "pipeline config JSON (backend)");
  build->add_flag("--json", ds_json, "print record counts as JSON");
  auto* a2c = dataset->add_subcommand(
      "a2c", "Extract annotation/function pairs only");
  std::string a2c_corpus, a2c_out;
  bool a2c_json = false;
  a2c->add_option("--corpus", a2c_corpus, "directory of .sol files")
      ->required();
  a2c->add_option("--out", a2c_out, "output directory")->required();
  a2c->add_flag("--json", a2c_json, "print record counts as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return kUsageError;
  }

  if (check->parsed())
    return cmd_check_fsm(check_path, check_report, check_cycle, check_ns,
                         check_json);
  if (generate->parsed()) {
    if (gen_requirement.empty() == gen_requirements.empty()) {
      std::cerr
          << "error: give exactly one of --requirement or --requirements\n";
      return kUsageError;
    }
    return cmd_generate(gen_requirement, gen_requirements, gen_config, gen_out,
                        gen_json);
  }
  if (score->parsed())
    return cmd_score(score_contracts, score_fixtures, score_config,
                     score_json);
  if (bench->parsed())
    return cmd_bench(bench_requirements, bench_samples, bench_config,
                     bench_out, bench_json);
  if (dataset->parsed()) {
    if (build->parsed())
      return cmd_dataset_build(ds_corpus, ds_out, ds_subsets, ds_threshold,
                               ds_quality, ds_config, ds_json);
    if (a2c->parsed()) return cmd_dataset_a2c(a2c_corpus, a2c_out, a2c_json);
  }
  std::cerr << app.help() << "\n";
  return kUsageError;
}
