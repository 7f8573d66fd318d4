#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fsmscg/errors.hpp"
#include "fsmscg/fsm.hpp"
#include "fsmscg/gateway.hpp"
#include "fsmscg/validate.hpp"

namespace fsmscg {

class InvalidItem : public Error {
 public:
  using Error::Error;
};

struct CorpusItem {
  std::filesystem::path source_path;
  std::string code;
  // Hash of the comment-stripped, whitespace-collapsed code; byte-equal
  // contracts modulo comments and layout share a fingerprint.
  std::string fingerprint;
  // Hashed token 5-grams of the same normalized form.
  std::unordered_set<std::uint64_t> shingles;
};

CorpusItem make_corpus_item(std::filesystem::path source_path,
                            std::string code);

// Every *.sol file under `dir` (recursive), ordered by path.
std::vector<CorpusItem> load_corpus(const std::filesystem::path& dir);

// Shingle-set similarity; two shingle-free items compare by fingerprint.
double jaccard_similarity(const CorpusItem& a, const CorpusItem& b);

// Groups items transitively by Jaccard >= threshold (exact fingerprint
// duplicates always group) and keeps one representative per group: the
// longest code, ties broken by lexicographically smallest path. Survivor
// order follows the input.
std::vector<CorpusItem> dedupe_corpus(const std::vector<CorpusItem>& items,
                                      double threshold = 0.9);

struct MainItem {
  std::string requirement;
  std::optional<SmartFsm> fsm;
  std::string code;
  bool fsm_valid = false;
  // First violation code, "EXTRACTION_FAILED" when no FSM could be pulled
  // from the reply, or "LOW_QUALITY_SCORE" from the optional scored
  // filter. Empty when the item is usable.
  std::string filtered_reason;
  std::optional<int> quality_score;
  std::string source_path;

  bool usable() const { return fsm_valid && filtered_reason.empty(); }
};

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRecord {
  std::vector<ChatMessage> messages;
  bool operator==(const ChatRecord&) const = default;
};

// Prompts used to reverse a contract into its FSM and requirement, plus
// the optional quality-rating prompt. Placeholders: {{code}} in all
// three, {{fsm_schema}} in the FSM one, {{requirement}} and {{fsm}} in
// the rating one.
struct SynthesisTemplates {
  std::string contract_to_fsm;
  std::string contract_to_requirement;
  std::string quality_rating;

  static SynthesisTemplates defaults();
  // Optional overrides <dir>/c2f_synthesis.txt, <dir>/c2r_synthesis.txt,
  // <dir>/quality_rating.txt.
  static SynthesisTemplates load(const std::filesystem::path& dir);
};

// Asks the backend for the FSM and the requirement describing `code`,
// validating the FSM; an invalid or missing FSM flags the item instead of
// failing. Backend errors propagate. `code` must be non-empty.
MainItem synthesize_rf(std::string_view code, Session& session,
                       const SynthesisTemplates& templates =
                           SynthesisTemplates::defaults(),
                       const ValidatorConfig& validator = {});

// Optional scored filter: asks the backend to rate the item 1..10 and
// flags it with LOW_QUALITY_SCORE below `min_score`. Items that already
// carry a filtered_reason are left alone. An unparseable rating flags the
// item rather than passing it.
void apply_quality_filter(MainItem& item, Session& session, int min_score,
                          const SynthesisTemplates& templates =
                              SynthesisTemplates::defaults());

enum class SubsetKind { R2F2C, R2F, F2C, C2F, R2C };

std::string to_string(SubsetKind kind);
std::optional<SubsetKind> parse_subset_name(std::string_view name);

// Projects fsm-valid items into chat records. FSM text renders through
// serialize_fsm so payloads re-parse to the source machine. R2F2C uses
// `f2c_instruction` (the contract-generation prompt) as its second user
// turn. Throws InvalidItem on an item with fsm_valid=false.
std::vector<ChatRecord> build_subset(const std::vector<MainItem>& items,
                                     SubsetKind kind,
                                     const std::string& f2c_instruction);

struct AnnotationPair {
  std::string annotation;
  std::string code;  // starts at the `function` keyword, balanced body
  bool operator==(const AnnotationPair&) const = default;
};

// Comment blocks (///, /** */, or contiguous // lines) immediately above
// a `function` declaration with a brace body, paired in source order.
// Functions without such a comment are skipped.
std::vector<AnnotationPair> extract_a2c(std::string_view code);

// Serialization for the jsonl outputs (one record per line).
std::string chat_record_to_json_line(const ChatRecord& record);
std::string main_item_to_json_line(const MainItem& item);

}  // namespace fsmscg
