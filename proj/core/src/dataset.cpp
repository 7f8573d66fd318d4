#include "fsmscg/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>

#include "fsmscg/prompts.hpp"
#include "json.hpp"
#include "soliditytext.hpp"

namespace fsmscg {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

constexpr std::size_t kShingleWidth = 5;

constexpr const char* kDefaultC2f =
    "Analyze the following smart contract and model it as a finite state "
    "machine covering its states, variables, functions, events, and state "
    "transitions.\n"
    "\n"
    "Return only the FSM content as a single JSON object, without any other "
    "information, following this JSON format exactly:\n"
    "{{fsm_schema}}\n"
    "\n"
    "Smart contract:\n"
    "{{code}}\n";

constexpr const char* kDefaultC2r =
    "Write the user requirement that the following smart contract fulfills, "
    "as a short natural-language description of what the contract must do. "
    "Return only the requirement text.\n"
    "\n"
    "Smart contract:\n"
    "{{code}}\n";

constexpr const char* kDefaultQualityRating =
    "Rate the quality of this training item on a scale of 1 to 10, judging "
    "whether the requirement accurately describes the contract and the FSM "
    "faithfully models it. Return only the number.\n"
    "\n"
    "Requirement:\n"
    "{{requirement}}\n"
    "\n"
    "FSM:\n"
    "{{fsm}}\n"
    "\n"
    "Smart contract:\n"
    "{{code}}\n";

std::string trim_copy(std::string_view text) {
  while (!text.empty() &&
         std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return std::string(text);
}

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

CorpusItem make_corpus_item(fs::path source_path, std::string code) {
  CorpusItem item;
  item.source_path = std::move(source_path);
  std::string normalized = internal::strip_comments_and_normalize(code);
  item.fingerprint = hex64(fnv1a64(normalized));

  std::vector<std::string> tokens = internal::tokenize_code(code);
  if (tokens.size() >= kShingleWidth) {
    for (std::size_t i = 0; i + kShingleWidth <= tokens.size(); ++i) {
      std::string shingle;
      for (std::size_t j = 0; j < kShingleWidth; ++j) {
        if (j > 0) shingle.push_back('\x1f');
        shingle += tokens[i + j];
      }
      item.shingles.insert(fnv1a64(shingle));
    }
  }
  item.code = std::move(code);
  return item;
}

std::vector<CorpusItem> load_corpus(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw Error("corpus directory " + dir.string() + " does not exist");

  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".sol")
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());

  std::vector<CorpusItem> items;
  items.reserve(paths.size());
  for (const fs::path& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::string code{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
    items.push_back(make_corpus_item(path, std::move(code)));
  }
  return items;
}

double jaccard_similarity(const CorpusItem& a, const CorpusItem& b) {
  if (a.shingles.empty() && b.shingles.empty())
    return a.fingerprint == b.fingerprint ? 1.0 : 0.0;
  if (a.shingles.empty() || b.shingles.empty()) return 0.0;

  const auto& small = a.shingles.size() <= b.shingles.size() ? a.shingles
                                                             : b.shingles;
  const auto& large = a.shingles.size() <= b.shingles.size() ? b.shingles
                                                             : a.shingles;
  std::size_t intersection = 0;
  for (std::uint64_t shingle : small)
    if (large.count(shingle)) ++intersection;
  std::size_t unions = a.shingles.size() + b.shingles.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(unions);
}

std::vector<CorpusItem> dedupe_corpus(const std::vector<CorpusItem>& items,
                                      double threshold) {
  if (threshold <= 0.0 || threshold > 1.0)
    throw ContractViolation("dedupe threshold must be in (0, 1]");

  const std::size_t n = items.size();
  DisjointSet groups(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (items[i].fingerprint == items[j].fingerprint ||
          jaccard_similarity(items[i], items[j]) >= threshold)
        groups.unite(i, j);
    }

  // representative per group: longest code, then smallest path
  std::vector<std::size_t> winner(n, SIZE_MAX);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = groups.find(i);
    if (winner[root] == SIZE_MAX) {
      winner[root] = i;
      continue;
    }
    const CorpusItem& current = items[winner[root]];
    const CorpusItem& candidate = items[i];
    if (candidate.code.size() > current.code.size() ||
        (candidate.code.size() == current.code.size() &&
         candidate.source_path < current.source_path))
      winner[root] = i;
  }

  std::vector<CorpusItem> survivors;
  for (std::size_t i = 0; i < n; ++i)
    if (winner[groups.find(i)] == i) survivors.push_back(items[i]);
  return survivors;
}

SynthesisTemplates SynthesisTemplates::defaults() {
  return {kDefaultC2f, kDefaultC2r, kDefaultQualityRating};
}

SynthesisTemplates SynthesisTemplates::load(const fs::path& dir) {
  SynthesisTemplates templates = defaults();
  auto maybe_read = [&](const char* file, std::string& slot) {
    fs::path path = dir / file;
    std::error_code ec;
    if (!fs::exists(path, ec)) return;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TemplateError("cannot read template " + path.string());
    slot = std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  };
  maybe_read("c2f_synthesis.txt", templates.contract_to_fsm);
  maybe_read("c2r_synthesis.txt", templates.contract_to_requirement);
  maybe_read("quality_rating.txt", templates.quality_rating);
  return templates;
}

MainItem synthesize_rf(std::string_view code, Session& session,
                       const SynthesisTemplates& templates,
                       const ValidatorConfig& validator) {
  if (trim_copy(code).empty())
    throw ContractViolation("synthesize_rf: code is empty");

  MainItem item;
  item.code = std::string(code);

  std::string fsm_prompt =
      render_template(templates.contract_to_fsm,
                      {{"code", item.code},
                       {"fsm_schema", canonical_fsm_schema()}});
  std::string fsm_reply = send(session, fsm_prompt);
  try {
    std::string payload = extract_fsm_payload(fsm_reply);
    SmartFsm fsm = parse_fsm(payload);
    CheckReport report = validate(fsm, validator);
    item.fsm = std::move(fsm);
    if (report.passed) {
      item.fsm_valid = true;
    } else {
      const Violation& first = report.format_violations.empty()
                                   ? report.graph_violations.front()
                                   : report.format_violations.front();
      item.filtered_reason = to_string(first.code);
    }
  } catch (const NoPayloadFound&) {
    item.filtered_reason = "EXTRACTION_FAILED";
  } catch (const ParseError&) {
    item.filtered_reason = "EXTRACTION_FAILED";
  } catch (const SchemaError&) {
    item.filtered_reason = "EXTRACTION_FAILED";
  }

  std::string req_prompt = render_template(templates.contract_to_requirement,
                                           {{"code", item.code}});
  item.requirement = trim_copy(send(session, req_prompt));
  return item;
}

void apply_quality_filter(MainItem& item, Session& session, int min_score,
                          const SynthesisTemplates& templates) {
  if (!item.filtered_reason.empty() || !item.fsm_valid) return;

  std::string prompt =
      render_template(templates.quality_rating,
                      {{"requirement", item.requirement},
                       {"fsm", serialize_fsm(*item.fsm)},
                       {"code", item.code}});
  std::string reply = send(session, prompt);

  std::size_t digit = reply.find_first_of("0123456789");
  if (digit == std::string::npos) {
    item.filtered_reason = "LOW_QUALITY_SCORE";
    return;
  }
  int score = std::atoi(reply.c_str() + digit);
  item.quality_score = score;
  if (score < min_score) item.filtered_reason = "LOW_QUALITY_SCORE";
}

std::string to_string(SubsetKind kind) {
  switch (kind) {
    case SubsetKind::R2F2C: return "r2f2c";
    case SubsetKind::R2F: return "r2f";
    case SubsetKind::F2C: return "f2c";
    case SubsetKind::C2F: return "c2f";
    case SubsetKind::R2C: return "r2c";
  }
  return "unknown";
}

std::optional<SubsetKind> parse_subset_name(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(
      static_cast<unsigned char>(c))));
  if (lower == "r2f2c") return SubsetKind::R2F2C;
  if (lower == "r2f") return SubsetKind::R2F;
  if (lower == "f2c") return SubsetKind::F2C;
  if (lower == "c2f") return SubsetKind::C2F;
  if (lower == "r2c") return SubsetKind::R2C;
  return std::nullopt;
}

std::vector<ChatRecord> build_subset(const std::vector<MainItem>& items,
                                     SubsetKind kind,
                                     const std::string& f2c_instruction) {
  std::vector<ChatRecord> records;
  records.reserve(items.size());
  for (const MainItem& item : items) {
    if (!item.fsm_valid || !item.fsm)
      throw InvalidItem("subset projection requires fsm_valid items");
    std::string fsm_text = serialize_fsm(*item.fsm);
    ChatRecord record;
    switch (kind) {
      case SubsetKind::R2F:
        record.messages = {{"user", item.requirement},
                           {"assistant", fsm_text}};
        break;
      case SubsetKind::F2C:
        record.messages = {{"user", fsm_text}, {"assistant", item.code}};
        break;
      case SubsetKind::C2F:
        record.messages = {{"user", item.code}, {"assistant", fsm_text}};
        break;
      case SubsetKind::R2C:
        record.messages = {{"user", item.requirement},
                           {"assistant", item.code}};
        break;
      case SubsetKind::R2F2C:
        record.messages = {{"user", item.requirement},
                           {"assistant", fsm_text},
                           {"user", f2c_instruction},
                           {"assistant", item.code}};
        break;
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<AnnotationPair> extract_a2c(std::string_view source) {
  using internal::SourceSpan;
  using internal::SpanKind;
  const std::vector<SourceSpan> spans = internal::scan_spans(source);

  auto span_at = [&](std::size_t offset) -> const SourceSpan* {
    for (const SourceSpan& span : spans)
      if (offset >= span.begin && offset < span.end) return &span;
    return nullptr;
  };

  auto is_ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
  };

  // `function` keyword occurrences at code level
  std::vector<std::size_t> keyword_offsets;
  for (const SourceSpan& span : spans) {
    if (span.kind != SpanKind::Code) continue;
    std::string_view text = source.substr(span.begin, span.end - span.begin);
    std::size_t pos = 0;
    while ((pos = text.find("function", pos)) != std::string_view::npos) {
      std::size_t global = span.begin + pos;
      bool left_ok = global == 0 || !is_ident(source[global - 1]);
      std::size_t after = global + 8;
      bool right_ok = after >= source.size() || !is_ident(source[after]);
      if (left_ok && right_ok) keyword_offsets.push_back(global);
      pos += 8;
    }
  }

  std::vector<AnnotationPair> pairs;
  for (std::size_t fn : keyword_offsets) {
    // the nearest non-whitespace before the keyword must close a comment
    // sitting directly above (a blank line breaks the pairing)
    std::size_t q = fn;
    while (q > 0 &&
           std::isspace(static_cast<unsigned char>(source[q - 1])))
      --q;
    if (q == 0) continue;
    std::string_view gap_to_fn = source.substr(q, fn - q);
    if (std::count(gap_to_fn.begin(), gap_to_fn.end(), '\n') > 1) continue;
    const SourceSpan* tail = span_at(q - 1);
    if (tail == nullptr || tail->end != q) continue;
    if (tail->kind != SpanKind::LineComment &&
        tail->kind != SpanKind::BlockComment)
      continue;

    std::size_t group_begin = tail->begin;
    if (tail->kind == SpanKind::BlockComment) {
      // only doc blocks annotate
      if (source.substr(tail->begin, 3) != "/**") continue;
    } else {
      // absorb the contiguous run of // lines directly above; line
      // comments are always separated by a whitespace-only code span
      // holding the newline
      std::size_t tail_index = 0;
      for (std::size_t i = 0; i < spans.size(); ++i)
        if (&spans[i] == tail) tail_index = i;
      while (tail_index >= 2) {
        const SourceSpan& gap_span = spans[tail_index - 1];
        const SourceSpan& prev = spans[tail_index - 2];
        if (gap_span.kind != SpanKind::Code ||
            prev.kind != SpanKind::LineComment)
          break;
        std::string_view gap =
            source.substr(gap_span.begin, gap_span.end - gap_span.begin);
        if (gap.find_first_not_of(" \t\r\n") != std::string_view::npos) break;
        if (std::count(gap.begin(), gap.end(), '\n') != 1) break;
        tail_index -= 2;
        group_begin = prev.begin;
      }
    }

    // capture the declaration through its balanced brace body; a `;`
    // before any `{` means a bodyless declaration, which is skipped
    std::size_t body_end = std::string_view::npos;
    int depth = 0;
    bool entered = false;
    for (const SourceSpan& span : spans) {
      if (span.kind != SpanKind::Code || span.end <= fn) continue;
      std::size_t from = std::max(span.begin, fn);
      for (std::size_t i = from; i < span.end; ++i) {
        char c = source[i];
        if (!entered && c == ';') {
          body_end = std::string_view::npos;
          goto captured;
        }
        if (c == '{') {
          ++depth;
          entered = true;
        } else if (c == '}') {
          if (entered && --depth == 0) {
            body_end = i + 1;
            goto captured;
          }
        }
      }
    }
  captured:
    if (body_end == std::string_view::npos) continue;

    AnnotationPair pair;
    pair.annotation = trim_copy(source.substr(group_begin, q - group_begin));
    pair.code = std::string(source.substr(fn, body_end - fn));
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::string chat_record_to_json_line(const ChatRecord& record) {
  ordered_json messages = ordered_json::array();
  for (const ChatMessage& message : record.messages)
    messages.push_back({{"role", message.role}, {"content", message.content}});
  ordered_json doc;
  doc["messages"] = std::move(messages);
  return doc.dump() + "\n";
}

std::string main_item_to_json_line(const MainItem& item) {
  ordered_json doc;
  doc["requirement"] = item.requirement;
  doc["fsm"] = item.fsm ? ordered_json::parse(serialize_fsm(*item.fsm))
                        : ordered_json(nullptr);
  doc["code"] = item.code;
  doc["fsm_valid"] = item.fsm_valid;
  doc["filtered_reason"] = item.filtered_reason.empty()
                               ? ordered_json(nullptr)
                               : ordered_json(item.filtered_reason);
  doc["quality_score"] = item.quality_score ? ordered_json(*item.quality_score)
                                            : ordered_json(nullptr);
  doc["source"] = item.source_path;
  return doc.dump() + "\n";
}

}  // namespace fsmscg
