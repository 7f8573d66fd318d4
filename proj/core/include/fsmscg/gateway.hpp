#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fsmscg/errors.hpp"
#include "fsmscg/prompts.hpp"

namespace fsmscg {

class BackendUnreachable : public Error {
 public:
  using Error::Error;
};
class ScriptLoadError : public Error {
 public:
  using Error::Error;
};
class ScriptExhausted : public Error {
 public:
  using Error::Error;
};
class Timeout : public Error {
 public:
  using Error::Error;
};
class BackendError : public Error {
 public:
  BackendError(const std::string& what, int status)
      : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};
class PromptTooLong : public Error {
 public:
  using Error::Error;
};
class NoPayloadFound : public Error {
 public:
  using Error::Error;
};

enum class BackendKind { HttpChat, ScriptedMock };

struct BackendConfig {
  BackendKind kind = BackendKind::ScriptedMock;
  // http-chat: full URL of an OpenAI-compatible chat-completions route.
  std::string endpoint;
  std::string model;
  // scripted-mock: path to the reply script (JSON list, see ScriptedReply).
  std::filesystem::path script_path;
  double temperature = 0.2;
  int timeout_s = 120;
  int max_retries = 2;
  int backoff_base_ms = 1000;  // doubles twice: 1s then 4s by default
  std::size_t max_prompt_chars = 200000;
  // Bearer token read from this environment variable when set there.
  std::string api_key_env = "FSMSCG_API_KEY";
};

// One canned reply: matches either the 0-based index of the send within
// the session, or a substring of the incoming prompt text. Each entry is
// consumed at most once; the first unconsumed match wins.
struct ScriptedReply {
  std::variant<int, std::string> match;
  std::string reply;
};

std::vector<ScriptedReply> load_reply_script(
    const std::filesystem::path& path);

struct ChatTurn {
  std::string role;  // "user" or "assistant"
  std::string text;
  bool operator==(const ChatTurn&) const = default;
};

namespace internal {
class ChatBackend;
}

// A stateful conversation bound to one backend. Confine each session to
// one run at a time; distinct sessions are independent.
class Session {
 public:
  const std::string& id() const { return id_; }
  const std::vector<ChatTurn>& turns() const { return turns_; }

 private:
  friend Session open_session(const BackendConfig& config);
  friend Session open_scripted_session(std::vector<ScriptedReply> script);
  friend std::string send(Session& session, std::string_view prompt_text);

  std::string id_;
  std::vector<ChatTurn> turns_;
  std::shared_ptr<internal::ChatBackend> backend_;
  std::size_t max_prompt_chars_ = 0;
};

// Validates the config, constructs the backend, and probes an http
// endpoint (any HTTP response counts as reachable). Throws ConfigError,
// ScriptLoadError, or BackendUnreachable.
Session open_session(const BackendConfig& config);

// Test/dataset convenience: a scripted session from in-memory replies.
Session open_scripted_session(std::vector<ScriptedReply> script);

// Appends the user turn, obtains the assistant reply (with retry and
// backoff on transient http failures), appends it, and returns it.
// Transcripts are append-only.
std::string send(Session& session, const Prompt& prompt);
std::string send(Session& session, std::string_view prompt_text);

// First balanced top-level JSON object in a model reply, string- and
// escape-aware, returned byte-exact; code fences and prose around it are
// ignored. Throws NoPayloadFound.
std::string extract_fsm_payload(std::string_view reply);

// Content of the first fenced code block; otherwise the whole reply when
// it starts like Solidity source (pragma/contract/import/...). Throws
// NoPayloadFound.
std::string extract_code_payload(std::string_view reply);

}  // namespace fsmscg
