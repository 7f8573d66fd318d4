#include "fsmscg/gateway.hpp"

#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

namespace fsmscg {

using json = nlohmann::json;

namespace internal {

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // `transcript` ends with the user turn being answered; `send_index` is
  // the 0-based count of user turns before it.
  virtual std::string complete(const std::vector<ChatTurn>& transcript,
                               std::size_t send_index) = 0;
};

namespace {

class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptedReply> script)
      : script_(std::move(script)), consumed_(script_.size(), false) {}

  std::string complete(const std::vector<ChatTurn>& transcript,
                       std::size_t send_index) override {
    const std::string& prompt = transcript.back().text;
    for (std::size_t i = 0; i < script_.size(); ++i) {
      if (consumed_[i]) continue;
      const ScriptedReply& entry = script_[i];
      bool matched = false;
      if (std::holds_alternative<int>(entry.match))
        matched = std::get<int>(entry.match) ==
                  static_cast<int>(send_index);
      else
        matched = prompt.find(std::get<std::string>(entry.match)) !=
                  std::string::npos;
      if (matched) {
        consumed_[i] = true;
        return entry.reply;
      }
    }
    throw ScriptExhausted("no scripted reply matches send " +
                          std::to_string(send_index));
  }

 private:
  std::vector<ScriptedReply> script_;
  std::vector<bool> consumed_;
};

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading '/'
};

SplitUrl split_url(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos)
    throw ConfigError("endpoint must be a full URL: " + url);
  std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(const BackendConfig& config)
      : config_(config), url_(split_url(config.endpoint)) {
    if (const char* key = std::getenv(config.api_key_env.c_str()))
      api_key_ = key;
  }

  void probe() {
    httplib::Client client(url_.base);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    auto res = client.Get(url_.path);
    // any HTTP status proves the endpoint answers; only transport
    // failures count as unreachable
    if (!res)
      throw BackendUnreachable("cannot reach " + config_.endpoint + ": " +
                               httplib::to_string(res.error()));
  }

  std::string complete(const std::vector<ChatTurn>& transcript,
                       std::size_t /*send_index*/) override {
    json body;
    body["model"] = config_.model;
    json messages = json::array();
    for (const ChatTurn& turn : transcript)
      messages.push_back({{"role", turn.role}, {"content", turn.text}});
    body["messages"] = std::move(messages);
    body["temperature"] = config_.temperature;
    std::string payload = body.dump();

    int attempts = config_.max_retries + 1;
    int backoff_ms = config_.backoff_base_ms;
    std::string last_error = "request failed";
    bool last_was_timeout = false;
    int last_status = 0;

    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms *= 4;
      }
      httplib::Client client(url_.base);
      client.set_connection_timeout(config_.timeout_s, 0);
      client.set_read_timeout(config_.timeout_s, 0);
      client.set_write_timeout(config_.timeout_s, 0);
      httplib::Headers headers;
      if (!api_key_.empty())
        headers.emplace("Authorization", "Bearer " + api_key_);

      auto res = client.Post(url_.path, headers, payload, "application/json");
      if (!res) {
        auto err = res.error();
        last_was_timeout = err == httplib::Error::ConnectionTimeout ||
                           err == httplib::Error::Read ||
                           err == httplib::Error::Write;
        last_error = httplib::to_string(err);
        last_status = 0;
        continue;  // transport failures are retryable
      }
      if (res->status == 200) {
        json reply;
        try {
          reply = json::parse(res->body);
        } catch (const json::parse_error& e) {
          throw BackendError(std::string("unparseable backend reply: ") +
                                 e.what(),
                             res->status);
        }
        try {
          return reply.at("choices").at(0).at("message").at("content")
              .get<std::string>();
        } catch (const json::exception&) {
          throw BackendError("backend reply lacks choices[0].message.content",
                             res->status);
        }
      }
      bool retryable = res->status == 408 || res->status == 429 ||
                       res->status >= 500;
      if (!retryable)
        throw BackendError("backend returned status " +
                               std::to_string(res->status) + ": " + res->body,
                           res->status);
      last_error = "status " + std::to_string(res->status);
      last_status = res->status;
      last_was_timeout = false;
    }

    if (last_was_timeout)
      throw Timeout("backend timed out after " + std::to_string(attempts) +
                    " attempts");
    throw BackendError("backend failed after " + std::to_string(attempts) +
                           " attempts: " + last_error,
                       last_status);
  }

 private:
  BackendConfig config_;
  SplitUrl url_;
  std::string api_key_;
};

std::atomic<std::uint64_t> session_counter{0};

}  // namespace
}  // namespace internal

std::vector<ScriptedReply> load_reply_script(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScriptLoadError("cannot read script " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScriptLoadError("bad script " + path.string() + ": " + e.what());
  }
  if (!doc.is_array())
    throw ScriptLoadError("script " + path.string() +
                          " must be a JSON array of replies");
  std::vector<ScriptedReply> script;
  for (const json& entry : doc) {
    if (!entry.is_object() || !entry.contains("reply") ||
        !entry["reply"].is_string())
      throw ScriptLoadError("script entry without a \"reply\" string in " +
                            path.string());
    ScriptedReply reply;
    reply.reply = entry["reply"].get<std::string>();
    if (auto it = entry.find("match"); it != entry.end()) {
      if (it->is_number_integer())
        reply.match = it->get<int>();
      else if (it->is_string())
        reply.match = it->get<std::string>();
      else
        throw ScriptLoadError(
            "script \"match\" must be a turn index or a substring in " +
            path.string());
    } else {
      reply.match = std::string();  // empty substring matches any send
    }
    script.push_back(std::move(reply));
  }
  return script;
}

Session open_session(const BackendConfig& config) {
  Session session;
  session.id_ =
      "session-" + std::to_string(++internal::session_counter);
  session.max_prompt_chars_ = config.max_prompt_chars;

  switch (config.kind) {
    case BackendKind::ScriptedMock: {
      if (config.script_path.empty())
        throw ConfigError("scripted-mock backend requires a script path");
      session.backend_ = std::make_shared<internal::ScriptedBackend>(
          load_reply_script(config.script_path));
      break;
    }
    case BackendKind::HttpChat: {
      if (config.endpoint.empty() || config.model.empty())
        throw ConfigError("http-chat backend requires endpoint and model");
      if (config.temperature < 0)
        throw ConfigError("temperature must be >= 0");
      auto backend = std::make_shared<internal::HttpChatBackend>(config);
      backend->probe();
      session.backend_ = backend;
      break;
    }
  }
  return session;
}

Session open_scripted_session(std::vector<ScriptedReply> script) {
  Session session;
  session.id_ =
      "session-" + std::to_string(++internal::session_counter);
  session.max_prompt_chars_ = BackendConfig{}.max_prompt_chars;
  session.backend_ =
      std::make_shared<internal::ScriptedBackend>(std::move(script));
  return session;
}

std::string send(Session& session, std::string_view prompt_text) {
  if (!session.backend_) throw ConfigError("session is not open");
  if (session.max_prompt_chars_ > 0 &&
      prompt_text.size() > session.max_prompt_chars_)
    throw PromptTooLong("prompt of " + std::to_string(prompt_text.size()) +
                        " chars exceeds backend limit of " +
                        std::to_string(session.max_prompt_chars_));

  std::size_t send_index = session.turns_.size() / 2;
  session.turns_.push_back({"user", std::string(prompt_text)});
  std::string reply;
  try {
    reply = session.backend_->complete(session.turns_, send_index);
  } catch (...) {
    session.turns_.pop_back();  // failed sends leave the transcript intact
    throw;
  }
  session.turns_.push_back({"assistant", reply});
  return reply;
}

std::string send(Session& session, const Prompt& prompt) {
  return send(session, std::string_view(prompt.text));
}

std::string extract_fsm_payload(std::string_view reply) {
  for (std::size_t start = reply.find('{'); start != std::string_view::npos;
       start = reply.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < reply.size(); ++i) {
      char c = reply[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          std::string candidate(reply.substr(start, i - start + 1));
          if (json::accept(candidate)) return candidate;
          break;  // balanced but not JSON; try the next opening brace
        }
      }
    }
  }
  throw NoPayloadFound("reply contains no JSON object");
}

namespace {

bool starts_like_solidity(std::string_view text) {
  static constexpr std::string_view keywords[] = {
      "pragma", "contract", "library", "interface", "abstract", "import"};
  if (text.substr(0, 7) == "// SPDX" || text.substr(0, 8) == "/* SPDX" ||
      text.substr(0, 2) == "/*" || text.substr(0, 7) == "//SPDX")
    return true;
  for (std::string_view kw : keywords) {
    if (text.substr(0, kw.size()) == kw &&
        (text.size() == kw.size() ||
         !std::isalnum(static_cast<unsigned char>(text[kw.size()]))))
      return true;
  }
  return false;
}

std::string_view trimmed_view(std::string_view text) {
  while (!text.empty() &&
         std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

}  // namespace

std::string extract_code_payload(std::string_view reply) {
  std::size_t fence = reply.find("```");
  if (fence != std::string_view::npos) {
    std::size_t line_end = reply.find('\n', fence + 3);
    if (line_end != std::string_view::npos) {
      std::size_t content_begin = line_end + 1;
      std::size_t closing = reply.find("\n```", content_begin);
      if (closing != std::string_view::npos) {
        std::string content(
            reply.substr(content_begin, closing - content_begin));
        if (!trimmed_view(content).empty()) return content;
      }
    }
    // unterminated fence: fall through to the bare-source heuristic
  }

  std::string_view body = trimmed_view(reply);
  if (!body.empty() && starts_like_solidity(body)) return std::string(body);
  throw NoPayloadFound("reply contains no code block or contract source");
}

}  // namespace fsmscg
