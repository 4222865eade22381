#include "rhetoric/llm_gateway.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "rhetoric/digest.hpp"
#include "rhetoric/text.hpp"

namespace rhetoric {

namespace {

using nlohmann::ordered_json;

long cp_tokens(const std::string& s) {
  try {
    return static_cast<long>(cp_length(s));
  } catch (...) {
    return static_cast<long>(s.size());
  }
}

// Deterministic replies from a fixture table keyed by doc_id. A string
// value is the reply (empty string models the no-output case); an object
// {"failure": "..."} injects a gateway failure.
class MockTransport final : public Transport {
 public:
  explicit MockTransport(const BackendConfig& cfg) {
    if (cfg.fixture_path.empty()) {
      throw std::runtime_error("mock backend requires fixture_path");
    }
    std::ifstream in(cfg.fixture_path);
    if (!in) throw std::runtime_error("cannot open mock fixture: " + cfg.fixture_path);
    ordered_json j;
    in >> j;
    for (const auto& [doc_id, value] : j.items()) table_[doc_id] = value;
  }

  std::variant<TransportReply, TransportError> attempt(const std::string& doc_id,
                                                       const MessageSeq& messages,
                                                       const BackendConfig&) override {
    const auto it = table_.find(doc_id);
    std::string reply;
    if (it != table_.end()) {
      if (it->second.is_string()) {
        reply = it->second.get<std::string>();
      } else if (it->second.is_object() && it->second.contains("failure")) {
        const auto kind = failure_from_string(it->second["failure"].get<std::string>());
        if (!kind) {
          return TransportError{FailureKind::ProtocolError, "bad fixture failure kind",
                                false};
        }
        return TransportError{*kind, "injected by fixture",
                              *kind == FailureKind::Timeout};
      }
    }
    TransportReply out;
    out.text = reply;
    for (const auto& m : messages) out.usage.prompt_tokens += cp_tokens(m.content);
    out.usage.completion_tokens = cp_tokens(reply);
    return out;
  }

 private:
  std::map<std::string, ordered_json> table_;
};

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const BackendConfig& cfg) {
    if (cfg.endpoint.empty()) {
      throw std::runtime_error("backend " + cfg.name + " has no endpoint configured");
    }
    if (!cfg.credential_env.empty()) {
      const char* key = std::getenv(cfg.credential_env.c_str());
      if (!key || !*key) {
        throw std::runtime_error("missing credentials: environment variable " +
                                 cfg.credential_env + " is not set");
      }
      bearer_ = key;
    }
    const auto scheme_end = cfg.endpoint.find("//");
    const auto slash = cfg.endpoint.find(
        '/', scheme_end == std::string::npos ? 0 : scheme_end + 2);
    base_ = slash == std::string::npos ? cfg.endpoint : cfg.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : cfg.endpoint.substr(slash);
  }

  std::variant<TransportReply, TransportError> attempt(const std::string&,
                                                       const MessageSeq& messages,
                                                       const BackendConfig& cfg) override {
    httplib::Client client(base_);
    const auto timeout = std::chrono::duration<double>(cfg.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));

    httplib::Headers headers;
    if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

    ordered_json body;
    body["model"] = cfg.model.empty() ? cfg.name : cfg.model;
    body["messages"] = ordered_json::array();
    for (const auto& m : messages) {
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    body["temperature"] = cfg.temperature;
    body["top_p"] = cfg.top_p;
    body["max_tokens"] = cfg.max_output_tokens;

    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      return TransportError{FailureKind::Timeout,
                            "transport error: " + httplib::to_string(res.error()), true};
    }
    if (res->status == 429 || res->status >= 500) {
      return TransportError{FailureKind::ProtocolError,
                            "status " + std::to_string(res->status), true};
    }
    if (res->status != 200) {
      // content-policy rejections surface as client errors
      if (res->body.find("content_filter") != std::string::npos ||
          res->body.find("data_inspection_failed") != std::string::npos) {
        return TransportError{FailureKind::Refusal, "status " + std::to_string(res->status),
                              false};
      }
      return TransportError{FailureKind::ProtocolError,
                            "status " + std::to_string(res->status), false};
    }
    ordered_json j;
    try {
      j = ordered_json::parse(res->body);
    } catch (const std::exception& e) {
      return TransportError{FailureKind::ProtocolError,
                            std::string("unparseable payload: ") + e.what(), true};
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
      return TransportError{FailureKind::ProtocolError, "payload missing choices", true};
    }
    const auto& choice = j["choices"][0];
    if (choice.value("finish_reason", "") == "content_filter") {
      return TransportError{FailureKind::Refusal, "content filter", false};
    }
    if (!choice.contains("message") || !choice["message"].contains("content")) {
      return TransportError{FailureKind::ProtocolError, "payload missing message content",
                            true};
    }
    TransportReply out;
    out.text = choice["message"]["content"].is_null()
                   ? std::string()
                   : choice["message"]["content"].get<std::string>();
    if (j.contains("usage")) {
      out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
      out.usage.completion_tokens = j["usage"].value("completion_tokens", 0L);
    }
    return out;
  }

 private:
  std::string base_;
  std::string path_;
  std::string bearer_;
};

}  // namespace

std::string to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::NoOutput: return "no_output";
    case FailureKind::Refusal: return "refusal";
    case FailureKind::Timeout: return "timeout";
    case FailureKind::ProtocolError: return "protocol_error";
  }
  return "protocol_error";
}

std::optional<FailureKind> failure_from_string(const std::string& s) {
  if (s == "no_output") return FailureKind::NoOutput;
  if (s == "refusal") return FailureKind::Refusal;
  if (s == "timeout") return FailureKind::Timeout;
  if (s == "protocol_error") return FailureKind::ProtocolError;
  return std::nullopt;
}

std::unique_ptr<Transport> make_transport(const BackendConfig& cfg) {
  if (cfg.kind == "mock") return std::make_unique<MockTransport>(cfg);
  if (cfg.kind == "http") return std::make_unique<HttpTransport>(cfg);
  throw std::runtime_error("unknown backend kind: " + cfg.kind);
}

ChatClient::ChatClient(BackendConfig cfg, std::optional<std::string> cache_dir,
                       std::unique_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), cache_dir_(std::move(cache_dir)) {
  if (cfg_.timeout_seconds <= 0) throw std::runtime_error("timeout must be positive");
  if (!transport_) transport_ = make_transport(cfg_);
  if (cache_dir_) std::filesystem::create_directories(*cache_dir_);
}

std::string ChatClient::cache_key(const MessageSeq& messages) const {
  char params[96];
  std::snprintf(params, sizeof(params), "t=%.6g;p=%.6g;n=%d", cfg_.temperature, cfg_.top_p,
                cfg_.max_output_tokens);
  std::string material = cfg_.name;
  material += '\x1f';
  material += cfg_.model;
  material += '\x1f';
  material += params;
  for (const auto& m : messages) {
    material += '\x1e';
    material += m.role;
    material += '\x1f';
    material += m.content;
  }
  return sha256_hex(material);
}

std::optional<RawOutput> ChatClient::cache_lookup(const std::string& key) const {
  if (!cache_dir_) return std::nullopt;
  const auto path = std::filesystem::path(*cache_dir_) / (key + ".json");
  std::lock_guard<std::mutex> lock(mutex_);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    ordered_json j;
    in >> j;
    RawOutput out;
    out.backend = cfg_.name;
    out.text = j.at("text").get<std::string>();
    out.from_cache = true;  // cache hits cost zero new tokens
    return out;
  } catch (...) {
    return std::nullopt;
  }
}

void ChatClient::cache_store(const std::string& key, const RawOutput& out) const {
  if (!cache_dir_ || !out.text) return;
  const auto path = std::filesystem::path(*cache_dir_) / (key + ".json");
  ordered_json j;
  j["backend"] = out.backend;
  j["text"] = *out.text;
  j["prompt_tokens"] = out.usage.prompt_tokens;
  j["completion_tokens"] = out.usage.completion_tokens;
  std::lock_guard<std::mutex> lock(mutex_);
  std::ofstream f(path);
  f << j.dump();
}

RawOutput ChatClient::complete(const std::string& doc_id, const MessageSeq& messages) {
  if (messages.empty() || messages.back().role != "user") {
    throw std::invalid_argument("message sequence must end with a user turn");
  }
  const std::string key = cache_key(messages);
  if (auto hit = cache_lookup(key)) {
    hit->doc_id = doc_id;
    return *hit;
  }

  RawOutput out;
  out.doc_id = doc_id;
  out.backend = cfg_.name;

  int attempt = 0;
  while (true) {
    auto result = transport_->attempt(doc_id, messages, cfg_);
    if (const auto* reply = std::get_if<TransportReply>(&result)) {
      out.usage = reply->usage;
      {
        std::lock_guard<std::mutex> lock(mutex_);
        total_ += reply->usage;
      }
      if (reply->text.empty()) {
        out.failure = FailureKind::NoOutput;
        out.failure_detail = "empty reply";
      } else {
        out.text = reply->text;
        cache_store(key, out);
      }
      return out;
    }
    const auto& err = std::get<TransportError>(result);
    if (!err.retryable || attempt >= cfg_.max_retries) {
      out.failure = err.kind;
      out.failure_detail = err.detail;
      return out;
    }
    if (cfg_.backoff_base_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(cfg_.backoff_base_ms * (1L << attempt)));
    }
    ++attempt;
  }
}

std::vector<RawOutput> ChatClient::complete_batch(const std::vector<CompletionJob>& jobs,
                                                  int parallelism) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  std::vector<RawOutput> out(jobs.size());

  // Identical jobs resolve once; copies are reported as cache hits so
  // token counters stay additive.
  std::map<std::string, std::size_t> first_with_key;
  std::vector<std::size_t> representatives;
  std::vector<std::pair<std::size_t, std::size_t>> duplicates;  // (job, representative)
  std::vector<std::string> keys(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    keys[i] = cache_key(jobs[i].messages);
    const auto [it, inserted] = first_with_key.emplace(keys[i], i);
    if (inserted) {
      representatives.push_back(i);
    } else {
      duplicates.emplace_back(i, it->second);
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= representatives.size()) return;
      const std::size_t i = representatives[slot];
      try {
        out[i] = complete(jobs[i].doc_id, jobs[i].messages);
      } catch (const std::exception& e) {
        out[i].doc_id = jobs[i].doc_id;
        out[i].backend = cfg_.name;
        out[i].failure = FailureKind::ProtocolError;
        out[i].failure_detail = e.what();
      }
    }
  };
  const int workers = static_cast<int>(
      std::min<std::size_t>(representatives.size(), static_cast<std::size_t>(parallelism)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& [dup, rep] : duplicates) {
    out[dup] = out[rep];
    out[dup].doc_id = jobs[dup].doc_id;
    if (out[dup].ok()) {
      out[dup].from_cache = true;
      out[dup].usage = {};
    }
  }
  return out;
}

TokenUsage ChatClient::total_usage() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return total_;
}

}  // namespace rhetoric
