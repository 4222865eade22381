#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rhetoric/prompting.hpp"

namespace rhetoric {

struct BackendConfig {
  std::string name;            // unique per run config ("qwen-max", "mock", ...)
  std::string kind = "mock";   // "mock" | "http"
  std::string endpoint;        // chat-completion URL (http kind)
  std::string model;           // model id on the wire; defaults to name
  std::string credential_env;  // env var holding the bearer token
  std::string fixture_path;    // mock kind: doc_id -> reply table
  double temperature = 0.0;
  double top_p = 1.0;
  int max_output_tokens = 2048;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int backoff_base_ms = 250;
};

enum class FailureKind { NoOutput, Refusal, Timeout, ProtocolError };

std::string to_string(FailureKind kind);
std::optional<FailureKind> failure_from_string(const std::string& s);

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    return *this;
  }
};

// Exactly one of text / failure is set.
struct RawOutput {
  std::string doc_id;
  std::string backend;
  std::optional<std::string> text;
  std::optional<FailureKind> failure;
  std::string failure_detail;
  TokenUsage usage;
  bool from_cache = false;

  bool ok() const { return text.has_value(); }
};

struct TransportReply {
  std::string text;
  TokenUsage usage;
};

struct TransportError {
  FailureKind kind = FailureKind::ProtocolError;
  std::string detail;
  bool retryable = false;
};

// One request attempt against a backend; retries, caching and failure
// classification live in ChatClient.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::variant<TransportReply, TransportError> attempt(
      const std::string& doc_id, const MessageSeq& messages, const BackendConfig& cfg) = 0;
};

// Builds the transport for cfg.kind; validates fixture/credentials up
// front so misconfiguration fails at startup, naming what is missing.
std::unique_ptr<Transport> make_transport(const BackendConfig& cfg);

struct CompletionJob {
  std::string doc_id;
  MessageSeq messages;
};

// Uniform chat-completion client: retry with exponential backoff
// (timeouts and transient protocol errors only), disk cache keyed by
// (backend, messages, sampling params), token accounting, bounded
// parallel batches with per-job isolation.
class ChatClient {
 public:
  ChatClient(BackendConfig cfg, std::optional<std::string> cache_dir,
             std::unique_ptr<Transport> transport = nullptr);

  RawOutput complete(const std::string& doc_id, const MessageSeq& messages);

  // Outputs in input order; identical jobs in one batch are resolved
  // once and duplicated as cache hits.
  std::vector<RawOutput> complete_batch(const std::vector<CompletionJob>& jobs,
                                        int parallelism);

  TokenUsage total_usage() const;
  const BackendConfig& config() const { return cfg_; }

 private:
  std::string cache_key(const MessageSeq& messages) const;
  std::optional<RawOutput> cache_lookup(const std::string& key) const;
  void cache_store(const std::string& key, const RawOutput& out) const;

  BackendConfig cfg_;
  std::unique_ptr<Transport> transport_;
  std::optional<std::string> cache_dir_;
  mutable std::mutex mutex_;
  TokenUsage total_;
};

}  // namespace rhetoric
