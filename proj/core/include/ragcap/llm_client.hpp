#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ragcap/prompt.hpp"
#include "ragcap/store.hpp"

namespace ragcap {

struct GenerationRequest {
  std::string prompt_text;
  std::optional<std::vector<float>> soft_prefix;
  std::size_t max_tokens = 64;
  std::string request_id;

  /// Throws InvalidConfig on empty prompt or max_tokens == 0.
  void validate() const;
};

struct BackendConfig {
  std::string endpoint;  // http[s]://host[:port][/path]
  std::chrono::milliseconds timeout{30000};
  unsigned max_retries = 3;
  unsigned max_in_flight = 4;
  std::string token_env = "RAGCAP_API_TOKEN";
  std::chrono::milliseconds initial_backoff{200};
  bool send_soft_prefix = false;

  void validate() const;
};

/// Per-call diagnostics; the bearer token never appears here.
struct GenerationStats {
  unsigned attempts = 0;
  std::vector<std::string> attempt_log;
};

/// One POST of {request_id, prompt, max_tokens[, soft_prefix]} expecting {text}.
/// Connection errors, timeouts, HTTP 429 and 5xx are retried with exponential
/// backoff, up to 1 + max_retries attempts, always with the same request_id.
/// Throws BackendUnavailable, Timeout (last attempt timed out) or MalformedResponse.
std::string generate(const BackendConfig& cfg, const GenerationRequest& req,
                     GenerationStats* stats = nullptr);

/// JSON request body sent by generate().
std::string encode_request_body(const GenerationRequest& req, bool include_soft_prefix);
/// Extracts "text" from a response body. Throws MalformedResponse.
std::string decode_response_body(const std::string& body);

/// Everything a backend may look at for one call.
struct GenerationContext {
  const GenerationRequest& request;
  const PromptPayload& payload;
  std::span<const float> projected;
  const CaptionStore* support = nullptr;
  const CaptionStore* datastore = nullptr;
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  /// Must be safe to call concurrently.
  virtual std::string generate(const GenerationContext& ctx) = 0;
};

/// Remote text-generation service. Limits concurrent requests to max_in_flight.
class HttpBackend final : public GenerationBackend {
 public:
  explicit HttpBackend(BackendConfig cfg);
  ~HttpBackend() override;

  std::string generate(const GenerationContext& ctx) override;

  unsigned total_attempts() const;

 private:
  struct Admission;
  BackendConfig cfg_;
  std::unique_ptr<Admission> admission_;
};

/// Deterministic 1-NN decoder: the text of the store entry most similar to
/// `projected` (ties by id); with an empty store, the first similar caption.
/// Throws NoSource when both are empty.
std::string mock_generate(const PromptPayload& payload, const CaptionStore& store,
                          std::span<const float> projected);

/// Decodes against the context's datastore, or the support when the
/// datastore is empty.
class MockBackend final : public GenerationBackend {
 public:
  std::string generate(const GenerationContext& ctx) override;
};

struct TranscriptRecord {
  std::string request_id;
  std::string prompt;
  std::string response;

  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

/// Request/response log keyed by request_id. Saved as JSON lines sorted by
/// request_id, so the file does not depend on completion order.
class Transcript {
 public:
  Transcript() = default;
  Transcript(Transcript&& other) noexcept;
  Transcript& operator=(Transcript&& other) noexcept;

  static Transcript load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void add(TranscriptRecord record);
  std::optional<TranscriptRecord> find(const std::string& request_id) const;
  std::size_t size() const;
  std::vector<TranscriptRecord> records() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, TranscriptRecord> records_;
};

/// Forwards to `inner` and appends each successful exchange to `transcript`.
class RecordingBackend final : public GenerationBackend {
 public:
  RecordingBackend(GenerationBackend& inner, Transcript& transcript)
      : inner_(inner), transcript_(transcript) {}
  std::string generate(const GenerationContext& ctx) override;

 private:
  GenerationBackend& inner_;
  Transcript& transcript_;
};

/// Answers from a recorded transcript without any network activity.
/// Missing request ids or a changed prompt raise BackendUnavailable.
class ReplayBackend final : public GenerationBackend {
 public:
  explicit ReplayBackend(const Transcript& transcript) : transcript_(transcript) {}
  explicit ReplayBackend(Transcript&&) = delete;
  std::string generate(const GenerationContext& ctx) override;

 private:
  const Transcript& transcript_;
};

}  // namespace ragcap
