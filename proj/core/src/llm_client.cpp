#include "ragcap/llm_client.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "json_util.hpp"
#include "ragcap/error.hpp"
#include "ragcap/retrieval.hpp"

namespace ragcap {
namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "endpoint must look like http://host:port/path, got '" +
                                              url + "'");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidConfig, "unsupported endpoint scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

void GenerationRequest::validate() const {
  if (prompt_text.empty()) throw Error(ErrorCode::InvalidConfig, "prompt_text is empty");
  if (max_tokens == 0) throw Error(ErrorCode::InvalidConfig, "max_tokens must be >= 1");
}

void BackendConfig::validate() const {
  if (timeout.count() <= 0) throw Error(ErrorCode::InvalidConfig, "timeout must be > 0 ms");
  if (max_in_flight == 0) throw Error(ErrorCode::InvalidConfig, "max_in_flight must be >= 1");
  if (initial_backoff.count() < 0) throw Error(ErrorCode::InvalidConfig, "backoff must be >= 0");
  parse_endpoint(endpoint);
}

std::string encode_request_body(const GenerationRequest& req, bool include_soft_prefix) {
  nlohmann::ordered_json body;
  body["request_id"] = req.request_id;
  body["prompt"] = req.prompt_text;
  body["max_tokens"] = req.max_tokens;
  if (include_soft_prefix && req.soft_prefix) {
    body["soft_prefix"] = json_util::float_array(*req.soft_prefix);
  }
  return body.dump();
}

std::string decode_response_body(const std::string& body) {
  const auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(ErrorCode::MalformedResponse, "response is not a JSON object");
  }
  const auto it = parsed.find("text");
  if (it == parsed.end() || !it->is_string()) {
    throw Error(ErrorCode::MalformedResponse, "response lacks a string \"text\" field");
  }
  auto text = it->get<std::string>();
  if (text.empty()) throw Error(ErrorCode::MalformedResponse, "response text is empty");
  return text;
}

std::string generate(const BackendConfig& cfg, const GenerationRequest& req,
                     GenerationStats* stats) {
  cfg.validate();
  req.validate();
  const Endpoint endpoint = parse_endpoint(cfg.endpoint);
  const std::string body = encode_request_body(req, cfg.send_soft_prefix);

  httplib::Headers headers;
  if (!cfg.token_env.empty()) {
    if (const char* token = std::getenv(cfg.token_env.c_str()); token && *token) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  httplib::Client client(endpoint.scheme_host_port);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
  const auto micros =
      std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  auto note = [&](std::string line) {
    if (stats) stats->attempt_log.push_back(std::move(line));
  };

  const unsigned attempts = 1 + cfg.max_retries;
  auto backoff = cfg.initial_backoff;
  bool last_was_timeout = false;
  std::string last_error;
  for (unsigned attempt = 1; attempt <= attempts; ++attempt) {
    if (stats) stats->attempts = attempt;
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(endpoint.path, headers, body, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - started;

    if (res) {
      if (res->status == 200) {
        note("attempt " + std::to_string(attempt) + ": 200");
        return decode_response_body(res->body);
      }
      last_was_timeout = false;
      last_error = "HTTP " + std::to_string(res->status);
      note("attempt " + std::to_string(attempt) + ": " + last_error);
      if (!retryable_status(res->status)) {
        throw Error(ErrorCode::BackendUnavailable,
                    "request " + req.request_id + " rejected with " + last_error);
      }
    } else {
      const auto err = res.error();
      last_was_timeout = err == httplib::Error::ConnectionTimeout ||
                         (err == httplib::Error::Read && elapsed >= cfg.timeout * 9 / 10);
      last_error = last_was_timeout ? std::string("timeout") : httplib::to_string(err);
      note("attempt " + std::to_string(attempt) + ": " + last_error);
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  if (last_was_timeout) {
    throw Error(ErrorCode::Timeout, "request " + req.request_id + " timed out after " +
                                        std::to_string(attempts) + " attempts");
  }
  throw Error(ErrorCode::BackendUnavailable, "request " + req.request_id + " failed after " +
                                                 std::to_string(attempts) +
                                                 " attempts (last: " + last_error + ")");
}

struct HttpBackend::Admission {
  std::mutex mutex;
  std::condition_variable cv;
  unsigned in_flight = 0;
  std::atomic<unsigned> attempts{0};
};

HttpBackend::HttpBackend(BackendConfig cfg)
    : cfg_(std::move(cfg)), admission_(std::make_unique<Admission>()) {
  cfg_.validate();
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::generate(const GenerationContext& ctx) {
  {
    std::unique_lock lock(admission_->mutex);
    admission_->cv.wait(lock, [&] { return admission_->in_flight < cfg_.max_in_flight; });
    ++admission_->in_flight;
  }
  struct Release {
    Admission& a;
    ~Release() {
      {
        std::lock_guard lock(a.mutex);
        --a.in_flight;
      }
      a.cv.notify_one();
    }
  } release{*admission_};

  GenerationStats stats;
  try {
    auto text = ragcap::generate(cfg_, ctx.request, &stats);
    admission_->attempts += stats.attempts;
    return text;
  } catch (...) {
    admission_->attempts += stats.attempts;
    throw;
  }
}

unsigned HttpBackend::total_attempts() const { return admission_->attempts.load(); }

std::string mock_generate(const PromptPayload& payload, const CaptionStore& store,
                          std::span<const float> projected) {
  if (!store.empty()) {
    const auto best = retrieve_topk(projected, store, 1);
    return store.text(best.front().index);
  }
  if (!payload.similar_captions.empty()) return payload.similar_captions.front();
  throw Error(ErrorCode::NoSource, "mock decoder has neither a store nor similar captions");
}

std::string MockBackend::generate(const GenerationContext& ctx) {
  const CaptionStore* store = ctx.datastore;
  if ((store == nullptr || store->empty()) && ctx.support != nullptr) store = ctx.support;
  if (store == nullptr) {
    static const CaptionStore kEmpty;
    return mock_generate(ctx.payload, kEmpty, ctx.projected);
  }
  return mock_generate(ctx.payload, *store, ctx.projected);
}

Transcript::Transcript(Transcript&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  records_ = std::move(other.records_);
}

Transcript& Transcript::operator=(Transcript&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    records_ = std::move(other.records_);
  }
  return *this;
}

Transcript Transcript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open transcript " + path.string());
  Transcript t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("request_id") ||
        !j.contains("prompt") || !j.contains("response")) {
      throw Error(ErrorCode::MalformedRecord,
                  path.string() + ":" + std::to_string(line_no) + ": bad transcript record");
    }
    t.add(TranscriptRecord{j["request_id"].get<std::string>(), j["prompt"].get<std::string>(),
                           j["response"].get<std::string>()});
  }
  return t;
}

void Transcript::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write transcript " + path.string());
  std::lock_guard lock(mutex_);
  for (const auto& [id, rec] : records_) {
    nlohmann::ordered_json j;
    j["request_id"] = rec.request_id;
    j["prompt"] = rec.prompt;
    j["response"] = rec.response;
    out << j.dump() << '\n';
  }
}

void Transcript::add(TranscriptRecord record) {
  std::lock_guard lock(mutex_);
  auto id = record.request_id;
  records_.insert_or_assign(std::move(id), std::move(record));
}

std::optional<TranscriptRecord> Transcript::find(const std::string& request_id) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(request_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::vector<TranscriptRecord> Transcript::records() const {
  std::lock_guard lock(mutex_);
  std::vector<TranscriptRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, rec] : records_) out.push_back(rec);
  return out;
}

std::string RecordingBackend::generate(const GenerationContext& ctx) {
  auto text = inner_.generate(ctx);
  transcript_.add(TranscriptRecord{ctx.request.request_id, ctx.request.prompt_text, text});
  return text;
}

std::string ReplayBackend::generate(const GenerationContext& ctx) {
  const auto rec = transcript_.find(ctx.request.request_id);
  if (!rec) {
    throw Error(ErrorCode::BackendUnavailable,
                "transcript has no record for request " + ctx.request.request_id);
  }
  if (rec->prompt != ctx.request.prompt_text) {
    throw Error(ErrorCode::BackendUnavailable,
                "prompt for request " + ctx.request.request_id + " differs from the transcript");
  }
  return rec->response;
}

}  // namespace ragcap
