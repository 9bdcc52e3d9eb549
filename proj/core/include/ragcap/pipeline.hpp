#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ragcap/embedding.hpp"
#include "ragcap/error.hpp"
#include "ragcap/llm_client.hpp"
#include "ragcap/projection.hpp"
#include "ragcap/prompt.hpp"
#include "ragcap/retrieval.hpp"
#include "ragcap/store.hpp"

namespace ragcap {

/// A precomputed query embedding (typically audio) with its item id.
struct QueryItem {
  std::string id;
  Embedding embedding;
};

struct ItemError {
  std::string item_id;
  ErrorCode code = ErrorCode::InvalidConfig;
  std::string message;
};

struct TrainingExample {
  std::string item_id;
  PromptPayload payload;
  std::string target;
  std::vector<std::string> similar_ids;
  std::vector<double> retrieval_similarities;
};

struct TrainingBatch {
  std::vector<TrainingExample> examples;
  std::vector<ItemError> errors;
};

/// One example per corpus caption: the caption's own embedding is mapped
/// through `mapper`, and similar captions are drawn from `datastore` by
/// similarity-window selection keyed on the caption id. Per-item failures are
/// collected in `errors`.
TrainingBatch make_training_examples(const CaptionStore& corpus, const CaptionStore& datastore,
                                     const LinearMapper& mapper, const RetrievalConfig& cfg,
                                     std::string_view fixed_prompt = kDefaultFixedPrompt);

/// Support and datastore used together at inference time.
struct DomainProfile {
  CaptionStore support;
  CaptionStore datastore;
  std::string label;

  /// Throws EmptyStore for an empty support and DimMismatch when dims differ.
  void validate() const;
};

DomainProfile make_profile(CaptionStore support, CaptionStore datastore, std::string label);

enum class AdaptMode { Replace, Augment };

/// Replace swaps in the new stores; Augment appends them with text dedup.
/// An empty `label` keeps the current one (Augment) or takes the new
/// support's label (Replace).
DomainProfile adapt_domain(const DomainProfile& current, const CaptionStore& new_support,
                           const CaptionStore& new_datastore, AdaptMode mode,
                           std::string label = {});

enum class RetrievalQuery { Audio, Projected };

struct CaptionSettings {
  ProjectionConfig projection;
  bool use_projection = true;
  RetrievalConfig retrieval;  // k only; the similarity window is not used here
  RetrievalQuery retrieval_query = RetrievalQuery::Audio;
  std::string fixed_prompt{kDefaultFixedPrompt};
  std::size_t max_tokens = 64;
  unsigned parallelism = 1;
};

struct RetrievedCaption {
  std::string id;
  std::string text;
  double similarity = 0.0;

  friend bool operator==(const RetrievedCaption&, const RetrievedCaption&) = default;
};

struct CaptionResult {
  std::string item_id;
  std::string caption;
  std::vector<RetrievedCaption> retrieved;
  double projection_weights_entropy = 0.0;

  friend bool operator==(const CaptionResult&, const CaptionResult&) = default;
};

using CaptionOutcome = std::variant<CaptionResult, ItemError>;

/// Projects the query onto the support, retrieves the top-k captions from the
/// datastore (no similarity window), and asks the backend once. An empty
/// datastore yields a payload without similar captions.
CaptionResult caption_one(std::string_view item_id, std::span<const float> query,
                          const DomainProfile& profile, const LinearMapper& mapper,
                          const CaptionSettings& settings, GenerationBackend& backend);

/// caption_one per item, up to settings.parallelism at a time. Output order
/// matches input order and failures are isolated per item.
std::vector<CaptionOutcome> caption_batch(std::span<const QueryItem> items,
                                          const DomainProfile& profile,
                                          const LinearMapper& mapper,
                                          const CaptionSettings& settings,
                                          GenerationBackend& backend);

// Line-delimited JSON records.
std::string to_json_line(const TrainingExample& example);
std::string to_json_line(const CaptionOutcome& outcome);
std::string to_json_line(const ItemError& error);

/// Query file: one `id \t v1 v2 ...` line per item. Vectors are normalized on read.
std::vector<QueryItem> read_queries(const std::filesystem::path& path);
void write_queries(std::span<const QueryItem> items, const std::filesystem::path& path);

}  // namespace ragcap
