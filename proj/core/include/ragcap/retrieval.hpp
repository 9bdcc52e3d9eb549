#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ragcap/store.hpp"

namespace ragcap {

enum class RetrievalMode { Training, Inference };

/// k and the similarity window. The window is closed on both ends and is
/// only consulted in Training mode.
struct RetrievalConfig {
  std::size_t k = 3;
  double s_min = 0.75;
  double s_max = 0.85;
  RetrievalMode mode = RetrievalMode::Inference;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig unless k >= 1 and -1 <= s_min <= s_max <= 1.
  void validate() const;
};

struct RetrievalHit {
  std::size_t index = 0;  // row in the datastore
  double similarity = 0.0;

  friend bool operator==(const RetrievalHit&, const RetrievalHit&) = default;
};

/// Cosine similarity of `query` against every entry, in store order.
/// `threads` splits the scan into contiguous chunks; results do not depend on it.
/// Throws DimMismatch, EmptyStore.
std::vector<RetrievalHit> scan_similarities(std::span<const float> query,
                                            const CaptionStore& datastore, unsigned threads = 1);

/// The k most similar entries ordered by (-similarity, id).
std::vector<RetrievalHit> retrieve_topk(std::span<const float> query,
                                        const CaptionStore& datastore, std::size_t k,
                                        unsigned threads = 1);

/// Similarity-window selection used when building training prompts: all
/// entries with s_min <= sim <= s_max are candidates; if there are more than
/// k, a uniform k-subset is drawn by partial Fisher-Yates using a generator
/// seeded from (cfg.seed, query_key). Output is ordered by (-similarity, id).
/// Throws InvalidConfig outside Training mode.
std::vector<RetrievalHit> retrieve_in_range(std::span<const float> query,
                                            const CaptionStore& datastore,
                                            const RetrievalConfig& cfg,
                                            std::string_view query_key = {});

/// Sorts hits by descending similarity, ties by ascending id.
void sort_hits(std::vector<RetrievalHit>& hits, const CaptionStore& datastore);

}  // namespace ragcap
