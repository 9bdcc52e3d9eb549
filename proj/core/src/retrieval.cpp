#include "ragcap/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "ragcap/embedding.hpp"
#include "ragcap/error.hpp"
#include "ragcap/random.hpp"

namespace ragcap {
namespace {

auto hit_order(const CaptionStore& ds) {
  return [&ds](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return ds.id(a.index) < ds.id(b.index);
  };
}

void check_query(std::span<const float> query, const CaptionStore& ds) {
  if (query.size() != ds.dim()) {
    throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query.size()) +
                                            ", store dim " + std::to_string(ds.dim()));
  }
  if (ds.empty()) throw Error(ErrorCode::EmptyStore, "datastore '" + ds.label() + "' is empty");
}

}  // namespace

void RetrievalConfig::validate() const {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  if (!std::isfinite(s_min) || !std::isfinite(s_max) || s_min < -1.0 || s_max > 1.0 ||
      s_min > s_max) {
    throw Error(ErrorCode::InvalidConfig, "similarity range [" + std::to_string(s_min) + ", " +
                                              std::to_string(s_max) +
                                              "] must satisfy -1 <= s_min <= s_max <= 1");
  }
}

std::vector<RetrievalHit> scan_similarities(std::span<const float> query,
                                            const CaptionStore& datastore, unsigned threads) {
  check_query(query, datastore);
  std::vector<RetrievalHit> hits(datastore.size());
  auto scan_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      hits[i] = RetrievalHit{i, cosine_similarity(query, datastore.embedding(i))};
    }
  };

  const std::size_t n = datastore.size();
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, n / 64));
  if (workers <= 1) {
    scan_range(0, n);
    return hits;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(scan_range, begin, end);
  }
  return hits;
}

void sort_hits(std::vector<RetrievalHit>& hits, const CaptionStore& datastore) {
  std::sort(hits.begin(), hits.end(), hit_order(datastore));
}

std::vector<RetrievalHit> retrieve_topk(std::span<const float> query,
                                        const CaptionStore& datastore, std::size_t k,
                                        unsigned threads) {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  auto hits = scan_similarities(query, datastore, threads);
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    hit_order(datastore));
  hits.resize(keep);
  return hits;
}

std::vector<RetrievalHit> retrieve_in_range(std::span<const float> query,
                                            const CaptionStore& datastore,
                                            const RetrievalConfig& cfg,
                                            std::string_view query_key) {
  cfg.validate();
  if (cfg.mode != RetrievalMode::Training) {
    throw Error(ErrorCode::InvalidConfig, "similarity-window retrieval requires Training mode");
  }
  const auto all = scan_similarities(query, datastore);
  std::vector<RetrievalHit> candidates;
  for (const auto& hit : all) {
    if (hit.similarity >= cfg.s_min && hit.similarity <= cfg.s_max) candidates.push_back(hit);
  }
  if (candidates.size() > cfg.k) {
    SeededGenerator rng(cfg.seed, query_key);
    const std::size_t n = candidates.size();
    for (std::size_t i = 0; i < cfg.k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(cfg.k);
  }
  sort_hits(candidates, datastore);
  return candidates;
}

}  // namespace ragcap
