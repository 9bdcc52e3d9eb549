#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ragcap/llm_client.hpp"
#include "ragcap/pipeline.hpp"
#include "ragcap/store.hpp"

namespace ragcap {

/// Synthetic paired corpus with a controlled modality gap: text embeddings
/// are isotropic random unit vectors, and each audio embedding is
/// normalize(text_i + offset + noise_i), where offset is one random direction
/// of length offset_norm and noise_i has i.i.d. N(0, noise_sigma^2) components.
struct GapSpec {
  std::size_t dim = 64;
  std::size_t n_pairs = 500;
  double offset_norm = 0.5;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  std::string domain = "synth";  // prefixes ids, texts and the source tag

  void validate() const;
};

/// audio[i] is paired with text row i.
struct PairedCorpus {
  CaptionStore text;
  std::vector<QueryItem> audio;
};

PairedCorpus synth_paired_corpus(const GapSpec& spec);

struct GapStats {
  std::size_t pairs = 0;
  double mean_paired_cosine = 0.0;
  double mean_unpaired_cosine = 0.0;  // over all i != j, 0 when pairs == 1
  double mean_nn_rank = 0.0;          // 1 + #texts strictly closer than the true one
};

/// Exact statistics over all pairs (audio[i], text row i). Throws DimMismatch
/// or CountMismatch when the inputs do not line up.
GapStats modality_gap_stats(std::span<const QueryItem> audio, const CaptionStore& text);

/// Ranked candidate keys (ids or caption texts) for one item.
struct Prediction {
  std::string item_id;
  std::vector<std::string> ranked;
};

struct RecallReport {
  std::size_t k = 0;
  std::size_t hits = 0;
  std::size_t total = 0;
  double recall = 0.0;
};

/// Fraction of items whose true key is among their first k candidates.
/// Throws MissingGroundTruth, InvalidConfig (k == 0).
RecallReport recall_at_k(std::span<const Prediction> predictions,
                         const std::map<std::string, std::string>& truth, std::size_t k);

/// Caption text as a single candidate; failed items get no candidates.
std::vector<Prediction> predictions_from_captions(std::span<const CaptionOutcome> outcomes);
/// Retrieved ids in rank order.
std::vector<Prediction> predictions_from_retrieval(std::span<const CaptionOutcome> outcomes);

/// item id -> paired caption text, for scoring decoded captions.
std::map<std::string, std::string> caption_truth(const PairedCorpus& corpus);

/// Recall@1 of decoded captions with the corpus installed as support and
/// datastore, with projection on (at `temperature`) and off.
struct ProjectionAblation {
  RecallReport with_projection;
  RecallReport without_projection;
};

ProjectionAblation projection_ablation(const PairedCorpus& corpus, double temperature,
                                       GenerationBackend& backend);

struct RoundtripRow {
  double temperature = 0.0;
  std::size_t reconstructed = 0;
  std::size_t total = 0;
  double rate = 0.0;
};

/// For each temperature, the fraction of captions the pipeline reproduces
/// verbatim when queried with their own text embedding, with `corpus` as both
/// support and datastore.
std::vector<RoundtripRow> roundtrip_reconstruction(const CaptionStore& corpus,
                                                   std::span<const double> temperatures,
                                                   GenerationBackend& backend);

}  // namespace ragcap
