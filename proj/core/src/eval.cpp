#include "ragcap/eval.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "ragcap/error.hpp"
#include "ragcap/random.hpp"

namespace ragcap {
namespace {

constexpr std::array<const char*, 10> kSubjects = {
    "a dog",   "rain",     "a car engine", "birds",      "a crowd",
    "a train", "the wind", "a man",        "water",      "a bell"};
constexpr std::array<const char*, 10> kActions = {
    "barks",    "patters", "idles",   "chirp",     "cheers",
    "rumbles",  "howls",   "speaks",  "trickles",  "rings"};
constexpr std::array<const char*, 10> kPlaces = {
    "in a park",        "on a tin roof",    "in a garage",      "at dawn",
    "in a stadium",     "past a station",   "through trees",    "over a radio",
    "into a basin",     "in the distance"};

std::string synthetic_caption(const std::string& domain, std::size_t i) {
  const std::size_t combo = i % 1000;
  std::string text = domain + ": " + kSubjects[combo / 100] + " " + kActions[(combo / 10) % 10] +
                     " " + kPlaces[combo % 10];
  if (i >= 1000) text += " (" + std::to_string(i / 1000) + ")";
  return text;
}

std::string padded(std::string_view prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu", i);
  return std::string(prefix) + buf;
}

std::vector<double> gaussian(SeededGenerator& rng, std::size_t dim, double sigma) {
  std::vector<double> v(dim);
  for (double& x : v) x = sigma * rng.normal();
  return v;
}

}  // namespace

void GapSpec::validate() const {
  if (dim < 2) throw Error(ErrorCode::InvalidConfig, "gap spec dim must be >= 2");
  if (n_pairs < 1) throw Error(ErrorCode::InvalidConfig, "gap spec needs >= 1 pair");
  if (!(offset_norm >= 0.0) || !(noise_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "offset_norm and noise_sigma must be >= 0");
  }
}

PairedCorpus synth_paired_corpus(const GapSpec& spec) {
  spec.validate();
  SeededGenerator text_rng(spec.seed, "text");
  SeededGenerator offset_rng(spec.seed, "offset");
  SeededGenerator noise_rng(spec.seed, "noise");

  std::vector<double> offset = gaussian(offset_rng, spec.dim, 1.0);
  double offset_len = 0.0;
  for (double x : offset) offset_len += x * x;
  offset_len = std::sqrt(offset_len);
  for (double& x : offset) x = x / offset_len * spec.offset_norm;

  PairedCorpus corpus{CaptionStore(spec.dim, spec.domain), {}};
  corpus.text.reserve(spec.n_pairs);
  corpus.audio.reserve(spec.n_pairs);
  for (std::size_t i = 0; i < spec.n_pairs; ++i) {
    auto text_raw = gaussian(text_rng, spec.dim, 1.0);
    const auto text = normalize(std::span<const double>(text_raw));
    // Re-normalize the double vector so a zero gap reproduces the text bits exactly.
    double len = 0.0;
    for (double x : text_raw) len += x * x;
    len = std::sqrt(len);
    auto noise = gaussian(noise_rng, spec.dim, spec.noise_sigma);
    std::vector<double> audio_raw(spec.dim);
    for (std::size_t d = 0; d < spec.dim; ++d) {
      audio_raw[d] = text_raw[d] / len + offset[d] + noise[d];
    }
    if (spec.offset_norm == 0.0 && spec.noise_sigma == 0.0) audio_raw = text_raw;

    corpus.text.add(padded(spec.domain + "-t", i), synthetic_caption(spec.domain, i), text,
                    spec.domain);
    corpus.audio.push_back(
        QueryItem{padded(spec.domain + "-a", i), normalize(std::span<const double>(audio_raw))});
  }
  return corpus;
}

GapStats modality_gap_stats(std::span<const QueryItem> audio, const CaptionStore& text) {
  if (audio.size() != text.size()) {
    throw Error(ErrorCode::CountMismatch, std::to_string(audio.size()) + " audio vs " +
                                              std::to_string(text.size()) + " text embeddings");
  }
  if (audio.empty()) throw Error(ErrorCode::EmptyStore, "gap statistics need >= 1 pair");
  const std::size_t n = audio.size();
  GapStats stats;
  stats.pairs = n;
  double paired = 0.0;
  double unpaired = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double own = cosine_similarity(audio[i].embedding, text.embedding(i));
    paired += own;
    std::size_t closer = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double s = cosine_similarity(audio[i].embedding, text.embedding(j));
      unpaired += s;
      if (s > own) ++closer;
    }
    rank_sum += static_cast<double>(closer + 1);
  }
  stats.mean_paired_cosine = paired / static_cast<double>(n);
  stats.mean_unpaired_cosine = n > 1 ? unpaired / static_cast<double>(n * (n - 1)) : 0.0;
  stats.mean_nn_rank = rank_sum / static_cast<double>(n);
  return stats;
}

RecallReport recall_at_k(std::span<const Prediction> predictions,
                         const std::map<std::string, std::string>& truth, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "recall@k needs k >= 1");
  RecallReport report;
  report.k = k;
  report.total = predictions.size();
  for (const auto& p : predictions) {
    const auto it = truth.find(p.item_id);
    if (it == truth.end()) throw Error(ErrorCode::MissingGroundTruth, p.item_id);
    const std::size_t depth = std::min(k, p.ranked.size());
    for (std::size_t r = 0; r < depth; ++r) {
      if (p.ranked[r] == it->second) {
        ++report.hits;
        break;
      }
    }
  }
  report.recall = report.total == 0
                      ? 0.0
                      : static_cast<double>(report.hits) / static_cast<double>(report.total);
  return report;
}

std::vector<Prediction> predictions_from_captions(std::span<const CaptionOutcome> outcomes) {
  std::vector<Prediction> out;
  out.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (const auto* r = std::get_if<CaptionResult>(&o)) {
      out.push_back(Prediction{r->item_id, {r->caption}});
    } else {
      out.push_back(Prediction{std::get<ItemError>(o).item_id, {}});
    }
  }
  return out;
}

std::vector<Prediction> predictions_from_retrieval(std::span<const CaptionOutcome> outcomes) {
  std::vector<Prediction> out;
  out.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (const auto* r = std::get_if<CaptionResult>(&o)) {
      Prediction p{r->item_id, {}};
      for (const auto& hit : r->retrieved) p.ranked.push_back(hit.id);
      out.push_back(std::move(p));
    } else {
      out.push_back(Prediction{std::get<ItemError>(o).item_id, {}});
    }
  }
  return out;
}

std::map<std::string, std::string> caption_truth(const PairedCorpus& corpus) {
  std::map<std::string, std::string> truth;
  for (std::size_t i = 0; i < corpus.audio.size(); ++i) {
    truth.emplace(corpus.audio[i].id, corpus.text.text(i));
  }
  return truth;
}

ProjectionAblation projection_ablation(const PairedCorpus& corpus, double temperature,
                                       GenerationBackend& backend) {
  const auto profile = make_profile(corpus.text, corpus.text, corpus.text.label());
  const auto mapper = LinearMapper::identity(corpus.text.dim());
  const auto truth = caption_truth(corpus);

  CaptionSettings settings;
  settings.projection.temperature = temperature;

  ProjectionAblation out;
  settings.use_projection = true;
  auto on = caption_batch(corpus.audio, profile, mapper, settings, backend);
  out.with_projection = recall_at_k(predictions_from_captions(on), truth, 1);

  settings.use_projection = false;
  auto off = caption_batch(corpus.audio, profile, mapper, settings, backend);
  out.without_projection = recall_at_k(predictions_from_captions(off), truth, 1);
  return out;
}

std::vector<RoundtripRow> roundtrip_reconstruction(const CaptionStore& corpus,
                                                   std::span<const double> temperatures,
                                                   GenerationBackend& backend) {
  const auto profile = make_profile(corpus, corpus, corpus.label());
  const auto mapper = LinearMapper::identity(corpus.dim());
  std::vector<RoundtripRow> rows;
  rows.reserve(temperatures.size());
  for (double tau : temperatures) {
    CaptionSettings settings;
    settings.projection.temperature = tau;
    RoundtripRow row{tau, 0, corpus.size(), 0.0};
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto result =
          caption_one(corpus.id(i), corpus.embedding(i), profile, mapper, settings, backend);
      if (result.caption == corpus.text(i)) ++row.reconstructed;
    }
    row.rate = row.total == 0 ? 0.0
                              : static_cast<double>(row.reconstructed) /
                                    static_cast<double>(row.total);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ragcap
