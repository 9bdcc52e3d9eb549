#include "ragcap/pipeline.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <thread>

#include "json_util.hpp"

namespace ragcap {

TrainingBatch make_training_examples(const CaptionStore& corpus, const CaptionStore& datastore,
                                     const LinearMapper& mapper, const RetrievalConfig& cfg,
                                     std::string_view fixed_prompt) {
  cfg.validate();
  if (cfg.mode != RetrievalMode::Training) {
    throw Error(ErrorCode::InvalidConfig, "training examples require a Training-mode config");
  }
  if (fixed_prompt.empty()) throw Error(ErrorCode::InvalidConfig, "fixed prompt is empty");

  TrainingBatch batch;
  batch.examples.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& id = corpus.id(i);
    try {
      TrainingExample ex;
      ex.item_id = id;
      ex.target = corpus.text(i);
      ex.payload.mapped_embedding = apply_mapper(mapper, corpus.embedding(i));
      ex.payload.fixed_prompt = std::string(fixed_prompt);
      const auto hits = retrieve_in_range(corpus.embedding(i), datastore, cfg, id);
      for (const auto& hit : hits) {
        ex.payload.similar_captions.push_back(datastore.text(hit.index));
        ex.similar_ids.push_back(datastore.id(hit.index));
        ex.retrieval_similarities.push_back(hit.similarity);
      }
      batch.examples.push_back(std::move(ex));
    } catch (const Error& e) {
      batch.errors.push_back(ItemError{id, e.code(), e.what()});
    }
  }
  return batch;
}

void DomainProfile::validate() const {
  if (support.empty()) throw Error(ErrorCode::EmptyStore, "profile '" + label + "' has no support");
  if (support.dim() != datastore.dim()) {
    throw Error(ErrorCode::DimMismatch, "support dim " + std::to_string(support.dim()) +
                                            " vs datastore dim " +
                                            std::to_string(datastore.dim()));
  }
}

DomainProfile make_profile(CaptionStore support, CaptionStore datastore, std::string label) {
  DomainProfile profile{std::move(support), std::move(datastore), std::move(label)};
  profile.validate();
  return profile;
}

DomainProfile adapt_domain(const DomainProfile& current, const CaptionStore& new_support,
                           const CaptionStore& new_datastore, AdaptMode mode,
                           std::string label) {
  if (new_support.dim() != current.support.dim() || new_datastore.dim() != current.support.dim()) {
    throw Error(ErrorCode::DimMismatch, "adapted stores must match profile dim " +
                                            std::to_string(current.support.dim()));
  }
  if (mode == AdaptMode::Replace) {
    if (label.empty()) label = new_support.label();
    return make_profile(new_support, new_datastore, std::move(label));
  }
  if (label.empty()) label = current.label;
  auto support = merge_stores(current.support, new_support, true).store;
  auto datastore = merge_stores(current.datastore, new_datastore, true).store;
  support.set_label(current.support.label());
  datastore.set_label(current.datastore.label());
  return make_profile(std::move(support), std::move(datastore), std::move(label));
}

CaptionResult caption_one(std::string_view item_id, std::span<const float> query,
                          const DomainProfile& profile, const LinearMapper& mapper,
                          const CaptionSettings& settings, GenerationBackend& backend) {
  profile.validate();
  if (settings.retrieval.k == 0) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  if (query.size() != profile.support.dim()) {
    throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query.size()) +
                                            ", profile dim " +
                                            std::to_string(profile.support.dim()));
  }

  CaptionResult result;
  result.item_id = std::string(item_id);

  std::vector<float> projected;
  if (settings.use_projection) {
    auto proj = project_detailed(query, profile.support, settings.projection);
    result.projection_weights_entropy = weight_entropy(proj.weights);
    const auto values = proj.embedding.values();
    projected.assign(values.begin(), values.end());
  } else {
    projected.assign(query.begin(), query.end());
  }

  PromptPayload payload;
  payload.fixed_prompt = settings.fixed_prompt;
  payload.mapped_embedding = apply_mapper(mapper, projected);
  if (!profile.datastore.empty()) {
    const std::span<const float> retrieval_query =
        settings.retrieval_query == RetrievalQuery::Audio ? query
                                                          : std::span<const float>(projected);
    for (const auto& hit : retrieve_topk(retrieval_query, profile.datastore, settings.retrieval.k)) {
      payload.similar_captions.push_back(profile.datastore.text(hit.index));
      result.retrieved.push_back(RetrievedCaption{profile.datastore.id(hit.index),
                                                  profile.datastore.text(hit.index),
                                                  hit.similarity});
    }
  }

  GenerationRequest request;
  request.prompt_text = render_prompt(payload);
  request.soft_prefix = payload.mapped_embedding;
  request.max_tokens = settings.max_tokens;
  request.request_id = result.item_id;

  const GenerationContext ctx{request, payload, projected, &profile.support, &profile.datastore};
  result.caption = backend.generate(ctx);
  if (result.caption.empty()) {
    throw Error(ErrorCode::MalformedResponse, "backend returned an empty caption");
  }
  return result;
}

std::vector<CaptionOutcome> caption_batch(std::span<const QueryItem> items,
                                          const DomainProfile& profile,
                                          const LinearMapper& mapper,
                                          const CaptionSettings& settings,
                                          GenerationBackend& backend) {
  std::vector<CaptionOutcome> outcomes(items.size());
  auto run_item = [&](std::size_t i) {
    try {
      outcomes[i] = caption_one(items[i].id, items[i].embedding, profile, mapper, settings, backend);
    } catch (const Error& e) {
      outcomes[i] = ItemError{items[i].id, e.code(), e.what()};
    } catch (const std::exception& e) {
      outcomes[i] = ItemError{items[i].id, ErrorCode::BackendUnavailable, e.what()};
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, settings.parallelism), items.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) run_item(i);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < items.size(); i = next++) run_item(i);
      });
    }
  }
  return outcomes;
}

std::string to_json_line(const TrainingExample& example) {
  nlohmann::ordered_json j;
  j["id"] = example.item_id;
  j["embedding"] = json_util::float_array(example.payload.mapped_embedding);
  j["similar_captions"] = example.payload.similar_captions;
  j["prompt"] = example.payload.fixed_prompt;
  j["target"] = example.target;
  j["similar_ids"] = example.similar_ids;
  j["similarities"] = example.retrieval_similarities;
  return j.dump();
}

std::string to_json_line(const ItemError& error) {
  nlohmann::ordered_json j;
  j["item_id"] = error.item_id;
  j["error"] = {{"code", std::string(to_string(error.code))}, {"message", error.message}};
  return j.dump();
}

std::string to_json_line(const CaptionOutcome& outcome) {
  if (const auto* err = std::get_if<ItemError>(&outcome)) return to_json_line(*err);
  const auto& r = std::get<CaptionResult>(outcome);
  nlohmann::ordered_json j;
  j["item_id"] = r.item_id;
  j["caption"] = r.caption;
  auto retrieved = nlohmann::ordered_json::array();
  for (const auto& hit : r.retrieved) {
    nlohmann::ordered_json h;
    h["id"] = hit.id;
    h["similarity"] = hit.similarity;
    retrieved.push_back(std::move(h));
  }
  j["retrieved"] = std::move(retrieved);
  j["entropy"] = r.projection_weights_entropy;
  return j.dump();
}

std::vector<QueryItem> read_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<QueryItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::MalformedRecord,
                  path.string() + ":" + std::to_string(line_no) + ": expected id<TAB>vector");
    }
    std::vector<float> values;
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    for (;;) {
      while (p != end && (*p == ' ' || *p == '\t' || *p == ',')) ++p;
      if (p == end) break;
      float v = 0.0f;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw Error(ErrorCode::MalformedRecord,
                    path.string() + ":" + std::to_string(line_no) + ": bad decimal value");
      }
      values.push_back(v);
      p = next;
    }
    std::string id = unescape_field(std::string_view(line).substr(0, tab));
    try {
      items.push_back(QueryItem{std::move(id), normalize(values)});
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no));
    }
  }
  return items;
}

void write_queries(std::span<const QueryItem> items, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  char buf[32];
  for (const auto& item : items) {
    out << escape_field(item.id) << '\t';
    bool first = true;
    for (float v : item.embedding.values()) {
      if (!first) out << ' ';
      first = false;
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, end - buf);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace ragcap
