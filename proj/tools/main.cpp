// ragcap command-line tool. Each subcommand loads its inputs, makes one
// library call and writes the result; see README.md for formats.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ragcap/embedding.hpp"
#include "ragcap/error.hpp"
#include "ragcap/eval.hpp"
#include "ragcap/llm_client.hpp"
#include "ragcap/pipeline.hpp"
#include "ragcap/projection.hpp"
#include "ragcap/retrieval.hpp"
#include "ragcap/store.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using ragcap::ErrorCode;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitBackend = 2;

bool is_backend_error(ErrorCode code) {
  return code == ErrorCode::BackendUnavailable || code == ErrorCode::Timeout ||
         code == ErrorCode::MalformedResponse;
}

// stdout unless a path is given.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw ragcap::Error(ErrorCode::IoError, "cannot write " + path);
  }
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

ragcap::CaptionStore load(const std::string& base, ragcap::StoreRole role) {
  return ragcap::load_store(ragcap::StorePaths::from_base(base), role);
}

ragcap::LinearMapper mapper_for(const std::string& path, std::size_t dim) {
  if (path.empty()) return ragcap::LinearMapper::identity(dim);
  auto mapper = ragcap::load_mapper(path);
  if (mapper.input_dim() != dim) {
    throw ragcap::Error(ErrorCode::DimMismatch,
                        "mapper input dim " + std::to_string(mapper.input_dim()) +
                            " does not match store dim " + std::to_string(dim));
  }
  return mapper;
}

void require_dim(const std::vector<ragcap::QueryItem>& items, std::size_t dim,
                 const std::string& what) {
  for (const auto& item : items) {
    if (item.embedding.dim() != dim) {
      throw ragcap::Error(ErrorCode::DimMismatch,
                          what + " item '" + item.id + "' has dim " +
                              std::to_string(item.embedding.dim()) + ", expected " +
                              std::to_string(dim));
    }
  }
}

json summary(const ragcap::CaptionStore& store, const std::string& base) {
  json j;
  j["path"] = base;
  j["label"] = store.label();
  j["count"] = store.size();
  j["dim"] = store.dim();
  return j;
}

// ---------------------------------------------------------------- build

struct BuildArgs {
  std::string captions;
  std::string vectors;
  std::string out;
  std::string label;
};

void add_build(CLI::App& app, const std::string& name, const std::string& what, BuildArgs& a) {
  auto* sub = app.add_subcommand(name, "Normalize raw caption embeddings into a " + what);
  sub->add_option("--captions", a.captions, "Caption metadata: id<TAB>source<TAB>text per line")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--vectors", a.vectors,
                  "Raw vectors: decimal text (one row per line) or a binary store file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output base path; writes <out>.emb and <out>.tsv")->required();
  sub->add_option("--label", a.label, "Store label (defaults to the output file name)");
}

int run_build(const BuildArgs& a, ragcap::StoreRole role) {
  const auto records = ragcap::read_ingest_records(a.captions, a.vectors);
  const std::string label = a.label.empty() ? fs::path(a.out).filename().string() : a.label;
  const auto store = ragcap::build_store(records, label, role);
  if (role == ragcap::StoreRole::Support && store.empty()) {
    throw ragcap::Error(ErrorCode::EmptyStore, "a support needs at least one caption");
  }
  ragcap::save_store(store, ragcap::StorePaths::from_base(a.out));
  std::cout << summary(store, a.out).dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- merge / filter

struct MergeArgs {
  std::string a;
  std::string b;
  std::string out;
  bool dedup = false;
};

int run_merge(const MergeArgs& m) {
  const auto a = load(m.a, ragcap::StoreRole::Datastore);
  const auto b = load(m.b, ragcap::StoreRole::Datastore);
  auto merged = ragcap::merge_stores(a, b, m.dedup);
  ragcap::save_store(merged.store, ragcap::StorePaths::from_base(m.out));
  auto j = summary(merged.store, m.out);
  j["dropped_duplicates"] = merged.dropped_duplicates;
  j["renamed_ids"] = merged.renamed_ids;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

struct FilterArgs {
  std::string store;
  std::vector<std::string> exclude;
  std::string out;
};

int run_filter(const FilterArgs& f) {
  const auto store = load(f.store, ragcap::StoreRole::Datastore);
  const std::set<std::string> excluded(f.exclude.begin(), f.exclude.end());
  auto outcome = ragcap::filter_by_source(store, excluded);
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
  ragcap::save_store(outcome.store, ragcap::StorePaths::from_base(f.out));
  auto j = summary(outcome.store, f.out);
  j["removed"] = outcome.removed;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- retrieve

struct RetrieveArgs {
  std::string datastore;
  std::string queries;
  std::string mode = "inference";
  std::size_t k = 3;
  double s_min = 0.75;
  double s_max = 0.85;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_retrieve(const RetrieveArgs& r) {
  ragcap::RetrievalConfig cfg;
  cfg.k = r.k;
  cfg.s_min = r.s_min;
  cfg.s_max = r.s_max;
  cfg.mode = r.mode == "training" ? ragcap::RetrievalMode::Training
                                  : ragcap::RetrievalMode::Inference;
  cfg.validate();
  if (cfg.mode == ragcap::RetrievalMode::Training) {
    if (!r.seed) throw ragcap::Error(ErrorCode::InvalidConfig, "--mode training requires --seed");
    cfg.seed = *r.seed;
  }
  const auto ds = load(r.datastore, ragcap::StoreRole::Datastore);
  const auto queries = ragcap::read_queries(r.queries);
  require_dim(queries, ds.dim(), "query");
  Sink sink(r.out);
  for (const auto& q : queries) {
    const auto hits = cfg.mode == ragcap::RetrievalMode::Training
                          ? ragcap::retrieve_in_range(q.embedding, ds, cfg, q.id)
                          : ragcap::retrieve_topk(q.embedding, ds, cfg.k);
    json line;
    line["id"] = q.id;
    auto arr = json::array();
    for (const auto& h : hits) {
      json hit;
      hit["id"] = ds.id(h.index);
      hit["similarity"] = h.similarity;
      hit["text"] = ds.text(h.index);
      arr.push_back(std::move(hit));
    }
    line["hits"] = std::move(arr);
    sink.out() << line.dump() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- project

struct ProjectArgs {
  std::string support;
  std::string queries;
  double temperature = 0.01;
  std::string out;
};

int run_project(const ProjectArgs& p) {
  ragcap::ProjectionConfig cfg;
  cfg.temperature = p.temperature;
  cfg.validate();
  const auto support = load(p.support, ragcap::StoreRole::Support);
  const auto queries = ragcap::read_queries(p.queries);
  require_dim(queries, support.dim(), "query");
  std::vector<ragcap::QueryItem> projected;
  projected.reserve(queries.size());
  for (const auto& q : queries) {
    auto proj = ragcap::project_detailed(q.embedding, support, cfg);
    json line;
    line["id"] = q.id;
    line["entropy"] = ragcap::weight_entropy(proj.weights);
    std::cout << line.dump() << '\n';
    projected.push_back(ragcap::QueryItem{q.id, std::move(proj.embedding)});
  }
  ragcap::write_queries(projected, p.out);
  return kExitOk;
}

// ---------------------------------------------------------------- make-train-data

struct TrainArgs {
  std::string corpus;
  std::string datastore;
  std::string mapper;
  std::uint64_t seed = 0;
  std::size_t k = 3;
  double s_min = 0.75;
  double s_max = 0.85;
  std::string prompt{ragcap::kDefaultFixedPrompt};
  std::string out;
};

int run_make_train_data(const TrainArgs& t) {
  ragcap::RetrievalConfig cfg;
  cfg.k = t.k;
  cfg.s_min = t.s_min;
  cfg.s_max = t.s_max;
  cfg.mode = ragcap::RetrievalMode::Training;
  cfg.seed = t.seed;
  cfg.validate();
  const auto corpus = load(t.corpus, ragcap::StoreRole::Datastore);
  const auto ds = load(t.datastore, ragcap::StoreRole::Datastore);
  const auto mapper = mapper_for(t.mapper, corpus.dim());
  const auto batch = ragcap::make_training_examples(corpus, ds, mapper, cfg, t.prompt);
  Sink sink(t.out);
  for (const auto& ex : batch.examples) sink.out() << ragcap::to_json_line(ex) << '\n';
  for (const auto& err : batch.errors) std::cerr << ragcap::to_json_line(err) << '\n';
  return batch.errors.empty() ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------- caption

struct CaptionArgs {
  std::string support;
  std::string datastore;
  std::string queries;
  std::string mapper;
  std::string backend = "mock";
  std::string endpoint;
  long timeout_ms = 30000;
  unsigned max_retries = 3;
  unsigned max_in_flight = 4;
  std::string token_env = "RAGCAP_API_TOKEN";
  bool soft_prefix = false;
  std::string transcript;
  std::string record;
  double temperature = 0.01;
  bool no_projection = false;
  std::size_t k = 3;
  std::string retrieval_query = "audio";
  std::string prompt{ragcap::kDefaultFixedPrompt};
  std::size_t max_tokens = 64;
  unsigned parallelism = 1;
  std::string out;
};

int run_caption(const CaptionArgs& c) {
  ragcap::CaptionSettings settings;
  settings.projection.temperature = c.temperature;
  settings.projection.validate();
  settings.use_projection = !c.no_projection;
  settings.retrieval.k = c.k;
  settings.retrieval.validate();
  settings.retrieval_query =
      c.retrieval_query == "projected" ? ragcap::RetrievalQuery::Projected
                                       : ragcap::RetrievalQuery::Audio;
  settings.fixed_prompt = c.prompt;
  settings.max_tokens = c.max_tokens;
  settings.parallelism = c.parallelism;
  if (c.prompt.empty()) throw ragcap::Error(ErrorCode::InvalidConfig, "--prompt is empty");
  if (c.max_tokens == 0) throw ragcap::Error(ErrorCode::InvalidConfig, "--max-tokens must be >= 1");
  if (c.parallelism == 0) throw ragcap::Error(ErrorCode::InvalidConfig, "--parallelism must be >= 1");

  auto support = load(c.support, ragcap::StoreRole::Support);
  auto datastore = c.datastore.empty() ? ragcap::CaptionStore(support.dim(), "none")
                                       : load(c.datastore, ragcap::StoreRole::Datastore);
  const auto profile =
      ragcap::make_profile(std::move(support), std::move(datastore), fs::path(c.support).filename());
  const auto mapper = mapper_for(c.mapper, profile.support.dim());
  const auto queries = ragcap::read_queries(c.queries);
  require_dim(queries, profile.support.dim(), "query");

  std::unique_ptr<ragcap::GenerationBackend> backend;
  ragcap::Transcript replay_source;
  if (c.backend == "mock") {
    backend = std::make_unique<ragcap::MockBackend>();
  } else if (c.backend == "http") {
    ragcap::BackendConfig cfg;
    cfg.endpoint = c.endpoint;
    cfg.timeout = std::chrono::milliseconds(c.timeout_ms);
    cfg.max_retries = c.max_retries;
    cfg.max_in_flight = c.max_in_flight;
    cfg.token_env = c.token_env;
    cfg.send_soft_prefix = c.soft_prefix;
    cfg.validate();
    backend = std::make_unique<ragcap::HttpBackend>(cfg);
  } else {
    if (c.transcript.empty()) {
      throw ragcap::Error(ErrorCode::InvalidConfig, "--backend replay requires --transcript");
    }
    replay_source = ragcap::Transcript::load(c.transcript);
    backend = std::make_unique<ragcap::ReplayBackend>(replay_source);
  }

  ragcap::Transcript recorded;
  std::optional<ragcap::RecordingBackend> recorder;
  ragcap::GenerationBackend* active = backend.get();
  if (!c.record.empty()) {
    recorder.emplace(*backend, recorded);
    active = &*recorder;
  }

  const auto outcomes = ragcap::caption_batch(queries, profile, mapper, settings, *active);
  if (!c.record.empty()) recorded.save(c.record);

  int status = kExitOk;
  Sink sink(c.out);
  for (const auto& o : outcomes) {
    sink.out() << ragcap::to_json_line(o) << '\n';
    if (const auto* err = std::get_if<ragcap::ItemError>(&o)) {
      std::cerr << "item " << err->item_id << ": " << err->message << '\n';
      status = std::max(status, is_backend_error(err->code) ? kExitBackend : kExitValidation);
    }
  }
  return status;
}

// ---------------------------------------------------------------- adapt

struct AdaptArgs {
  std::string support;
  std::string datastore;
  std::string new_support;
  std::string new_datastore;
  std::string mode = "replace";
  std::string label;
  std::string out_support;
  std::string out_datastore;
};

int run_adapt(const AdaptArgs& a) {
  auto current = ragcap::make_profile(load(a.support, ragcap::StoreRole::Support),
                                      load(a.datastore, ragcap::StoreRole::Datastore),
                                      fs::path(a.support).filename());
  const auto new_support = load(a.new_support, ragcap::StoreRole::Datastore);
  const auto new_ds = a.new_datastore.empty()
                          ? ragcap::CaptionStore(new_support.dim(), "none")
                          : load(a.new_datastore, ragcap::StoreRole::Datastore);
  const auto mode = a.mode == "augment" ? ragcap::AdaptMode::Augment : ragcap::AdaptMode::Replace;
  const auto adapted = ragcap::adapt_domain(current, new_support, new_ds, mode, a.label);
  ragcap::save_store(adapted.support, ragcap::StorePaths::from_base(a.out_support));
  ragcap::save_store(adapted.datastore, ragcap::StorePaths::from_base(a.out_datastore));
  json j;
  j["label"] = adapted.label;
  j["support"] = summary(adapted.support, a.out_support);
  j["datastore"] = summary(adapted.datastore, a.out_datastore);
  std::cout << j.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- gap-stats / synth

struct SynthArgs {
  std::optional<std::uint64_t> seed;
  std::size_t dim = 64;
  std::size_t pairs = 500;
  double offset = 0.5;
  double noise = 0.05;
  std::string domain = "synth";
};

void add_synth_options(CLI::App& sub, SynthArgs& s) {
  sub.add_option("--dim", s.dim, "Embedding dimension of the synthetic corpus")
      ->capture_default_str();
  sub.add_option("--pairs", s.pairs, "Number of audio/text pairs")->capture_default_str();
  sub.add_option("--offset", s.offset, "Norm of the shared audio offset")->capture_default_str();
  sub.add_option("--noise", s.noise, "Per-component sigma of the audio noise")
      ->capture_default_str();
  sub.add_option("--domain", s.domain, "Prefix for ids, captions and source tag")
      ->capture_default_str();
}

ragcap::GapSpec spec_from(const SynthArgs& s) {
  if (!s.seed) throw ragcap::Error(ErrorCode::InvalidConfig, "synthetic corpora require --seed");
  ragcap::GapSpec spec;
  spec.dim = s.dim;
  spec.n_pairs = s.pairs;
  spec.offset_norm = s.offset;
  spec.noise_sigma = s.noise;
  spec.seed = *s.seed;
  spec.domain = s.domain;
  return spec;
}

struct GapArgs {
  std::string audio;
  std::string text;
  bool synth = false;
  SynthArgs spec;
};

int run_gap_stats(const GapArgs& g) {
  ragcap::GapStats stats;
  if (g.synth) {
    const auto corpus = ragcap::synth_paired_corpus(spec_from(g.spec));
    stats = ragcap::modality_gap_stats(corpus.audio, corpus.text);
  } else {
    if (g.audio.empty() || g.text.empty()) {
      throw ragcap::Error(ErrorCode::InvalidConfig, "give --audio and --text, or --synth");
    }
    const auto text = load(g.text, ragcap::StoreRole::Datastore);
    const auto audio = ragcap::read_queries(g.audio);
    stats = ragcap::modality_gap_stats(audio, text);
  }
  json j;
  j["pairs"] = stats.pairs;
  j["mean_paired_cosine"] = stats.mean_paired_cosine;
  j["mean_unpaired_cosine"] = stats.mean_unpaired_cosine;
  j["mean_nn_rank"] = stats.mean_nn_rank;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

struct SynthOut {
  SynthArgs spec;
  std::string out_text;
  std::string out_audio;
};

int run_synth(const SynthOut& s) {
  const auto corpus = ragcap::synth_paired_corpus(spec_from(s.spec));
  ragcap::save_store(corpus.text, ragcap::StorePaths::from_base(s.out_text));
  ragcap::write_queries(corpus.audio, s.out_audio);
  auto j = summary(corpus.text, s.out_text);
  j["audio"] = s.out_audio;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- roundtrip

struct RoundtripArgs {
  std::string store;
  std::vector<double> temperatures{1e-6, 0.01, 0.1, 1.0};
};

int run_roundtrip(const RoundtripArgs& r) {
  for (double t : r.temperatures) ragcap::ProjectionConfig{t, true}.validate();
  const auto store = load(r.store, ragcap::StoreRole::Support);
  ragcap::MockBackend mock;
  for (const auto& row : ragcap::roundtrip_reconstruction(store, r.temperatures, mock)) {
    json j;
    j["temperature"] = row.temperature;
    j["reconstructed"] = row.reconstructed;
    j["total"] = row.total;
    j["rate"] = row.rate;
    std::cout << j.dump() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ragcap: retrieval-augmented captioning from precomputed embeddings"};
  app.set_config("--config", "", "TOML or INI file with default flag values; flags override it");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  BuildArgs support_args;
  BuildArgs datastore_args;
  add_build(app, "build-support", "projection support store", support_args);
  add_build(app, "build-datastore", "retrieval datastore", datastore_args);
  auto* build_support = app.get_subcommand("build-support");
  auto* build_datastore = app.get_subcommand("build-datastore");

  MergeArgs merge_args;
  auto* merge = app.add_subcommand("merge", "Concatenate two stores");
  merge->add_option("--a", merge_args.a, "First store base path (kept intact)")->required();
  merge->add_option("--b", merge_args.b, "Second store base path")->required();
  merge->add_option("--out", merge_args.out, "Output store base path")->required();
  merge->add_flag("--dedup", merge_args.dedup, "Drop entries of --b whose text is already present");

  FilterArgs filter_args;
  auto* filter = app.add_subcommand("filter", "Remove entries whose source is excluded");
  filter->add_option("--store", filter_args.store, "Input store base path")->required();
  filter->add_option("--exclude-source", filter_args.exclude, "Source tag to remove (repeatable)")
      ->required();
  filter->add_option("--out", filter_args.out, "Output store base path")->required();

  RetrieveArgs retrieve_args;
  auto* retrieve = app.add_subcommand("retrieve", "Retrieve captions for query embeddings");
  retrieve->add_option("--datastore", retrieve_args.datastore, "Datastore base path")->required();
  retrieve->add_option("--queries", retrieve_args.queries, "Query file: id<TAB>v1 v2 ... per line")
      ->required()
      ->check(CLI::ExistingFile);
  retrieve->add_option("--mode", retrieve_args.mode,
                       "inference (exact top-k) or training (similarity window sampling)")
      ->check(CLI::IsMember({"inference", "training"}));
  retrieve->add_option("--k", retrieve_args.k, "Captions per query");
  retrieve->add_option("--s-min", retrieve_args.s_min, "Window lower bound (training mode)");
  retrieve->add_option("--s-max", retrieve_args.s_max, "Window upper bound (training mode)");
  retrieve->add_option("--seed", retrieve_args.seed, "Sampling seed, required in training mode");
  retrieve->add_option("--out", retrieve_args.out, "Write JSON lines here instead of stdout");

  ProjectArgs project_args;
  auto* project = app.add_subcommand("project", "Project query embeddings onto a support");
  project->add_option("--support", project_args.support, "Support base path")->required();
  project->add_option("--queries", project_args.queries, "Query file: id<TAB>v1 v2 ... per line")
      ->required()
      ->check(CLI::ExistingFile);
  project->add_option("--temperature", project_args.temperature, "Softmax temperature (> 0)");
  project->add_option("--out", project_args.out, "Query file receiving the projected embeddings")
      ->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("make-train-data", "Emit training examples as JSON lines");
  train->add_option("--corpus", train_args.corpus, "Store whose captions become targets")
      ->required();
  train->add_option("--datastore", train_args.datastore, "Store to draw similar captions from")
      ->required();
  train->add_option("--mapper", train_args.mapper, "Mapper file (identity when omitted)");
  train->add_option("--seed", train_args.seed, "Sampling seed")->required();
  train->add_option("--k", train_args.k, "Similar captions per example");
  train->add_option("--s-min", train_args.s_min, "Similarity window lower bound");
  train->add_option("--s-max", train_args.s_max, "Similarity window upper bound");
  train->add_option("--prompt", train_args.prompt, "Fixed instruction prompt");
  train->add_option("--out", train_args.out, "Write JSON lines here instead of stdout");

  CaptionArgs caption_args;
  auto* caption = app.add_subcommand("caption", "Caption query embeddings");
  caption->add_option("--support", caption_args.support, "Support base path")->required();
  caption->add_option("--datastore", caption_args.datastore,
                      "Datastore base path (no retrieval when omitted)");
  caption->add_option("--queries", caption_args.queries, "Query file: id<TAB>v1 v2 ... per line")
      ->required()
      ->check(CLI::ExistingFile);
  caption->add_option("--mapper", caption_args.mapper, "Mapper file (identity when omitted)");
  caption->add_option("--backend", caption_args.backend, "mock, http or replay")
      ->check(CLI::IsMember({"mock", "http", "replay"}));
  caption->add_option("--endpoint", caption_args.endpoint, "Generation service URL (http backend)");
  caption->add_option("--timeout-ms", caption_args.timeout_ms, "Per-attempt timeout (http backend)");
  caption->add_option("--max-retries", caption_args.max_retries,
                      "Retries after the first attempt (http backend)");
  caption->add_option("--max-in-flight", caption_args.max_in_flight,
                      "Concurrent requests allowed (http backend)");
  caption->add_option("--token-env", caption_args.token_env,
                      "Environment variable holding the bearer token (http backend)");
  caption->add_flag("--soft-prefix", caption_args.soft_prefix,
                    "Send the mapped embedding with each request (http backend)");
  caption->add_option("--transcript", caption_args.transcript, "Transcript to answer from (replay backend)");
  caption->add_option("--record", caption_args.record, "Save every exchange to this transcript");
  caption->add_option("--temperature", caption_args.temperature, "Projection temperature (> 0)");
  caption->add_flag("--no-projection", caption_args.no_projection,
                    "Condition on the raw query instead of its projection");
  caption->add_option("--k", caption_args.k, "Captions retrieved per query");
  caption->add_option("--retrieval-query", caption_args.retrieval_query,
                      "Vector used for retrieval: audio or projected")
      ->check(CLI::IsMember({"audio", "projected"}));
  caption->add_option("--prompt", caption_args.prompt, "Fixed instruction prompt");
  caption->add_option("--max-tokens", caption_args.max_tokens, "Generation length limit");
  caption->add_option("--parallelism", caption_args.parallelism, "Items captioned concurrently");
  caption->add_option("--out", caption_args.out, "Write JSON lines here instead of stdout");

  AdaptArgs adapt_args;
  auto* adapt = app.add_subcommand("adapt", "Install captions from a new domain into a profile");
  adapt->add_option("--support", adapt_args.support, "Current support base path")->required();
  adapt->add_option("--datastore", adapt_args.datastore, "Current datastore base path")->required();
  adapt->add_option("--new-support", adapt_args.new_support, "New-domain support base path")
      ->required();
  adapt->add_option("--new-datastore", adapt_args.new_datastore,
                    "New-domain datastore base path (empty when omitted)");
  adapt->add_option("--mode", adapt_args.mode, "replace or augment")
      ->check(CLI::IsMember({"replace", "augment"}));
  adapt->add_option("--label", adapt_args.label, "Label of the adapted profile");
  adapt->add_option("--out-support", adapt_args.out_support, "Output support base path")->required();
  adapt->add_option("--out-datastore", adapt_args.out_datastore, "Output datastore base path")
      ->required();

  GapArgs gap_args;
  auto* gap = app.add_subcommand("gap-stats", "Measure the audio/text modality gap");
  gap->add_option("--audio", gap_args.audio, "Audio query file, paired with --text by row");
  gap->add_option("--text", gap_args.text, "Text store base path");
  gap->add_flag("--synth", gap_args.synth, "Measure a synthetic corpus instead (needs --seed)");
  gap->add_option("--seed", gap_args.spec.seed, "Seed of the synthetic corpus");
  add_synth_options(*gap, gap_args.spec);

  SynthOut synth_args;
  auto* synth = app.add_subcommand("synth", "Write a synthetic paired corpus");
  synth->add_option("--seed", synth_args.spec.seed, "Corpus seed")->required();
  add_synth_options(*synth, synth_args.spec);
  synth->add_option("--out-text", synth_args.out_text, "Text store base path")->required();
  synth->add_option("--out-audio", synth_args.out_audio, "Audio query file")->required();

  RoundtripArgs roundtrip_args;
  auto* roundtrip = app.add_subcommand("roundtrip", "Caption reconstruction rate per temperature");
  roundtrip->add_option("--store", roundtrip_args.store, "Store used as support and datastore")
      ->required();
  roundtrip->add_option("--temperatures", roundtrip_args.temperatures, "Temperatures to sweep")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (build_support->parsed()) return run_build(support_args, ragcap::StoreRole::Support);
    if (build_datastore->parsed()) return run_build(datastore_args, ragcap::StoreRole::Datastore);
    if (merge->parsed()) return run_merge(merge_args);
    if (filter->parsed()) return run_filter(filter_args);
    if (retrieve->parsed()) return run_retrieve(retrieve_args);
    if (project->parsed()) return run_project(project_args);
    if (train->parsed()) return run_make_train_data(train_args);
    if (caption->parsed()) return run_caption(caption_args);
    if (adapt->parsed()) return run_adapt(adapt_args);
    if (gap->parsed()) return run_gap_stats(gap_args);
    if (synth->parsed()) return run_synth(synth_args);
    if (roundtrip->parsed()) return run_roundtrip(roundtrip_args);
  } catch (const ragcap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_backend_error(e.code()) ? kExitBackend : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
