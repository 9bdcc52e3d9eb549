#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ragcap {

/// Borrowed view of one caption in a store.
struct CaptionEntry {
  std::string_view id;
  std::string_view text;
  std::string_view source;
  std::span<const float> embedding;
};

/// A raw input record for build_store; the vector need not be normalized.
struct StoreRecord {
  std::string id;
  std::string text;
  std::vector<float> vector;
  std::string source;
};

/// Stores play one of two roles. A support must be non-empty; a datastore
/// may be empty (retrieval is then skipped).
enum class StoreRole { Support, Datastore };

/// Ordered collection of captions with unit-norm text embeddings, stored as
/// one contiguous row-major matrix. Used both as the projection support and
/// as the retrieval datastore.
class CaptionStore {
 public:
  explicit CaptionStore(std::size_t dim = 1, std::string label = {});

  /// Appends an entry. The embedding must already be unit-norm.
  /// Throws DimMismatch, NonFinite, NotUnitNorm, EmptyText, DuplicateId.
  void add(std::string id, std::string text, std::span<const float> embedding,
           std::string source);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::string& label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  const std::string& id(std::size_t i) const { return ids_.at(i); }
  const std::string& text(std::size_t i) const { return texts_.at(i); }
  const std::string& source(std::size_t i) const { return sources_.at(i); }
  std::span<const float> embedding(std::size_t i) const;
  CaptionEntry entry(std::size_t i) const;

  std::optional<std::size_t> find(std::string_view id) const;
  bool contains_id(std::string_view id) const { return find(id).has_value(); }

  /// All embeddings, row-major, size() * dim() floats.
  std::span<const float> matrix() const noexcept { return matrix_; }

  void reserve(std::size_t n);

  /// Entry-wise equality (ids, texts, sources, embedding bits). Labels are ignored.
  friend bool operator==(const CaptionStore& a, const CaptionStore& b);

 private:
  std::size_t dim_;
  std::string label_;
  std::vector<std::string> ids_;
  std::vector<std::string> texts_;
  std::vector<std::string> sources_;
  std::vector<float> matrix_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Normalizes every vector and preserves input order.
/// Throws DuplicateId, DimMismatch, ZeroVector (message names the offending id).
CaptionStore build_store(std::span<const StoreRecord> records, std::string label = {},
                         StoreRole role = StoreRole::Datastore);

/// Locations of the two persisted files of a store.
struct StorePaths {
  std::filesystem::path embeddings;
  std::filesystem::path metadata;

  /// `<base>.emb` and `<base>.tsv`.
  static StorePaths from_base(const std::filesystem::path& base);
};

struct StoreHeader {
  static constexpr char kMagic[4] = {'D', 'R', 'C', '1'};
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kBytes = 20;

  std::uint32_t version = kVersion;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

/// Binary file: "DRC1" | u32 version | u32 dim | u64 count | count*dim f32,
/// all little-endian, row-major. Metadata file: one `id \t source \t text`
/// line per entry, same order, with `\\`, `\t`, `\n`, `\r` escaped.
void save_store(const CaptionStore& store, const StorePaths& paths);

/// Validates header, payload size, metadata count and the unit-norm invariant.
/// Throws CorruptHeader, CountMismatch, MalformedRecord, IoError, NotUnitNorm,
/// and EmptyStore when loading an empty support. The label defaults to the
/// embedding file's stem.
CaptionStore load_store(const StorePaths& paths, StoreRole role = StoreRole::Datastore,
                        std::optional<std::string> label = std::nullopt);

StoreHeader read_store_header(const std::filesystem::path& embeddings_path);

// Metadata line helpers, exposed for ingest and for tools producing store files.
std::string escape_field(std::string_view raw);
std::string unescape_field(std::string_view escaped);

struct MetadataRecord {
  std::string id;
  std::string source;
  std::string text;
};

std::vector<MetadataRecord> read_metadata(const std::filesystem::path& path);
void write_metadata(std::span<const MetadataRecord> records, const std::filesystem::path& path);

/// Reads one whitespace-separated decimal vector per non-empty line.
std::vector<std::vector<float>> read_decimal_vectors(const std::filesystem::path& path);

/// Pairs metadata with raw vectors read either from a decimal text file or a
/// binary embedding file (format above, not necessarily normalized).
std::vector<StoreRecord> read_ingest_records(const std::filesystem::path& metadata,
                                             const std::filesystem::path& vectors);

struct FilterOutcome {
  CaptionStore store;
  std::size_t removed = 0;
  std::vector<std::string> warnings;
};

/// Keeps exactly the entries whose source is not excluded, in order.
FilterOutcome filter_by_source(const CaptionStore& store, const std::set<std::string>& excluded);

struct MergeOutcome {
  CaptionStore store;
  std::size_t dropped_duplicates = 0;
  std::size_t renamed_ids = 0;
};

/// Concatenates a then b. With dedup_on_text, entries of b whose text is
/// byte-identical to an earlier entry are dropped. Ids of b that collide are
/// suffixed with "#<n>". Throws DimMismatch.
MergeOutcome merge_stores(const CaptionStore& a, const CaptionStore& b, bool dedup_on_text);

}  // namespace ragcap
