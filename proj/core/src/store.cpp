#include "ragcap/store.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "binary_io.hpp"
#include "ragcap/embedding.hpp"
#include "ragcap/error.hpp"

namespace ragcap {

CaptionStore::CaptionStore(std::size_t dim, std::string label)
    : dim_(dim), label_(std::move(label)) {
  if (dim_ == 0) throw Error(ErrorCode::DimMismatch, "store dim must be >= 1");
}

void CaptionStore::add(std::string id, std::string text, std::span<const float> embedding,
                       std::string source) {
  if (embedding.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, "entry '" + id + "' has dim " +
                                            std::to_string(embedding.size()) + ", store has " +
                                            std::to_string(dim_));
  }
  if (text.empty()) throw Error(ErrorCode::EmptyText, "entry '" + id + "' has empty text");
  if (!all_finite(embedding)) {
    throw Error(ErrorCode::NonFinite, "entry '" + id + "' has NaN/Inf component");
  }
  if (!is_unit_norm(embedding)) {
    throw Error(ErrorCode::NotUnitNorm, "entry '" + id + "' is not unit-norm");
  }
  if (index_.contains(id)) throw Error(ErrorCode::DuplicateId, id);
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  texts_.push_back(std::move(text));
  sources_.push_back(std::move(source));
  matrix_.insert(matrix_.end(), embedding.begin(), embedding.end());
}

std::span<const float> CaptionStore::embedding(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("CaptionStore::embedding");
  return std::span<const float>(matrix_).subspan(i * dim_, dim_);
}

CaptionEntry CaptionStore::entry(std::size_t i) const {
  return CaptionEntry{id(i), text(i), source(i), embedding(i)};
}

std::optional<std::size_t> CaptionStore::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void CaptionStore::reserve(std::size_t n) {
  ids_.reserve(n);
  texts_.reserve(n);
  sources_.reserve(n);
  matrix_.reserve(n * dim_);
  index_.reserve(n);
}

bool operator==(const CaptionStore& a, const CaptionStore& b) {
  if (a.dim_ != b.dim_ || a.ids_ != b.ids_ || a.texts_ != b.texts_ || a.sources_ != b.sources_) {
    return false;
  }
  return a.matrix_.size() == b.matrix_.size() &&
         std::memcmp(a.matrix_.data(), b.matrix_.data(), a.matrix_.size() * sizeof(float)) == 0;
}

CaptionStore build_store(std::span<const StoreRecord> records, std::string label,
                         StoreRole role) {
  if (records.empty()) {
    if (role == StoreRole::Support) throw Error(ErrorCode::EmptyStore, "support needs >= 1 record");
    throw Error(ErrorCode::EmptyStore, "build_store needs >= 1 record");
  }
  CaptionStore store(records.front().vector.size(), std::move(label));
  store.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.vector.size() != store.dim()) {
      throw Error(ErrorCode::DimMismatch, "record '" + rec.id + "' has dim " +
                                              std::to_string(rec.vector.size()) + ", expected " +
                                              std::to_string(store.dim()));
    }
    Embedding unit;
    try {
      unit = normalize(rec.vector);
    } catch (const Error& e) {
      throw Error(e.code(), "record '" + rec.id + "'");
    }
    store.add(rec.id, rec.text, unit, rec.source);
  }
  return store;
}

StorePaths StorePaths::from_base(const std::filesystem::path& base) {
  return StorePaths{std::filesystem::path(base.string() + ".emb"),
                    std::filesystem::path(base.string() + ".tsv")};
}

std::string escape_field(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    const char c = escaped[i];
    if (c != '\\') {
      out += c;
      continue;
    }
    if (i + 1 == escaped.size()) {
      throw Error(ErrorCode::MalformedRecord, "dangling backslash in metadata field");
    }
    switch (escaped[++i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default:
        throw Error(ErrorCode::MalformedRecord,
                    std::string("unknown escape \\") + escaped[i] + " in metadata field");
    }
  }
  return out;
}

std::vector<MetadataRecord> read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<MetadataRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find('\t');
    const auto second = first == std::string::npos ? first : line.find('\t', first + 1);
    if (second == std::string::npos) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ":" + std::to_string(line_no) +
                                                  ": expected id<TAB>source<TAB>text");
    }
    const std::string_view view(line);
    records.push_back(MetadataRecord{unescape_field(view.substr(0, first)),
                                     unescape_field(view.substr(first + 1, second - first - 1)),
                                     unescape_field(view.substr(second + 1))});
  }
  return records;
}

void write_metadata(std::span<const MetadataRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  for (const auto& r : records) {
    out << escape_field(r.id) << '\t' << escape_field(r.source) << '\t' << escape_field(r.text)
        << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void save_store(const CaptionStore& store, const StorePaths& paths) {
  {
    std::ofstream out(paths.embeddings, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::IoError, "cannot open " + paths.embeddings.string() + " for writing");
    }
    out.write(StoreHeader::kMagic, sizeof(StoreHeader::kMagic));
    binary_io::write_le(out, StoreHeader::kVersion);
    binary_io::write_le(out, static_cast<std::uint32_t>(store.dim()));
    binary_io::write_le(out, static_cast<std::uint64_t>(store.size()));
    binary_io::write_floats_le(out, store.matrix());
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + paths.embeddings.string());
  }
  std::vector<MetadataRecord> meta;
  meta.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    meta.push_back({store.id(i), store.source(i), store.text(i)});
  }
  write_metadata(meta, paths.metadata);
}

namespace {

StoreHeader read_header(std::istream& in, const std::string& name) {
  char magic[4];
  StoreHeader header;
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, StoreHeader::kMagic, 4) != 0) {
    throw Error(ErrorCode::CorruptHeader, name + ": bad magic");
  }
  if (!binary_io::read_le(in, header.version) || !binary_io::read_le(in, header.dim) ||
      !binary_io::read_le(in, header.count)) {
    throw Error(ErrorCode::CorruptHeader, name + ": truncated header");
  }
  if (header.version != StoreHeader::kVersion) {
    throw Error(ErrorCode::CorruptHeader,
                name + ": unsupported version " + std::to_string(header.version));
  }
  if (header.dim == 0) throw Error(ErrorCode::CorruptHeader, name + ": dim is 0");
  return header;
}

// Returns count*dim floats, after checking the payload length matches the header.
std::vector<float> read_payload(std::ifstream& in, const StoreHeader& header,
                                const std::filesystem::path& path) {
  const auto file_size = std::filesystem::file_size(path);
  const std::uint64_t expected =
      StoreHeader::kBytes + header.count * static_cast<std::uint64_t>(header.dim) * sizeof(float);
  if (file_size != expected) {
    throw Error(ErrorCode::CorruptHeader, path.string() + ": payload is " +
                                              std::to_string(file_size) + " bytes, header implies " +
                                              std::to_string(expected));
  }
  std::vector<float> values(header.count * header.dim);
  if (!binary_io::read_floats_le(in, values)) {
    throw Error(ErrorCode::IoError, path.string() + ": short read");
  }
  return values;
}

}  // namespace

StoreHeader read_store_header(const std::filesystem::path& embeddings_path) {
  std::ifstream in(embeddings_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + embeddings_path.string());
  return read_header(in, embeddings_path.string());
}

CaptionStore load_store(const StorePaths& paths, StoreRole role, std::optional<std::string> label) {
  std::ifstream in(paths.embeddings, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + paths.embeddings.string());
  const StoreHeader header = read_header(in, paths.embeddings.string());
  const auto values = read_payload(in, header, paths.embeddings);
  const auto meta = read_metadata(paths.metadata);
  if (meta.size() != header.count) {
    throw Error(ErrorCode::CountMismatch, "header count " + std::to_string(header.count) +
                                              " but " + std::to_string(meta.size()) +
                                              " metadata rows in " + paths.metadata.string());
  }
  if (role == StoreRole::Support && header.count == 0) {
    throw Error(ErrorCode::EmptyStore, paths.embeddings.string() + ": support is empty");
  }
  CaptionStore store(header.dim, label.value_or(paths.embeddings.stem().string()));
  store.reserve(meta.size());
  const std::span<const float> all(values);
  for (std::size_t i = 0; i < meta.size(); ++i) {
    store.add(meta[i].id, meta[i].text, all.subspan(i * header.dim, header.dim), meta[i].source);
  }
  return store;
}

std::vector<std::vector<float>> read_decimal_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::vector<float>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<float> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (;;) {
      while (p != end && (*p == ' ' || *p == '\t' || *p == ',' || *p == '\r')) ++p;
      if (p == end) break;
      float value = 0.0f;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc()) {
        throw Error(ErrorCode::MalformedRecord,
                    path.string() + ":" + std::to_string(line_no) + ": bad decimal value");
      }
      row.push_back(value);
      p = next;
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<StoreRecord> read_ingest_records(const std::filesystem::path& metadata,
                                             const std::filesystem::path& vectors) {
  const auto meta = read_metadata(metadata);
  std::vector<std::vector<float>> rows;

  std::ifstream probe(vectors, std::ios::binary);
  if (!probe) throw Error(ErrorCode::IoError, "cannot open " + vectors.string());
  char magic[4] = {};
  probe.read(magic, sizeof(magic));
  if (probe.gcount() == 4 && std::memcmp(magic, StoreHeader::kMagic, 4) == 0) {
    probe.seekg(0);
    const StoreHeader header = read_header(probe, vectors.string());
    const auto values = read_payload(probe, header, vectors);
    rows.reserve(header.count);
    for (std::size_t i = 0; i < header.count; ++i) {
      rows.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(i * header.dim),
                        values.begin() + static_cast<std::ptrdiff_t>((i + 1) * header.dim));
    }
  } else {
    rows = read_decimal_vectors(vectors);
  }

  if (rows.size() != meta.size()) {
    throw Error(ErrorCode::CountMismatch, std::to_string(meta.size()) + " metadata rows but " +
                                              std::to_string(rows.size()) + " vectors");
  }
  std::vector<StoreRecord> records;
  records.reserve(meta.size());
  for (std::size_t i = 0; i < meta.size(); ++i) {
    records.push_back(StoreRecord{meta[i].id, meta[i].text, std::move(rows[i]), meta[i].source});
  }
  return records;
}

FilterOutcome filter_by_source(const CaptionStore& store, const std::set<std::string>& excluded) {
  FilterOutcome outcome{CaptionStore(store.dim(), store.label()), 0, {}};
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (excluded.contains(store.source(i))) {
      ++outcome.removed;
      continue;
    }
    outcome.store.add(store.id(i), store.text(i), store.embedding(i), store.source(i));
  }
  if (outcome.store.empty() && !store.empty()) {
    outcome.warnings.push_back("filter removed all " + std::to_string(store.size()) + " entries");
  }
  return outcome;
}

MergeOutcome merge_stores(const CaptionStore& a, const CaptionStore& b, bool dedup_on_text) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimMismatch, "cannot merge dim " + std::to_string(a.dim()) +
                                            " with dim " + std::to_string(b.dim()));
  }
  MergeOutcome outcome{CaptionStore(a.dim(), a.label()), 0, 0};
  outcome.store.reserve(a.size() + b.size());
  std::unordered_set<std::string_view> seen_text;
  for (std::size_t i = 0; i < a.size(); ++i) {
    outcome.store.add(a.id(i), a.text(i), a.embedding(i), a.source(i));
    if (dedup_on_text) seen_text.insert(a.text(i));
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (dedup_on_text && !seen_text.insert(b.text(i)).second) {
      ++outcome.dropped_duplicates;
      continue;
    }
    std::string id = b.id(i);
    if (outcome.store.contains_id(id)) {
      std::size_t suffix = 1;
      while (outcome.store.contains_id(b.id(i) + "#" + std::to_string(suffix))) ++suffix;
      id = b.id(i) + "#" + std::to_string(suffix);
      ++outcome.renamed_ids;
    }
    outcome.store.add(std::move(id), b.text(i), b.embedding(i), b.source(i));
  }
  return outcome;
}

}  // namespace ragcap
