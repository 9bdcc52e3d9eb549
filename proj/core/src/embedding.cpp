#include "ragcap/embedding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "ragcap/error.hpp"

namespace ragcap {
namespace {

constexpr std::array<char, 4> kMapperMagic = {'D', 'R', 'M', '1'};
constexpr std::uint32_t kMapperVersion = 1;

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::DimMismatch,
                "dimension " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

Embedding::Embedding(std::vector<float> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::DimMismatch, "embedding must have dim >= 1");
  if (!all_finite(values_)) throw Error(ErrorCode::NonFinite, "embedding has NaN/Inf component");
  unit_norm_ = is_unit_norm(values_);
}

double dot(std::span<const float> a, std::span<const float> b) {
  require_same_dim(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l2_norm(std::span<const float> v) {
  double acc = 0.0;
  for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(acc);
}

bool all_finite(std::span<const float> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

bool is_unit_norm(std::span<const float> v, double tolerance) {
  return std::abs(l2_norm(v) - 1.0) <= tolerance;
}

Embedding normalize(std::span<const float> v) {
  if (v.empty()) throw Error(ErrorCode::DimMismatch, "cannot normalize an empty vector");
  if (!all_finite(v)) throw Error(ErrorCode::NonFinite, "vector has NaN/Inf component");
  const double norm = l2_norm(v);
  if (norm < kZeroNormThreshold) throw Error(ErrorCode::ZeroVector, "vector norm is zero");
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(v[i]) / norm);
  }
  return Embedding(std::move(out));
}

Embedding normalize(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::DimMismatch, "cannot normalize an empty vector");
  double acc = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "vector has NaN/Inf component");
    acc += x * x;
  }
  const double norm = std::sqrt(acc);
  if (norm < kZeroNormThreshold) throw Error(ErrorCode::ZeroVector, "vector norm is zero");
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return Embedding(std::move(out));
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  require_same_dim(a.size(), b.size());
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    ab += x * y;
    aa += x * x;
    bb += y * y;
  }
  if (std::sqrt(aa) < kZeroNormThreshold || std::sqrt(bb) < kZeroNormThreshold) {
    throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  }
  // sqrt(aa * bb) rather than sqrt(aa) * sqrt(bb): identical inputs then give exactly 1.
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

LinearMapper::LinearMapper(std::size_t output_dim, std::size_t input_dim,
                           std::vector<float> weight, std::vector<float> bias)
    : output_dim_(output_dim),
      input_dim_(input_dim),
      weight_(std::move(weight)),
      bias_(std::move(bias)) {
  if (output_dim_ == 0 || input_dim_ == 0) {
    throw Error(ErrorCode::DimMismatch, "mapper dimensions must be >= 1");
  }
  if (weight_.size() != output_dim_ * input_dim_) {
    throw Error(ErrorCode::DimMismatch, "mapper weight has " + std::to_string(weight_.size()) +
                                            " entries, expected " +
                                            std::to_string(output_dim_ * input_dim_));
  }
  require_same_dim(bias_.size(), output_dim_);
  if (!all_finite(weight_) || !all_finite(bias_)) {
    throw Error(ErrorCode::NonFinite, "mapper has NaN/Inf entries");
  }
}

LinearMapper LinearMapper::identity(std::size_t dim) {
  std::vector<float> weight(dim * dim, 0.0f);
  for (std::size_t i = 0; i < dim; ++i) weight[i * dim + i] = 1.0f;
  return LinearMapper(dim, dim, std::move(weight), std::vector<float>(dim, 0.0f));
}

std::vector<float> apply_mapper(const LinearMapper& mapper, std::span<const float> e) {
  require_same_dim(e.size(), mapper.input_dim());
  const auto weight = mapper.weight();
  const auto bias = mapper.bias();
  std::vector<float> out(mapper.output_dim());
  for (std::size_t r = 0; r < mapper.output_dim(); ++r) {
    double acc = bias[r];
    const float* row = weight.data() + r * mapper.input_dim();
    for (std::size_t c = 0; c < mapper.input_dim(); ++c) {
      acc += static_cast<double>(row[c]) * static_cast<double>(e[c]);
    }
    out[r] = static_cast<float>(acc);
  }
  return out;
}

void save_mapper(const LinearMapper& mapper, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(kMapperMagic.data(), kMapperMagic.size());
  binary_io::write_le(out, kMapperVersion);
  binary_io::write_le(out, static_cast<std::uint32_t>(mapper.output_dim()));
  binary_io::write_le(out, static_cast<std::uint32_t>(mapper.input_dim()));
  binary_io::write_floats_le(out, mapper.weight());
  binary_io::write_floats_le(out, mapper.bias());
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

LinearMapper load_mapper(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, 4> magic{};
  std::uint32_t version = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  if (!in.read(magic.data(), magic.size()) || magic != kMapperMagic) {
    throw Error(ErrorCode::CorruptHeader, path.string() + ": bad mapper magic");
  }
  if (!binary_io::read_le(in, version) || version != kMapperVersion) {
    throw Error(ErrorCode::CorruptHeader, path.string() + ": unsupported mapper version");
  }
  if (!binary_io::read_le(in, rows) || !binary_io::read_le(in, cols) || rows == 0 || cols == 0) {
    throw Error(ErrorCode::CorruptHeader, path.string() + ": bad mapper dimensions");
  }
  std::vector<float> weight(static_cast<std::size_t>(rows) * cols);
  std::vector<float> bias(rows);
  if (!binary_io::read_floats_le(in, weight) || !binary_io::read_floats_le(in, bias)) {
    throw Error(ErrorCode::CorruptHeader, path.string() + ": truncated mapper payload");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::CorruptHeader, path.string() + ": trailing bytes after mapper");
  }
  return LinearMapper(rows, cols, std::move(weight), std::move(bias));
}

}  // namespace ragcap
