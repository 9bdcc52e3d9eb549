#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace ragcap {

/// Tolerance on | ||v|| - 1 | for a vector to count as unit-norm.
inline constexpr double kUnitNormTolerance = 1e-5;
/// Norms below this are treated as the zero vector.
inline constexpr double kZeroNormThreshold = 1e-12;

/// Dense 32-bit vector in the shared audio/text embedding space.
///
/// Construction validates that the vector is non-empty and finite. The
/// unit-norm flag is derived from the values, so an Embedding never lies
/// about its norm.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<float> values);

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  bool unit_norm() const noexcept { return unit_norm_; }

  std::span<const float> values() const noexcept { return values_; }
  operator std::span<const float>() const noexcept { return values_; }
  float operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<float> values_;
  bool unit_norm_ = false;
};

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> v);
bool all_finite(std::span<const float> v) noexcept;
bool is_unit_norm(std::span<const float> v, double tolerance = kUnitNormTolerance);

/// v / ||v||, accumulated in double and rounded to float.
/// Throws ZeroVector or NonFinite.
Embedding normalize(std::span<const float> v);
Embedding normalize(std::span<const double> v);

/// Cosine similarity clamped to [-1, 1]. Throws DimMismatch or ZeroVector.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Affine map from the embedding space into the generator's input space.
class LinearMapper {
 public:
  LinearMapper() = default;
  /// weight is row-major with `output_dim` rows and `input_dim` columns.
  LinearMapper(std::size_t output_dim, std::size_t input_dim, std::vector<float> weight,
               std::vector<float> bias);

  static LinearMapper identity(std::size_t dim);

  std::size_t output_dim() const noexcept { return output_dim_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::span<const float> weight() const noexcept { return weight_; }
  std::span<const float> bias() const noexcept { return bias_; }

  friend bool operator==(const LinearMapper&, const LinearMapper&) = default;

 private:
  std::size_t output_dim_ = 0;
  std::size_t input_dim_ = 0;
  std::vector<float> weight_;
  std::vector<float> bias_;
};

/// weight * e + bias. Throws DimMismatch when e.size() != input_dim.
std::vector<float> apply_mapper(const LinearMapper& mapper, std::span<const float> e);

// Mapper file: "DRM1" | u32 version | u32 output_dim | u32 input_dim |
// output_dim*input_dim f32 weights (row-major) | output_dim f32 bias.
// All little-endian.
void save_mapper(const LinearMapper& mapper, const std::filesystem::path& path);
LinearMapper load_mapper(const std::filesystem::path& path);

}  // namespace ragcap
