#include "ragcap/projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ragcap/error.hpp"

namespace ragcap {

namespace {
constexpr double kDegenerateNorm = 1e-9;
}

void ProjectionConfig::validate() const {
  if (!std::isfinite(temperature) || temperature <= 0.0) {
    throw Error(ErrorCode::NonPositiveTemperature,
                "temperature must be finite and > 0, got " + std::to_string(temperature));
  }
}

std::vector<double> softmax_weights(std::span<const float> query, const CaptionStore& support,
                                    double temperature) {
  ProjectionConfig{temperature, true}.validate();
  if (query.size() != support.dim()) {
    throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query.size()) +
                                            ", support dim " + std::to_string(support.dim()));
  }
  if (support.empty()) throw Error(ErrorCode::EmptyStore, "projection support is empty");

  std::vector<double> logits(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    logits[i] = cosine_similarity(query, support.embedding(i)) / temperature;
  }
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

Projection project_detailed(std::span<const float> query, const CaptionStore& support,
                            const ProjectionConfig& cfg) {
  cfg.validate();
  Projection out;
  out.weights = softmax_weights(query, support, cfg.temperature);
  out.raw.assign(support.dim(), 0.0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double w = out.weights[i];
    if (w == 0.0) continue;
    const auto e = support.embedding(i);
    for (std::size_t d = 0; d < e.size(); ++d) out.raw[d] += w * static_cast<double>(e[d]);
  }
  double norm_sq = 0.0;
  for (double x : out.raw) norm_sq += x * x;
  if (std::sqrt(norm_sq) < kDegenerateNorm) {
    throw Error(ErrorCode::DegenerateSum, "weighted support combination has ~zero norm");
  }
  if (cfg.renormalize_output) {
    out.embedding = normalize(std::span<const double>(out.raw));
  } else {
    std::vector<float> values(out.raw.begin(), out.raw.end());
    out.embedding = Embedding(std::move(values));
  }
  return out;
}

Embedding project(std::span<const float> query, const CaptionStore& support,
                  const ProjectionConfig& cfg) {
  return project_detailed(query, support, cfg).embedding;
}

double weight_entropy(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return std::max(0.0, h);
}

}  // namespace ragcap
