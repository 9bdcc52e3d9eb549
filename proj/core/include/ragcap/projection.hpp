#pragma once

#include <span>
#include <vector>

#include "ragcap/embedding.hpp"
#include "ragcap/store.hpp"

namespace ragcap {

struct ProjectionConfig {
  double temperature = 0.01;
  bool renormalize_output = true;

  /// Throws NonPositiveTemperature unless temperature is finite and > 0.
  void validate() const;
};

/// softmax_i(cos(query, E_i) / temperature) over the support, computed in
/// double with the maximum subtracted first. For unit-norm inputs the cosine
/// equals the plain dot product. Very small temperatures may underflow the
/// weights of distant entries to exactly zero.
std::vector<double> softmax_weights(std::span<const float> query, const CaptionStore& support,
                                    double temperature);

struct Projection {
  Embedding embedding;            // output, unit-norm when renormalized
  std::vector<double> raw;        // sum_i w_i E_i before renormalization
  std::vector<double> weights;
};

/// Replaces `query` with the softmax-weighted combination of support embeddings.
/// Throws DimMismatch, EmptyStore, NonPositiveTemperature, DegenerateSum.
Projection project_detailed(std::span<const float> query, const CaptionStore& support,
                            const ProjectionConfig& cfg);

Embedding project(std::span<const float> query, const CaptionStore& support,
                  const ProjectionConfig& cfg);

/// Shannon entropy (nats) of a weight vector; zero weights contribute 0.
double weight_entropy(std::span<const double> weights);

}  // namespace ragcap
