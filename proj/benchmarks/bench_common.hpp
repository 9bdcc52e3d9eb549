#pragma once

#include <cstdio>
#include <random>
#include <vector>

#include "ragcap/store.hpp"

namespace ragcap::bench {

inline std::vector<float> gaussian(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

inline CaptionStore make_store(std::size_t n, std::size_t dim, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::vector<StoreRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "b%07zu", i);
    records.push_back({id, "caption", gaussian(rng, dim), "bench"});
  }
  return build_store(records, "bench");
}

}  // namespace ragcap::bench
