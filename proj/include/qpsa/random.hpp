#pragma once

#include <cstdint>
#include <random>

#include "qpsa/types.hpp"

namespace qpsa {

using Rng = std::mt19937_64;

/// Index drawn from the (not necessarily normalised) nonnegative weights.
template <typename Weights>
int draw_categorical(const Weights& weights, Rng& rng) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) total += weights[i];
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double target = unit(rng) * total;
  double acc = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = static_cast<int>(i);
    if (target < acc) return last_positive;
  }
  return last_positive;
}

}  // namespace qpsa
