#include "qpsa/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qpsa/error.hpp"

namespace qpsa::metrics {

namespace {
// Likelihoods computed with renormalisation can exceed 1 by rounding.
constexpr double kLogProbSlack = 1e-9;
}  // namespace

double da_nonlinearity(double x) {
  if (std::isnan(x) || x > 1.0) {
    throw InputError(fmt::format("DA nonlinearity domain is (-inf, 1], got {}", x));
  }
  if (x >= 0.0) return x;
  // (1 - e^{-x/4}) / (1 + e^{-x/4}) == tanh(x/8), without overflow.
  return std::tanh(x / 8.0);
}

DaScore da_score(double log_prob, int length, int alphabet_size) {
  if (length < 1) throw InputError("DA needs a sequence length >= 1");
  if (alphabet_size < 2) throw InputError("DA needs an alphabet size >= 2");
  if (std::isnan(log_prob) || log_prob > kLogProbSlack) {
    throw InputError(fmt::format("log-probability {} is above 0", log_prob));
  }
  if (std::isinf(log_prob)) return DaScore{-1.0};
  const double lp = std::min(log_prob, 0.0);
  const double per_symbol = lp / std::log(static_cast<double>(alphabet_size)) /
                            static_cast<double>(length);
  return DaScore{da_nonlinearity(1.0 + per_symbol)};
}

std::vector<SequenceDa> score_dataset(const SequenceModel& model,
                                      const std::vector<Sequence>& dataset) {
  const int s = alphabet_size(model);
  std::vector<SequenceDa> out;
  out.reserve(dataset.size());
  for (const auto& seq : dataset) {
    const double lp = log_likelihood(model, seq);
    out.push_back(SequenceDa{lp, da_score(lp, static_cast<int>(seq.size()), s)});
  }
  return out;
}

double average_da(const SequenceModel& model,
                  const std::vector<Sequence>& dataset) {
  if (dataset.empty()) throw InputError("average DA of an empty dataset");
  double total = 0.0;
  for (const auto& scored : score_dataset(model, dataset)) total += scored.da.value;
  return total / static_cast<double>(dataset.size());
}

}  // namespace qpsa::metrics
