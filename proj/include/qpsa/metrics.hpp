#pragma once

#include <vector>

#include "qpsa/model.hpp"
#include "qpsa/types.hpp"

namespace qpsa::metrics {

/// Description accuracy, in (-1, 1]. 1 means the sequence was predicted
/// with certainty, 0 matches a uniform random model, -1 marks a sequence
/// the model deems impossible.
struct DaScore {
  double value = 0.0;
};

/// x for x >= 0, (1 - e^{-x/4}) / (1 + e^{-x/4}) otherwise.
/// Domain is (-inf, 1].
double da_nonlinearity(double x);

/// f(1 + log_s(P) / L) with P given as a natural log.
DaScore da_score(double log_prob, int length, int alphabet_size);

struct SequenceDa {
  double log_prob = 0.0;
  DaScore da;
};

/// Per-sequence log-likelihood and DA, scored with s = model alphabet size.
std::vector<SequenceDa> score_dataset(const SequenceModel& model,
                                      const std::vector<Sequence>& dataset);

double average_da(const SequenceModel& model,
                  const std::vector<Sequence>& dataset);

}  // namespace qpsa::metrics
