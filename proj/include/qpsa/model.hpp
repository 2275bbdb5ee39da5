#pragma once

#include <cstdint>
#include <string_view>
#include <variant>

#include "qpsa/hmm.hpp"
#include "qpsa/qhmm.hpp"

namespace qpsa {

/// Either kind of sequence model; the classifier and evaluation code go
/// through this so both kinds share one code path.
using SequenceModel = std::variant<hmm::CategoricalHmm, quantum::KrausModel>;

int alphabet_size(const SequenceModel& model);
std::string_view kind_name(const SequenceModel& model);

/// Natural-log likelihood, -infinity for an impossible sequence.
double log_likelihood(const SequenceModel& model, SequenceView sequence);

Sequence sample(const SequenceModel& model, int length, std::uint64_t seed,
                SequenceView prefix = {});

}  // namespace qpsa
