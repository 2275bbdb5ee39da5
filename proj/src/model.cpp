#include "qpsa/model.hpp"

namespace qpsa {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

int alphabet_size(const SequenceModel& model) {
  return std::visit([](const auto& m) { return m.alphabet_size(); }, model);
}

std::string_view kind_name(const SequenceModel& model) {
  return std::visit(
      overloaded{[](const hmm::CategoricalHmm&) { return std::string_view("hmm"); },
                 [](const quantum::KrausModel&) { return std::string_view("qhmm"); }},
      model);
}

double log_likelihood(const SequenceModel& model, SequenceView sequence) {
  return std::visit(
      overloaded{
          [&](const hmm::CategoricalHmm& m) { return hmm::log_likelihood(m, sequence); },
          [&](const quantum::KrausModel& m) {
            return quantum::log_likelihood(m, sequence);
          }},
      model);
}

Sequence sample(const SequenceModel& model, int length, std::uint64_t seed,
                SequenceView prefix) {
  return std::visit(
      overloaded{[&](const hmm::CategoricalHmm& m) {
                   return hmm::sample(m, length, seed, prefix);
                 },
                 [&](const quantum::KrausModel& m) {
                   return quantum::sample(m, length, seed, prefix);
                 }},
      model);
}

}  // namespace qpsa
