#include "qpsa/classifier.hpp"

#include <limits>

#include <fmt/format.h>

#include "qpsa/error.hpp"
#include "qpsa/metrics.hpp"

namespace qpsa::classify {

TwoModelClassifier::TwoModelClassifier(SequenceModel probable,
                                       SequenceModel no_probable)
    : probable_(std::move(probable)),
      no_probable_(std::move(no_probable)),
      alphabet_size_(qpsa::alphabet_size(probable_)) {
  if (probable_.index() != no_probable_.index()) {
    throw InputError(fmt::format("classifier models differ in kind ({} vs {})",
                                 kind_name(probable_), kind_name(no_probable_)));
  }
  if (qpsa::alphabet_size(no_probable_) != alphabet_size_) {
    throw InputError(fmt::format("classifier alphabet mismatch ({} vs {})",
                                 alphabet_size_,
                                 qpsa::alphabet_size(no_probable_)));
  }
}

psa::Label decide(double da_probable, double da_no_probable) {
  return da_probable > da_no_probable ? psa::Label::probable
                                      : psa::Label::no_probable;
}

Classification classify(const TwoModelClassifier& clf, SequenceView sequence) {
  const int len = static_cast<int>(sequence.size());
  const int s = clf.alphabet_size();
  Classification c;
  c.da_probable =
      metrics::da_score(log_likelihood(clf.probable(), sequence), len, s).value;
  c.da_no_probable =
      metrics::da_score(log_likelihood(clf.no_probable(), sequence), len, s).value;
  c.label = decide(c.da_probable, c.da_no_probable);
  return c;
}

Evaluation evaluate_classifier(const TwoModelClassifier& clf,
                               const std::vector<psa::LabeledSequence>& data) {
  if (data.empty()) throw InputError("cannot evaluate on an empty dataset");
  Evaluation ev;
  std::array<std::size_t, 2> per_class{};
  std::size_t correct = 0;
  for (const auto& rec : data) {
    if (!rec.label) throw InputError("evaluation record without a label");
    const Classification c = classify(clf, rec.sequence);
    const std::size_t t = class_index(*rec.label);
    const std::size_t p = class_index(c.label);
    ++ev.confusion[t][p];
    ++per_class[t];
    ev.mean_da[t][0] += c.da_probable;
    ev.mean_da[t][1] += c.da_no_probable;
    if (t == p) ++correct;
    ev.predictions.push_back(c);
  }
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t m = 0; m < 2; ++m) {
      ev.mean_da[t][m] = per_class[t] == 0
                             ? std::numeric_limits<double>::quiet_NaN()
                             : ev.mean_da[t][m] / static_cast<double>(per_class[t]);
    }
  }
  ev.count = data.size();
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return ev;
}

}  // namespace qpsa::classify
