#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qpsa/model.hpp"
#include "qpsa/psa.hpp"

namespace qpsa::classify {

/// One model per class; a sequence goes to the class whose model gives the
/// higher description accuracy. Equal scores resolve to no_probable, so a
/// tie never asserts that a scenario is probable.
class TwoModelClassifier {
 public:
  /// Both models must be of the same kind and share an alphabet.
  TwoModelClassifier(SequenceModel probable, SequenceModel no_probable);

  const SequenceModel& probable() const { return probable_; }
  const SequenceModel& no_probable() const { return no_probable_; }
  int alphabet_size() const { return alphabet_size_; }

 private:
  SequenceModel probable_;
  SequenceModel no_probable_;
  int alphabet_size_;
};

struct Classification {
  psa::Label label = psa::Label::no_probable;
  double da_probable = 0.0;
  double da_no_probable = 0.0;
};

/// Decision rule on two DA values, with ties to no_probable.
psa::Label decide(double da_probable, double da_no_probable);

Classification classify(const TwoModelClassifier& clf, SequenceView sequence);

inline constexpr std::size_t class_index(psa::Label l) {
  return l == psa::Label::probable ? 0 : 1;
}

struct Evaluation {
  std::size_t count = 0;
  double accuracy = 0.0;
  /// confusion[true][predicted], index 0 = probable, 1 = no_probable.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  /// mean_da[true class][model], model 0 = probable model; NaN for a
  /// class absent from the data.
  std::array<std::array<double, 2>, 2> mean_da{};
  std::vector<Classification> predictions;
};

/// Every record must carry a ground-truth label.
Evaluation evaluate_classifier(const TwoModelClassifier& clf,
                               const std::vector<psa::LabeledSequence>& data);

}  // namespace qpsa::classify
