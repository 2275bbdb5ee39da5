#pragma once

#include <cstdint>
#include <vector>

#include "qpsa/types.hpp"

namespace qpsa::hmm {

/// Discrete-emission hidden Markov model.
///
/// `transition(k, k2)` is the probability of moving from state k to k2,
/// row k of `emission` is the symbol distribution of state k, and `start`
/// is the distribution of the first hidden state. All three are validated
/// on construction to be stochastic within 1e-9.
class CategoricalHmm {
 public:
  CategoricalHmm(RealMatrix transition, RealMatrix emission, RealVector start);

  int num_states() const { return static_cast<int>(start_.size()); }
  int alphabet_size() const { return static_cast<int>(emission_.cols()); }

  const RealMatrix& transition() const { return transition_; }
  const RealMatrix& emission() const { return emission_; }
  const RealVector& start() const { return start_; }

 private:
  RealMatrix transition_;
  RealMatrix emission_;
  RealVector start_;
};

/// Scaled forward/backward quantities for one sequence. Row t of `forward`
/// holds P(Q_t = k | x_1..x_t); `scaling(t)` is P(x_t | x_1..x_{t-1}), so
/// the log-likelihood is the sum of log scaling factors. `backward` rows
/// are divided by the same factors, which makes forward(t,k)*backward(t,k)
/// the smoothed posterior directly.
struct TrellisResult {
  double log_likelihood = 0.0;
  RealMatrix forward;
  RealMatrix backward;
  RealVector scaling;
};

/// Forward pass. A zero-probability sequence yields a log-likelihood of
/// -infinity; the trellis rows after the impossible step are left zero.
TrellisResult forward(const CategoricalHmm& model, SequenceView sequence);

/// Forward pass followed by the backward recursion. `backward(L-1, k)` is 1.
TrellisResult forward_backward(const CategoricalHmm& model,
                               SequenceView sequence);

/// P(X) reconstructed from the backward recursion alone, as
/// sum_l pi_l e_l(x_1) b_l(1), in log space. Independent of the forward pass.
double backward_log_likelihood(const CategoricalHmm& model,
                               SequenceView sequence);

/// Smoothed state distribution at 1-based position `t`.
RealVector posterior(const CategoricalHmm& model, SequenceView sequence,
                     int t);

double log_likelihood(const CategoricalHmm& model, SequenceView sequence);

struct BaumWelchConfig {
  int max_iters = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct BaumWelchResult {
  CategoricalHmm model;
  /// Total training log-likelihood of the model entering each iteration,
  /// followed by the log-likelihood of the returned model.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
};

/// Maximum-likelihood fit by expectation-maximisation from a seeded
/// Dirichlet(1,...,1) initialisation. Stops once the total log-likelihood
/// improves by less than `tol` or after `max_iters` M-steps.
BaumWelchResult baum_welch_fit(const std::vector<Sequence>& dataset,
                               int num_states, int alphabet_size,
                               const BaumWelchConfig& config);

/// Draws one sequence of `length` symbols. When `prefix` is nonempty the
/// hidden state is first filtered through it, and the returned symbols
/// continue the prefix (the prefix itself is not included).
Sequence sample(const CategoricalHmm& model, int length, std::uint64_t seed,
                SequenceView prefix = {});

}  // namespace qpsa::hmm
