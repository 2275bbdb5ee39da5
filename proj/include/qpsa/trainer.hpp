#pragma once

#include <cstdint>
#include <vector>

#include "qpsa/qhmm.hpp"
#include "qpsa/types.hpp"

namespace qpsa::train {

/// Stacked Kraus operators kappa, (M*mu*K) x K, with kappa^H kappa = I.
struct StiefelPoint {
  ComplexMatrix matrix;

  /// max |kappa^H kappa - I|
  double residual() const;
};

enum class GradientMode { analytic, finite_difference };
enum class InitialBelief { maximally_mixed, pure };

struct TrainConfig {
  double learning_rate = 0.05;
  double decay = 0.95;
  int num_batches = 5;
  int epochs = 100;
  int multiplicity = 1;
  int dim = 4;
  std::uint64_t seed = 0;
  GradientMode gradient_mode = GradientMode::analytic;
  InitialBelief initial_belief = InitialBelief::maximally_mixed;

  /// Throws InputError on an out-of-range field.
  void validate() const;
};

/// Orthonormalised i.i.d. standard complex Gaussian matrix, with the QR
/// phase ambiguity fixed so the result is Haar distributed.
StiefelPoint random_stiefel(int rows, int cols, std::uint64_t seed);

/// Mean over the batch of -ln P(x). +infinity if any sequence is impossible.
double nll_loss(const StiefelPoint& kappa, const std::vector<Sequence>& batch,
                const quantum::DensityMatrix& initial_state, int alphabet_size,
                int multiplicity);

/// dl/d(conj kappa) of nll_loss, same shape as kappa. The real gradient
/// with respect to (Re kappa, Im kappa) is 2 Re G, 2 Im G, and -G is the
/// steepest-descent direction. Throws GradientUndefinedError if the loss
/// is infinite.
ComplexMatrix nll_gradient(const StiefelPoint& kappa,
                           const std::vector<Sequence>& batch,
                           const quantum::DensityMatrix& initial_state,
                           int alphabet_size, int multiplicity);

/// Central-difference estimate of nll_gradient in the same convention.
ComplexMatrix nll_gradient_fd(const StiefelPoint& kappa,
                              const std::vector<Sequence>& batch,
                              const quantum::DensityMatrix& initial_state,
                              int alphabet_size, int multiplicity,
                              double step = 1e-6);

/// Cayley retraction
///   kappa' = kappa - tau U (I + tau/2 V^H U)^{-1} V^H kappa,
///   U = [G | kappa], V = [kappa | -G].
/// Throws StepFailure when the 2K x 2K system is singular or the result is
/// not finite.
StiefelPoint cayley_step(const StiefelPoint& kappa, const ComplexMatrix& grad,
                         double tau);

struct LossRecord {
  int epoch = 0;
  int batch = 0;
  /// Batch loss at the parameters the step started from.
  double loss = 0.0;
  /// Step size actually applied (after any halvings).
  double tau = 0.0;
};

struct TrainResult {
  quantum::KrausModel model;
  StiefelPoint kappa;
  std::vector<LossRecord> log;
};

/// Mini-batch Riemannian gradient descent over kappa. Each epoch shuffles
/// the data with the seeded generator, splits it into contiguous batches,
/// takes one Cayley step per batch and then multiplies tau by the decay.
/// A failed step is retried with tau halved, up to 30 times.
TrainResult train_qhmm(const std::vector<Sequence>& dataset,
                       const TrainConfig& config, int alphabet_size);

quantum::DensityMatrix initial_belief(const TrainConfig& config);

}  // namespace qpsa::train
