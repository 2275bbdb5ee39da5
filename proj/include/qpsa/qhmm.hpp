#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qpsa/hmm.hpp"
#include "qpsa/types.hpp"

namespace qpsa::quantum {

/// Below this per-step probability a belief cannot be renormalised and the
/// sequence is treated as impossible.
inline constexpr double kUnderflowThreshold = 1e-300;

/// K x K Hermitian, positive semidefinite, unit-trace matrix.
class DensityMatrix {
 public:
  /// Validates Hermiticity (1e-10), trace (1e-10) and PSD (-1e-9).
  explicit DensityMatrix(ComplexMatrix entries);

  static DensityMatrix maximally_mixed(int dim);
  /// Pure basis state |index><index|.
  static DensityMatrix pure(int dim, int index = 0);
  /// Skips validation; for states produced by trusted update arithmetic.
  static DensityMatrix unchecked(ComplexMatrix entries);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& matrix() const { return entries_; }

 private:
  struct Unchecked {};
  DensityMatrix(ComplexMatrix entries, Unchecked);
  ComplexMatrix entries_;
};

struct DensityResiduals {
  double hermitian = 0.0;  ///< max |rho - rho^H|
  double trace = 0.0;      ///< |tr rho - 1|
  double min_eigenvalue = 0.0;
};

DensityResiduals density_residuals(const ComplexMatrix& rho);

/// Kraus operators psi_{x,m}, x < alphabet_size, m < multiplicity, plus the
/// initial belief. Construction checks shapes only; completeness is the job
/// of validate_kraus, so the trainer can assemble models off the manifold.
class KrausModel {
 public:
  /// `operators[x * multiplicity + m]` is psi_{x,m}.
  KrausModel(int alphabet_size, int multiplicity,
             std::vector<ComplexMatrix> operators, DensityMatrix initial_state);

  /// Splits a stacked (M*mu*K) x K matrix into its K x K blocks, in the
  /// same x-major order.
  static KrausModel from_stacked(const ComplexMatrix& kappa, int alphabet_size,
                                 int multiplicity, DensityMatrix initial_state);

  int dim() const { return initial_state_.dim(); }
  int alphabet_size() const { return alphabet_size_; }
  int multiplicity() const { return multiplicity_; }

  const ComplexMatrix& op(int symbol, int m) const {
    return operators_[static_cast<std::size_t>(symbol * multiplicity_ + m)];
  }
  std::span<const ComplexMatrix> operators() const { return operators_; }
  std::span<const ComplexMatrix> operators_for(int symbol) const {
    return std::span<const ComplexMatrix>(operators_).subspan(
        static_cast<std::size_t>(symbol * multiplicity_),
        static_cast<std::size_t>(multiplicity_));
  }
  const DensityMatrix& initial_state() const { return initial_state_; }

  /// Vertical stack of all operators.
  ComplexMatrix stacked() const;

 private:
  int alphabet_size_;
  int multiplicity_;
  std::vector<ComplexMatrix> operators_;
  DensityMatrix initial_state_;
};

/// sum_m psi rho psi^H for the operators of one symbol (no normalisation).
ComplexMatrix apply_symbol(std::span<const ComplexMatrix> ops,
                           const ComplexMatrix& rho);

struct BeliefUpdate {
  DensityMatrix next;
  double prob = 0.0;
  /// False when prob fell below kUnderflowThreshold; `next` is then the
  /// unnormalised result and must not be used as a belief.
  bool valid = true;
};

BeliefUpdate belief_update(const DensityMatrix& rho, const KrausModel& model,
                           int symbol);

/// ln tr of the nested unnormalised channel applications, evaluated with
/// per-step renormalisation. Returns -infinity for an impossible sequence.
double log_likelihood(const KrausModel& model, SequenceView sequence);

/// The same quantity for a raw operator list; used by the trainer so that
/// loss and likelihood share a single evaluation path.
double log_likelihood(std::span<const ComplexMatrix> operators,
                      int multiplicity, const ComplexMatrix& initial_state,
                      SequenceView sequence);

/// Per-symbol outcome probabilities tr(sum_m psi_{x,m} rho psi_{x,m}^H).
RealVector symbol_probabilities(const DensityMatrix& rho,
                                const KrausModel& model);

/// Belief after conditioning the initial state on `prefix`. Throws
/// InputError if the prefix is impossible under the model.
DensityMatrix filter(const KrausModel& model, SequenceView prefix);

/// At every step draw a symbol from symbol_probabilities, then advance the
/// belief with belief_update. A nonempty `prefix` conditions the initial
/// belief first; the output does not repeat the prefix.
Sequence sample(const KrausModel& model, int length, std::uint64_t seed,
                SequenceView prefix = {});

/// Classical HMM as a K-dimensional model with mu = K: psi_{x,l} has only
/// column l nonzero, entry (k, l) = sqrt(a_{lk} e_k(x)), and the initial
/// state is diag(pi).
KrausModel embed_hmm(const hmm::CategoricalHmm& model);

struct KrausValidation {
  double completeness = 0.0;  ///< max |sum psi^H psi - I|
  DensityResiduals initial_state;
  bool passed = false;
};

KrausValidation validate_kraus(const KrausModel& model,
                               double completeness_tol = 1e-8);

}  // namespace qpsa::quantum
