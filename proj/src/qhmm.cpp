#include "qpsa/qhmm.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "qpsa/error.hpp"
#include "qpsa/random.hpp"

namespace qpsa::quantum {

namespace {

constexpr double kHermitianTol = 1e-10;
constexpr double kTraceTol = 1e-10;
constexpr double kPsdTol = -1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_symbol(int symbol, int alphabet_size) {
  if (symbol < 0 || symbol >= alphabet_size) {
    throw InputError(fmt::format("symbol {} outside alphabet of size {}",
                                 symbol, alphabet_size));
  }
}

void check_sequence(SequenceView sequence, int alphabet_size) {
  if (sequence.empty()) throw InputError("empty sequence");
  for (int s : sequence) check_symbol(s, alphabet_size);
}

}  // namespace

DensityResiduals density_residuals(const ComplexMatrix& rho) {
  DensityResiduals r;
  r.hermitian = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  r.trace = std::abs(rho.trace() - Complex(1.0, 0.0));
  const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm,
                                                      Eigen::EigenvaluesOnly);
  r.min_eigenvalue = solver.eigenvalues().minCoeff();
  return r;
}

DensityMatrix::DensityMatrix(ComplexMatrix entries)
    : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
    throw InputError(fmt::format("density matrix must be square and nonempty, "
                                 "got {}x{}",
                                 entries_.rows(), entries_.cols()));
  }
  const DensityResiduals r = density_residuals(entries_);
  if (r.hermitian > kHermitianTol) {
    throw InputError(
        fmt::format("density matrix not Hermitian (residual {})", r.hermitian));
  }
  if (r.trace > kTraceTol) {
    throw InputError(
        fmt::format("density matrix trace off by {}", r.trace));
  }
  if (r.min_eigenvalue < kPsdTol) {
    throw InputError(fmt::format(
        "density matrix not PSD (min eigenvalue {})", r.min_eigenvalue));
  }
}

DensityMatrix::DensityMatrix(ComplexMatrix entries, Unchecked)
    : entries_(std::move(entries)) {}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim < 1) throw InputError("density matrix dimension must be >= 1");
  return DensityMatrix(
      ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim), Unchecked{});
}

DensityMatrix DensityMatrix::pure(int dim, int index) {
  if (dim < 1 || index < 0 || index >= dim) {
    throw InputError(fmt::format("pure state index {} invalid for dim {}",
                                 index, dim));
  }
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  m(index, index) = 1.0;
  return DensityMatrix(std::move(m), Unchecked{});
}

DensityMatrix DensityMatrix::unchecked(ComplexMatrix entries) {
  return DensityMatrix(std::move(entries), Unchecked{});
}

KrausModel::KrausModel(int alphabet_size, int multiplicity,
                       std::vector<ComplexMatrix> operators,
                       DensityMatrix initial_state)
    : alphabet_size_(alphabet_size),
      multiplicity_(multiplicity),
      operators_(std::move(operators)),
      initial_state_(std::move(initial_state)) {
  if (alphabet_size_ < 1) throw InputError("alphabet size must be >= 1");
  if (multiplicity_ < 1) throw InputError("multiplicity must be >= 1");
  const auto expected =
      static_cast<std::size_t>(alphabet_size_) * static_cast<std::size_t>(multiplicity_);
  if (operators_.size() != expected) {
    throw InputError(fmt::format("expected {} Kraus operators, got {}",
                                 expected, operators_.size()));
  }
  const int k = initial_state_.dim();
  for (const auto& op : operators_) {
    if (op.rows() != k || op.cols() != k) {
      throw InputError(fmt::format("Kraus operator is {}x{}, expected {}x{}",
                                   op.rows(), op.cols(), k, k));
    }
  }
}

KrausModel KrausModel::from_stacked(const ComplexMatrix& kappa,
                                    int alphabet_size, int multiplicity,
                                    DensityMatrix initial_state) {
  const int k = initial_state.dim();
  const Eigen::Index n = static_cast<Eigen::Index>(alphabet_size) * multiplicity;
  if (kappa.cols() != k || kappa.rows() != n * k) {
    throw InputError(fmt::format("stacked matrix is {}x{}, expected {}x{}",
                                 kappa.rows(), kappa.cols(), n * k, k));
  }
  std::vector<ComplexMatrix> ops;
  ops.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ops.emplace_back(kappa.middleRows(i * k, k));
  return KrausModel(alphabet_size, multiplicity, std::move(ops),
                    std::move(initial_state));
}

ComplexMatrix KrausModel::stacked() const {
  const int k = dim();
  ComplexMatrix out(static_cast<Eigen::Index>(operators_.size()) * k, k);
  for (std::size_t i = 0; i < operators_.size(); ++i) {
    out.middleRows(static_cast<Eigen::Index>(i) * k, k) = operators_[i];
  }
  return out;
}

ComplexMatrix apply_symbol(std::span<const ComplexMatrix> ops,
                           const ComplexMatrix& rho) {
  const auto k = rho.rows();
  ComplexMatrix out = ComplexMatrix::Zero(k, k);
  ComplexMatrix tmp(k, k);
  for (const auto& psi : ops) {
    tmp.noalias() = psi * rho;
    out.noalias() += tmp * psi.adjoint();
  }
  return out;
}

BeliefUpdate belief_update(const DensityMatrix& rho, const KrausModel& model,
                           int symbol) {
  check_symbol(symbol, model.alphabet_size());
  if (rho.dim() != model.dim()) {
    throw InputError(fmt::format("belief dim {} does not match model dim {}",
                                 rho.dim(), model.dim()));
  }
  ComplexMatrix next = apply_symbol(model.operators_for(symbol), rho.matrix());
  const double prob = next.trace().real();
  if (!(prob > kUnderflowThreshold)) {
    return BeliefUpdate{DensityMatrix::unchecked(std::move(next)), prob, false};
  }
  ComplexMatrix normalized = (next + next.adjoint()) / (2.0 * prob);
  return BeliefUpdate{DensityMatrix::unchecked(std::move(normalized)), prob,
                      true};
}

double log_likelihood(std::span<const ComplexMatrix> operators,
                      int multiplicity, const ComplexMatrix& initial_state,
                      SequenceView sequence) {
  const auto k = initial_state.rows();
  ComplexMatrix rho = initial_state;
  ComplexMatrix next(k, k);
  ComplexMatrix tmp(k, k);
  double ll = 0.0;
  for (int s : sequence) {
    next.setZero();
    const auto ops = operators.subspan(
        static_cast<std::size_t>(s * multiplicity),
        static_cast<std::size_t>(multiplicity));
    for (const auto& psi : ops) {
      tmp.noalias() = psi * rho;
      next.noalias() += tmp * psi.adjoint();
    }
    const double p = next.trace().real();
    if (!(p > kUnderflowThreshold)) return kNegInf;
    rho = next / p;
    ll += std::log(p);
  }
  return ll;
}

double log_likelihood(const KrausModel& model, SequenceView sequence) {
  check_sequence(sequence, model.alphabet_size());
  return log_likelihood(model.operators(), model.multiplicity(),
                        model.initial_state().matrix(), sequence);
}

RealVector symbol_probabilities(const DensityMatrix& rho,
                                const KrausModel& model) {
  RealVector probs(model.alphabet_size());
  for (int x = 0; x < model.alphabet_size(); ++x) {
    probs(x) = apply_symbol(model.operators_for(x), rho.matrix()).trace().real();
  }
  return probs;
}

DensityMatrix filter(const KrausModel& model, SequenceView prefix) {
  DensityMatrix rho = model.initial_state();
  for (int s : prefix) {
    BeliefUpdate up = belief_update(rho, model, s);
    if (!up.valid) {
      throw InputError("conditioning prefix has zero probability under model");
    }
    rho = std::move(up.next);
  }
  return rho;
}

Sequence sample(const KrausModel& model, int length, std::uint64_t seed,
                SequenceView prefix) {
  if (length < 1) throw InputError("sample length must be >= 1");
  DensityMatrix rho = filter(model, prefix);
  Rng rng(seed);
  Sequence out;
  out.reserve(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    RealVector probs = symbol_probabilities(rho, model);
    probs = probs.cwiseMax(0.0);
    const int symbol = draw_categorical(probs, rng);
    out.push_back(symbol);
    BeliefUpdate up = belief_update(rho, model, symbol);
    if (!up.valid) break;
    rho = std::move(up.next);
  }
  return out;
}

KrausModel embed_hmm(const hmm::CategoricalHmm& model) {
  const int k = model.num_states();
  const int m = model.alphabet_size();
  const auto& a = model.transition();
  const auto& e = model.emission();
  std::vector<ComplexMatrix> ops;
  ops.reserve(static_cast<std::size_t>(m * k));
  // Operator (x, l): emit x from state l, then move l -> k.
  for (int x = 0; x < m; ++x) {
    for (int l = 0; l < k; ++l) {
      ComplexMatrix psi = ComplexMatrix::Zero(k, k);
      for (int row = 0; row < k; ++row) {
        psi(row, l) = std::sqrt(e(l, x) * a(l, row));
      }
      ops.push_back(std::move(psi));
    }
  }
  ComplexMatrix pi0 = ComplexMatrix::Zero(k, k);
  for (int l = 0; l < k; ++l) pi0(l, l) = model.start()(l);
  return KrausModel(m, k, std::move(ops), DensityMatrix(std::move(pi0)));
}

KrausValidation validate_kraus(const KrausModel& model,
                               double completeness_tol) {
  const int k = model.dim();
  ComplexMatrix sum = ComplexMatrix::Zero(k, k);
  for (const auto& psi : model.operators()) sum.noalias() += psi.adjoint() * psi;
  KrausValidation v;
  v.completeness = (sum - ComplexMatrix::Identity(k, k)).cwiseAbs().maxCoeff();
  v.initial_state = density_residuals(model.initial_state().matrix());
  v.passed = v.completeness <= completeness_tol &&
             v.initial_state.hermitian <= kHermitianTol &&
             v.initial_state.trace <= kTraceTol &&
             v.initial_state.min_eigenvalue >= kPsdTol;
  return v;
}

}  // namespace qpsa::quantum
