#include "qpsa/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "qpsa/error.hpp"
#include "qpsa/random.hpp"

namespace qpsa::train {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxHalvings = 30;

std::vector<ComplexMatrix> split_blocks(const ComplexMatrix& kappa, int dim) {
  std::vector<ComplexMatrix> ops;
  const auto n = kappa.rows() / dim;
  ops.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ops.emplace_back(kappa.middleRows(i * dim, dim));
  return ops;
}

void check_layout(const StiefelPoint& kappa, int dim, int alphabet_size,
                  int multiplicity) {
  const Eigen::Index rows =
      static_cast<Eigen::Index>(alphabet_size) * multiplicity * dim;
  if (kappa.matrix.cols() != dim || kappa.matrix.rows() != rows) {
    throw InputError(fmt::format(
        "kappa is {}x{}, expected {}x{} for M={}, mu={}, K={}",
        kappa.matrix.rows(), kappa.matrix.cols(), rows, dim, alphabet_size,
        multiplicity, dim));
  }
}

void check_batch(const std::vector<Sequence>& batch, int alphabet_size) {
  if (batch.empty()) throw InputError("empty batch");
  for (const auto& seq : batch) {
    if (seq.empty()) throw InputError("empty sequence in batch");
    for (int s : seq) {
      if (s < 0 || s >= alphabet_size) {
        throw InputError(fmt::format("symbol {} outside alphabet of size {}",
                                     s, alphabet_size));
      }
    }
  }
}

// Accumulates -dlnP/d(conj psi) for one sequence into `grad`. Forward
// beliefs and backward effects are both renormalised per step; the ratio
// E_t psi rho_{t-1} / tr(E_t Phi_t(rho_{t-1})) is invariant to that scaling.
void accumulate_sequence_gradient(const std::vector<ComplexMatrix>& ops,
                                  int multiplicity,
                                  const ComplexMatrix& initial_state,
                                  SequenceView seq, ComplexMatrix& grad) {
  const auto k = initial_state.rows();
  const std::size_t len = seq.size();

  std::vector<ComplexMatrix> beliefs;
  beliefs.reserve(len + 1);
  beliefs.push_back(initial_state);
  for (std::size_t t = 0; t < len; ++t) {
    const auto sym_ops = std::span<const ComplexMatrix>(ops).subspan(
        static_cast<std::size_t>(seq[t] * multiplicity),
        static_cast<std::size_t>(multiplicity));
    ComplexMatrix next = quantum::apply_symbol(sym_ops, beliefs.back());
    const double p = next.trace().real();
    if (!(p > quantum::kUnderflowThreshold)) {
      throw GradientUndefinedError("gradient undefined: sequence is impossible");
    }
    beliefs.push_back(next / p);
  }

  // effects[t] is the normalised adjoint propagation of I through steps
  // t+1..L (0-based: symbols seq[t..len-1]).
  std::vector<ComplexMatrix> effects(len + 1);
  effects[len] = ComplexMatrix::Identity(k, k);
  ComplexMatrix tmp(k, k);
  for (std::size_t t = len; t-- > 0;) {
    ComplexMatrix prev = ComplexMatrix::Zero(k, k);
    for (int m = 0; m < multiplicity; ++m) {
      const auto& psi = ops[static_cast<std::size_t>(seq[t] * multiplicity + m)];
      tmp.noalias() = psi.adjoint() * effects[t + 1];
      prev.noalias() += tmp * psi;
    }
    const double tr = prev.trace().real();
    if (!(tr > quantum::kUnderflowThreshold)) {
      throw GradientUndefinedError("gradient undefined: vanishing effect");
    }
    effects[t] = prev / tr;
  }

  for (std::size_t t = 0; t < len; ++t) {
    const auto& effect = effects[t + 1];
    const auto& rho = beliefs[t];
    // tr(E Phi(rho)) = sum_m tr(E psi rho psi^H)
    Complex denom = 0.0;
    std::vector<ComplexMatrix> partial;
    partial.reserve(static_cast<std::size_t>(multiplicity));
    for (int m = 0; m < multiplicity; ++m) {
      const auto& psi = ops[static_cast<std::size_t>(seq[t] * multiplicity + m)];
      ComplexMatrix epr = effect * psi * rho;
      denom += (epr * psi.adjoint()).trace();
      partial.push_back(std::move(epr));
    }
    const double d = denom.real();
    if (!(d > 0.0)) {
      throw GradientUndefinedError("gradient undefined: zero step probability");
    }
    for (int m = 0; m < multiplicity; ++m) {
      const Eigen::Index block = static_cast<Eigen::Index>(seq[t] * multiplicity + m);
      grad.middleRows(block * k, k) -= partial[static_cast<std::size_t>(m)] / d;
    }
  }
}

}  // namespace

double StiefelPoint::residual() const {
  const auto k = matrix.cols();
  return (matrix.adjoint() * matrix - ComplexMatrix::Identity(k, k))
      .cwiseAbs()
      .maxCoeff();
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be > 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw InputError("decay must be in (0, 1]");
  if (num_batches < 1) throw InputError("number of batches must be >= 1");
  if (epochs < 0) throw InputError("epochs must be >= 0");
  if (multiplicity < 1) throw InputError("mu must be >= 1");
  if (dim < 1) throw InputError("K must be >= 1");
}

StiefelPoint random_stiefel(int rows, int cols, std::uint64_t seed) {
  if (cols < 1 || rows < cols) {
    throw InputError(fmt::format(
        "random_stiefel needs rows >= cols >= 1, got {}x{}", rows, cols));
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix z(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(r, c) = Complex(re, im);
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(rows, cols);
  const ComplexMatrix& r = qr.matrixQR();
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double mag = std::abs(r(c, c));
    if (mag > 0.0) q.col(c) *= r(c, c) / mag;
  }
  return StiefelPoint{std::move(q)};
}

double nll_loss(const StiefelPoint& kappa, const std::vector<Sequence>& batch,
                const quantum::DensityMatrix& initial_state, int alphabet_size,
                int multiplicity) {
  check_layout(kappa, initial_state.dim(), alphabet_size, multiplicity);
  check_batch(batch, alphabet_size);
  const auto ops = split_blocks(kappa.matrix, initial_state.dim());
  double total = 0.0;
  for (const auto& seq : batch) {
    const double ll = quantum::log_likelihood(ops, multiplicity,
                                              initial_state.matrix(), seq);
    if (!std::isfinite(ll)) return kInf;
    total -= ll;
  }
  return total / static_cast<double>(batch.size());
}

ComplexMatrix nll_gradient(const StiefelPoint& kappa,
                           const std::vector<Sequence>& batch,
                           const quantum::DensityMatrix& initial_state,
                           int alphabet_size, int multiplicity) {
  check_layout(kappa, initial_state.dim(), alphabet_size, multiplicity);
  check_batch(batch, alphabet_size);
  const auto ops = split_blocks(kappa.matrix, initial_state.dim());
  ComplexMatrix grad = ComplexMatrix::Zero(kappa.matrix.rows(), kappa.matrix.cols());
  for (const auto& seq : batch) {
    accumulate_sequence_gradient(ops, multiplicity, initial_state.matrix(), seq,
                                 grad);
  }
  return grad / static_cast<double>(batch.size());
}

ComplexMatrix nll_gradient_fd(const StiefelPoint& kappa,
                              const std::vector<Sequence>& batch,
                              const quantum::DensityMatrix& initial_state,
                              int alphabet_size, int multiplicity,
                              double step) {
  const double base =
      nll_loss(kappa, batch, initial_state, alphabet_size, multiplicity);
  if (!std::isfinite(base)) {
    throw GradientUndefinedError("gradient undefined: loss is infinite");
  }
  ComplexMatrix grad(kappa.matrix.rows(), kappa.matrix.cols());
  StiefelPoint probe = kappa;
  auto loss_at = [&](Eigen::Index r, Eigen::Index c, Complex delta) {
    probe.matrix(r, c) = kappa.matrix(r, c) + delta;
    const double v = nll_loss(probe, batch, initial_state, alphabet_size, multiplicity);
    probe.matrix(r, c) = kappa.matrix(r, c);
    return v;
  };
  for (Eigen::Index c = 0; c < grad.cols(); ++c) {
    for (Eigen::Index r = 0; r < grad.rows(); ++r) {
      const double d_re =
          (loss_at(r, c, {step, 0.0}) - loss_at(r, c, {-step, 0.0})) / (2 * step);
      const double d_im =
          (loss_at(r, c, {0.0, step}) - loss_at(r, c, {0.0, -step})) / (2 * step);
      grad(r, c) = 0.5 * Complex(d_re, d_im);
    }
  }
  return grad;
}

StiefelPoint cayley_step(const StiefelPoint& kappa, const ComplexMatrix& grad,
                         double tau) {
  const auto& x = kappa.matrix;
  if (grad.rows() != x.rows() || grad.cols() != x.cols()) {
    throw InputError(fmt::format("gradient is {}x{}, kappa is {}x{}",
                                 grad.rows(), grad.cols(), x.rows(), x.cols()));
  }
  if (!(tau >= 0.0)) throw InputError("step size must be >= 0");
  if (tau == 0.0) return kappa;

  const auto rows = x.rows();
  const auto k = x.cols();
  ComplexMatrix u(rows, 2 * k);
  u << grad, x;
  ComplexMatrix v(rows, 2 * k);
  v << x, -grad;

  ComplexMatrix system = ComplexMatrix::Identity(2 * k, 2 * k);
  system.noalias() += (0.5 * tau) * (v.adjoint() * u);
  Eigen::FullPivLU<ComplexMatrix> lu(system);
  if (!lu.isInvertible()) {
    throw StepFailure(fmt::format("Cayley system singular at tau = {}", tau));
  }
  const ComplexMatrix rhs = v.adjoint() * x;
  const ComplexMatrix solved = lu.solve(rhs);
  StiefelPoint next{x - tau * (u * solved)};
  if (!next.matrix.allFinite()) {
    throw StepFailure(fmt::format("Cayley step not finite at tau = {}", tau));
  }
  return next;
}

quantum::DensityMatrix initial_belief(const TrainConfig& config) {
  return config.initial_belief == InitialBelief::pure
             ? quantum::DensityMatrix::pure(config.dim, 0)
             : quantum::DensityMatrix::maximally_mixed(config.dim);
}

TrainResult train_qhmm(const std::vector<Sequence>& dataset,
                       const TrainConfig& config, int alphabet_size) {
  config.validate();
  if (dataset.empty()) throw InputError("training dataset is empty");
  if (alphabet_size < 1) throw InputError("alphabet size must be >= 1");
  check_batch(dataset, alphabet_size);

  const int k = config.dim;
  const int mu = config.multiplicity;
  const quantum::DensityMatrix pi0 = initial_belief(config);
  StiefelPoint kappa = random_stiefel(alphabet_size * mu * k, k, config.seed);

  Rng shuffle_rng(config.seed * 0x9E3779B97F4A7C15ULL + 1);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t num_batches =
      std::min(static_cast<std::size_t>(config.num_batches), dataset.size());

  std::vector<LossRecord> log;
  double tau = config.learning_rate;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const std::size_t base = order.size() / num_batches;
    const std::size_t extra = order.size() % num_batches;
    std::size_t offset = 0;
    for (std::size_t b = 0; b < num_batches; ++b) {
      const std::size_t size = base + (b < extra ? 1 : 0);
      std::vector<Sequence> batch;
      batch.reserve(size);
      for (std::size_t i = offset; i < offset + size; ++i) {
        batch.push_back(dataset[order[i]]);
      }
      offset += size;

      const double loss = nll_loss(kappa, batch, pi0, alphabet_size, mu);
      if (!std::isfinite(loss)) {
        throw TrainingError(fmt::format(
            "epoch {} batch {}: loss is not finite", epoch, b + 1));
      }
      const ComplexMatrix grad =
          config.gradient_mode == GradientMode::analytic
              ? nll_gradient(kappa, batch, pi0, alphabet_size, mu)
              : nll_gradient_fd(kappa, batch, pi0, alphabet_size, mu);

      double step_tau = tau;
      bool accepted = false;
      std::string last_failure;
      for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
        try {
          StiefelPoint candidate = cayley_step(kappa, grad, step_tau);
          const double next_loss =
              nll_loss(candidate, batch, pi0, alphabet_size, mu);
          if (std::isfinite(next_loss)) {
            kappa = std::move(candidate);
            accepted = true;
            break;
          }
          last_failure = "non-finite loss after step";
        } catch (const StepFailure& e) {
          last_failure = e.what();
        }
        step_tau *= 0.5;
      }
      if (!accepted) {
        throw TrainingError(fmt::format(
            "epoch {} batch {}: step failed after {} halvings (tau {} -> {}, "
            "loss {}): {}",
            epoch, b + 1, kMaxHalvings, tau, step_tau, loss, last_failure));
      }
      log.push_back(LossRecord{epoch, static_cast<int>(b + 1), loss, step_tau});
    }
    tau *= config.decay;
  }

  quantum::KrausModel model =
      quantum::KrausModel::from_stacked(kappa.matrix, alphabet_size, mu, pi0);
  return TrainResult{std::move(model), std::move(kappa), std::move(log)};
}

}  // namespace qpsa::train
