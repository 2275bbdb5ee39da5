#include "qpsa/hmm.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "qpsa/error.hpp"
#include "qpsa/random.hpp"

namespace qpsa::hmm {

namespace {

constexpr double kStochasticTol = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_stochastic_rows(const RealMatrix& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw InputError(fmt::format("{} entry ({}, {}) = {} outside [0, 1]",
                                     what, r, c, v));
      }
    }
    const double sum = m.row(r).sum();
    if (std::abs(sum - 1.0) > kStochasticTol) {
      throw InputError(
          fmt::format("{} row {} sums to {}, expected 1", what, r, sum));
    }
  }
}

void check_sequence(const CategoricalHmm& model, SequenceView sequence) {
  if (sequence.empty()) throw InputError("empty sequence");
  for (int s : sequence) {
    if (s < 0 || s >= model.alphabet_size()) {
      throw InputError(fmt::format("symbol {} outside alphabet of size {}", s,
                                   model.alphabet_size()));
    }
  }
}

// Backward rows scaled by the forward normalisers, so alpha(t) .* beta(t)
// is the smoothed posterior. Requires a finite forward pass.
void fill_backward(const CategoricalHmm& model, SequenceView seq,
                   TrellisResult& out) {
  const auto len = static_cast<Eigen::Index>(seq.size());
  const auto& a = model.transition();
  const auto& e = model.emission();
  out.backward = RealMatrix::Zero(len, model.num_states());
  out.backward.row(len - 1).setOnes();
  for (Eigen::Index t = len - 2; t >= 0; --t) {
    const RealVector weighted =
        e.col(seq[t + 1]).cwiseProduct(out.backward.row(t + 1).transpose());
    out.backward.row(t) = (a * weighted).transpose() / out.scaling(t + 1);
  }
}

RealMatrix dirichlet_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::exponential_distribution<double> exp1(1.0);
  RealMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = exp1(rng);
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

void normalize_rows_or_uniform(RealMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double sum = m.row(r).sum();
    if (sum > 0.0) {
      m.row(r) /= sum;
    } else {
      m.row(r).setConstant(1.0 / static_cast<double>(m.cols()));
    }
  }
}

}  // namespace

CategoricalHmm::CategoricalHmm(RealMatrix transition, RealMatrix emission,
                               RealVector start)
    : transition_(std::move(transition)),
      emission_(std::move(emission)),
      start_(std::move(start)) {
  const auto k = start_.size();
  if (k < 1) throw InputError("HMM needs at least one state");
  if (transition_.rows() != k || transition_.cols() != k) {
    throw InputError(fmt::format("transition is {}x{}, expected {}x{}",
                                 transition_.rows(), transition_.cols(), k, k));
  }
  if (emission_.rows() != k || emission_.cols() < 1) {
    throw InputError(fmt::format("emission is {}x{}, expected {} rows",
                                 emission_.rows(), emission_.cols(), k));
  }
  check_stochastic_rows(transition_, "transition");
  check_stochastic_rows(emission_, "emission");
  check_stochastic_rows(RealMatrix(start_.transpose()), "start");
}

TrellisResult forward(const CategoricalHmm& model, SequenceView sequence) {
  check_sequence(model, sequence);
  const auto len = static_cast<Eigen::Index>(sequence.size());
  const auto k = model.num_states();
  const auto& e = model.emission();

  TrellisResult out;
  out.forward = RealMatrix::Zero(len, k);
  out.scaling = RealVector::Zero(len);

  RealVector alpha = model.start().cwiseProduct(e.col(sequence[0]));
  for (Eigen::Index t = 0; t < len; ++t) {
    if (t > 0) {
      alpha = (model.transition().transpose() * alpha)
                  .cwiseProduct(e.col(sequence[t]));
    }
    const double c = alpha.sum();
    out.scaling(t) = c;
    if (!(c > 0.0)) {
      out.log_likelihood = kNegInf;
      return out;
    }
    alpha /= c;
    out.forward.row(t) = alpha.transpose();
    out.log_likelihood += std::log(c);
  }
  return out;
}

TrellisResult forward_backward(const CategoricalHmm& model,
                               SequenceView sequence) {
  TrellisResult out = forward(model, sequence);
  if (std::isfinite(out.log_likelihood)) fill_backward(model, sequence, out);
  return out;
}

double backward_log_likelihood(const CategoricalHmm& model,
                               SequenceView sequence) {
  check_sequence(model, sequence);
  const auto len = static_cast<Eigen::Index>(sequence.size());
  const auto& a = model.transition();
  const auto& e = model.emission();

  RealVector b = RealVector::Ones(model.num_states());
  double log_scale = 0.0;
  for (Eigen::Index t = len - 2; t >= 0; --t) {
    b = a * e.col(sequence[t + 1]).cwiseProduct(b);
    const double s = b.sum();
    if (!(s > 0.0)) return kNegInf;
    b /= s;
    log_scale += std::log(s);
  }
  const double head =
      model.start().cwiseProduct(e.col(sequence[0])).dot(b);
  if (!(head > 0.0)) return kNegInf;
  return std::log(head) + log_scale;
}

RealVector posterior(const CategoricalHmm& model, SequenceView sequence,
                     int t) {
  if (t < 1 || t > static_cast<int>(sequence.size())) {
    throw InputError(fmt::format("position {} outside [1, {}]", t,
                                 sequence.size()));
  }
  const TrellisResult trellis = forward_backward(model, sequence);
  if (!std::isfinite(trellis.log_likelihood)) {
    throw UndefinedPosteriorError(
        "posterior undefined for a zero-probability sequence");
  }
  RealVector gamma = trellis.forward.row(t - 1).cwiseProduct(
      trellis.backward.row(t - 1)).transpose();
  return gamma / gamma.sum();
}

double log_likelihood(const CategoricalHmm& model, SequenceView sequence) {
  return forward(model, sequence).log_likelihood;
}

BaumWelchResult baum_welch_fit(const std::vector<Sequence>& dataset,
                               int num_states, int alphabet_size,
                               const BaumWelchConfig& config) {
  if (dataset.empty()) throw InputError("Baum-Welch needs a nonempty dataset");
  if (num_states < 1) throw InputError("Baum-Welch needs K >= 1");
  if (alphabet_size < 1) throw InputError("Baum-Welch needs M >= 1");
  if (config.max_iters < 0) throw InputError("max_iters must be >= 0");

  Rng rng(config.seed);
  RealMatrix init_start = dirichlet_rows(1, num_states, rng);
  RealMatrix transition = dirichlet_rows(num_states, num_states, rng);
  RealMatrix emission = dirichlet_rows(num_states, alphabet_size, rng);
  CategoricalHmm model(transition, emission, init_start.row(0).transpose());
  for (const auto& seq : dataset) check_sequence(model, seq);

  std::vector<double> trace;
  int iterations = 0;
  for (int it = 0;; ++it) {
    RealVector start_counts = RealVector::Zero(num_states);
    RealMatrix trans_counts = RealMatrix::Zero(num_states, num_states);
    RealMatrix emit_counts = RealMatrix::Zero(num_states, alphabet_size);
    double total_ll = 0.0;

    for (const auto& seq : dataset) {
      const TrellisResult tr = forward_backward(model, seq);
      if (!std::isfinite(tr.log_likelihood)) {
        throw Error("Baum-Welch reached a model giving a training sequence "
                    "zero probability");
      }
      total_ll += tr.log_likelihood;
      const auto len = static_cast<Eigen::Index>(seq.size());
      for (Eigen::Index t = 0; t < len; ++t) {
        RealVector gamma =
            tr.forward.row(t).cwiseProduct(tr.backward.row(t)).transpose();
        gamma /= gamma.sum();
        if (t == 0) start_counts += gamma;
        emit_counts.col(seq[t]) += gamma;
        if (t + 1 < len) {
          const RealVector right =
              model.emission().col(seq[t + 1]).cwiseProduct(
                  tr.backward.row(t + 1).transpose()) /
              tr.scaling(t + 1);
          trans_counts.noalias() +=
              (tr.forward.row(t).transpose() * right.transpose())
                  .cwiseProduct(model.transition());
        }
      }
    }

    trace.push_back(total_ll);
    const bool converged =
        it > 0 && total_ll - trace[trace.size() - 2] < config.tol;
    if (converged || it == config.max_iters) break;

    RealMatrix start_row = start_counts.transpose();
    normalize_rows_or_uniform(start_row);
    normalize_rows_or_uniform(trans_counts);
    normalize_rows_or_uniform(emit_counts);
    model = CategoricalHmm(trans_counts, emit_counts, start_row.transpose());
    ++iterations;
  }
  return BaumWelchResult{std::move(model), std::move(trace), iterations};
}

Sequence sample(const CategoricalHmm& model, int length, std::uint64_t seed,
                SequenceView prefix) {
  if (length < 1) throw InputError("sample length must be >= 1");
  RealVector next_state = model.start();
  if (!prefix.empty()) {
    const TrellisResult tr = forward(model, prefix);
    if (!std::isfinite(tr.log_likelihood)) {
      throw InputError("conditioning prefix has zero probability under model");
    }
    next_state = model.transition().transpose() *
                 tr.forward.row(tr.forward.rows() - 1).transpose();
  }

  Rng rng(seed);
  Sequence out;
  out.reserve(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    const int state = draw_categorical(next_state, rng);
    const RealVector emit = model.emission().row(state).transpose();
    out.push_back(draw_categorical(emit, rng));
    next_state = model.transition().row(state).transpose();
  }
  return out;
}

}  // namespace qpsa::hmm
