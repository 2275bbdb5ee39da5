#pragma once

// Brute-force reference computations used by the tests. Nothing here calls
// into the code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpsa/hmm.hpp"
#include "qpsa/psa.hpp"
#include "qpsa/qhmm.hpp"

namespace oracle {

using qpsa::ComplexMatrix;
using qpsa::RealMatrix;
using qpsa::RealVector;
using qpsa::Sequence;

inline RealMatrix random_stochastic(int rows, int cols, std::mt19937_64& rng,
                                    double zero_prob = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = u(rng) < zero_prob ? 0.0 : u(rng) + 1e-3;
    // Keep at least one entry so the row can be normalised.
    if (m.row(r).sum() == 0.0) m(r, static_cast<int>(u(rng) * cols)) = 1.0;
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

inline qpsa::hmm::CategoricalHmm random_hmm(int k, int m, std::mt19937_64& rng,
                                            double zero_prob = 0.0) {
  RealMatrix start = random_stochastic(1, k, rng, zero_prob);
  return qpsa::hmm::CategoricalHmm(random_stochastic(k, k, rng, zero_prob),
                                   random_stochastic(k, m, rng, zero_prob),
                                   start.row(0).transpose());
}

/// Every sequence over {0..m-1} of length len, lexicographic.
inline std::vector<Sequence> all_sequences(int m, int len) {
  std::vector<Sequence> out;
  Sequence cur(static_cast<std::size_t>(len), 0);
  while (true) {
    out.push_back(cur);
    int i = len - 1;
    while (i >= 0 && ++cur[static_cast<std::size_t>(i)] == m) {
      cur[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return out;
}

/// sum over all K^L hidden paths of pi e A e ... products.
inline double hmm_path_sum(const qpsa::hmm::CategoricalHmm& model,
                           const Sequence& x, int fixed_t = -1,
                           int fixed_state = -1) {
  const int k = model.num_states();
  const auto paths = all_sequences(k, static_cast<int>(x.size()));
  double total = 0.0;
  for (const auto& q : paths) {
    if (fixed_t >= 0 && q[static_cast<std::size_t>(fixed_t)] != fixed_state) continue;
    double p = model.start()(q[0]) * model.emission()(q[0], x[0]);
    for (std::size_t t = 1; t < x.size(); ++t) {
      p *= model.transition()(q[t - 1], q[t]) * model.emission()(q[t], x[t]);
    }
    total += p;
  }
  return total;
}

/// Haar-ish random isometry built with Eigen's QR directly.
inline ComplexMatrix random_isometry(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix z(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) z(r, c) = {n(rng), n(rng)};
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  return qr.householderQ() * ComplexMatrix::Identity(rows, cols);
}

inline ComplexMatrix random_density(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix g(k, k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) g(r, c) = {n(rng), n(rng)};
  }
  ComplexMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline qpsa::quantum::KrausModel random_kraus_model(int k, int m, int mu,
                                                    std::mt19937_64& rng) {
  return qpsa::quantum::KrausModel::from_stacked(
      random_isometry(m * mu * k, k, rng), m, mu,
      qpsa::quantum::DensityMatrix(random_density(k, rng)));
}

/// tr(Phi_{x_L}(...Phi_{x_1}(rho0)...)) with no renormalisation.
inline double naive_qhmm_prob(const qpsa::quantum::KrausModel& model,
                              const Sequence& x) {
  ComplexMatrix rho = model.initial_state().matrix();
  for (int s : x) {
    ComplexMatrix next = ComplexMatrix::Zero(rho.rows(), rho.cols());
    for (int m = 0; m < model.multiplicity(); ++m) {
      const auto& psi = model.op(s, m);
      next += psi * rho * psi.adjoint();
    }
    rho = next;
  }
  return rho.trace().real();
}

/// Real gradient d/dRe + i d/dIm of f at z by central differences.
inline ComplexMatrix central_difference(
    const std::function<double(const ComplexMatrix&)>& f, const ComplexMatrix& z,
    double h) {
  ComplexMatrix g(z.rows(), z.cols());
  ComplexMatrix probe = z;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      const auto orig = z(r, c);
      probe(r, c) = orig + std::complex<double>(h, 0);
      const double fp = f(probe);
      probe(r, c) = orig - std::complex<double>(h, 0);
      const double fm = f(probe);
      probe(r, c) = orig + std::complex<double>(0, h);
      const double gp = f(probe);
      probe(r, c) = orig - std::complex<double>(0, h);
      const double gm = f(probe);
      probe(r, c) = orig;
      g(r, c) = {(fp - fm) / (2 * h), (gp - gm) / (2 * h)};
    }
  }
  return g;
}

/// -mean ln P over a batch, via naive_qhmm_prob on blocks of kappa.
inline double naive_batch_nll(const ComplexMatrix& kappa, int m, int mu,
                              const ComplexMatrix& pi0,
                              const std::vector<Sequence>& batch) {
  const auto model = qpsa::quantum::KrausModel::from_stacked(
      kappa, m, mu, qpsa::quantum::DensityMatrix::unchecked(pi0));
  double total = 0.0;
  for (const auto& x : batch) total -= std::log(naive_qhmm_prob(model, x));
  return total / static_cast<double>(batch.size());
}

struct BfsScenario {
  std::vector<qpsa::psa::Step> steps;
  double probability;
};

/// Level-by-level expansion over the 2^n state graph; independent of the
/// depth-first enumerator.
inline std::vector<BfsScenario> bfs_scenarios(const qpsa::psa::SystemModel& sys,
                                              std::uint32_t initial, int max_len) {
  struct Node {
    std::vector<qpsa::psa::Step> steps;
    std::uint32_t state;
    double p;
  };
  std::vector<std::uint32_t> severe;
  for (const auto& subset : sys.severe_states()) {
    std::uint32_t mask = 0;
    for (const auto& id : subset) {
      for (int i = 0; i < sys.num_events(); ++i) {
        if (sys.events()[static_cast<std::size_t>(i)].id == id) mask |= 1U << i;
      }
    }
    severe.push_back(mask);
  }
  auto is_sev = [&](std::uint32_t s) {
    for (auto m : severe) {
      if ((s & m) == m) return true;
    }
    return false;
  };
  std::vector<BfsScenario> out;
  std::vector<Node> frontier{{{}, initial, 1.0}};
  for (int depth = 0; depth < max_len; ++depth) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      for (int i = 0; i < sys.num_events(); ++i) {
        const auto& ev = sys.events()[static_cast<std::size_t>(i)];
        const bool down = (node.state >> i) & 1U;
        Node child{node.steps, node.state ^ (1U << i),
                   node.p * (down ? ev.p_repair : ev.p_down)};
        child.steps.push_back(
            {i, down ? qpsa::psa::Action::repair : qpsa::psa::Action::fail});
        if (is_sev(child.state)) {
          out.push_back({child.steps, child.p});
        } else {
          next.push_back(std::move(child));
        }
      }
    }
    frontier = std::move(next);
  }
  return out;
}

inline qpsa::psa::SystemModel reference_system() {
  return qpsa::psa::SystemModel(
      "reference-3",
      {{"A", 0.1, 0.3}, {"B", 0.2, 0.4}, {"C", 0.05, 0.5}},
      {{"A", "B"}});
}

}  // namespace oracle
