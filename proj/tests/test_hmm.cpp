#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qpsa/error.hpp"
#include "qpsa/hmm.hpp"

using namespace qpsa;
using hmm::CategoricalHmm;

namespace {

CategoricalHmm single_state() {
  RealMatrix a(1, 1);
  a << 1.0;
  RealMatrix e(1, 2);
  e << 0.5, 0.5;
  RealVector pi(1);
  pi << 1.0;
  return CategoricalHmm(a, e, pi);
}

// Stays in state 0 forever; state 0 emits only symbol 0.
CategoricalHmm deterministic_chain() {
  RealMatrix a = RealMatrix::Identity(2, 2);
  RealMatrix e(2, 2);
  e << 1.0, 0.0, 0.0, 1.0;
  RealVector pi(2);
  pi << 1.0, 0.0;
  return CategoricalHmm(a, e, pi);
}

CategoricalHmm two_state() {
  RealMatrix a(2, 2);
  a << 0.7, 0.3, 0.4, 0.6;
  RealMatrix e(2, 2);
  e << 0.9, 0.1, 0.2, 0.8;
  RealVector pi(2);
  pi << 0.6, 0.4;
  return CategoricalHmm(a, e, pi);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("model construction rejects non-stochastic rows") {
  RealMatrix a(1, 1);
  a << 1.0;
  RealMatrix e(1, 2);
  e << 0.6, 0.5;
  RealVector pi(1);
  pi << 1.0;
  CHECK_THROWS_AS(CategoricalHmm(a, e, pi), InputError);
  e << 0.5, 0.5;
  pi << 0.9;
  CHECK_THROWS_AS(CategoricalHmm(a, e, pi), InputError);
}

TEST_CASE("forward: hand-checked values") {
  CHECK(hmm::log_likelihood(single_state(), Sequence{0, 1}) ==
        doctest::Approx(std::log(0.25)).epsilon(1e-14));

  const auto chain = deterministic_chain();
  CHECK(hmm::log_likelihood(chain, Sequence{0, 0, 0}) == doctest::Approx(0.0));
  const double impossible = hmm::log_likelihood(chain, Sequence{0, 1});
  CHECK(std::isinf(impossible));
  CHECK(impossible < 0);
}

TEST_CASE("forward: two-state reference against exhaustive path sum") {
  const auto model = two_state();
  const Sequence x{0, 1, 1};
  // Frozen from enumeration of all 8 hidden paths.
  const double frozen = 0.10006999999999999;
  CHECK(rel_err(oracle::hmm_path_sum(model, x), frozen) < 1e-14);
  const auto tr = hmm::forward(model, x);
  CHECK(rel_err(std::exp(tr.log_likelihood), frozen) < 1e-10);

  double log_sum = 0.0;
  for (Eigen::Index t = 0; t < tr.scaling.size(); ++t) {
    CHECK(tr.forward.row(t).sum() == doctest::Approx(1.0).epsilon(1e-9));
    log_sum += std::log(tr.scaling(t));
  }
  CHECK(std::abs(log_sum - tr.log_likelihood) < 1e-9);
}

TEST_CASE("forward: input errors") {
  const auto model = two_state();
  CHECK_THROWS_AS(hmm::forward(model, Sequence{}), InputError);
  CHECK_THROWS_AS(hmm::forward(model, Sequence{0, 2}), InputError);
  CHECK_THROWS_AS(hmm::forward(model, Sequence{-1}), InputError);
}

TEST_CASE("backward: recovers P(X)") {
  CHECK(std::exp(hmm::backward_log_likelihood(single_state(), Sequence{0, 1})) ==
        doctest::Approx(0.25).epsilon(1e-14));

  const auto model = two_state();
  const Sequence x{0, 1, 1};
  CHECK(rel_err(hmm::backward_log_likelihood(model, x), hmm::log_likelihood(model, x)) <
        1e-10);

  const auto tr = hmm::forward_backward(model, x);
  for (int k = 0; k < 2; ++k) CHECK(tr.backward(2, k) == 1.0);

  CHECK(std::isinf(hmm::backward_log_likelihood(deterministic_chain(), Sequence{0, 1})));
}

TEST_CASE("posterior") {
  const RealVector one = hmm::posterior(single_state(), Sequence{0, 1, 0}, 2);
  CHECK(one.size() == 1);
  CHECK(one(0) == doctest::Approx(1.0));

  const RealVector det = hmm::posterior(deterministic_chain(), Sequence{0, 0}, 1);
  CHECK(det(0) == doctest::Approx(1.0));
  CHECK(det(1) == doctest::Approx(0.0));

  const auto model = two_state();
  const Sequence x{0, 1, 1};
  const RealVector post = hmm::posterior(model, x, 2);
  // Frozen from path enumeration restricted on Q_2.
  CHECK(std::abs(post(0) - 0.1270110922354352) < 1e-12);
  CHECK(std::abs(post(1) - 0.8729889077645648) < 1e-12);
  const double p = oracle::hmm_path_sum(model, x);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(post(k) - oracle::hmm_path_sum(model, x, 1, k) / p) < 1e-12);
  }

  CHECK_THROWS_AS(hmm::posterior(deterministic_chain(), Sequence{0, 1}, 1),
                  UndefinedPosteriorError);
  CHECK_THROWS_AS(hmm::posterior(model, x, 0), InputError);
  CHECK_THROWS_AS(hmm::posterior(model, x, 4), InputError);
}

TEST_CASE("property: forward equals path sum, forward equals backward, posteriors normalised") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 1 + trial % 3;
    const int m = 1 + (trial / 3) % 3;
    // Some sparse models so zero-probability sequences occur.
    const auto model = oracle::random_hmm(k, m, rng, trial % 4 == 0 ? 0.4 : 0.0);
    std::uniform_int_distribution<int> len_d(1, 6);
    std::uniform_int_distribution<int> sym_d(0, m - 1);
    for (int rep = 0; rep < 5; ++rep) {
      Sequence x(static_cast<std::size_t>(len_d(rng)));
      for (auto& s : x) s = sym_d(rng);
      const double brute = oracle::hmm_path_sum(model, x);
      const double ll = hmm::log_likelihood(model, x);
      if (brute == 0.0) {
        CHECK(std::isinf(ll));
        continue;
      }
      CHECK(rel_err(std::exp(ll), brute) < 1e-10);
      CHECK(rel_err(std::exp(hmm::backward_log_likelihood(model, x)), brute) < 1e-10);
      const int t = 1 + static_cast<int>(x.size()) / 2;
      const RealVector post = hmm::posterior(model, x, t);
      CHECK(post.sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(post.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("property: total probability over all sequences is one") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 1 + trial % 3;
    const int m = 1 + (trial + 1) % 3;
    const auto model = oracle::random_hmm(k, m, rng);
    for (int len = 1; len <= 5; ++len) {
      double total = 0.0;
      for (const auto& x : oracle::all_sequences(m, len)) {
        total += std::exp(hmm::log_likelihood(model, x));
      }
      CHECK(std::abs(total - 1.0) < 1e-8);
    }
  }
}

TEST_CASE("long sequences do not underflow") {
  const auto model = two_state();
  Sequence x(5000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<int>(i % 2);
  const double ll = hmm::log_likelihood(model, x);
  CHECK(std::isfinite(ll));
  CHECK(ll < -1000.0);
  CHECK(rel_err(hmm::backward_log_likelihood(model, x), ll) < 1e-10);
}

TEST_CASE("Baum-Welch") {
  SUBCASE("empty dataset") {
    CHECK_THROWS_AS(hmm::baum_welch_fit({}, 2, 2, {}), InputError);
  }
  SUBCASE("symbol outside alphabet") {
    CHECK_THROWS_AS(hmm::baum_welch_fit({{0, 3}}, 2, 2, {}), InputError);
  }
  SUBCASE("single sequence, one state: emission converges to the MLE") {
    const auto res = hmm::baum_welch_fit({{0, 0, 0, 0}}, 1, 2, {100, 1e-10, 3});
    CHECK(res.model.emission()(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.model.emission()(0, 1) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("data from the deterministic chain") {
    const auto chain = deterministic_chain();
    std::vector<Sequence> data;
    double generating_ll = 0.0;
    for (int i = 0; i < 5; ++i) {
      data.push_back(hmm::sample(chain, 4 + i, static_cast<std::uint64_t>(i)));
      generating_ll += hmm::log_likelihood(chain, data.back());
    }
    const auto res = hmm::baum_welch_fit(data, 2, 2, {200, 1e-12, 5});
    double fitted_ll = 0.0;
    for (const auto& x : data) fitted_ll += hmm::log_likelihood(res.model, x);
    CHECK(fitted_ll >= generating_ll - 1e-6);
  }
  SUBCASE("training log-likelihood is non-decreasing") {
    std::mt19937_64 rng(5);
    const auto truth = oracle::random_hmm(3, 3, rng);
    std::vector<Sequence> data;
    for (int i = 0; i < 20; ++i) data.push_back(hmm::sample(truth, 8, 100 + i));
    const auto res = hmm::baum_welch_fit(data, 3, 3, {60, 0.0, 9});
    REQUIRE(res.log_likelihood_trace.size() >= 2);
    for (std::size_t i = 1; i < res.log_likelihood_trace.size(); ++i) {
      CHECK(res.log_likelihood_trace[i] >= res.log_likelihood_trace[i - 1] - 1e-8);
    }
    double final_ll = 0.0;
    for (const auto& x : data) final_ll += hmm::log_likelihood(res.model, x);
    CHECK(final_ll == doctest::Approx(res.log_likelihood_trace.back()).epsilon(1e-12));
  }
  SUBCASE("same seed, same model") {
    const std::vector<Sequence> data{{0, 1, 1}, {1, 0}, {2, 2, 1, 0}};
    const auto a = hmm::baum_welch_fit(data, 2, 3, {20, 1e-8, 42});
    const auto b = hmm::baum_welch_fit(data, 2, 3, {20, 1e-8, 42});
    CHECK(a.model.transition() == b.model.transition());
    CHECK(a.model.emission() == b.model.emission());
  }
}

TEST_CASE("sampling") {
  CHECK(hmm::sample(deterministic_chain(), 4, 123) == Sequence{0, 0, 0, 0});

  const auto model = two_state();
  CHECK(hmm::sample(model, 20, 99) == hmm::sample(model, 20, 99));
  CHECK_THROWS_AS(hmm::sample(model, 0, 1), InputError);

  const auto coin = single_state();
  int zeros = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) zeros += hmm::sample(coin, 1, static_cast<std::uint64_t>(i))[0] == 0;
  CHECK(std::abs(static_cast<double>(zeros) / n - 0.5) < 0.01);

  for (int s : hmm::sample(model, 50, 4)) CHECK((s == 0 || s == 1));
}

TEST_CASE("sampling conditioned on a prefix") {
  // From state 0, A = I keeps the chain in state 0: continuation is all 0s.
  CHECK(hmm::sample(deterministic_chain(), 3, 1, Sequence{0, 0}) == Sequence{0, 0, 0});
  CHECK_THROWS_AS(hmm::sample(deterministic_chain(), 3, 1, Sequence{1}), InputError);
}
