#include <doctest.h>

#include <cmath>
#include <random>

#include "bayesclear/error.hpp"
#include "bayesclear/knowledge_update.hpp"
#include "oracles.hpp"

using namespace bayesclear;

TEST_CASE("init belief") {
  const auto a = init_belief(4, 0.01);
  CHECK(a.mean == 4.0);
  CHECK(a.variance == 0.01);
  const auto b = init_belief(10, 9);
  CHECK(b.mean == 10.0);
  CHECK(b.variance == 9.0);
  CHECK(init_belief(5, 0.001).variance == 0.01);
  CHECK_THROWS_AS(init_belief(5, 0.0), Error);
  CHECK_THROWS_AS(init_belief(5, -1.0), Error);
}

TEST_CASE("adf update examples") {
  const auto out = adf_update({10, 9}, Bid::decline, 8, 10);
  const auto want = oracle::probit_posterior_moments(10, 9, -1, 8, 10);
  CHECK(out.mean == doctest::Approx(6.21).epsilon(1e-3));
  CHECK(out.mean == doctest::Approx(want.mean).epsilon(1e-9));
  CHECK(out.variance == doctest::Approx(want.variance).epsilon(1e-9));

  const auto same = adf_update({3, 2}, Bid::demand, -1e9, 10);
  CHECK(std::abs(same.mean - 3) <= 1e-9);
  CHECK(std::abs(same.variance - 2) <= 1e-9);

  const auto up = adf_update({5, 1}, Bid::demand, 5, 10);
  CHECK(up.mean > 5.0);
  CHECK(up.variance < 1.0);
}

TEST_CASE("adf update is stable at extreme arguments") {
  const auto far = adf_update({-5, 0.01}, Bid::demand, 1e6, 10);
  CHECK(std::isfinite(far.mean));
  CHECK(far.variance >= 0.01);
  const auto raw = adf_moments({0, 1}, Bid::demand, 60, 10);
  const auto want = oracle::probit_posterior_moments(0, 1, 1, 60, 10);
  CHECK(raw.mean > 59.0);
  CHECK(std::abs(raw.mean - want.mean) <= 1e-6);
  CHECK(std::abs(raw.variance - want.variance) <= 1e-6 * want.variance);
}

TEST_CASE("adf update validates its inputs") {
  CHECK_THROWS_AS(adf_update({0, 1}, Bid::demand, 0, 0.0), Error);
  CHECK_THROWS_AS(adf_update({0, 0}, Bid::demand, 0, 1.0), Error);
  CHECK_THROWS_AS(adf_update({NAN, 1}, Bid::demand, 0, 1.0), Error);
  CHECK_THROWS_AS(adf_update({0, 1}, Bid::demand, NAN, 1.0), Error);
}

TEST_CASE("adf moments match quadrature on random inputs") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double m = -10 + 30 * u(rng);
    const double s2 = std::pow(10.0, -2 + 4 * u(rng));
    const double c = -10 + 30 * u(rng);
    const double beta = std::pow(10.0, -0.5 + 1.5 * u(rng));
    const int b = u(rng) < 0.5 ? -1 : 1;
    const auto got = adf_moments({m, s2}, static_cast<Bid>(b), c, beta);
    const auto want = oracle::probit_posterior_moments(m, s2, b, c, beta);
    CHECK(std::abs(got.mean - want.mean) <= 1e-6);
    CHECK(std::abs(got.variance - want.variance) <= 1e-6 * want.variance);
  }
}

TEST_CASE("adf properties: direction, contraction, translation") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double m = -10 + 30 * u(rng);
    const double s2 = std::pow(10.0, -2 + 4 * u(rng));
    const double c = -10 + 30 * u(rng);
    const double beta = 0.5 + 10 * u(rng);
    const Bid b = u(rng) < 0.5 ? Bid::decline : Bid::demand;
    const auto out = adf_moments({m, s2}, b, c, beta);
    CHECK(out.variance <= s2);
    if (b == Bid::demand)
      CHECK(out.mean >= m);
    else
      CHECK(out.mean <= m);
    const double t = -5 + 10 * u(rng);
    const auto shifted = adf_moments({m + t, s2}, b, c + t, beta);
    CHECK(shifted.mean - t == doctest::Approx(out.mean).epsilon(1e-9).scale(1 + std::abs(m)));
    CHECK(shifted.variance == doctest::Approx(out.variance).epsilon(1e-9));
  }
}

TEST_CASE("batch round update") {
  const std::vector<GaussianBelief> beliefs{{4, 0.01}, {4, 0.01}, {10, 1}};
  const std::vector<Bid> demand(3, Bid::demand);
  const std::vector<double> far(3, -1e9);
  const auto same = batch_round_update(beliefs, demand, far, 10);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(same[i].mean - beliefs[i].mean) <= 1e-9);
    CHECK(std::abs(same[i].variance - beliefs[i].variance) <= 1e-9);
  }

  const std::vector<GaussianBelief> one{{5, 2}};
  const auto single = batch_round_update(one, std::vector<Bid>{Bid::decline},
                                         std::vector<double>{6}, 4);
  const auto direct = adf_update({5, 2}, Bid::decline, 6, 4);
  CHECK(single[0].mean == direct.mean);
  CHECK(single[0].variance == direct.variance);

  // LLG round one at zero prices: every agent demands.
  const std::vector<GaussianBelief> llg{{4, 0.5}, {4, 0.5}, {10, 9}};
  const auto next = batch_round_update(llg, demand, std::vector<double>{0, 0, 0}, 10, 1e-4);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto want = oracle::probit_posterior_moments(llg[i].mean, llg[i].variance, 1, 0, 10);
    CHECK(next[i].mean > llg[i].mean);
    CHECK(next[i].variance < llg[i].variance);
    CHECK(next[i].mean == doctest::Approx(want.mean).epsilon(1e-9));
  }

  CHECK_THROWS_AS(batch_round_update(beliefs, demand, std::vector<double>{0}, 10), Error);
}
