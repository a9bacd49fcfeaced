#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>

#include "bayesclear/error.hpp"
#include "bayesclear/generative_model.hpp"
#include "bayesclear/normal.hpp"

using namespace bayesclear;

TEST_CASE("bundle likelihood") {
  const LinearPrices p({4, 4});
  CHECK(bundle_likelihood(Bundle(2, {0}), 0.0, p) == 0.25);
  CHECK(bundle_likelihood(Bundle(2), 2.0, LinearPrices({1, 1})) ==
        doctest::Approx(std::exp(-2.0) / 4));
  CHECK(bundle_likelihood(Bundle(2, {0, 1}), 10.0, p) == doctest::Approx(std::exp(-2.0) / 4));
}

TEST_CASE("acceptance mass") {
  CHECK(acceptance_mass(0.0, LinearPrices({3, 1, 2})) == doctest::Approx(1.0));
  CHECK(acceptance_mass(2.0, LinearPrices(std::vector<double>{0})) ==
        doctest::Approx(std::exp(-2.0)));
  CHECK(acceptance_mass(2.0, LinearPrices(std::vector<double>{2})) ==
        doctest::Approx((1 + std::exp(-2.0)) / 2));
  CHECK_THROWS_AS(acceptance_mass(1.0, LinearPrices(std::vector<double>(21, 0.0))), Error);
  for (double w : {0.0, 0.5, 3.0, 10.0}) {
    const LinearPrices p({0.3, 1.7, 0.0});
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < 8; ++mask)
      total += bundle_likelihood(Bundle::from_mask(3, mask), w, p);
    CHECK(acceptance_mass(w, p) == doctest::Approx(total));
    CHECK(acceptance_mass(w, p) <= 1.0);
  }
}

TEST_CASE("bid probability") {
  const ResponseModel probit{ResponseMode::probit, 10};
  const ResponseModel exact{};
  CHECK(bid_probability(probit, 5, 5) == 0.5);
  CHECK(bid_probability({ResponseMode::probit, 1e12}, 5.001, 5) == 1.0);
  CHECK(bid_probability(probit, 10, 8) == doctest::Approx(normal::cdf(20)));
  CHECK(bid_probability(exact, 4, 3) == 1.0);
  CHECK(bid_probability(exact, 4, 5) == 0.0);
  CHECK(bid_probability(exact, 4, 4) == 1.0);
  for (double w = 0; w < 10; w += 0.7)
    for (double c = 0; c < 10; c += 0.9) {
      CHECK(bid_probability(probit, w, c, Bid::demand) + bid_probability(probit, w, c, Bid::decline) ==
            1.0);
      CHECK(bid_probability(probit, w + 0.1, c) >= bid_probability(probit, w, c));
      CHECK(bid_probability(probit, w, c + 0.1) <= bid_probability(probit, w, c));
    }
  CHECK_THROWS_AS(bid_probability({ResponseMode::probit, 0}, 1, 1), Error);
}

TEST_CASE("sample bid") {
  Rng rng(1);
  CHECK(sample_bid({}, 4, 3, rng) == Bid::demand);
  CHECK(sample_bid({}, 4, 5, rng) == Bid::decline);
  int demand = 0;
  for (int k = 0; k < 10000; ++k)
    demand += sample_bid({ResponseMode::probit, 10}, 3, 3, rng) == Bid::demand;
  CHECK(std::abs(demand / 1e4 - 0.5) <= 0.02);
}

TEST_CASE("prices drawn before the restart filter are standard exponential") {
  // With w = 0 every bundle is accepted, so the output is the raw prior.
  Rng rng(7);
  const PriorSpec prior{{0.0, 0.0}};
  int above = 0;
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) {
    const auto e = sample_economy(1, 1, prior, rng);
    CHECK(e.attempts == 1);
    above += e.prices[0] > 1.0;
  }
  CHECK(std::abs(above / double(draws) - std::exp(-1.0)) <= 0.015);
}

TEST_CASE("point mass at zero gives a uniform bundle") {
  Rng rng(8);
  int with_item = 0;
  for (int k = 0; k < 10000; ++k)
    with_item += !sample_economy(1, 1, {{0.0, 0.0}}, rng).agents[0].bundle.empty();
  CHECK(std::abs(with_item / 1e4 - 0.5) <= 0.02);
}

TEST_CASE("sampled values respect truncation at zero") {
  Rng rng(9);
  for (int k = 0; k < 2000; ++k) {
    const auto e = sample_economy(3, 2, {{-1.0, 4.0}, {0.5, 1.0}, {2.0, 0.0}}, rng);
    for (const auto& a : e.agents) CHECK(a.value >= 0.0);
    CHECK(e.agents[2].value == 2.0);
  }
}

TEST_CASE("sampler validates inputs and enforces the restart budget") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_economy(2, 1, {{1.0, 1.0}}, rng), Error);
  CHECK_THROWS_AS(sample_economy(1, 1, {{1.0, -1.0}}, rng), Error);
  SamplerOptions tight;
  tight.max_attempts = 1;
  // Acceptance probability is tiny for a huge value; one attempt will not do.
  CHECK_THROWS_AS(sample_economy(4, 1, PriorSpec(4, {50.0, 0.0}), rng, tight), Error);
}

TEST_CASE("sampler law on a discretized price grid, goodness of fit") {
  const std::vector<double> grid{0, 0.5, 1, 2};
  SamplerOptions options;
  options.price_grid = grid;
  Rng rng(2024);
  const int draws = 100000;
  std::map<std::pair<int, int>, int> counts;
  for (int k = 0; k < draws; ++k) {
    const auto e = sample_economy(1, 1, {{1.0, 0.0}}, rng, options);
    int g = 0;
    while (grid[std::size_t(g)] != e.prices[0]) ++g;
    ++counts[{g, e.agents[0].bundle.empty() ? 0 : 1}];
  }
  // Target: proportional to exp(-p) * exp(-(1 - theta(x))_+).
  double z = 0.0;
  std::map<std::pair<int, int>, double> target;
  for (int g = 0; g < 4; ++g)
    for (int x = 0; x < 2; ++x) {
      const double theta = x ? grid[std::size_t(g)] : 0.0;
      z += target[{g, x}] = std::exp(-grid[std::size_t(g)]) * std::exp(-std::max(1.0 - theta, 0.0));
    }
  double chi2 = 0.0;
  for (const auto& [cell, t] : target) {
    const double expected = draws * t / z;
    chi2 += (counts[cell] - expected) * (counts[cell] - expected) / expected;
  }
  const double critical = boost::math::quantile(boost::math::chi_squared(7), 0.99);
  CHECK(chi2 < critical);
}
