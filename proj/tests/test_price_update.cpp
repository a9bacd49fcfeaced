#include <doctest.h>

#include <cmath>
#include <random>

#include "bayesclear/error.hpp"
#include "bayesclear/instances.hpp"
#include "bayesclear/normal.hpp"
#include "bayesclear/price_update.hpp"
#include "oracles.hpp"

using namespace bayesclear;

namespace {

PricePosteriorModel llg_model(double variance) {
  const auto llg = build_llg().instance;
  PricePosteriorModel model{2, {}, {}};
  for (const auto& a : llg.agents) {
    model.bundles.push_back(a.bundle);
    model.beliefs.push_back({a.value, variance});
  }
  return model;
}

PricePosteriorModel random_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int m = 1 + int(rng() % 5);
  const int n = int(rng() % 8);
  PricePosteriorModel model{m, {}, {}};
  for (int i = 0; i < n; ++i) {
    model.bundles.push_back(
        Bundle::from_mask(m, 1 + rng() % ((std::uint64_t{1} << m) - 1)));
    model.beliefs.push_back({15 * u(rng), std::pow(10.0, -2 + 3 * u(rng))});
  }
  return model;
}

LinearPrices random_prices(std::mt19937_64& rng, int m, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> p;
  for (int j = 0; j < m; ++j) p.push_back(u(rng));
  return LinearPrices(p);
}

}  // namespace

TEST_CASE("likelihood components examples") {
  const auto c = likelihood_components(4, 1, 4);
  CHECK(c.l0() == doctest::Approx(0.5));
  CHECK(c.l1() == doctest::Approx(normal::cdf(-1) * std::exp(0.5)));
  CHECK(c.l1() == doctest::Approx(0.2617).epsilon(1e-3));
  CHECK(c.l0() + c.l1() == doctest::Approx(oracle::expected_clearing_likelihood(4, 1, 4)));
  CHECK(c.responsibility() == doctest::Approx(0.3434).epsilon(1e-3));

  const auto sharp = likelihood_components(10, 1e-4, 8);
  CHECK(sharp.l0() + sharp.l1() == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));

  const auto far = likelihood_components(4, 1, 1e6);
  CHECK(far.l0() == doctest::Approx(1.0));
  CHECK(far.l1() == 0.0);
  CHECK(std::isfinite(far.log_l1));

  CHECK_THROWS_AS(likelihood_components(4, 0, 4), Error);
}

TEST_CASE("likelihood components stay finite in log domain") {
  for (double m : {-50.0, 0.0, 50.0})
    for (double s : {1e-4, 0.1, 30.0})
      for (double t : {0.0, 1e3, 1e5}) {
        const auto c = likelihood_components(m, s, t);
        CHECK(std::isfinite(c.log_l0));
        CHECK(std::isfinite(c.log_l1));
        CHECK(std::isfinite(c.log_total()));
      }
}

TEST_CASE("likelihood sum matches quadrature") {
  for (double m : {0.0, 4.0, 10.0})
    for (double s : {0.1, 1.0, 3.0})
      for (double t : {0.0, 2.0, 4.0, 8.0, 12.0}) {
        const auto c = likelihood_components(m, s, t);
        const double want = oracle::expected_clearing_likelihood(m, s, t);
        CHECK(c.l0() + c.l1() == doctest::Approx(want).epsilon(1e-10));
      }
}

TEST_CASE("map objective examples") {
  PricePosteriorModel empty{3, {}, {}};
  CHECK(map_objective(empty, LinearPrices({1, 2, 3})) == doctest::Approx(-6.0));
  const auto em = em_price_update(empty, LinearPrices({1, 2, 3}));
  CHECK(em.prices == LinearPrices(3));
  CHECK(map_objective_gradient(empty, LinearPrices({1, 2, 3})) ==
        std::vector<double>{-1, -1, -1});

  // Item 2 is in no bundle.
  auto model = llg_model(0.5);
  model.num_items = 3;
  for (auto& b : model.bundles) b = Bundle::from_mask(3, b.mask());
  CHECK(map_objective_gradient(model, LinearPrices({1, 1, 1}))[2] == -1.0);

  // LLG at the floor: the best point of a 0.1 grid on [0, 10]^2 clears.
  const auto llg = build_llg().instance;
  const auto floor_model = llg_model(0.01);
  double best = -1e300;
  LinearPrices argbest(2);
  for (int a = 0; a <= 100; ++a)
    for (int b = 0; b <= 100; ++b) {
      const LinearPrices p({a * 0.1, b * 0.1});
      const double v = map_objective(floor_model, p);
      if (v > best) best = v, argbest = p;
    }
  CHECK(clearing_check(llg.agents, argbest).cleared);
  CHECK(clearing_objective(llg.agents, argbest) == doctest::Approx(10.0));
  // (4, 4) clears but sits on the boundary of the clearing set, where the
  // smoothed objective is strictly lower.
  CHECK(map_objective(floor_model, LinearPrices({4, 4})) < best);
}

TEST_CASE("map objective approaches the negated clearing objective for point beliefs") {
  const auto llg = build_llg().instance;
  const auto model = llg_model(1e-12);
  for (double p1 = 0; p1 <= 8; p1 += 0.7)
    for (double p2 = 0; p2 <= 8; p2 += 0.9) {
      const LinearPrices p({p1, p2});
      CHECK(map_objective(model, p) ==
            doctest::Approx(-clearing_objective(llg.agents, p)).epsilon(1e-5));
    }
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_model(rng);
    const auto p = random_prices(rng, model.num_items, 0.1, 20.0);
    const auto g = map_objective_gradient(model, p);
    for (int j = 0; j < model.num_items; ++j) {
      const double h = 1e-5;
      auto vp = p.values();
      std::vector<double> up(vp.begin(), vp.end()), dn = up;
      up[std::size_t(j)] += h;
      dn[std::size_t(j)] -= h;
      const double fd =
          (map_objective(model, LinearPrices(up)) - map_objective(model, LinearPrices(dn))) /
          (2 * h);
      CHECK(std::abs(g[std::size_t(j)] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("surrogate is concave: midpoint test") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_model(rng);
    const auto gamma = responsibilities(model, random_prices(rng, model.num_items, 0, 10));
    const auto a = random_prices(rng, model.num_items, 0, 20);
    const auto b = random_prices(rng, model.num_items, 0, 20);
    std::vector<double> mid;
    for (int j = 0; j < model.num_items; ++j) mid.push_back(0.5 * (a[j] + b[j]));
    const double fa = surrogate_objective(model, gamma, a);
    const double fb = surrogate_objective(model, gamma, b);
    const double fm = surrogate_objective(model, gamma, LinearPrices(mid));
    CHECK(fm >= 0.5 * (fa + fb) - 1e-9 * (1 + std::abs(fa) + std::abs(fb)));
    // The MAP objective itself is concave as well.
    const double ga = map_objective(model, a), gb = map_objective(model, b);
    CHECK(map_objective(model, LinearPrices(mid)) >=
          0.5 * (ga + gb) - 1e-9 * (1 + std::abs(ga) + std::abs(gb)));
  }
}

TEST_CASE("surrogate touches the objective at the E-step point") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = random_model(rng);
    const auto p = random_prices(rng, model.num_items, 0, 10);
    const auto gamma = responsibilities(model, p);
    // The EM bound differs from the objective by the entropy of gamma.
    double entropy = 0.0;
    for (double g : gamma) {
      if (g > 0) entropy -= g * std::log(g);
      if (g < 1) entropy -= (1 - g) * std::log(1 - g);
    }
    CHECK(surrogate_objective(model, gamma, p) + entropy ==
          doctest::Approx(map_objective(model, p)).epsilon(1e-9));
  }
}

TEST_CASE("E-step responsibility example") {
  PricePosteriorModel model{1, {Bundle(1, {0})}, {{4, 1}}};
  const auto gamma = responsibilities(model, LinearPrices(std::vector<double>{4}));
  CHECK(gamma[0] == doctest::Approx(0.2616 / 0.7616).epsilon(1e-3));
}

TEST_CASE("EM is monotone and stationary on random models") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_model(rng);
    const auto init = random_prices(rng, model.num_items, 0, 8);
    const auto out = em_price_update(model, init);
    REQUIRE(out.trace.size() >= 1);
    for (std::size_t k = 1; k < out.trace.size(); ++k)
      CHECK(out.trace[k].objective >= out.trace[k - 1].objective);
    CHECK(out.status == EmStatus::converged);
    CHECK(out.gradient_norm <= 1e-6);
    for (double p : out.prices.values()) CHECK(p >= 0.0);
  }
}

TEST_CASE("EM on LLG with exact knowledge finds clearing prices") {
  const auto llg = build_llg().instance;
  const auto out = em_price_update(llg_model(0.01), LinearPrices(2));
  CHECK(std::abs(clearing_objective(llg.agents, out.prices) - 10.0) <= 1e-3);
  CHECK(clearing_check(llg.agents, out.prices).cleared);
}

TEST_CASE("EM rejects bad inputs") {
  auto model = llg_model(1);
  CHECK_THROWS_AS(em_price_update(model, LinearPrices(3)), Error);
  model.beliefs[0].variance = 0;
  CHECK_THROWS_AS(em_price_update(model, LinearPrices(2)), Error);
  model = llg_model(1);
  model.bundles.pop_back();
  CHECK_THROWS_AS(em_price_update(model, LinearPrices(2)), Error);
}

TEST_CASE("projected gradient norm ignores outward components at zero") {
  CHECK(projected_gradient_norm(std::vector<double>{-1, 0.5}, LinearPrices({0, 0})) ==
        doctest::Approx(0.5));
  CHECK(projected_gradient_norm(std::vector<double>{-1, 0.5}, LinearPrices({1, 0})) ==
        doctest::Approx(std::sqrt(1.25)));
}
