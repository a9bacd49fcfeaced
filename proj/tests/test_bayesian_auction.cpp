#include <doctest.h>

#include <cmath>
#include <random>

#include "bayesclear/bayesian_auction.hpp"
#include "bayesclear/error.hpp"
#include "bayesclear/instances.hpp"
#include "oracles.hpp"

using namespace bayesclear;
using Agents = std::vector<SingleMindedAgent>;

namespace {

BayesianOutcome run_llg(double mean, double variance, std::uint64_t seed = 1) {
  const auto llg = build_llg();
  Rng rng(seed);
  return run_bayesian_auction(llg.instance.agents, 2, llg.priors(mean, variance), {}, {}, rng);
}

}  // namespace

TEST_CASE("LLG with exact knowledge clears within two rounds") {
  const auto out = run_llg(10, 0.01);
  CHECK(out.cleared);
  CHECK(out.rounds <= 2);
  REQUIRE(out.certificate.witness);
  CHECK(out.certificate.witness->assigned[2] == Bundle(2, {0, 1}));
  CHECK(std::abs(clearing_objective(build_llg().instance.agents, out.final_prices) - 10) <= 1e-3);
}

TEST_CASE("LLG unbiased rounds are nondecreasing in prior variance") {
  int previous = 0;
  for (double v : {1.0, 4.0, 9.0, 16.0, 25.0}) {
    const auto out = run_llg(10, v);
    CHECK(out.cleared);
    CHECK(out.rounds >= previous);
    previous = out.rounds;
  }
}

TEST_CASE("LLG biased: moderate variance beats overconfidence") {
  CHECK(run_llg(4, 9).rounds < run_llg(4, 1).rounds);
}

TEST_CASE("trace consistency") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 1 + int(gen() % 4);
    std::vector<SingleMindedAgent> agents;
    PriorSpec priors;
    for (int i = 0, n = 1 + int(gen() % 5); i < n; ++i) {
      agents.push_back({Bundle::from_mask(m, 1 + gen() % ((1u << m) - 1)), 10 * u(gen)});
      priors.push_back({agents.back().value + 2 * (u(gen) - 0.5), 0.5 + 4 * u(gen)});
    }
    AuctionConfig config;
    config.round_cap = 30;
    Rng rng(trial);
    const auto out = run_bayesian_auction(agents, m, priors, config, {}, rng);
    CHECK(out.rounds <= config.round_cap);
    CHECK(out.cleared == (out.rounds < config.round_cap));
    CHECK(int(out.trace.rounds.size()) == out.rounds);
    CHECK(out.trace.rounds[0].prices == LinearPrices(m));
    for (std::size_t k = 0; k < out.trace.rounds.size(); ++k) {
      const auto& r = out.trace.rounds[k];
      CHECK(r.round == int(k) + 1);
      for (const auto& b : r.bids)
        CHECK(b.cost == r.prices.bundle_price(agents[std::size_t(b.agent)].bundle));
      if (k > 0)
        for (std::size_t i = 0; i < agents.size(); ++i)
          CHECK(r.beliefs[i].variance <=
                std::max(out.trace.rounds[k - 1].beliefs[i].variance, config.variance_floor));
    }
    if (out.cleared) CHECK(clearing_check(agents, out.final_prices).cleared);

    Rng again(trial);
    const auto repeat = run_bayesian_auction(agents, m, priors, config, {}, again);
    CHECK(repeat.rounds == out.rounds);
    CHECK(repeat.final_prices == out.final_prices);
  }
}

TEST_CASE("point-mass priors clear every instance with an interior clearing price") {
  std::mt19937_64 gen(77);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 1 + int(gen() % 3);
    std::vector<SingleMindedAgent> agents;
    PriorSpec priors;
    for (int i = 0, n = 1 + int(gen() % 4); i < n; ++i) {
      agents.push_back({Bundle::from_mask(m, 1 + gen() % ((1u << m) - 1)),
                        double(1 + gen() % 10)});
      priors.push_back({agents.back().value, 0.01});
    }
    if (!oracle::has_interior_clearing_price(agents, m, 0.25, 11, 0.2)) continue;
    ++checked;
    Rng rng(trial);
    const auto out = run_bayesian_auction(agents, m, priors, {}, {}, rng);
    CHECK(out.cleared);
  }
  CHECK(checked > 200);
}

// Includes ties, where the clearing prices form a set with empty interior.
TEST_CASE("point-mass priors clear every instance with a grid clearing price") {
  std::mt19937_64 gen(19);
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const int m = 1 + int(gen() % 3);
    std::vector<SingleMindedAgent> agents;
    PriorSpec priors;
    for (int i = 0, n = 1 + int(gen() % 4); i < n; ++i) {
      agents.push_back({Bundle::from_mask(m, 1 + gen() % ((1u << m) - 1)),
                        double(1 + gen() % 10)});
      priors.push_back({agents.back().value, 0.01});
    }
    const auto grid = oracle::grid_minimum(agents, m, 0.5, 10);
    if (grid.value > oracle::brute_force_welfare(agents) + 1e-9) continue;
    ++checked;
    Rng rng(trial);
    const auto out = run_bayesian_auction(agents, m, priors, {}, {}, rng);
    CHECK(out.cleared);
  }
  CHECK(checked > 40);
}

TEST_CASE("probit bidders are reproducible from the seed") {
  const auto llg = build_llg();
  const ResponseModel noisy{ResponseMode::probit, 4};
  Rng a(99), b(99);
  const auto x = run_bayesian_auction(llg.instance.agents, 2, llg.priors(8, 4), {}, noisy, a);
  const auto y = run_bayesian_auction(llg.instance.agents, 2, llg.priors(8, 4), {}, noisy, b);
  CHECK(x.rounds == y.rounds);
  REQUIRE(x.trace.rounds.size() == y.trace.rounds.size());
  for (std::size_t k = 0; k < x.trace.rounds.size(); ++k)
    CHECK(x.trace.rounds[k].prices == y.trace.rounds[k].prices);
}

TEST_CASE("approximate clearing terminates no later than exact clearing") {
  const auto llg = build_llg();
  AuctionConfig approx;
  approx.approximate_gap = 0.5;
  for (double v : {1.0, 9.0, 25.0}) {
    Rng a(1), b(1);
    const auto exact =
        run_bayesian_auction(llg.instance.agents, 2, llg.priors(4, v), {}, {}, a);
    const auto loose =
        run_bayesian_auction(llg.instance.agents, 2, llg.priors(4, v), approx, {}, b);
    CHECK(loose.rounds <= exact.rounds);
  }
}

TEST_CASE("auction config validation") {
  const auto llg = build_llg();
  Rng rng(0);
  AuctionConfig bad;
  bad.beta = 0;
  CHECK_THROWS_AS(run_bayesian_auction(llg.instance.agents, 2, llg.priors(10, 1), bad, {}, rng),
                  Error);
  bad = {};
  bad.round_cap = 0;
  CHECK_THROWS_AS(run_bayesian_auction(llg.instance.agents, 2, llg.priors(10, 1), bad, {}, rng),
                  Error);
  CHECK_THROWS_AS(run_bayesian_auction(llg.instance.agents, 2, PriorSpec{{1, 1}}, {}, {}, rng),
                  Error);
}

TEST_CASE("VCG through n+1 trajectories") {
  const auto llg = build_llg();
  Rng rng(5);
  const auto out = run_vcg_auction(llg.instance.agents, 2, llg.priors(10, 0.01), {}, {}, rng);
  CHECK(out.all_cleared);
  REQUIRE(out.allocation);
  CHECK(out.allocation->assigned[2] == Bundle(2, {0, 1}));
  CHECK(out.trajectories.size() == 4);
  REQUIRE(out.payments.size() == 3);
  CHECK(*out.payments[0] == doctest::Approx(0.0));
  CHECK(*out.payments[1] == doctest::Approx(0.0));
  CHECK(*out.payments[2] == doctest::Approx(8.0));

  Rng r1(1);
  const auto single = run_vcg_auction(Agents{{Bundle(1, {0}), 3}}, 1, {{3, 0.01}}, {}, {}, r1);
  CHECK(single.all_cleared);
  CHECK(*single.payments[0] == 0.0);
  REQUIRE(single.allocation);
  CHECK(single.allocation->assigned[0] == Bundle(1, {0}));

  Rng r2(2);
  const auto disjoint = run_vcg_auction(Agents{{Bundle(2, {0}), 2}, {Bundle(2, {1}), 7}}, 2,
                                        {{2, 0.01}, {7, 0.01}}, {}, {}, r2);
  CHECK(disjoint.all_cleared);
  CHECK(*disjoint.payments[0] == 0.0);
  CHECK(*disjoint.payments[1] == 0.0);
}

TEST_CASE("VCG marks payments unavailable when a trajectory fails") {
  const auto llg = build_llg();
  AuctionConfig tight;
  tight.round_cap = 1;
  Rng rng(5);
  const auto out = run_vcg_auction(llg.instance.agents, 2, llg.priors(10, 0.01), tight, {}, rng);
  CHECK_FALSE(out.all_cleared);
  CHECK_FALSE(out.payments[2].has_value());
}
