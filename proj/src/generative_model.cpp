#include "bayesclear/generative_model.hpp"

#include <cmath>
#include <string>

#include "bayesclear/error.hpp"
#include "bayesclear/normal.hpp"

namespace bayesclear {

namespace {

void check_model(const ResponseModel& model) {
  if (!(model.beta > 0.0))
    throw Error(ErrorCode::invalid_argument, "response model beta must be positive");
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Gaussian truncated to [0, inf) by rejection.
double draw_value(const ValuePrior& prior, Rng& rng) {
  if (prior.variance == 0.0) return std::max(prior.mean, 0.0);
  std::normal_distribution<double> draw(prior.mean, std::sqrt(prior.variance));
  for (int tries = 0; tries < 1'000'000; ++tries) {
    const double w = draw(rng);
    if (w >= 0.0) return w;
  }
  throw Error(ErrorCode::numeric, "value prior has negligible mass on [0, inf)");
}

}  // namespace

double bundle_likelihood(const Bundle& x, double value, const LinearPrices& prices) {
  const double surplus = std::max(value - prices.bundle_price(x), 0.0);
  return std::ldexp(std::exp(-surplus), -x.universe_size());
}

double acceptance_mass(double value, const LinearPrices& prices) {
  const int m = prices.size();
  if (m > kMaxExactSumItems)
    throw Error(ErrorCode::size_limit,
                "exact bundle sum limited to " + std::to_string(kMaxExactSumItems) + " items");
  double total = 0.0;
  const std::uint64_t count = 1ULL << m;
  for (std::uint64_t mask = 0; mask < count; ++mask)
    total += bundle_likelihood(Bundle::from_mask(m, mask), value, prices);
  return total;
}

Economy sample_economy(int num_agents, int num_items, const PriorSpec& prior, Rng& rng,
                       const SamplerOptions& options) {
  if (num_agents < 0 || static_cast<int>(prior.size()) != num_agents)
    throw Error(ErrorCode::dimension_mismatch, "prior must list one value prior per agent");
  if (num_items < 0 || num_items > kMaxItems)
    throw Error(ErrorCode::size_limit, "item count outside [0, 64]");
  for (const auto& p : prior)
    if (!(p.variance >= 0.0))
      throw Error(ErrorCode::invalid_argument, "prior variance must be nonnegative");

  std::vector<double> grid_weights;
  for (double g : options.price_grid) {
    if (!(g >= 0.0)) throw Error(ErrorCode::invalid_argument, "price grid must be nonnegative");
    grid_weights.push_back(std::exp(-g));
  }
  std::discrete_distribution<std::size_t> grid_draw(grid_weights.begin(), grid_weights.end());
  std::exponential_distribution<double> exp_draw(1.0);
  const std::uint64_t bundle_space =
      num_items == 64 ? ~0ULL : ((1ULL << num_items) - 1ULL);

  Economy out;
  std::vector<double> p(static_cast<std::size_t>(num_items));
  for (out.attempts = 1; out.attempts <= options.max_attempts; ++out.attempts) {
    // Step 1: prices with density proportional to exp(-sum p_j).
    for (auto& pj : p)
      pj = options.price_grid.empty() ? exp_draw(rng) : options.price_grid[grid_draw(rng)];
    LinearPrices prices(p);

    // Step 2: per agent value, then a uniform bundle accepted with
    // probability exp(-V); rejection is the restart event of total mass 1 - nu.
    out.agents.clear();
    bool restart = false;
    for (int i = 0; i < num_agents && !restart; ++i) {
      const double w = draw_value(prior[static_cast<std::size_t>(i)], rng);
      const Bundle x = Bundle::from_mask(num_items, rng() & bundle_space);
      const double surplus = std::max(w - prices.bundle_price(x), 0.0);
      if (uniform01(rng) >= std::exp(-surplus)) {
        restart = true;
      } else {
        out.agents.push_back({x, w});
      }
    }
    if (!restart) {
      out.prices = std::move(prices);
      return out;
    }
  }
  throw Error(ErrorCode::numeric, "economy sampler exceeded its restart budget of " +
                                      std::to_string(options.max_attempts) + " attempts");
}

double bid_probability(const ResponseModel& model, double value, double cost, Bid bid) {
  check_model(model);
  const double sign = static_cast<double>(static_cast<int>(bid));
  if (model.mode == ResponseMode::exact) {
    const bool demand = value >= cost;
    return (demand == (bid == Bid::demand)) ? 1.0 : 0.0;
  }
  return normal::cdf(sign * model.beta * (value - cost));
}

Bid sample_bid(const ResponseModel& model, double value, double cost, Rng& rng) {
  check_model(model);
  if (model.mode == ResponseMode::exact) return value >= cost ? Bid::demand : Bid::decline;
  return uniform01(rng) < bid_probability(model, value, cost, Bid::demand) ? Bid::demand
                                                                           : Bid::decline;
}

}  // namespace bayesclear
