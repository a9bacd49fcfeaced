#include "bayesclear/baseline_clock.hpp"

#include <cmath>
#include <string>

#include "bayesclear/error.hpp"

namespace bayesclear {

std::vector<int> excess_demand(std::span<const Bid> bids,
                               std::span<const SingleMindedAgent> agents, int num_items) {
  if (bids.size() != agents.size())
    throw Error(ErrorCode::dimension_mismatch, "one bid per agent required");
  std::vector<int> excess(static_cast<std::size_t>(num_items), -1);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].bundle.universe_size() != num_items)
      throw Error(ErrorCode::dimension_mismatch, "agent bundle has the wrong item universe");
    if (bids[i] != Bid::demand) continue;
    for (int j : agents[i].bundle.items()) ++excess[static_cast<std::size_t>(j)];
  }
  return excess;
}

LinearPrices clock_step(const LinearPrices& prices, std::span<const int> excess, double tau,
                        int round) {
  if (round < 1) throw Error(ErrorCode::invalid_argument, "rounds are numbered from 1");
  if (!(tau > 0.0)) throw Error(ErrorCode::invalid_argument, "tau must be positive");
  if (static_cast<int>(excess.size()) != prices.size())
    throw Error(ErrorCode::dimension_mismatch, "excess demand and prices differ in length");
  const double scale = tau / std::sqrt(static_cast<double>(round));
  std::vector<double> next(excess.size());
  for (std::size_t j = 0; j < next.size(); ++j)
    next[j] = std::max(0.0, prices[static_cast<int>(j)] + scale * excess[j]);
  return LinearPrices(std::move(next));
}

AuctionOutcome run_clock_auction(std::span<const SingleMindedAgent> agents, int num_items,
                                 const ClockConfig& config, const ResponseModel& response,
                                 Rng& rng) {
  if (!(config.tau > 0.0)) throw Error(ErrorCode::invalid_argument, "tau must be positive");
  if (config.round_cap < 1) throw Error(ErrorCode::invalid_argument, "round cap must be >= 1");

  AuctionOutcome out;
  LinearPrices prices(num_items);
  std::vector<Bid> bids(agents.size());
  for (int round = 1; round <= config.round_cap; ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.prices = prices;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const double cost = prices.bundle_price(agents[i].bundle);
      bids[i] = sample_bid(response, agents[i].value, cost, rng);
      rec.bids.push_back({static_cast<int>(i), round, cost, bids[i]});
    }
    out.trace.rounds.push_back(std::move(rec));
    out.rounds = round;
    out.final_prices = prices;
    if (round == config.round_cap) break;  // reaching the cap counts as failure

    out.certificate =
        clearing_check(agents, prices, config.indifference_tolerance, config.limits);
    if (out.certificate.cleared) {
      out.cleared = true;
      return out;
    }
    prices = clock_step(prices, excess_demand(bids, agents, num_items), config.tau, round);
  }
  out.certificate = clearing_check(agents, out.final_prices, config.indifference_tolerance,
                                   config.limits);
  out.certificate.cleared = false;
  out.certificate.witness.reset();
  return out;
}

}  // namespace bayesclear
