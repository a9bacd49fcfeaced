#pragma once

// Linear-price clock auction: item prices move by excess demand scaled by
// tau / sqrt(round), projected onto p >= 0 (a subgradient method on the dual).

#include <span>
#include <vector>

#include "bayesclear/auction_core.hpp"
#include "bayesclear/generative_model.hpp"
#include "bayesclear/rng.hpp"
#include "bayesclear/trace.hpp"

namespace bayesclear {

struct ClockConfig {
  double tau = 1.0;
  int round_cap = 100;
  double indifference_tolerance = kIndifferenceTolerance;
  ExactSearchLimits limits{};
};

std::vector<int> excess_demand(std::span<const Bid> bids,
                               std::span<const SingleMindedAgent> agents, int num_items);

LinearPrices clock_step(const LinearPrices& prices, std::span<const int> excess, double tau,
                        int round);

AuctionOutcome run_clock_auction(std::span<const SingleMindedAgent> agents, int num_items,
                                 const ClockConfig& config, const ResponseModel& response,
                                 Rng& rng);

}  // namespace bayesclear
