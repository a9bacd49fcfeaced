#pragma once

// The Bayesian iterative auction: quote prices, collect bids, refine value
// beliefs by ADF, recompute MAP prices by EM, until the market clears. Also
// the n+1-trajectory variant that yields VCG payments.

#include <optional>
#include <span>
#include <vector>

#include "bayesclear/auction_core.hpp"
#include "bayesclear/generative_model.hpp"
#include "bayesclear/price_update.hpp"
#include "bayesclear/rng.hpp"
#include "bayesclear/trace.hpp"

namespace bayesclear {

struct AuctionConfig {
  double beta = 10.0;  // auctioneer's assumed probit precision
  double variance_floor = kDefaultVarianceFloor;
  int round_cap = 100;
  EmConfig em{};
  double indifference_tolerance = kIndifferenceTolerance;
  // When set, clearing is declared once the dual objective is within this gap
  // of the efficient welfare instead of by the exact clearing check.
  std::optional<double> approximate_gap;
  ExactSearchLimits limits{};

  void validate() const;
};

struct BayesianOutcome : AuctionOutcome {
  int em_failures = 0;
};

BayesianOutcome run_bayesian_auction(std::span<const SingleMindedAgent> agents, int num_items,
                                     const PriorSpec& priors, const AuctionConfig& config,
                                     const ResponseModel& response, Rng& rng);

struct VcgOutcome {
  std::optional<Allocation> allocation;
  // Unavailable for an agent when the full or its marginal trajectory failed.
  std::vector<std::optional<double>> payments;
  // trajectories[0] is the full economy, trajectories[i + 1] excludes agent i.
  std::vector<BayesianOutcome> trajectories;
  bool all_cleared = false;
};

VcgOutcome run_vcg_auction(std::span<const SingleMindedAgent> agents, int num_items,
                           const PriorSpec& priors, const AuctionConfig& config,
                           const ResponseModel& response, Rng& rng);

}  // namespace bayesclear
