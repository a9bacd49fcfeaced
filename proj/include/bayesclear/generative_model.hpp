#pragma once

// Joint sampling of prices and single-minded agent types such that
// P(x, w, theta) is proportional to U(theta; x, w) Q(w), plus the probit
// bid model used both to simulate bidders and to interpret their bids.

#include <cstdint>
#include <vector>

#include "bayesclear/auction_core.hpp"
#include "bayesclear/knowledge_update.hpp"
#include "bayesclear/rng.hpp"

namespace bayesclear {

// Gaussian value prior; variance 0 is a point mass at the mean.
struct ValuePrior {
  double mean = 0.0;
  double variance = 0.0;
};

using PriorSpec = std::vector<ValuePrior>;

enum class ResponseMode { exact, probit };

struct ResponseModel {
  ResponseMode mode = ResponseMode::exact;
  double beta = 10.0;
};

struct BidRecord {
  int agent = 0;
  int round = 0;
  double cost = 0.0;
  Bid bid = Bid::decline;
};

inline constexpr int kMaxExactSumItems = 20;

// Q(x | w, theta) = 2^-m exp(-(w - theta(x))_+).
double bundle_likelihood(const Bundle& x, double value, const LinearPrices& prices);

// Total unnormalized mass over all 2^m bundles; restart probability is 1 - nu.
double acceptance_mass(double value, const LinearPrices& prices);

struct SamplerOptions {
  std::int64_t max_attempts = 1'000'000;
  // Empty: iid standard exponential item prices. Otherwise each item price is
  // drawn from this support with weights proportional to exp(-p).
  std::vector<double> price_grid;
};

struct Economy {
  std::vector<SingleMindedAgent> agents;
  LinearPrices prices;
  std::int64_t attempts = 0;
};

Economy sample_economy(int num_agents, int num_items, const PriorSpec& prior, Rng& rng,
                       const SamplerOptions& options = {});

// Probability of the given bid at cost c. Exact mode bids +1 iff w >= c.
double bid_probability(const ResponseModel& model, double value, double cost,
                       Bid bid = Bid::demand);

Bid sample_bid(const ResponseModel& model, double value, double cost, Rng& rng);

}  // namespace bayesclear
