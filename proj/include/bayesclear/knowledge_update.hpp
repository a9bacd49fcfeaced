#pragma once

// Gaussian beliefs over agent values, refined one probit bid at a time by
// assumed density filtering (moment matching).

#include <span>
#include <vector>

namespace bayesclear {

enum class Bid : int { decline = -1, demand = +1 };

inline constexpr double kDefaultVarianceFloor = 0.01;

struct GaussianBelief {
  double mean = 0.0;
  double variance = 1.0;
};

GaussianBelief init_belief(double prior_mean, double prior_variance,
                           double variance_floor = kDefaultVarianceFloor);

// Mean and variance of the tilted density Phi(b*beta*(w - cost)) N(w; m, s^2),
// without the variance floor.
GaussianBelief adf_moments(const GaussianBelief& belief, Bid bid, double cost, double beta);

// adf_moments followed by the variance floor.
GaussianBelief adf_update(const GaussianBelief& belief, Bid bid, double cost, double beta,
                          double variance_floor = kDefaultVarianceFloor);

std::vector<GaussianBelief> batch_round_update(std::span<const GaussianBelief> beliefs,
                                               std::span<const Bid> bids,
                                               std::span<const double> costs, double beta,
                                               double variance_floor = kDefaultVarianceFloor);

}  // namespace bayesclear
