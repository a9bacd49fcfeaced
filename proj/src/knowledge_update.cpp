#include "bayesclear/knowledge_update.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bayesclear/error.hpp"
#include "bayesclear/normal.hpp"

namespace bayesclear {

namespace {

void check_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw Error(ErrorCode::invalid_argument, "beta must be positive and finite");
}

}  // namespace

GaussianBelief init_belief(double prior_mean, double prior_variance, double variance_floor) {
  if (!(prior_variance > 0.0) || !std::isfinite(prior_variance) || !std::isfinite(prior_mean))
    throw Error(ErrorCode::invalid_argument,
                "prior variance must be positive, got " + std::to_string(prior_variance));
  return {prior_mean, std::max(prior_variance, variance_floor)};
}

GaussianBelief adf_moments(const GaussianBelief& belief, Bid bid, double cost, double beta) {
  check_beta(beta);
  if (!(belief.variance > 0.0) || !std::isfinite(belief.variance) || !std::isfinite(belief.mean))
    throw Error(ErrorCode::invalid_argument, "belief must have finite mean and positive variance");
  if (std::isnan(cost)) throw Error(ErrorCode::invalid_argument, "bid cost is NaN");
  const double b = static_cast<double>(static_cast<int>(bid));
  const double s2 = belief.variance;
  const double scale = std::sqrt(1.0 + s2 * beta * beta);
  const double z = b * beta * (belief.mean - cost) / scale;
  if (std::isinf(z)) {
    if (z > 0) return belief;  // observation certain under the current belief
    throw Error(ErrorCode::numeric, "bid has zero likelihood under the current belief");
  }
  const double lambda = normal::inverse_mills(z);
  const double curvature = normal::inverse_mills_curvature(z);
  GaussianBelief out;
  out.mean = belief.mean + b * s2 * beta * lambda / scale;
  out.variance = s2 - (s2 * s2 * beta * beta / (scale * scale)) * curvature;
  return out;
}

GaussianBelief adf_update(const GaussianBelief& belief, Bid bid, double cost, double beta,
                          double variance_floor) {
  GaussianBelief out = adf_moments(belief, bid, cost, beta);
  out.variance = std::max(out.variance, variance_floor);
  return out;
}

std::vector<GaussianBelief> batch_round_update(std::span<const GaussianBelief> beliefs,
                                               std::span<const Bid> bids,
                                               std::span<const double> costs, double beta,
                                               double variance_floor) {
  if (bids.size() != beliefs.size() || costs.size() != beliefs.size())
    throw Error(ErrorCode::dimension_mismatch,
                "beliefs, bids and costs must have one entry per agent");
  std::vector<GaussianBelief> out;
  out.reserve(beliefs.size());
  for (std::size_t i = 0; i < beliefs.size(); ++i)
    out.push_back(adf_update(beliefs[i], bids[i], costs[i], beta, variance_floor));
  return out;
}

}  // namespace bayesclear
