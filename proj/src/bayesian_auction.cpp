#include "bayesclear/bayesian_auction.hpp"

#include <string>

#include "bayesclear/error.hpp"
#include "bayesclear/knowledge_update.hpp"

namespace bayesclear {

namespace {

ClearingCertificate check_round(std::span<const SingleMindedAgent> agents, int num_items,
                                const LinearPrices& prices, const AuctionConfig& config,
                                const std::optional<double>& efficient_welfare) {
  if (!config.approximate_gap)
    return clearing_check(agents, prices, config.indifference_tolerance, config.limits);
  ClearingCertificate cert;
  cert.potential_value = clearing_objective(agents, prices);
  if (cert.potential_value - *efficient_welfare <= *config.approximate_gap) {
    cert.cleared = true;
    cert.witness = efficient_allocation(agents, num_items, config.limits).allocation;
  }
  return cert;
}

}  // namespace

void AuctionConfig::validate() const {
  if (!(beta > 0.0)) throw Error(ErrorCode::invalid_argument, "beta must be positive");
  if (!(variance_floor > 0.0))
    throw Error(ErrorCode::invalid_argument, "variance floor must be positive");
  if (round_cap < 1) throw Error(ErrorCode::invalid_argument, "round cap must be >= 1");
  if (approximate_gap && !(*approximate_gap >= 0.0))
    throw Error(ErrorCode::invalid_argument, "approximate clearing gap must be >= 0");
}

BayesianOutcome run_bayesian_auction(std::span<const SingleMindedAgent> agents, int num_items,
                                     const PriorSpec& priors, const AuctionConfig& config,
                                     const ResponseModel& response, Rng& rng) {
  config.validate();
  if (priors.size() != agents.size())
    throw Error(ErrorCode::dimension_mismatch,
                "got " + std::to_string(priors.size()) + " priors for " +
                    std::to_string(agents.size()) + " agents");

  PricePosteriorModel model;
  model.num_items = num_items;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    model.bundles.push_back(agents[i].bundle);
    model.beliefs.push_back(
        init_belief(priors[i].mean, priors[i].variance, config.variance_floor));
  }
  model.validate();

  std::optional<double> welfare;
  if (config.approximate_gap)
    welfare = efficient_allocation(agents, num_items, config.limits).welfare;

  BayesianOutcome out;
  LinearPrices prices(num_items);
  std::vector<Bid> bids(agents.size());
  std::vector<double> costs(agents.size());
  for (int round = 1; round <= config.round_cap; ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.prices = prices;
    rec.beliefs = model.beliefs;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      costs[i] = prices.bundle_price(agents[i].bundle);
      bids[i] = sample_bid(response, agents[i].value, costs[i], rng);
      rec.bids.push_back({static_cast<int>(i), round, costs[i], bids[i]});
    }
    out.rounds = round;
    out.final_prices = prices;
    if (round == config.round_cap) {
      out.trace.rounds.push_back(std::move(rec));
      break;
    }

    out.certificate = check_round(agents, num_items, prices, config, welfare);
    if (out.certificate.cleared) {
      out.cleared = true;
      out.trace.rounds.push_back(std::move(rec));
      return out;
    }

    model.beliefs =
        batch_round_update(model.beliefs, bids, costs, config.beta, config.variance_floor);
    const EmResult em = em_price_update(model, prices, config.em);
    rec.em = EmDiagnostics{em.status, static_cast<int>(em.trace.size()) - 1,
                           em.trace.back().objective, em.gradient_norm};
    if (em.status == EmStatus::mstep_failure) {
      ++out.em_failures;  // keep quoting the previous prices
    } else {
      prices = em.prices;
    }
    out.trace.rounds.push_back(std::move(rec));
  }
  out.certificate = check_round(agents, num_items, out.final_prices, config, welfare);
  out.certificate.cleared = false;
  out.certificate.witness.reset();
  return out;
}

VcgOutcome run_vcg_auction(std::span<const SingleMindedAgent> agents, int num_items,
                           const PriorSpec& priors, const AuctionConfig& config,
                           const ResponseModel& response, Rng& rng) {
  if (priors.size() != agents.size())
    throw Error(ErrorCode::dimension_mismatch, "one prior per agent required");
  if (static_cast<int>(agents.size()) > config.limits.max_agents)
    throw Error(ErrorCode::size_limit, "too many agents for the exact clearing check");

  const std::uint64_t base = rng();
  VcgOutcome out;
  {
    Rng stream(derive_seed(base, 0));
    out.trajectories.push_back(
        run_bayesian_auction(agents, num_items, priors, config, response, stream));
  }
  std::vector<SingleMindedAgent> sub_agents;
  PriorSpec sub_priors;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    sub_agents.clear();
    sub_priors.clear();
    for (std::size_t j = 0; j < agents.size(); ++j) {
      if (j == i) continue;
      sub_agents.push_back(agents[j]);
      sub_priors.push_back(priors[j]);
    }
    Rng stream(derive_seed(base, i + 1));
    out.trajectories.push_back(
        run_bayesian_auction(sub_agents, num_items, sub_priors, config, response, stream));
  }

  const auto& full = out.trajectories.front();
  out.all_cleared = true;
  for (const auto& t : out.trajectories) out.all_cleared = out.all_cleared && t.cleared;
  out.payments.assign(agents.size(), std::nullopt);
  if (!full.cleared) return out;
  out.allocation = full.certificate.witness;

  // Winners' last-and-final bids are their values for the allocated bundles.
  const auto& alloc = out.allocation->assigned;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& marginal = out.trajectories[i + 1];
    if (!marginal.cleared) continue;
    double others_full = 0.0;
    for (std::size_t j = 0; j < agents.size(); ++j)
      if (j != i) others_full += agents[j].valuation(alloc[j]);
    double without_i = 0.0;
    const auto& sub_alloc = marginal.certificate.witness->assigned;
    for (std::size_t j = 0, k = 0; j < agents.size(); ++j) {
      if (j == i) continue;
      without_i += agents[j].valuation(sub_alloc[k++]);
    }
    out.payments[i] = std::max(0.0, without_i - others_full);
  }
  return out;
}

}  // namespace bayesclear
