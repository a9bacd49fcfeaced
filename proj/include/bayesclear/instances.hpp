#pragma once

// Auction instances and where they come from: the LLG domain, CATS bid files,
// seed-deterministic synthetic corpora, and Gaussian value priors fitted by
// Bayesian linear regression on item indicators.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bayesclear/auction_core.hpp"
#include "bayesclear/generative_model.hpp"
#include "bayesclear/rng.hpp"

namespace bayesclear {

struct Instance {
  std::string id;
  int num_items = 0;
  std::vector<SingleMindedAgent> agents;
  std::optional<PriorSpec> priors;
  std::uint64_t seed = 0;

  void validate() const;
};

// Native instance format (JSON). Keys are emitted in a fixed order:
// num_items, agents[{bundle, value}], seed, then optional id and priors.
std::string instance_to_json(const Instance& instance);
Instance instance_from_json(std::string_view text);

// Local-Local-Global: items {0}, {1}; locals value 4 each, global values
// both items at 10. Locals' priors are N(4, 0.01).
struct LlgScenario {
  Instance instance;
  PriorSpec priors(double global_mean, double global_variance) const;
};

LlgScenario build_llg();

enum class Split { train, test };
enum class CorpusOrigin { parsed, synthetic };

struct CorpusRecord {
  Bundle bundle;
  double value = 0.0;
  Split split = Split::test;
};

struct BidCorpus {
  int num_items = 0;
  std::vector<CorpusRecord> records;
  CorpusOrigin origin = CorpusOrigin::synthetic;

  std::vector<CorpusRecord> records_in(Split split) const;
};

// CATS text format: '%' comments, "goods N", "bids N", optional "dummy N",
// then "<id> <value> <good> ... #" lines. Dummy goods (index >= N) are dropped.
BidCorpus parse_cats(std::string_view text);
std::string write_cats(const BidCorpus& corpus);

// Labels a uniformly random subset of `train_count` records as training data
// and the rest as test data.
void split_corpus(BidCorpus& corpus, std::size_t train_count, Rng& rng);

// Draws n test-split records without replacement, in random order.
Instance sample_instance(const BidCorpus& corpus, int num_agents, Rng& rng);

struct LinearPriorModel {
  int num_items = 0;
  std::vector<double> weight_mean;
  std::vector<double> weight_covariance;  // row-major num_items x num_items
  double signal_variance = 1.0;
  double noise_variance = 1.0;
  double log_marginal_likelihood = 0.0;
};

// Bayesian linear regression of value on item indicators over the training
// split; hyperparameters maximize the log evidence over {1e-2, ..., 1e3}^2.
LinearPriorModel fit_linear_prior(const BidCorpus& corpus);
LinearPriorModel fit_linear_prior(std::span<const CorpusRecord> training, int num_items);

// Evidence of the data under fixed hyperparameters (exposed for tests).
double linear_prior_log_evidence(std::span<const CorpusRecord> training, int num_items,
                                 double signal_variance, double noise_variance);

ValuePrior predict_agent_prior(const LinearPriorModel& model, const Bundle& bundle,
                               double variance_floor = 0.01);

std::string prior_model_to_json(const LinearPriorModel& model);
LinearPriorModel prior_model_from_json(std::string_view text);

enum class CorpusStyle { paths, regions, arbitrary, scheduling };

CorpusStyle parse_corpus_style(std::string_view name);
std::string_view corpus_style_name(CorpusStyle style);

// Synthetic stand-ins for the four CATS generators. Every corpus draws item
// base values u_j ~ U[1, 3]; a bid on bundle x is worth
//   sum_{j in x} u_j * (1 + c (|x| - 1)) * LogNormal(0, s)
// with per-style bundle shapes:
//   paths       contiguous index intervals of length 1-4      c = 0.15, s = 0.15
//   regions     connected cells of a near-square grid, 1-4    c = 0.15, s = 0.15
//   arbitrary   uniform random subsets of size 1-4             c = 0.25, s = 0.30
//   scheduling  slot intervals of length 1-3 ending by a random deadline,
//               scaled by an urgency factor 1 + 0.5 (m - 1 - deadline)/(m - 1)
//                                                              c = 0.10, s = 0.15
BidCorpus generate_synthetic_corpus(CorpusStyle style, int num_items, int count, Rng& rng);

struct OrTerm {
  Bundle bundle;
  double value = 0.0;
};

// An OR bidder bids exactly like one single-minded agent per term.
std::vector<SingleMindedAgent> decompose_or_valuation(std::span<const OrTerm> terms);

}  // namespace bayesclear
