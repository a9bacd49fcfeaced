#pragma once

#include <optional>
#include <vector>

#include "bayesclear/auction_core.hpp"
#include "bayesclear/generative_model.hpp"
#include "bayesclear/knowledge_update.hpp"
#include "bayesclear/price_update.hpp"

namespace bayesclear {

struct EmDiagnostics {
  EmStatus status = EmStatus::converged;
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
};

// One auction round: the quoted prices, the bids they drew, the beliefs held
// when the prices were quoted, and how the next prices were computed.
struct RoundRecord {
  int round = 0;
  LinearPrices prices;
  std::vector<BidRecord> bids;
  std::vector<GaussianBelief> beliefs;
  std::optional<EmDiagnostics> em;
};

struct AuctionTrace {
  std::vector<RoundRecord> rounds;
};

// Common result of an iterative auction run. `rounds` is the round in which
// clearing was detected, or the cap when the run failed.
struct AuctionOutcome {
  AuctionTrace trace;
  ClearingCertificate certificate;
  LinearPrices final_prices;
  int rounds = 0;
  bool cleared = false;
};

}  // namespace bayesclear
