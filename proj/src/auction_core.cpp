#include "bayesclear/auction_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "bayesclear/error.hpp"

namespace bayesclear {

namespace {

void check_universe(int universe_size) {
  if (universe_size < 0 || universe_size > kMaxItems)
    throw Error(ErrorCode::size_limit,
                "bundle universe of " + std::to_string(universe_size) +
                    " items is outside [0, 64]");
}

void check_agents(std::span<const SingleMindedAgent> agents, int num_items) {
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].bundle.universe_size() != num_items)
      throw Error(ErrorCode::dimension_mismatch,
                  "agent " + std::to_string(i) + " bundle has universe " +
                      std::to_string(agents[i].bundle.universe_size()) + ", expected " +
                      std::to_string(num_items));
    if (!(agents[i].value >= 0.0) || !std::isfinite(agents[i].value))
      throw Error(ErrorCode::invalid_argument,
                  "agent " + std::to_string(i) + " has a negative or non-finite value");
  }
}

void check_size(std::span<const SingleMindedAgent> agents, const ExactSearchLimits& limits) {
  if (static_cast<int>(agents.size()) > limits.max_agents)
    throw Error(ErrorCode::size_limit,
                std::to_string(agents.size()) + " agents exceed the exact-search bound of " +
                    std::to_string(limits.max_agents));
}

// Depth-first branch and bound over agents in index order, include-branch
// first. Keeps the lexicographically smallest winner set among ties.
class WinnerSearch {
 public:
  explicit WinnerSearch(std::span<const SingleMindedAgent> agents) : agents_(agents) {}

  void run() {
    current_.clear();
    descend(0, 0, 0.0);
  }

  double best_welfare() const { return best_welfare_; }
  const std::vector<int>& best_winners() const { return best_; }

 private:
  double tolerance() const { return 1e-9 * (1.0 + std::abs(best_welfare_)); }

  double remaining_bound(std::size_t k, std::uint64_t used) const {
    double bound = 0.0;
    for (std::size_t i = k; i < agents_.size(); ++i)
      if ((agents_[i].bundle.mask() & used) == 0) bound += agents_[i].value;
    return bound;
  }

  void descend(std::size_t k, std::uint64_t used, double welfare) {
    if (k == agents_.size()) {
      const double tol = tolerance();
      if (welfare > best_welfare_ + tol ||
          (welfare >= best_welfare_ - tol &&
           std::lexicographical_compare(current_.begin(), current_.end(), best_.begin(),
                                        best_.end()))) {
        best_welfare_ = welfare;
        best_ = current_;
      }
      return;
    }
    if (welfare + remaining_bound(k, used) < best_welfare_ - tolerance()) return;

    const auto& agent = agents_[k];
    if ((agent.bundle.mask() & used) == 0) {
      current_.push_back(static_cast<int>(k));
      descend(k + 1, used | agent.bundle.mask(), welfare + agent.value);
      current_.pop_back();
    }
    descend(k + 1, used, welfare);
  }

  std::span<const SingleMindedAgent> agents_;
  std::vector<int> current_;
  std::vector<int> best_;
  double best_welfare_ = 0.0;
};

}  // namespace

Bundle::Bundle(int universe_size) : universe_(universe_size) { check_universe(universe_size); }

Bundle::Bundle(int universe_size, std::initializer_list<int> items) : Bundle(universe_size) {
  for (int j : items) insert(j);
}

Bundle Bundle::from_items(int universe_size, std::span<const int> items) {
  Bundle b(universe_size);
  for (int j : items) b.insert(j);
  return b;
}

Bundle Bundle::from_mask(int universe_size, std::uint64_t mask) {
  Bundle b(universe_size);
  const std::uint64_t allowed =
      universe_size == 64 ? ~0ULL : ((1ULL << universe_size) - 1ULL);
  if ((mask & ~allowed) != 0)
    throw Error(ErrorCode::invalid_argument, "bundle mask has bits outside the item universe");
  b.mask_ = mask;
  return b;
}

Bundle Bundle::full(int universe_size) {
  return from_mask(universe_size,
                   universe_size == 64 ? ~0ULL : ((1ULL << universe_size) - 1ULL));
}

int Bundle::size() const noexcept { return std::popcount(mask_); }

bool Bundle::contains(int item) const {
  if (item < 0 || item >= universe_) return false;
  return (mask_ >> item) & 1ULL;
}

void Bundle::insert(int item) {
  if (item < 0 || item >= universe_)
    throw Error(ErrorCode::invalid_argument,
                "item " + std::to_string(item) + " outside universe of " +
                    std::to_string(universe_) + " items");
  mask_ |= 1ULL << item;
}

std::vector<int> Bundle::items() const {
  std::vector<int> out;
  for (std::uint64_t m = mask_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

LinearPrices::LinearPrices(int num_items) {
  check_universe(num_items);
  per_item_.assign(static_cast<std::size_t>(num_items), 0.0);
}

LinearPrices::LinearPrices(std::vector<double> per_item) : per_item_(std::move(per_item)) {
  check_universe(static_cast<int>(per_item_.size()));
  for (double p : per_item_)
    if (!(p >= 0.0) || !std::isfinite(p))
      throw Error(ErrorCode::invalid_argument, "item prices must be finite and nonnegative");
}

double LinearPrices::bundle_price(const Bundle& x) const {
  if (x.universe_size() != size())
    throw Error(ErrorCode::dimension_mismatch,
                "bundle universe " + std::to_string(x.universe_size()) +
                    " does not match " + std::to_string(size()) + " prices");
  double total = 0.0;
  for (std::uint64_t m = x.mask(); m != 0; m &= m - 1)
    total += per_item_[static_cast<std::size_t>(std::countr_zero(m))];
  return total;
}

double LinearPrices::total() const {
  return std::accumulate(per_item_.begin(), per_item_.end(), 0.0);
}

bool Allocation::feasible() const {
  std::uint64_t used = 0;
  for (const auto& b : assigned) {
    if ((b.mask() & used) != 0) return false;
    used |= b.mask();
  }
  return true;
}

double indirect_utility(const SingleMindedAgent& agent, const LinearPrices& prices) {
  return std::max(agent.value - prices.bundle_price(agent.bundle), 0.0);
}

double indirect_revenue(const LinearPrices& prices) { return prices.total(); }

double clearing_objective(std::span<const SingleMindedAgent> agents,
                          const LinearPrices& prices) {
  double total = indirect_revenue(prices);
  for (const auto& a : agents) total += indirect_utility(a, prices);
  return total;
}

double clearing_potential(std::span<const SingleMindedAgent> agents,
                          const LinearPrices& prices) {
  return std::exp(-clearing_objective(agents, prices));
}

EfficientOutcome efficient_allocation(std::span<const SingleMindedAgent> agents,
                                      int num_items, const ExactSearchLimits& limits) {
  check_universe(num_items);
  check_agents(agents, num_items);
  check_size(agents, limits);

  WinnerSearch search(agents);
  search.run();

  EfficientOutcome out;
  out.winners = search.best_winners();
  out.allocation.assigned.assign(agents.size(), Bundle(num_items));
  out.welfare = 0.0;
  for (int i : out.winners) {
    out.allocation.assigned[static_cast<std::size_t>(i)] = agents[static_cast<std::size_t>(i)].bundle;
    out.welfare += agents[static_cast<std::size_t>(i)].value;
  }
  return out;
}

ClearingCertificate clearing_check(std::span<const SingleMindedAgent> agents,
                                   const LinearPrices& prices,
                                   double indifference_tolerance,
                                   const ExactSearchLimits& limits) {
  const int m = prices.size();
  check_agents(agents, m);
  check_size(agents, limits);

  ClearingCertificate cert;
  cert.potential_value = clearing_objective(agents, prices);

  std::vector<int> indifferent;
  std::vector<char> wins(agents.size(), 0);
  std::uint64_t used = 0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const double surplus = agents[i].value - prices.bundle_price(agents[i].bundle);
    if (surplus > indifference_tolerance) {
      if ((agents[i].bundle.mask() & used) != 0) return cert;  // forced conflict
      used |= agents[i].bundle.mask();
      wins[i] = 1;
    } else if (surplus >= -indifference_tolerance) {
      indifferent.push_back(static_cast<int>(i));
    }
  }

  // Items priced at (numerically) zero may stay unsold without revenue loss.
  std::uint64_t required = 0;
  for (int j = 0; j < m; ++j)
    if (prices[j] > indifference_tolerance) required |= 1ULL << j;

  // Cover the remaining priced items with disjoint bundles of indifferent
  // agents; exact backtracking on the lowest uncovered item.
  std::vector<char> chosen(indifferent.size(), 0);
  auto cover = [&](auto&& self, std::uint64_t taken) -> bool {
    const std::uint64_t missing = required & ~taken;
    if (missing == 0) return true;
    const std::uint64_t item = missing & (~missing + 1);
    for (std::size_t k = 0; k < indifferent.size(); ++k) {
      if (chosen[k]) continue;
      const std::uint64_t b =
          agents[static_cast<std::size_t>(indifferent[k])].bundle.mask();
      if ((b & item) == 0 || (b & taken) != 0) continue;
      chosen[k] = 1;
      if (self(self, taken | b)) return true;
      chosen[k] = 0;
    }
    return false;
  };
  if (!cover(cover, used)) return cert;

  for (std::size_t k = 0; k < indifferent.size(); ++k)
    if (chosen[k]) wins[static_cast<std::size_t>(indifferent[k])] = 1;

  Allocation witness;
  witness.assigned.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i)
    witness.assigned.push_back(wins[i] ? agents[i].bundle : Bundle(m));
  cert.cleared = true;
  cert.witness = std::move(witness);
  return cert;
}

std::vector<double> vcg_payments(std::span<const SingleMindedAgent> agents, int num_items,
                                 const ExactSearchLimits& limits) {
  const EfficientOutcome full = efficient_allocation(agents, num_items, limits);
  std::vector<double> payments(agents.size(), 0.0);
  std::vector<SingleMindedAgent> others;
  others.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    others.clear();
    for (std::size_t j = 0; j < agents.size(); ++j)
      if (j != i) others.push_back(agents[j]);
    const double without_i = efficient_allocation(others, num_items, limits).welfare;
    const double others_at_full =
        full.welfare - agents[i].valuation(full.allocation.assigned[i]);
    payments[i] = std::max(0.0, without_i - others_at_full);
  }
  return payments;
}

}  // namespace bayesclear
