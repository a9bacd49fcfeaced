#pragma once

// Domain types for single-minded combinatorial auctions and the exact
// clearing mathematics used as ground truth everywhere else: indirect
// utility/revenue, the dual clearing objective, winner determination,
// clearing verification and VCG payments.

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace bayesclear {

inline constexpr int kMaxItems = 64;

// A subset of the items {0, ..., m-1}, stored as a bit mask.
class Bundle {
 public:
  Bundle() = default;
  explicit Bundle(int universe_size);
  Bundle(int universe_size, std::initializer_list<int> items);
  static Bundle from_items(int universe_size, std::span<const int> items);
  static Bundle from_mask(int universe_size, std::uint64_t mask);
  static Bundle full(int universe_size);

  int universe_size() const noexcept { return universe_; }
  std::uint64_t mask() const noexcept { return mask_; }
  bool empty() const noexcept { return mask_ == 0; }
  int size() const noexcept;
  bool contains(int item) const;
  void insert(int item);
  std::vector<int> items() const;

  bool intersects(const Bundle& other) const noexcept {
    return (mask_ & other.mask_) != 0;
  }
  bool subset_of(const Bundle& other) const noexcept {
    return (mask_ & ~other.mask_) == 0;
  }

  friend bool operator==(const Bundle&, const Bundle&) = default;

 private:
  std::uint64_t mask_ = 0;
  int universe_ = 0;
};

struct SingleMindedAgent {
  Bundle bundle;
  double value = 0.0;

  // v_i(x) = w_i if x contains the desired bundle, else 0.
  double valuation(const Bundle& x) const {
    return bundle.subset_of(x) ? value : 0.0;
  }
};

// Nonnegative item prices; the bundle price is the sum over its items.
class LinearPrices {
 public:
  LinearPrices() = default;
  explicit LinearPrices(int num_items);
  explicit LinearPrices(std::vector<double> per_item);

  int size() const noexcept { return static_cast<int>(per_item_.size()); }
  double operator[](int j) const { return per_item_[static_cast<std::size_t>(j)]; }
  std::span<const double> values() const noexcept { return per_item_; }
  double bundle_price(const Bundle& x) const;
  double total() const;

  friend bool operator==(const LinearPrices&, const LinearPrices&) = default;

 private:
  std::vector<double> per_item_;
};

struct Allocation {
  std::vector<Bundle> assigned;

  bool feasible() const;
};

struct ClearingCertificate {
  bool cleared = false;
  std::optional<Allocation> witness;
  double potential_value = 0.0;
};

struct ExactSearchLimits {
  int max_agents = 32;
};

inline constexpr double kIndifferenceTolerance = 1e-6;

double indirect_utility(const SingleMindedAgent& agent, const LinearPrices& prices);
double indirect_revenue(const LinearPrices& prices);
double clearing_objective(std::span<const SingleMindedAgent> agents,
                          const LinearPrices& prices);
// exp(-clearing_objective); underflows to 0 for objectives beyond ~745.
double clearing_potential(std::span<const SingleMindedAgent> agents,
                          const LinearPrices& prices);

struct EfficientOutcome {
  Allocation allocation;
  double welfare = 0.0;
  std::vector<int> winners;  // ascending agent indices
};

// Exact winner determination by depth-first branch and bound. Among optimal
// allocations the lexicographically smallest winner set is returned.
EfficientOutcome efficient_allocation(std::span<const SingleMindedAgent> agents,
                                      int num_items,
                                      const ExactSearchLimits& limits = {});

// Decides whether the prices support some feasible allocation in which every
// agent gets a utility-maximizing bundle and every positively priced item is
// sold. Indifferent agents (|w - cost| <= tolerance) are searched exactly.
ClearingCertificate clearing_check(std::span<const SingleMindedAgent> agents,
                                   const LinearPrices& prices,
                                   double indifference_tolerance = kIndifferenceTolerance,
                                   const ExactSearchLimits& limits = {});

std::vector<double> vcg_payments(std::span<const SingleMindedAgent> agents,
                                 int num_items,
                                 const ExactSearchLimits& limits = {});

}  // namespace bayesclear
