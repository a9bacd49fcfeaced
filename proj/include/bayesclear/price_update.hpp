#pragma once

// MAP item prices under Gaussian value beliefs.
//
// For each agent the Gaussian average of exp(-(w - theta(x_i))_+) splits into
// two log-concave pieces L0 (w below the bundle price) and L1 (w above it).
// The objective  -sum_j p_j + sum_i log(L0_i + L1_i)  is maximized over p >= 0
// by expectation maximization with the pieces as mixture components.

#include <span>
#include <vector>

#include "bayesclear/auction_core.hpp"
#include "bayesclear/knowledge_update.hpp"

namespace bayesclear {

struct PricePosteriorModel {
  int num_items = 0;
  std::vector<Bundle> bundles;
  std::vector<GaussianBelief> beliefs;

  void validate() const;
};

struct LikelihoodComponents {
  double log_l0 = 0.0;
  double log_l1 = 0.0;

  double l0() const;
  double l1() const;
  double log_total() const;
  // Posterior weight of the L1 component, L1 / (L0 + L1).
  double responsibility() const;
};

LikelihoodComponents likelihood_components(double mean, double stddev, double bundle_price);

double map_objective(const PricePosteriorModel& model, const LinearPrices& prices);
std::vector<double> map_objective_gradient(const PricePosteriorModel& model,
                                           const LinearPrices& prices);

// Euclidean norm of the gradient projected onto the feasible directions of
// the nonnegative orthant.
double projected_gradient_norm(std::span<const double> gradient, const LinearPrices& prices);

// EM lower bound maximized in the M-step, for fixed responsibilities.
double surrogate_objective(const PricePosteriorModel& model,
                           std::span<const double> responsibilities,
                           const LinearPrices& prices);
std::vector<double> surrogate_gradient(const PricePosteriorModel& model,
                                       std::span<const double> responsibilities,
                                       const LinearPrices& prices);

struct EmConfig {
  double objective_tolerance = 1e-6;
  double gradient_tolerance = 1e-6;
  int max_iterations = 1000;
  double mstep_gradient_tolerance = 1e-8;
  int mstep_max_iterations = 500;
  // Adaptive over-relaxation: each EM step is stretched by a factor that is
  // multiplied by this growth on success and reset to 1 on failure. The
  // stretched point is kept only if the objective is at least as high as at
  // the plain EM point. Values <= 1 give plain EM.
  double overrelaxation_growth = 2.0;
};

struct MStepResult {
  LinearPrices prices;
  int iterations = 0;
  bool converged = false;  // projected gradient below tolerance
  bool failed = false;     // non-finite objective; prices are the input
};

// Projected Newton ascent with Armijo backtracking on the concave surrogate.
MStepResult maximize_surrogate(const PricePosteriorModel& model,
                               std::span<const double> responsibilities,
                               const LinearPrices& init, const EmConfig& config);

struct EmIteration {
  LinearPrices prices;
  std::vector<double> responsibilities;
  double objective = 0.0;
  int mstep_iterations = 0;
};

enum class EmStatus { converged, iteration_cap, mstep_failure };

struct EmResult {
  LinearPrices prices;
  std::vector<EmIteration> trace;  // trace[0] is the initial point
  EmStatus status = EmStatus::converged;
  double gradient_norm = 0.0;
};

std::vector<double> responsibilities(const PricePosteriorModel& model,
                                     const LinearPrices& prices);

EmResult em_price_update(const PricePosteriorModel& model, const LinearPrices& init,
                         const EmConfig& config = {});

}  // namespace bayesclear
