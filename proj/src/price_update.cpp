#include "bayesclear/price_update.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "bayesclear/error.hpp"
#include "bayesclear/normal.hpp"

namespace bayesclear {

namespace {

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  if (hi == -INFINITY) return -INFINITY;
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Value, first and second derivative in theta of one weighted log-likelihood
// piece.
struct Piece {
  double value = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
};

Piece log_l1_piece(double mean, double sd, double theta) {
  const double a = (mean - theta) / sd - sd;
  return {normal::log_cdf(a) + theta - mean + 0.5 * sd * sd,
          1.0 - normal::inverse_mills(a) / sd,
          -normal::inverse_mills_curvature(a) / (sd * sd)};
}

Piece log_l0_piece(double mean, double sd, double theta) {
  const double z = (theta - mean) / sd;
  return {normal::log_cdf(z), normal::inverse_mills(z) / sd,
          -normal::inverse_mills_curvature(z) / (sd * sd)};
}

struct SurrogateEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

// Surrogate value, gradient and (optionally) Hessian. Each agent enters only
// through theta_i = p . x_i, so derivatives are rank-one updates on x_i.
SurrogateEval evaluate_surrogate(const PricePosteriorModel& model,
                                 std::span<const double> gamma, const LinearPrices& prices,
                                 bool with_hessian) {
  const int m = model.num_items;
  SurrogateEval out;
  out.value = -prices.total();
  out.gradient = Eigen::VectorXd::Constant(m, -1.0);
  if (with_hessian) out.hessian = Eigen::MatrixXd::Zero(m, m);

  std::vector<int> items;
  for (std::size_t i = 0; i < model.bundles.size(); ++i) {
    const double sd = std::sqrt(model.beliefs[i].variance);
    const double mean = model.beliefs[i].mean;
    const double theta = prices.bundle_price(model.bundles[i]);
    const double g = gamma[i];
    Piece total;
    if (g > 0.0) {
      const Piece p1 = log_l1_piece(mean, sd, theta);
      total.value += g * p1.value;
      total.slope += g * p1.slope;
      total.curvature += g * p1.curvature;
    }
    if (g < 1.0) {
      const Piece p0 = log_l0_piece(mean, sd, theta);
      total.value += (1.0 - g) * p0.value;
      total.slope += (1.0 - g) * p0.slope;
      total.curvature += (1.0 - g) * p0.curvature;
    }
    out.value += total.value;
    items = model.bundles[i].items();
    for (int j : items) out.gradient[j] += total.slope;
    if (with_hessian)
      for (int j : items)
        for (int k : items) out.hessian(j, k) += total.curvature;
  }
  return out;
}

double projected_norm(const Eigen::VectorXd& g, std::span<const double> p) {
  double sq = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    const double d = p[static_cast<std::size_t>(j)] > 0.0 ? g[j] : std::max(g[j], 0.0);
    sq += d * d;
  }
  return std::sqrt(sq);
}

LinearPrices project_step(std::span<const double> p, const Eigen::VectorXd& dir, double step) {
  std::vector<double> next(p.size());
  for (std::size_t j = 0; j < p.size(); ++j)
    next[j] = std::max(0.0, p[j] + step * dir[static_cast<Eigen::Index>(j)]);
  return LinearPrices(std::move(next));
}

void check_prices(const PricePosteriorModel& model, const LinearPrices& prices) {
  if (prices.size() != model.num_items)
    throw Error(ErrorCode::dimension_mismatch,
                "price vector has " + std::to_string(prices.size()) + " entries, model has " +
                    std::to_string(model.num_items) + " items");
}

void check_gamma(const PricePosteriorModel& model, std::span<const double> gamma) {
  if (gamma.size() != model.bundles.size())
    throw Error(ErrorCode::dimension_mismatch, "one responsibility per agent required");
}

}  // namespace

void PricePosteriorModel::validate() const {
  if (num_items < 0 || num_items > kMaxItems)
    throw Error(ErrorCode::size_limit, "item count outside [0, 64]");
  if (bundles.size() != beliefs.size())
    throw Error(ErrorCode::dimension_mismatch, "one belief per bundle required");
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (bundles[i].universe_size() != num_items)
      throw Error(ErrorCode::dimension_mismatch,
                  "bundle " + std::to_string(i) + " has the wrong item universe");
    if (!(beliefs[i].variance > 0.0) || !std::isfinite(beliefs[i].mean))
      throw Error(ErrorCode::invalid_argument,
                  "belief " + std::to_string(i) + " needs finite mean and positive variance");
  }
}

double LikelihoodComponents::l0() const { return std::exp(log_l0); }
double LikelihoodComponents::l1() const { return std::exp(log_l1); }
double LikelihoodComponents::log_total() const { return log_add_exp(log_l0, log_l1); }
double LikelihoodComponents::responsibility() const {
  return std::exp(log_l1 - log_total());
}

LikelihoodComponents likelihood_components(double mean, double stddev, double bundle_price) {
  if (!(stddev > 0.0))
    throw Error(ErrorCode::invalid_argument, "belief standard deviation must be positive");
  return {log_l0_piece(mean, stddev, bundle_price).value,
          log_l1_piece(mean, stddev, bundle_price).value};
}

std::vector<double> responsibilities(const PricePosteriorModel& model,
                                     const LinearPrices& prices) {
  check_prices(model, prices);
  std::vector<double> gamma(model.bundles.size());
  for (std::size_t i = 0; i < gamma.size(); ++i)
    gamma[i] = likelihood_components(model.beliefs[i].mean,
                                     std::sqrt(model.beliefs[i].variance),
                                     prices.bundle_price(model.bundles[i]))
                   .responsibility();
  return gamma;
}

double map_objective(const PricePosteriorModel& model, const LinearPrices& prices) {
  check_prices(model, prices);
  double total = -prices.total();
  for (std::size_t i = 0; i < model.bundles.size(); ++i)
    total += likelihood_components(model.beliefs[i].mean, std::sqrt(model.beliefs[i].variance),
                                   prices.bundle_price(model.bundles[i]))
                 .log_total();
  return total;
}

std::vector<double> map_objective_gradient(const PricePosteriorModel& model,
                                           const LinearPrices& prices) {
  // At fixed responsibilities gamma(p) the surrogate gradient equals the true
  // gradient: d log(L0 + L1) = gamma d log L1 + (1 - gamma) d log L0.
  const std::vector<double> gamma = responsibilities(model, prices);
  return surrogate_gradient(model, gamma, prices);
}

double projected_gradient_norm(std::span<const double> gradient, const LinearPrices& prices) {
  if (static_cast<int>(gradient.size()) != prices.size())
    throw Error(ErrorCode::dimension_mismatch, "gradient and prices differ in length");
  Eigen::VectorXd g(static_cast<Eigen::Index>(gradient.size()));
  for (std::size_t j = 0; j < gradient.size(); ++j) g[static_cast<Eigen::Index>(j)] = gradient[j];
  return projected_norm(g, prices.values());
}

double surrogate_objective(const PricePosteriorModel& model,
                           std::span<const double> gamma, const LinearPrices& prices) {
  check_prices(model, prices);
  check_gamma(model, gamma);
  return evaluate_surrogate(model, gamma, prices, false).value;
}

std::vector<double> surrogate_gradient(const PricePosteriorModel& model,
                                       std::span<const double> gamma,
                                       const LinearPrices& prices) {
  check_prices(model, prices);
  check_gamma(model, gamma);
  const Eigen::VectorXd g = evaluate_surrogate(model, gamma, prices, false).gradient;
  return {g.data(), g.data() + g.size()};
}

MStepResult maximize_surrogate(const PricePosteriorModel& model,
                               std::span<const double> gamma, const LinearPrices& init,
                               const EmConfig& config) {
  check_prices(model, init);
  check_gamma(model, gamma);
  const int m = model.num_items;

  // Newton steps are capped at the scale of the beliefs so that flat
  // directions of the surrogate cannot throw prices far away in one step.
  double step_cap = 10.0;
  for (const auto& b : model.beliefs)
    step_cap = std::max(step_cap, 2.0 * (std::abs(b.mean) + 10.0 * std::sqrt(b.variance)));

  MStepResult out{init, 0, false, false};
  SurrogateEval cur = evaluate_surrogate(model, gamma, out.prices, true);
  if (!std::isfinite(cur.value)) {
    out.failed = true;
    return out;
  }

  for (; out.iterations < config.mstep_max_iterations; ++out.iterations) {
    const auto p = out.prices.values();
    const double pg = projected_norm(cur.gradient, p);
    if (pg <= config.mstep_gradient_tolerance) {
      out.converged = true;
      return out;
    }

    // Bertsekas-style projected Newton: coordinates pinned at zero with an
    // outward gradient move by a gradient step; the rest by a Newton step.
    const double eps = std::min(1e-8, pg);
    std::vector<int> free_set;
    Eigen::VectorXd dir = cur.gradient;
    for (int j = 0; j < m; ++j)
      if (!(p[static_cast<std::size_t>(j)] <= eps && cur.gradient[j] < 0.0)) free_set.push_back(j);
    if (!free_set.empty()) {
      const auto nf = static_cast<Eigen::Index>(free_set.size());
      Eigen::MatrixXd neg_h(nf, nf);
      Eigen::VectorXd g_free(nf);
      double diag_scale = 0.0;
      for (Eigen::Index a = 0; a < nf; ++a) {
        g_free[a] = cur.gradient[free_set[static_cast<std::size_t>(a)]];
        for (Eigen::Index b = 0; b < nf; ++b)
          neg_h(a, b) = -cur.hessian(free_set[static_cast<std::size_t>(a)],
                                     free_set[static_cast<std::size_t>(b)]);
        diag_scale = std::max(diag_scale, neg_h(a, a));
      }
      neg_h.diagonal().array() += 1e-10 * (1.0 + diag_scale);
      const Eigen::VectorXd newton = neg_h.ldlt().solve(g_free);
      if (newton.allFinite() && newton.dot(g_free) > 0.0)
        for (Eigen::Index a = 0; a < nf; ++a) dir[free_set[static_cast<std::size_t>(a)]] = newton[a];
    }
    const double dir_max = dir.cwiseAbs().maxCoeff();
    if (dir_max > step_cap) dir *= step_cap / dir_max;

    auto line_search = [&](const Eigen::VectorXd& d, LinearPrices& next, SurrogateEval& eval) {
      double step = 1.0;
      for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
        next = project_step(p, d, step);
        if (next == out.prices) return false;
        double predicted = 0.0;
        for (int j = 0; j < m; ++j)
          predicted += cur.gradient[j] * (next[j] - p[static_cast<std::size_t>(j)]);
        eval = evaluate_surrogate(model, gamma, next, true);
        if (std::isfinite(eval.value) && eval.value >= cur.value + 1e-4 * predicted &&
            eval.value >= cur.value)
          return true;
      }
      return false;
    };

    LinearPrices next;
    SurrogateEval eval;
    bool moved = line_search(dir, next, eval);
    if (!moved) {
      // Fall back to a plain projected gradient direction.
      Eigen::VectorXd grad = cur.gradient;
      const double g_max = grad.cwiseAbs().maxCoeff();
      if (g_max > step_cap) grad *= step_cap / g_max;
      moved = line_search(grad, next, eval);
    }
    if (!moved) return out;  // stalled at machine precision
    out.prices = std::move(next);
    cur = std::move(eval);
  }
  out.converged = projected_norm(cur.gradient, out.prices.values()) <=
                  config.mstep_gradient_tolerance;
  return out;
}

EmResult em_price_update(const PricePosteriorModel& model, const LinearPrices& init,
                         const EmConfig& config) {
  model.validate();
  check_prices(model, init);

  EmResult out;
  out.prices = init;
  std::vector<double> gamma = responsibilities(model, init);
  double objective = map_objective(model, init);
  out.trace.push_back({init, gamma, objective, 0});
  out.status = EmStatus::iteration_cap;

  double stretch = 1.0;
  for (int it = 1; it <= config.max_iterations; ++it) {
    const MStepResult mstep = maximize_surrogate(model, gamma, out.prices, config);
    if (mstep.failed) {
      out.status = EmStatus::mstep_failure;
      break;
    }
    LinearPrices candidate = mstep.prices;
    double next_objective = map_objective(model, candidate);
    if (config.overrelaxation_growth > 1.0) {
      const auto p = out.prices.values();
      Eigen::VectorXd step(model.num_items);
      for (int j = 0; j < model.num_items; ++j)
        step[j] = mstep.prices[j] - p[static_cast<std::size_t>(j)];
      const double trial = stretch * config.overrelaxation_growth;
      LinearPrices stretched = project_step(p, step, trial);
      const double value = map_objective(model, stretched);
      if (std::isfinite(value) && value >= next_objective) {
        candidate = std::move(stretched);
        next_objective = value;
        stretch = trial;
      } else {
        stretch = 1.0;
      }
    }
    if (!(next_objective >= objective)) {
      // No representable ascent left; keep the current point.
      out.status = EmStatus::converged;
      break;
    }
    const double improvement = next_objective - objective;
    out.prices = std::move(candidate);
    objective = next_objective;
    gamma = responsibilities(model, out.prices);
    out.trace.push_back({out.prices, gamma, objective, mstep.iterations});

    const double grad = projected_gradient_norm(map_objective_gradient(model, out.prices),
                                                out.prices);
    if (improvement < config.objective_tolerance && grad <= config.gradient_tolerance) {
      out.status = EmStatus::converged;
      break;
    }
  }
  out.gradient_norm =
      projected_gradient_norm(map_objective_gradient(model, out.prices), out.prices);
  return out;
}

}  // namespace bayesclear
