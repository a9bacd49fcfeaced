#include "bayesclear/instances.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cerrno>
#include <cstdlib>
#include <json.hpp>
#include <numbers>
#include <numeric>
#include <sstream>

#include "bayesclear/error.hpp"

namespace bayesclear {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::parse, "line " + std::to_string(line) + ": " + what);
}

bool parse_int(const std::string& token, long& out) {
  char* end = nullptr;
  errno = 0;
  out = std::strtol(token.c_str(), &end, 10);
  return errno == 0 && end != token.c_str() && *end == '\0';
}

bool parse_double(const std::string& token, double& out) {
  char* end = nullptr;
  errno = 0;
  out = std::strtod(token.c_str(), &end);
  return errno == 0 && end != token.c_str() && *end == '\0' && std::isfinite(out);
}

ordered_json parse_json(std::string_view text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("invalid JSON: ") + e.what());
  }
}

template <typename T>
T json_get(const ordered_json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::parse, std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("bad value for '") + key + "': " + e.what());
  }
}

double lognormal(Rng& rng, double sigma) {
  return std::exp(std::normal_distribution<double>(0.0, sigma)(rng));
}

int draw_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Bundle paths_bundle(int m, Rng& rng) {
  // Shorter paths are more common: P(L) proportional to 1/L.
  std::discrete_distribution<int> length_draw({1.0, 0.5, 1.0 / 3.0, 0.25});
  const int len = std::min(m, 1 + length_draw(rng));
  const int start = draw_int(rng, 0, m - len);
  Bundle b(m);
  for (int j = start; j < start + len; ++j) b.insert(j);
  return b;
}

Bundle regions_bundle(int m, Rng& rng) {
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
  const int len = std::min(m, draw_int(rng, 1, 4));
  Bundle b(m);
  b.insert(draw_int(rng, 0, m - 1));
  while (b.size() < len) {
    std::vector<int> frontier;
    for (int cell : b.items()) {
      const int r = cell / cols, c = cell % cols;
      const int candidates[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& rc : candidates) {
        if (rc[0] < 0 || rc[1] < 0 || rc[1] >= cols) continue;
        const int k = rc[0] * cols + rc[1];
        if (k < m && !b.contains(k)) frontier.push_back(k);
      }
    }
    if (frontier.empty()) break;
    std::sort(frontier.begin(), frontier.end());
    frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
    b.insert(frontier[static_cast<std::size_t>(
        draw_int(rng, 0, static_cast<int>(frontier.size()) - 1))]);
  }
  return b;
}

Bundle arbitrary_bundle(int m, Rng& rng) {
  const int len = std::min(m, draw_int(rng, 1, 4));
  std::vector<int> items(static_cast<std::size_t>(m));
  std::iota(items.begin(), items.end(), 0);
  std::shuffle(items.begin(), items.end(), rng);
  items.resize(static_cast<std::size_t>(len));
  return Bundle::from_items(m, items);
}

}  // namespace

void Instance::validate() const {
  if (num_items < 0 || num_items > kMaxItems)
    throw Error(ErrorCode::size_limit, "instance item count outside [0, 64]");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].bundle.universe_size() != num_items)
      throw Error(ErrorCode::dimension_mismatch,
                  "agent " + std::to_string(i) + " bundle has the wrong item universe");
    if (!(agents[i].value >= 0.0))
      throw Error(ErrorCode::invalid_argument,
                  "agent " + std::to_string(i) + " has a negative value");
  }
  if (priors && priors->size() != agents.size())
    throw Error(ErrorCode::dimension_mismatch, "instance priors must list one entry per agent");
}

std::string instance_to_json(const Instance& instance) {
  instance.validate();
  ordered_json j;
  j["num_items"] = instance.num_items;
  j["agents"] = ordered_json::array();
  for (const auto& a : instance.agents) {
    ordered_json agent;
    agent["bundle"] = a.bundle.items();
    agent["value"] = a.value;
    j["agents"].push_back(std::move(agent));
  }
  j["seed"] = instance.seed;
  if (!instance.id.empty()) j["id"] = instance.id;
  if (instance.priors) {
    j["priors"] = ordered_json::array();
    for (const auto& p : *instance.priors)
      j["priors"].push_back(ordered_json{{"mean", p.mean}, {"variance", p.variance}});
  }
  return j.dump(2) + "\n";
}

Instance instance_from_json(std::string_view text) {
  const ordered_json j = parse_json(text);
  Instance out;
  out.num_items = json_get<int>(j, "num_items");
  if (out.num_items < 0 || out.num_items > kMaxItems)
    throw Error(ErrorCode::parse, "num_items outside [0, 64]");
  const auto agents = json_get<ordered_json>(j, "agents");
  if (!agents.is_array()) throw Error(ErrorCode::parse, "'agents' must be an array");
  for (const auto& a : agents) {
    const auto items = json_get<std::vector<int>>(a, "bundle");
    for (int item : items)
      if (item < 0 || item >= out.num_items)
        throw Error(ErrorCode::parse, "bundle item " + std::to_string(item) + " out of range");
    out.agents.push_back({Bundle::from_items(out.num_items, items), json_get<double>(a, "value")});
  }
  out.seed = json_get<std::uint64_t>(j, "seed");
  if (j.contains("id")) out.id = json_get<std::string>(j, "id");
  if (j.contains("priors")) {
    PriorSpec priors;
    for (const auto& p : j.at("priors"))
      priors.push_back({json_get<double>(p, "mean"), json_get<double>(p, "variance")});
    out.priors = std::move(priors);
  }
  try {
    out.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::parse, e.what());
  }
  return out;
}

PriorSpec LlgScenario::priors(double global_mean, double global_variance) const {
  return {{4.0, 0.01}, {4.0, 0.01}, {global_mean, global_variance}};
}

LlgScenario build_llg() {
  LlgScenario s;
  s.instance.id = "llg";
  s.instance.num_items = 2;
  s.instance.agents = {{Bundle(2, {0}), 4.0}, {Bundle(2, {1}), 4.0}, {Bundle(2, {0, 1}), 10.0}};
  return s;
}

std::vector<CorpusRecord> BidCorpus::records_in(Split split) const {
  std::vector<CorpusRecord> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(r);
  return out;
}

BidCorpus parse_cats(std::string_view text) {
  BidCorpus corpus;
  corpus.origin = CorpusOrigin::parsed;
  std::optional<long> goods, bids;
  long dummy = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '%') continue;

    std::istringstream tokens(line);
    std::vector<std::string> tok;
    for (std::string t; tokens >> t;) tok.push_back(t);

    if (tok[0] == "goods" || tok[0] == "bids" || tok[0] == "dummy") {
      long n = 0;
      if (tok.size() != 2 || !parse_int(tok[1], n) || n < 0)
        parse_error(line_no, "malformed header '" + line + "'");
      if (tok[0] == "goods") {
        if (n > kMaxItems) parse_error(line_no, "more than 64 goods are not supported");
        goods = n;
        corpus.num_items = static_cast<int>(n);
      } else if (tok[0] == "bids") {
        bids = n;
      } else {
        dummy = n;
      }
      continue;
    }

    if (!goods || !bids) parse_error(line_no, "bid line before 'goods' and 'bids' headers");
    if (tok.size() < 3 || tok.back() != "#")
      parse_error(line_no, "bid line must read '<id> <value> <goods...> #'");
    long id = 0;
    if (!parse_int(tok[0], id)) parse_error(line_no, "non-numeric bid id '" + tok[0] + "'");
    double value = 0.0;
    if (!parse_double(tok[1], value) || value < 0.0)
      parse_error(line_no, "non-numeric or negative value '" + tok[1] + "'");
    Bundle bundle(corpus.num_items);
    for (std::size_t k = 2; k + 1 < tok.size(); ++k) {
      long g = 0;
      if (!parse_int(tok[k], g)) parse_error(line_no, "non-numeric good '" + tok[k] + "'");
      if (g < 0 || g >= *goods + dummy)
        parse_error(line_no, "good index " + tok[k] + " out of range");
      if (g < *goods) bundle.insert(static_cast<int>(g));
    }
    corpus.records.push_back({bundle, value, Split::test});
  }
  if (!goods || !bids) throw Error(ErrorCode::parse, "missing 'goods' or 'bids' header");
  return corpus;
}

std::string write_cats(const BidCorpus& corpus) {
  std::ostringstream out;
  out.precision(17);
  out << "% bid corpus: " << corpus.records.size() << " single-minded bids\n";
  out << "goods " << corpus.num_items << "\n";
  out << "bids " << corpus.records.size() << "\n";
  out << "dummy 0\n\n";
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    out << i << '\t' << corpus.records[i].value;
    for (int j : corpus.records[i].bundle.items()) out << '\t' << j;
    out << "\t#\n";
  }
  return out.str();
}

void split_corpus(BidCorpus& corpus, std::size_t train_count, Rng& rng) {
  if (train_count > corpus.records.size())
    throw Error(ErrorCode::precondition, "training split larger than the corpus");
  std::vector<std::size_t> order(corpus.records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < order.size(); ++k)
    corpus.records[order[k]].split = k < train_count ? Split::train : Split::test;
}

Instance sample_instance(const BidCorpus& corpus, int num_agents, Rng& rng) {
  std::vector<const CorpusRecord*> pool;
  for (const auto& r : corpus.records)
    if (r.split == Split::test) pool.push_back(&r);
  if (num_agents < 0 || static_cast<std::size_t>(num_agents) > pool.size())
    throw Error(ErrorCode::precondition,
                "test split has " + std::to_string(pool.size()) + " records, need " +
                    std::to_string(num_agents));
  // Partial Fisher-Yates: the first n slots are a uniform ordered sample.
  for (std::size_t k = 0; k < static_cast<std::size_t>(num_agents); ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  Instance out;
  out.num_items = corpus.num_items;
  for (int k = 0; k < num_agents; ++k)
    out.agents.push_back({pool[static_cast<std::size_t>(k)]->bundle,
                          pool[static_cast<std::size_t>(k)]->value});
  return out;
}

double linear_prior_log_evidence(std::span<const CorpusRecord> training, int num_items,
                                 double signal_variance, double noise_variance) {
  const auto m = static_cast<Eigen::Index>(num_items);
  const double n = static_cast<double>(training.size());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(m);
  double yty = 0.0;
  for (const auto& r : training) {
    const auto items = r.bundle.items();
    for (int a : items) {
      xty[a] += r.value;
      for (int b : items) gram(a, b) += 1.0;
    }
    yty += r.value * r.value;
  }
  const double alpha = 1.0 / signal_variance, beta = 1.0 / noise_variance;
  Eigen::MatrixXd precision = beta * gram;
  precision.diagonal().array() += alpha + 1e-8;
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  const Eigen::VectorXd mean = beta * llt.solve(xty);
  const double residual = yty - 2.0 * mean.dot(xty) + mean.dot(gram * mean);
  const double energy = 0.5 * beta * std::max(residual, 0.0) + 0.5 * alpha * mean.squaredNorm();
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return 0.5 * static_cast<double>(m) * std::log(alpha) + 0.5 * n * std::log(beta) - energy -
         0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

LinearPriorModel fit_linear_prior(const BidCorpus& corpus) {
  const auto train = corpus.records_in(Split::train);
  return fit_linear_prior(train, corpus.num_items);
}

LinearPriorModel fit_linear_prior(std::span<const CorpusRecord> training, int num_items) {
  if (training.empty())
    throw Error(ErrorCode::precondition, "prior fitting needs at least one training record");
  if (num_items < 0 || num_items > kMaxItems)
    throw Error(ErrorCode::size_limit, "item count outside [0, 64]");
  for (const auto& r : training)
    if (r.bundle.universe_size() != num_items)
      throw Error(ErrorCode::dimension_mismatch, "training bundle has the wrong item universe");

  LinearPriorModel best;
  best.num_items = num_items;
  best.log_marginal_likelihood = -INFINITY;
  for (int ks = -2; ks <= 3; ++ks) {
    for (int kn = -2; kn <= 3; ++kn) {
      const double s2 = std::pow(10.0, ks), n2 = std::pow(10.0, kn);
      const double evidence = linear_prior_log_evidence(training, num_items, s2, n2);
      if (evidence > best.log_marginal_likelihood) {
        best.log_marginal_likelihood = evidence;
        best.signal_variance = s2;
        best.noise_variance = n2;
      }
    }
  }

  const auto m = static_cast<Eigen::Index>(num_items);
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(m);
  for (const auto& r : training) {
    const auto items = r.bundle.items();
    for (int a : items) {
      xty[a] += r.value;
      for (int b : items) precision(a, b) += 1.0 / best.noise_variance;
    }
  }
  precision.diagonal().array() += 1.0 / best.signal_variance + 1e-8;
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(m, m));
  const Eigen::VectorXd mean = llt.solve(xty) / best.noise_variance;
  best.weight_mean.assign(mean.data(), mean.data() + m);
  best.weight_covariance.resize(static_cast<std::size_t>(m * m));
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      best.weight_covariance[static_cast<std::size_t>(a * m + b)] = 0.5 * (cov(a, b) + cov(b, a));
  return best;
}

ValuePrior predict_agent_prior(const LinearPriorModel& model, const Bundle& bundle,
                               double variance_floor) {
  if (bundle.universe_size() != model.num_items)
    throw Error(ErrorCode::dimension_mismatch, "bundle universe does not match the prior model");
  const auto items = bundle.items();
  const auto m = static_cast<std::size_t>(model.num_items);
  ValuePrior out;
  for (int a : items) out.mean += model.weight_mean[static_cast<std::size_t>(a)];
  double var = model.noise_variance;
  for (int a : items)
    for (int b : items)
      var += model.weight_covariance[static_cast<std::size_t>(a) * m + static_cast<std::size_t>(b)];
  out.variance = std::max(var, variance_floor);
  return out;
}

std::string prior_model_to_json(const LinearPriorModel& model) {
  ordered_json j;
  j["num_items"] = model.num_items;
  j["signal_variance"] = model.signal_variance;
  j["noise_variance"] = model.noise_variance;
  j["log_marginal_likelihood"] = model.log_marginal_likelihood;
  j["weight_mean"] = model.weight_mean;
  ordered_json cov = ordered_json::array();
  const auto m = static_cast<std::size_t>(model.num_items);
  for (std::size_t a = 0; a < m; ++a)
    cov.push_back(std::vector<double>(model.weight_covariance.begin() + static_cast<long>(a * m),
                                      model.weight_covariance.begin() + static_cast<long>((a + 1) * m)));
  j["weight_covariance"] = std::move(cov);
  return j.dump(2) + "\n";
}

LinearPriorModel prior_model_from_json(std::string_view text) {
  const ordered_json j = parse_json(text);
  LinearPriorModel model;
  model.num_items = json_get<int>(j, "num_items");
  model.signal_variance = json_get<double>(j, "signal_variance");
  model.noise_variance = json_get<double>(j, "noise_variance");
  model.log_marginal_likelihood = json_get<double>(j, "log_marginal_likelihood");
  model.weight_mean = json_get<std::vector<double>>(j, "weight_mean");
  const auto rows = json_get<std::vector<std::vector<double>>>(j, "weight_covariance");
  const auto m = static_cast<std::size_t>(model.num_items);
  if (model.num_items < 0 || model.num_items > kMaxItems || model.weight_mean.size() != m ||
      rows.size() != m)
    throw Error(ErrorCode::parse, "prior model dimensions are inconsistent");
  for (const auto& row : rows) {
    if (row.size() != m) throw Error(ErrorCode::parse, "covariance must be square");
    model.weight_covariance.insert(model.weight_covariance.end(), row.begin(), row.end());
  }
  return model;
}

CorpusStyle parse_corpus_style(std::string_view name) {
  if (name == "paths") return CorpusStyle::paths;
  if (name == "regions") return CorpusStyle::regions;
  if (name == "arbitrary") return CorpusStyle::arbitrary;
  if (name == "scheduling") return CorpusStyle::scheduling;
  throw Error(ErrorCode::invalid_argument, "unknown corpus style '" + std::string(name) + "'");
}

std::string_view corpus_style_name(CorpusStyle style) {
  switch (style) {
    case CorpusStyle::paths: return "paths";
    case CorpusStyle::regions: return "regions";
    case CorpusStyle::arbitrary: return "arbitrary";
    case CorpusStyle::scheduling: return "scheduling";
  }
  return "unknown";
}

BidCorpus generate_synthetic_corpus(CorpusStyle style, int num_items, int count, Rng& rng) {
  if (num_items < 2 || num_items > kMaxItems)
    throw Error(ErrorCode::invalid_argument, "synthetic corpora need 2 to 64 items");
  if (count < 0) throw Error(ErrorCode::invalid_argument, "record count must be nonnegative");
  BidCorpus corpus;
  corpus.num_items = num_items;
  corpus.origin = CorpusOrigin::synthetic;

  std::uniform_real_distribution<double> base_draw(1.0, 3.0);
  std::vector<double> base(static_cast<std::size_t>(num_items));
  for (auto& u : base) u = base_draw(rng);

  for (int k = 0; k < count; ++k) {
    Bundle bundle;
    double complementarity = 0.15, noise = 0.15, scale = 1.0;
    switch (style) {
      case CorpusStyle::paths:
        bundle = paths_bundle(num_items, rng);
        break;
      case CorpusStyle::regions:
        bundle = regions_bundle(num_items, rng);
        break;
      case CorpusStyle::arbitrary:
        bundle = arbitrary_bundle(num_items, rng);
        complementarity = 0.25;
        noise = 0.30;
        break;
      case CorpusStyle::scheduling: {
        const int len = std::min(num_items, draw_int(rng, 1, 3));
        const int deadline = draw_int(rng, len - 1, num_items - 1);
        const int start = draw_int(rng, 0, deadline - len + 1);
        bundle = Bundle(num_items);
        for (int j = start; j < start + len; ++j) bundle.insert(j);
        complementarity = 0.10;
        scale = 1.0 + 0.5 * (num_items - 1 - deadline) / static_cast<double>(num_items - 1);
        break;
      }
    }
    double additive = 0.0;
    for (int j : bundle.items()) additive += base[static_cast<std::size_t>(j)];
    const double value =
        additive * (1.0 + complementarity * (bundle.size() - 1)) * scale * lognormal(rng, noise);
    corpus.records.push_back({bundle, value, Split::test});
  }
  return corpus;
}

std::vector<SingleMindedAgent> decompose_or_valuation(std::span<const OrTerm> terms) {
  std::vector<SingleMindedAgent> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    if (!(t.value >= 0.0))
      throw Error(ErrorCode::invalid_argument, "OR term values must be nonnegative");
    out.push_back({t.bundle, t.value});
  }
  return out;
}

}  // namespace bayesclear
