#include "bayesclear/bayesclear.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <new>
#include <sstream>
#include <string>

#include "bayesclear/baseline_clock.hpp"
#include "bayesclear/bayesian_auction.hpp"
#include "bayesclear/error.hpp"
#include "bayesclear/experiments.hpp"
#include "bayesclear/instances.hpp"

using namespace bayesclear;

struct bc_config {
  AuctionConfig auction;
  ResponseModel bidders;
  int steps = 100;
  int threads = 0;
  SyntheticDomainConfig domain;
};

struct bc_instance {
  Instance instance;
};

struct bc_result {
  AuctionOutcome outcome;
  double objective_gap = 0.0;
};

struct bc_corpus {
  BidCorpus corpus;
  bool split = false;
};

struct bc_prior_model {
  LinearPriorModel model;
};

struct bc_report {
  BenchmarkReport report;
};

namespace {

thread_local std::string last_error;

bc_status fail(bc_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

bc_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return BC_INVALID_ARGUMENT;
    case ErrorCode::dimension_mismatch: return BC_DIMENSION_MISMATCH;
    case ErrorCode::size_limit: return BC_SIZE_LIMIT;
    case ErrorCode::parse: return BC_PARSE;
    case ErrorCode::io: return BC_IO;
    case ErrorCode::numeric: return BC_NUMERIC;
    case ErrorCode::precondition: return BC_PRECONDITION;
  }
  return BC_INTERNAL;
}

template <class F>
bc_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return BC_OK;
  } catch (const Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(BC_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BC_INTERNAL, e.what());
  }
}

void require(bool condition, const char* message) {
  if (!condition) throw Error(ErrorCode::invalid_argument, message);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, std::string("cannot open ") + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::io, std::string("failed to read ") + path);
  return buf.str();
}

void write_file(const char* path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::io, std::string("failed to write ") + path);
}

const char* em_status_name(EmStatus s) {
  switch (s) {
    case EmStatus::converged: return "converged";
    case EmStatus::iteration_cap: return "iteration_cap";
    case EmStatus::mstep_failure: return "mstep_failure";
  }
  return "unknown";
}

std::string trace_json(const AuctionOutcome& outcome) {
  nlohmann::ordered_json j;
  j["cleared"] = outcome.cleared;
  j["rounds"] = outcome.rounds;
  j["final_prices"] = std::vector<double>(outcome.final_prices.values().begin(),
                                          outcome.final_prices.values().end());
  if (outcome.certificate.witness) {
    auto& w = j["allocation"] = nlohmann::ordered_json::array();
    for (const auto& b : outcome.certificate.witness->assigned) w.push_back(b.items());
  }
  auto& rounds = j["trace"] = nlohmann::ordered_json::array();
  for (const auto& r : outcome.trace.rounds) {
    nlohmann::ordered_json jr;
    jr["round"] = r.round;
    jr["prices"] = std::vector<double>(r.prices.values().begin(), r.prices.values().end());
    auto& bids = jr["bids"] = nlohmann::ordered_json::array();
    for (const auto& b : r.bids)
      bids.push_back({{"agent", b.agent}, {"cost", b.cost}, {"bid", static_cast<int>(b.bid)}});
    if (!r.beliefs.empty()) {
      auto& beliefs = jr["beliefs"] = nlohmann::ordered_json::array();
      for (const auto& g : r.beliefs)
        beliefs.push_back({{"mean", g.mean}, {"variance", g.variance}});
    }
    if (r.em)
      jr["em"] = {{"status", em_status_name(r.em->status)},
                  {"iterations", r.em->iterations},
                  {"objective", r.em->objective},
                  {"gradient_norm", r.em->gradient_norm}};
    rounds.push_back(std::move(jr));
  }
  return j.dump(2) + "\n";
}

double gap_of(const Instance& inst, const LinearPrices& prices, const ExactSearchLimits& limits) {
  return clearing_objective(inst.agents, prices) -
         efficient_allocation(inst.agents, inst.num_items, limits).welfare;
}

const PriorSpec& priors_of(const Instance& inst) {
  if (!inst.priors)
    throw Error(ErrorCode::precondition, "instance has no value priors");
  return *inst.priors;
}

}  // namespace

extern "C" {

const char* bc_version(void) { return "0.1.0"; }

const char* bc_last_error(void) { return last_error.c_str(); }

const char* bc_status_name(bc_status status) {
  switch (status) {
    case BC_OK: return "ok";
    case BC_INVALID_ARGUMENT: return "invalid argument";
    case BC_DIMENSION_MISMATCH: return "dimension mismatch";
    case BC_SIZE_LIMIT: return "size limit";
    case BC_PARSE: return "parse error";
    case BC_IO: return "i/o error";
    case BC_NUMERIC: return "numeric error";
    case BC_PRECONDITION: return "precondition failed";
    case BC_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void bc_string_free(char* text) { std::free(text); }

bc_status bc_config_create(bc_config** out) {
  return guarded([&] {
    require(out, "null output pointer");
    *out = new bc_config();
  });
}

void bc_config_destroy(bc_config* config) { delete config; }

bc_status bc_config_set_beta(bc_config* config, double beta) {
  return guarded([&] {
    require(config, "null config");
    require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
    config->auction.beta = beta;
  });
}

bc_status bc_config_set_variance_floor(bc_config* config, double floor) {
  return guarded([&] {
    require(config, "null config");
    require(floor > 0.0 && std::isfinite(floor), "variance floor must be positive");
    config->auction.variance_floor = floor;
  });
}

bc_status bc_config_set_round_cap(bc_config* config, int cap) {
  return guarded([&] {
    require(config, "null config");
    require(cap >= 1, "round cap must be >= 1");
    config->auction.round_cap = cap;
  });
}

bc_status bc_config_set_bidder_beta(bc_config* config, double beta) {
  return guarded([&] {
    require(config, "null config");
    require(std::isfinite(beta), "bidder beta must be finite");
    if (beta <= 0.0) {
      config->bidders = ResponseModel{};
    } else {
      config->bidders.mode = ResponseMode::probit;
      config->bidders.beta = beta;
    }
  });
}

bc_status bc_config_set_approximate_gap(bc_config* config, double gap) {
  return guarded([&] {
    require(config, "null config");
    require(std::isfinite(gap), "gap must be finite");
    if (gap > 0.0)
      config->auction.approximate_gap = gap;
    else
      config->auction.approximate_gap.reset();
  });
}

bc_status bc_config_set_steps(bc_config* config, int steps) {
  return guarded([&] {
    require(config, "null config");
    require(steps >= 1, "step count must be >= 1");
    config->steps = steps;
  });
}

bc_status bc_config_set_threads(bc_config* config, int threads) {
  return guarded([&] {
    require(config, "null config");
    require(threads >= 0, "thread count must be >= 0");
    config->threads = threads;
  });
}

bc_status bc_config_set_domain(bc_config* config, int corpora, int instances_per_corpus,
                               int bids_per_corpus, int training_bids, int num_items,
                               int num_agents) {
  return guarded([&] {
    require(config, "null config");
    require(corpora >= 1 && instances_per_corpus >= 1, "domain needs >= 1 instance");
    require(num_items >= 1 && num_items <= kMaxItems, "item count out of range");
    require(num_agents >= 1, "agent count must be >= 1");
    require(training_bids >= 1 && training_bids < bids_per_corpus,
            "training split must leave test bids");
    require(bids_per_corpus - training_bids >= num_agents, "test split smaller than agent count");
    config->domain = {corpora, instances_per_corpus, bids_per_corpus, training_bids, num_items,
                      num_agents};
  });
}

bc_status bc_instance_create(int num_items, bc_instance** out) {
  return guarded([&] {
    require(out, "null output pointer");
    require(num_items >= 1 && num_items <= kMaxItems, "item count out of range");
    auto* inst = new bc_instance();
    inst->instance.num_items = num_items;
    *out = inst;
  });
}

bc_status bc_instance_llg(double global_mean, double global_variance, bc_instance** out) {
  return guarded([&] {
    require(out, "null output pointer");
    require(global_variance > 0.0, "prior variance must be positive");
    const LlgScenario llg = build_llg();
    auto* inst = new bc_instance{llg.instance};
    inst->instance.priors = llg.priors(global_mean, global_variance);
    *out = inst;
  });
}

bc_status bc_instance_from_json(const char* text, bc_instance** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = new bc_instance{instance_from_json(text)};
  });
}

bc_status bc_instance_load(const char* path, bc_instance** out) {
  return guarded([&] {
    require(path && out, "null argument");
    const std::string text = read_file(path);
    try {
      *out = new bc_instance{instance_from_json(text)};
    } catch (const Error& e) {
      throw Error(e.code(), std::string(path) + ": " + e.what());
    }
  });
}

void bc_instance_destroy(bc_instance* instance) { delete instance; }

bc_status bc_instance_add_agent(bc_instance* instance, const int* items, size_t count,
                                double value) {
  return guarded([&] {
    require(instance && (items || count == 0), "null argument");
    require(std::isfinite(value) && value >= 0.0, "agent value must be finite and >= 0");
    Bundle b = Bundle::from_items(instance->instance.num_items, {items, count});
    require(!b.empty(), "agent bundle must be nonempty");
    instance->instance.agents.push_back({b, value});
    if (instance->instance.priors) instance->instance.priors->push_back({value, kDefaultVarianceFloor});
  });
}

bc_status bc_instance_set_prior(bc_instance* instance, size_t agent, double mean,
                                double variance) {
  return guarded([&] {
    require(instance, "null instance");
    auto& inst = instance->instance;
    if (agent >= inst.agents.size())
      throw Error(ErrorCode::dimension_mismatch, "agent index out of range");
    require(std::isfinite(mean) && std::isfinite(variance) && variance >= 0.0,
            "prior must have finite mean and nonnegative variance");
    if (!inst.priors) {
      inst.priors.emplace();
      for (const auto& a : inst.agents) inst.priors->push_back({a.value, kDefaultVarianceFloor});
    }
    (*inst.priors)[agent] = {mean, variance};
  });
}

bc_status bc_instance_to_json(const bc_instance* instance, char** out) {
  return guarded([&] {
    require(instance && out, "null argument");
    *out = copy_string(instance_to_json(instance->instance));
  });
}

bc_status bc_instance_save(const bc_instance* instance, const char* path) {
  return guarded([&] {
    require(instance && path, "null argument");
    write_file(path, instance_to_json(instance->instance));
  });
}

bc_status bc_instance_num_items(const bc_instance* instance, int* out) {
  return guarded([&] {
    require(instance && out, "null argument");
    *out = instance->instance.num_items;
  });
}

bc_status bc_instance_num_agents(const bc_instance* instance, size_t* out) {
  return guarded([&] {
    require(instance && out, "null argument");
    *out = instance->instance.agents.size();
  });
}

bc_status bc_run_bayesian(const bc_instance* instance, const bc_config* config, uint64_t seed,
                          bc_result** out) {
  return guarded([&] {
    require(instance && config && out, "null argument");
    const auto& inst = instance->instance;
    inst.validate();
    Rng rng(seed);
    auto outcome = run_bayesian_auction(inst.agents, inst.num_items, priors_of(inst),
                                        config->auction, config->bidders, rng);
    auto* r = new bc_result{};
    r->objective_gap = gap_of(inst, outcome.final_prices, config->auction.limits);
    r->outcome = std::move(outcome);
    *out = r;
  });
}

bc_status bc_run_clock(const bc_instance* instance, const bc_config* config, double tau,
                       uint64_t seed, bc_result** out) {
  return guarded([&] {
    require(instance && config && out, "null argument");
    require(tau > 0.0 && std::isfinite(tau), "tau must be positive");
    const auto& inst = instance->instance;
    inst.validate();
    ClockConfig clock;
    clock.tau = tau;
    clock.round_cap = config->auction.round_cap;
    clock.indifference_tolerance = config->auction.indifference_tolerance;
    clock.limits = config->auction.limits;
    Rng rng(seed);
    auto outcome = run_clock_auction(inst.agents, inst.num_items, clock, config->bidders, rng);
    auto* r = new bc_result{};
    r->objective_gap = gap_of(inst, outcome.final_prices, clock.limits);
    r->outcome = std::move(outcome);
    *out = r;
  });
}

void bc_result_destroy(bc_result* result) { delete result; }

bc_status bc_result_cleared(const bc_result* result, int* out) {
  return guarded([&] {
    require(result && out, "null argument");
    *out = result->outcome.cleared ? 1 : 0;
  });
}

bc_status bc_result_rounds(const bc_result* result, int* out) {
  return guarded([&] {
    require(result && out, "null argument");
    *out = result->outcome.rounds;
  });
}

bc_status bc_result_prices(const bc_result* result, double* prices, size_t capacity,
                           size_t* count) {
  return guarded([&] {
    require(result && count && (prices || capacity == 0), "null argument");
    const auto values = result->outcome.final_prices.values();
    *count = values.size();
    for (size_t j = 0; j < values.size() && j < capacity; ++j) prices[j] = values[j];
  });
}

bc_status bc_result_objective_gap(const bc_result* result, double* out) {
  return guarded([&] {
    require(result && out, "null argument");
    *out = result->objective_gap;
  });
}

bc_status bc_result_trace_json(const bc_result* result, char** out) {
  return guarded([&] {
    require(result && out, "null argument");
    *out = copy_string(trace_json(result->outcome));
  });
}

bc_status bc_run_vcg(const bc_instance* instance, const bc_config* config, uint64_t seed,
                     double* payments, int* available, size_t num_agents, int* all_cleared) {
  return guarded([&] {
    require(instance && config && payments && available && all_cleared, "null argument");
    const auto& inst = instance->instance;
    inst.validate();
    if (num_agents != inst.agents.size())
      throw Error(ErrorCode::dimension_mismatch, "output arrays must hold one entry per agent");
    Rng rng(seed);
    const VcgOutcome vcg = run_vcg_auction(inst.agents, inst.num_items, priors_of(inst),
                                           config->auction, config->bidders, rng);
    for (size_t i = 0; i < num_agents; ++i) {
      available[i] = vcg.payments[i].has_value() ? 1 : 0;
      payments[i] = vcg.payments[i].value_or(0.0);
    }
    *all_cleared = vcg.all_cleared ? 1 : 0;
  });
}

bc_status bc_corpus_generate(const char* style, int num_items, int count, uint64_t seed,
                             bc_corpus** out) {
  return guarded([&] {
    require(style && out, "null argument");
    require(count >= 1, "corpus size must be >= 1");
    Rng rng(seed);
    *out = new bc_corpus{generate_synthetic_corpus(parse_corpus_style(style), num_items, count,
                                                   rng)};
  });
}

bc_status bc_corpus_load_cats(const char* path, bc_corpus** out) {
  return guarded([&] {
    require(path && out, "null argument");
    const std::string text = read_file(path);
    try {
      *out = new bc_corpus{parse_cats(text)};
    } catch (const Error& e) {
      throw Error(e.code(), std::string(path) + ": " + e.what());
    }
  });
}

bc_status bc_corpus_to_cats(const bc_corpus* corpus, char** out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    *out = copy_string(write_cats(corpus->corpus));
  });
}

bc_status bc_corpus_save_cats(const bc_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus && path, "null argument");
    write_file(path, write_cats(corpus->corpus));
  });
}

void bc_corpus_destroy(bc_corpus* corpus) { delete corpus; }

bc_status bc_corpus_size(const bc_corpus* corpus, size_t* out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    *out = corpus->corpus.records.size();
  });
}

bc_status bc_corpus_num_items(const bc_corpus* corpus, int* out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    *out = corpus->corpus.num_items;
  });
}

bc_status bc_corpus_split(bc_corpus* corpus, size_t train_count, uint64_t seed) {
  return guarded([&] {
    require(corpus, "null corpus");
    Rng rng(seed);
    split_corpus(corpus->corpus, train_count, rng);
    corpus->split = true;
  });
}

bc_status bc_prior_fit(const bc_corpus* corpus, bc_prior_model** out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    if (corpus->split) {
      *out = new bc_prior_model{fit_linear_prior(corpus->corpus)};
    } else {
      *out = new bc_prior_model{
          fit_linear_prior(corpus->corpus.records, corpus->corpus.num_items)};
    }
  });
}

bc_status bc_prior_load(const char* path, bc_prior_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    const std::string text = read_file(path);
    try {
      *out = new bc_prior_model{prior_model_from_json(text)};
    } catch (const Error& e) {
      throw Error(e.code(), std::string(path) + ": " + e.what());
    }
  });
}

bc_status bc_prior_to_json(const bc_prior_model* model, char** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = copy_string(prior_model_to_json(model->model));
  });
}

bc_status bc_prior_save(const bc_prior_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "null argument");
    write_file(path, prior_model_to_json(model->model));
  });
}

void bc_prior_destroy(bc_prior_model* model) { delete model; }

bc_status bc_prior_predict(const bc_prior_model* model, const int* items, size_t count,
                           double variance_floor, double* mean, double* variance) {
  return guarded([&] {
    require(model && mean && variance && (items || count == 0), "null argument");
    const ValuePrior p = predict_agent_prior(
        model->model, Bundle::from_items(model->model.num_items, {items, count}),
        variance_floor);
    *mean = p.mean;
    *variance = p.variance;
  });
}

bc_status bc_llg_sweep(const bc_config* config, const double* variances, size_t count,
                       int biased, uint64_t seed, int* rounds, int* cleared) {
  return guarded([&] {
    require(config && variances && rounds && cleared, "null argument");
    const auto rows = run_llg_sweep({variances, count},
                                    biased ? BiasMode::biased : BiasMode::unbiased,
                                    config->auction, config->bidders, seed);
    for (size_t k = 0; k < rows.size(); ++k) {
      rounds[k] = rows[k].rounds;
      cleared[k] = rows[k].cleared ? 1 : 0;
    }
  });
}

bc_status bc_llg_sweep_csv(const bc_config* config, const double* variances, size_t count,
                           uint64_t seed, char** out) {
  return guarded([&] {
    require(config && variances && out, "null argument");
    const auto unbiased = run_llg_sweep({variances, count}, BiasMode::unbiased, config->auction,
                                        config->bidders, seed);
    const auto biased = run_llg_sweep({variances, count}, BiasMode::biased, config->auction,
                                      config->bidders, seed);
    *out = copy_string(format_llg_sweep_csv(unbiased, biased));
  });
}

namespace {

BenchmarkConfig benchmark_config(const bc_config& config, std::string domain, uint64_t seed) {
  BenchmarkConfig bench;
  bench.auction = config.auction;
  bench.bidders = config.bidders;
  bench.steps = config.steps;
  bench.master_seed = seed;
  bench.threads = config.threads;
  bench.domain = std::move(domain);
  return bench;
}

}  // namespace

bc_status bc_benchmark_synthetic(const bc_config* config, const char* style, uint64_t seed,
                                 bc_report** out) {
  return guarded([&] {
    require(config && style && out, "null argument");
    const CorpusStyle s = parse_corpus_style(style);
    const auto instances = build_synthetic_domain(s, config->domain, seed);
    *out = new bc_report{
        run_benchmark(instances, benchmark_config(*config, std::string(corpus_style_name(s)),
                                                  seed))};
  });
}

bc_status bc_benchmark_cats(const bc_config* config, const char* const* paths, size_t count,
                            const char* domain, uint64_t seed, bc_report** out) {
  return guarded([&] {
    require(config && paths && domain && out, "null argument");
    require(count >= 1, "at least one corpus file is required");
    std::vector<BidCorpus> corpora;
    for (size_t k = 0; k < count; ++k) {
      require(paths[k], "null corpus path");
      const std::string text = read_file(paths[k]);
      try {
        corpora.push_back(parse_cats(text));
      } catch (const Error& e) {
        throw Error(e.code(), std::string(paths[k]) + ": " + e.what());
      }
    }
    SyntheticDomainConfig dc = config->domain;
    dc.corpora = static_cast<int>(count);
    const auto instances = build_domain_from_corpora(std::move(corpora), dc, domain, seed);
    *out = new bc_report{run_benchmark(instances, benchmark_config(*config, domain, seed))};
  });
}

void bc_report_destroy(bc_report* report) { delete report; }

bc_status bc_report_write(const bc_report* report, const char* directory) {
  return guarded([&] {
    require(report && directory, "null argument");
    emit_report(report->report, directory);
  });
}

bc_status bc_report_csv(const bc_report* report, const char* which, char** out) {
  return guarded([&] {
    require(report && which && out, "null argument");
    const ReportFiles files = format_report(report->report);
    const std::string w = which;
    if (w == "runs")
      *out = copy_string(files.runs_csv);
    else if (w == "aggregate")
      *out = copy_string(files.aggregate_csv);
    else if (w == "plot")
      *out = copy_string(files.plot_csv);
    else
      throw Error(ErrorCode::invalid_argument, "unknown report file " + w);
  });
}

bc_status bc_report_stat(const bc_report* report, const char* auction, const char* stat,
                         double* out) {
  return guarded([&] {
    require(report && auction && stat && out, "null argument");
    const BenchmarkSummary s = summarize(report->report);
    const AggregateRow* row = nullptr;
    for (const auto& a : s.aggregates)
      if (a.auction == auction) row = &a;
    if (!row) throw Error(ErrorCode::invalid_argument, std::string("unknown auction ") + auction);
    const std::string k = stat;
    std::optional<double> v;
    if (k == "instances") v = row->instances;
    else if (k == "cleared") v = row->cleared;
    else if (k == "step") { if (row->step) v = *row->step; }
    else if (k == "mean_rounds_cleared") v = row->mean_rounds_cleared;
    else if (k == "common_instances") v = row->common_instances;
    else if (k == "common_q1") v = row->common_q1;
    else if (k == "common_median") v = row->common_median;
    else if (k == "common_q3") v = row->common_q3;
    else if (k == "common_mean") v = row->common_mean;
    else throw Error(ErrorCode::invalid_argument, "unknown statistic " + k);
    if (!v) throw Error(ErrorCode::precondition, k + " is undefined for " + auction);
    *out = *v;
  });
}

}  // extern "C"
