#pragma once

// Experiment protocols: the LLG prior-variance sweep and the benchmark of the
// Bayesian auction against the clock auction over a grid of step sizes, with
// CSV reporting.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bayesclear/bayesian_auction.hpp"
#include "bayesclear/instances.hpp"

namespace bayesclear {

enum class BiasMode { unbiased, biased };

struct LlgSweepRow {
  double variance = 0.0;
  int rounds = 0;
  bool cleared = false;
};

// Unbiased fixes the global prior mean at 10, biased at 4.
std::vector<LlgSweepRow> run_llg_sweep(std::span<const double> variances, BiasMode mode,
                                       const AuctionConfig& config,
                                       const ResponseModel& bidders, std::uint64_t seed);

std::string format_llg_sweep_csv(std::span<const LlgSweepRow> unbiased,
                                 std::span<const LlgSweepRow> biased);

struct BenchmarkInstance {
  Instance instance;
  PriorSpec priors;
};

struct SyntheticDomainConfig {
  int corpora = 10;
  int instances_per_corpus = 10;
  int bids_per_corpus = 1000;
  int training_bids = 500;
  int num_items = 12;
  int num_agents = 10;
};

// Per corpus: generate, split train/test, fit a linear prior on the training
// split, then sample instances from the test split with fitted priors.
std::vector<BenchmarkInstance> build_synthetic_domain(CorpusStyle style,
                                                      const SyntheticDomainConfig& config,
                                                      std::uint64_t seed);
std::vector<BenchmarkInstance> build_domain_from_corpora(std::vector<BidCorpus> corpora,
                                                         const SyntheticDomainConfig& config,
                                                         std::string_view domain,
                                                         std::uint64_t seed);

struct BenchmarkConfig {
  AuctionConfig auction{};
  ResponseModel bidders{};
  int steps = 100;
  std::uint64_t master_seed = 0;
  int threads = 0;  // 0: hardware concurrency
  std::string domain = "domain";
};

struct RunRow {
  std::string instance_id;
  std::string auction;  // "bayes" or "clock:<k>" for step index k
  std::optional<double> tau;
  bool cleared = false;
  int rounds = 0;
  double objective_gap = 0.0;
  std::uint64_t seed = 0;
};

struct BenchmarkReport {
  std::string domain;
  int round_cap = 100;
  int steps = 100;
  std::vector<std::string> instance_ids;
  std::vector<RunRow> rows;  // sorted by instance, then bayes, then step index
};

// Step sizes tau_k = k * max_value / steps for k = 1..steps.
std::vector<double> tau_grid(std::span<const SingleMindedAgent> agents, int steps);

BenchmarkReport run_benchmark(std::span<const BenchmarkInstance> instances,
                              const BenchmarkConfig& config);

struct AggregateRow {
  std::string auction;  // bayes, sio, saoc, saor
  std::optional<int> step;
  int instances = 0;
  int cleared = 0;
  std::optional<double> mean_rounds_cleared;
  int common_instances = 0;
  std::optional<double> common_q1, common_median, common_q3, common_mean;
};

struct BenchmarkSummary {
  std::vector<int> sio_steps;  // per instance
  int saoc_step = 0;
  int saor_step = 0;
  std::vector<std::string> common_instances;
  std::vector<AggregateRow> aggregates;
  // Rounds per auction kind on the commonly cleared instances.
  std::vector<int> common_rounds_bayes, common_rounds_sio, common_rounds_saor;
};

// SIO: per-instance step with fewest rounds (ties to smaller tau).
// SAOc: step clearing the most instances (ties to fewer mean rounds).
// SAOr: step with the lowest mean rounds over all instances, failures counted
// at the cap (ties to more cleared). Round statistics are taken over the
// instances cleared by bayes, SIO and SAOr alike.
BenchmarkSummary summarize(const BenchmarkReport& report);

double quantile(std::vector<double> values, double q);

struct ReportFiles {
  std::string runs_csv;
  std::string aggregate_csv;
  std::string plot_csv;
};

ReportFiles format_report(const BenchmarkReport& report);
void emit_report(const BenchmarkReport& report, const std::filesystem::path& directory);

// Reads back the per-run CSV written by format_report.
BenchmarkReport parse_runs_csv(std::string_view text, std::string_view domain, int round_cap,
                               int steps);

}  // namespace bayesclear
