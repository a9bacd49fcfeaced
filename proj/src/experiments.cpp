#include "bayesclear/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "bayesclear/baseline_clock.hpp"
#include "bayesclear/error.hpp"

namespace bayesclear {

namespace {

std::string fmt_double(double v, int precision = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string fmt_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_fixed(*v) : ""; }

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double objective_gap(std::span<const SingleMindedAgent> agents, int num_items,
                     const LinearPrices& prices, const ExactSearchLimits& limits) {
  return clearing_objective(agents, prices) -
         efficient_allocation(agents, num_items, limits).welfare;
}

int parse_step(const std::string& auction) {
  if (auction.rfind("clock:", 0) != 0) return 0;
  return std::stoi(auction.substr(6));
}

std::vector<BenchmarkInstance> domain_from_corpus_list(std::vector<BidCorpus>& corpora,
                                                       const SyntheticDomainConfig& config,
                                                       std::string_view domain,
                                                       std::uint64_t seed) {
  std::vector<BenchmarkInstance> out;
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    Rng rng(derive_seed(seed, 1000 + c));
    BidCorpus& corpus = corpora[c];
    split_corpus(corpus, static_cast<std::size_t>(config.training_bids), rng);
    const LinearPriorModel prior = fit_linear_prior(corpus);
    for (int k = 0; k < config.instances_per_corpus; ++k) {
      BenchmarkInstance bi;
      bi.instance = sample_instance(corpus, config.num_agents, rng);
      char id[96];
      std::snprintf(id, sizeof id, "%.*s-c%03zu-i%03d", static_cast<int>(domain.size()),
                    domain.data(), c, k);
      bi.instance.id = id;
      bi.instance.seed = derive_seed(seed, c, static_cast<std::uint64_t>(k));
      for (const auto& a : bi.instance.agents)
        bi.priors.push_back(predict_agent_prior(prior, a.bundle));
      bi.instance.priors = bi.priors;
      out.push_back(std::move(bi));
    }
  }
  return out;
}

}  // namespace

std::vector<LlgSweepRow> run_llg_sweep(std::span<const double> variances, BiasMode mode,
                                       const AuctionConfig& config,
                                       const ResponseModel& bidders, std::uint64_t seed) {
  const LlgScenario llg = build_llg();
  const double global_mean = mode == BiasMode::unbiased ? 10.0 : 4.0;
  std::vector<LlgSweepRow> rows;
  for (std::size_t k = 0; k < variances.size(); ++k) {
    if (!(variances[k] > 0.0))
      throw Error(ErrorCode::invalid_argument, "sweep variances must be positive");
    Rng rng(derive_seed(seed, k));
    const auto out = run_bayesian_auction(llg.instance.agents, llg.instance.num_items,
                                          llg.priors(global_mean, variances[k]), config,
                                          bidders, rng);
    rows.push_back({variances[k], out.rounds, out.cleared});
  }
  return rows;
}

std::string format_llg_sweep_csv(std::span<const LlgSweepRow> unbiased,
                                 std::span<const LlgSweepRow> biased) {
  std::string out = "figure,series,x,y\n";
  auto emit = [&](std::string_view series, std::span<const LlgSweepRow> rows) {
    for (const auto& r : rows)
      out += "llg_rounds," + std::string(series) + "," + fmt_double(r.variance) + "," +
             std::to_string(r.rounds) + "\n";
  };
  emit("unbiased", unbiased);
  emit("biased", biased);
  return out;
}

std::vector<BenchmarkInstance> build_synthetic_domain(CorpusStyle style,
                                                      const SyntheticDomainConfig& config,
                                                      std::uint64_t seed) {
  std::vector<BidCorpus> corpora;
  for (int c = 0; c < config.corpora; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    corpora.push_back(
        generate_synthetic_corpus(style, config.num_items, config.bids_per_corpus, rng));
  }
  return domain_from_corpus_list(corpora, config, corpus_style_name(style), seed);
}

std::vector<BenchmarkInstance> build_domain_from_corpora(std::vector<BidCorpus> corpora,
                                                         const SyntheticDomainConfig& config,
                                                         std::string_view domain,
                                                         std::uint64_t seed) {
  return domain_from_corpus_list(corpora, config, domain, seed);
}

std::vector<double> tau_grid(std::span<const SingleMindedAgent> agents, int steps) {
  if (steps < 1) throw Error(ErrorCode::invalid_argument, "step count must be >= 1");
  double max_value = 0.0;
  for (const auto& a : agents) max_value = std::max(max_value, a.value);
  if (!(max_value > 0.0))
    throw Error(ErrorCode::precondition, "tau grid needs an agent with positive value");
  std::vector<double> taus;
  for (int k = 1; k <= steps; ++k) taus.push_back(k * max_value / steps);
  return taus;
}

BenchmarkReport run_benchmark(std::span<const BenchmarkInstance> instances,
                              const BenchmarkConfig& config) {
  if (instances.empty()) throw Error(ErrorCode::precondition, "benchmark needs >= 1 instance");
  config.auction.validate();
  if (config.steps < 1) throw Error(ErrorCode::invalid_argument, "step count must be >= 1");

  const std::size_t per_instance = static_cast<std::size_t>(config.steps) + 1;
  std::vector<RunRow> rows(instances.size() * per_instance);
  std::vector<std::vector<double>> taus(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    instances[i].instance.validate();
    if (instances[i].priors.size() != instances[i].instance.agents.size())
      throw Error(ErrorCode::dimension_mismatch,
                  "instance " + instances[i].instance.id + " needs one prior per agent");
    taus[i] = tau_grid(instances[i].instance.agents, config.steps);
  }

  parallel_for(rows.size(), config.threads, [&](std::size_t job) {
    const std::size_t i = job / per_instance;
    const int k = static_cast<int>(job % per_instance);
    const auto& inst = instances[i].instance;
    RunRow row;
    row.instance_id = inst.id.empty() ? "instance-" + std::to_string(i) : inst.id;
    row.seed = derive_seed(config.master_seed, i, static_cast<std::uint64_t>(k));
    Rng rng(row.seed);
    if (k == 0) {
      const auto out = run_bayesian_auction(inst.agents, inst.num_items, instances[i].priors,
                                            config.auction, config.bidders, rng);
      row.auction = "bayes";
      row.cleared = out.cleared;
      row.rounds = out.rounds;
      row.objective_gap =
          objective_gap(inst.agents, inst.num_items, out.final_prices, config.auction.limits);
    } else {
      ClockConfig clock;
      clock.tau = taus[i][static_cast<std::size_t>(k - 1)];
      clock.round_cap = config.auction.round_cap;
      clock.indifference_tolerance = config.auction.indifference_tolerance;
      clock.limits = config.auction.limits;
      const auto out = run_clock_auction(inst.agents, inst.num_items, clock, config.bidders, rng);
      row.auction = "clock:" + std::to_string(k);
      row.tau = clock.tau;
      row.cleared = out.cleared;
      row.rounds = out.rounds;
      row.objective_gap =
          objective_gap(inst.agents, inst.num_items, out.final_prices, config.auction.limits);
    }
    rows[job] = std::move(row);
  });

  BenchmarkReport report;
  report.domain = config.domain;
  report.round_cap = config.auction.round_cap;
  report.steps = config.steps;
  for (std::size_t i = 0; i < instances.size(); ++i)
    report.instance_ids.push_back(rows[i * per_instance].instance_id);
  report.rows = std::move(rows);
  return report;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::precondition, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BenchmarkSummary summarize(const BenchmarkReport& report) {
  const std::size_t n = report.instance_ids.size();
  const auto steps = static_cast<std::size_t>(report.steps);
  const int cap = report.round_cap;

  // Index rows: bayes[i], clock[i][k-1].
  std::vector<const RunRow*> bayes(n, nullptr);
  std::vector<std::vector<const RunRow*>> clock(n, std::vector<const RunRow*>(steps, nullptr));
  std::vector<std::size_t> order(n);
  for (const auto& row : report.rows) {
    const auto it = std::find(report.instance_ids.begin(), report.instance_ids.end(),
                              row.instance_id);
    if (it == report.instance_ids.end())
      throw Error(ErrorCode::precondition, "row for unknown instance " + row.instance_id);
    const auto i = static_cast<std::size_t>(it - report.instance_ids.begin());
    if (row.auction == "bayes") {
      bayes[i] = &row;
    } else {
      const int k = parse_step(row.auction);
      if (k < 1 || k > report.steps)
        throw Error(ErrorCode::precondition, "bad auction label " + row.auction);
      clock[i][static_cast<std::size_t>(k - 1)] = &row;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!bayes[i]) throw Error(ErrorCode::precondition, "missing bayes run");
    for (const auto* r : clock[i])
      if (!r) throw Error(ErrorCode::precondition, "missing clock run");
  }

  BenchmarkSummary s;
  s.sio_steps.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < steps; ++k)
      if (clock[i][k]->rounds < clock[i][best]->rounds) best = k;
    s.sio_steps[i] = static_cast<int>(best) + 1;
  }

  std::vector<int> cleared_count(steps, 0);
  std::vector<double> mean_rounds(steps, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      cleared_count[k] += clock[i][k]->cleared ? 1 : 0;
      total += clock[i][k]->cleared ? clock[i][k]->rounds : cap;
    }
    mean_rounds[k] = static_cast<double>(total) / static_cast<double>(n);
  }
  std::size_t saoc = 0, saor = 0;
  for (std::size_t k = 1; k < steps; ++k) {
    if (cleared_count[k] > cleared_count[saoc] ||
        (cleared_count[k] == cleared_count[saoc] && mean_rounds[k] < mean_rounds[saoc]))
      saoc = k;
    if (mean_rounds[k] < mean_rounds[saor] ||
        (mean_rounds[k] == mean_rounds[saor] && cleared_count[k] > cleared_count[saor]))
      saor = k;
  }
  s.saoc_step = static_cast<int>(saoc) + 1;
  s.saor_step = static_cast<int>(saor) + 1;

  auto pick = [&](std::string_view kind, std::size_t i) -> const RunRow* {
    if (kind == "bayes") return bayes[i];
    if (kind == "sio") return clock[i][static_cast<std::size_t>(s.sio_steps[i] - 1)];
    if (kind == "saoc") return clock[i][saoc];
    return clock[i][saor];
  };

  std::vector<std::size_t> common;
  for (std::size_t i = 0; i < n; ++i)
    if (pick("bayes", i)->cleared && pick("sio", i)->cleared && pick("saor", i)->cleared) {
      common.push_back(i);
      s.common_instances.push_back(report.instance_ids[i]);
      s.common_rounds_bayes.push_back(pick("bayes", i)->rounds);
      s.common_rounds_sio.push_back(pick("sio", i)->rounds);
      s.common_rounds_saor.push_back(pick("saor", i)->rounds);
    }

  for (std::string_view kind : {"bayes", "sio", "saoc", "saor"}) {
    AggregateRow agg;
    agg.auction = std::string(kind);
    if (kind == "saoc") agg.step = s.saoc_step;
    if (kind == "saor") agg.step = s.saor_step;
    agg.instances = static_cast<int>(n);
    std::vector<double> cleared_rounds;
    for (std::size_t i = 0; i < n; ++i)
      if (pick(kind, i)->cleared) cleared_rounds.push_back(pick(kind, i)->rounds);
    agg.cleared = static_cast<int>(cleared_rounds.size());
    if (!cleared_rounds.empty()) {
      double sum = 0.0;
      for (double r : cleared_rounds) sum += r;
      agg.mean_rounds_cleared = sum / static_cast<double>(cleared_rounds.size());
    }
    if (kind != "saoc") {
      std::vector<double> rounds;
      for (std::size_t i : common) rounds.push_back(pick(kind, i)->rounds);
      agg.common_instances = static_cast<int>(rounds.size());
      if (!rounds.empty()) {
        agg.common_q1 = quantile(rounds, 0.25);
        agg.common_median = quantile(rounds, 0.5);
        agg.common_q3 = quantile(rounds, 0.75);
        double sum = 0.0;
        for (double r : rounds) sum += r;
        agg.common_mean = sum / static_cast<double>(rounds.size());
      }
    }
    s.aggregates.push_back(std::move(agg));
  }
  return s;
}

ReportFiles format_report(const BenchmarkReport& report) {
  ReportFiles files;
  files.runs_csv = "instance_id,auction,tau,cleared,rounds,objective_gap,seed\n";
  for (const auto& r : report.rows) {
    files.runs_csv += r.instance_id + "," + r.auction + "," +
                      (r.tau ? fmt_double(*r.tau) : std::string()) + "," +
                      (r.cleared ? "1" : "0") + "," + std::to_string(r.rounds) + "," +
                      fmt_double(r.objective_gap, 9) + "," + std::to_string(r.seed) + "\n";
  }

  files.aggregate_csv =
      "domain,auction,step,instances,cleared,mean_rounds_cleared,common_instances,"
      "common_q1,common_median,common_q3,common_mean\n";
  files.plot_csv = "figure,series,x,y\n";
  if (report.instance_ids.empty()) return files;

  const BenchmarkSummary s = summarize(report);
  for (const auto& a : s.aggregates) {
    files.aggregate_csv += report.domain + "," + a.auction + "," +
                           (a.step ? std::to_string(*a.step) : std::string()) + "," +
                           std::to_string(a.instances) + "," + std::to_string(a.cleared) + "," +
                           fmt_opt(a.mean_rounds_cleared) + "," +
                           std::to_string(a.common_instances) + "," + fmt_opt(a.common_q1) +
                           "," + fmt_opt(a.common_median) + "," + fmt_opt(a.common_q3) + "," +
                           fmt_opt(a.common_mean) + "\n";
    files.plot_csv += "cleared," + a.auction + "," + report.domain + "," +
                      std::to_string(a.cleared) + "\n";
  }
  for (std::size_t c = 0; c < s.common_instances.size(); ++c) {
    const std::string& id = s.common_instances[c];
    files.plot_csv += "rounds,bayes," + id + "," + std::to_string(s.common_rounds_bayes[c]) + "\n";
    files.plot_csv += "rounds,saor," + id + "," + std::to_string(s.common_rounds_saor[c]) + "\n";
    files.plot_csv += "rounds,sio," + id + "," + std::to_string(s.common_rounds_sio[c]) + "\n";
  }
  return files;
}

void emit_report(const BenchmarkReport& report, const std::filesystem::path& directory) {
  const ReportFiles files = format_report(report);
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec)
    throw Error(ErrorCode::io, "cannot create directory " + directory.string() + ": " +
                                   ec.message());
  const std::pair<const char*, const std::string*> outputs[] = {
      {"runs.csv", &files.runs_csv},
      {"aggregate.csv", &files.aggregate_csv},
      {"plot.csv", &files.plot_csv}};
  for (const auto& [name, content] : outputs) {
    const auto path = directory / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << *content;
    out.close();
    if (!out) throw Error(ErrorCode::io, "failed to write " + path.string());
  }
}

BenchmarkReport parse_runs_csv(std::string_view text, std::string_view domain, int round_cap,
                               int steps) {
  BenchmarkReport report;
  report.domain = std::string(domain);
  report.round_cap = round_cap;
  report.steps = steps;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "instance_id,auction,tau,cleared,rounds,objective_gap,seed")
        throw Error(ErrorCode::parse, "unexpected runs CSV header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      f.push_back(line.substr(start, pos - start));
    f.push_back(line.substr(start));
    if (f.size() != 7)
      throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": expected 7 fields");
    RunRow r;
    try {
      r.instance_id = f[0];
      r.auction = f[1];
      if (!f[2].empty()) r.tau = std::stod(f[2]);
      r.cleared = f[3] == "1";
      r.rounds = std::stoi(f[4]);
      r.objective_gap = std::stod(f[5]);
      r.seed = std::stoull(f[6]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": malformed field");
    }
    if (std::find(report.instance_ids.begin(), report.instance_ids.end(), r.instance_id) ==
        report.instance_ids.end())
      report.instance_ids.push_back(r.instance_id);
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace bayesclear
