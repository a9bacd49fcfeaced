#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bayesclear/bayesclear.h"

namespace {

struct Failure {
  std::string what;
};

void check(bc_status status, const std::string& context) {
  if (status != BC_OK)
    throw Failure{context + ": " + bc_status_name(status) + ": " + bc_last_error()};
}

template <class T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};

using ConfigPtr = std::unique_ptr<bc_config, Deleter<bc_config, bc_config_destroy>>;
using InstancePtr = std::unique_ptr<bc_instance, Deleter<bc_instance, bc_instance_destroy>>;
using ResultPtr = std::unique_ptr<bc_result, Deleter<bc_result, bc_result_destroy>>;
using CorpusPtr = std::unique_ptr<bc_corpus, Deleter<bc_corpus, bc_corpus_destroy>>;
using PriorPtr = std::unique_ptr<bc_prior_model, Deleter<bc_prior_model, bc_prior_destroy>>;
using ReportPtr = std::unique_ptr<bc_report, Deleter<bc_report, bc_report_destroy>>;

std::string take(char* s) {
  std::string out = s ? s : "";
  bc_string_free(s);
  return out;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw Failure{"failed to write " + path};
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Globals {
  std::uint64_t seed = 0;
  double beta = 10.0;
  int rounds_cap = 100;
  int steps = 100;
  double var_floor = 0.01;
  std::string format = "csv";
  double bidder_beta = 0.0;
  double approx_gap = 0.0;
  int threads = 0;
};

ConfigPtr make_config(const Globals& g) {
  bc_config* raw = nullptr;
  check(bc_config_create(&raw), "config");
  ConfigPtr config(raw);
  check(bc_config_set_beta(raw, g.beta), "--beta");
  check(bc_config_set_round_cap(raw, g.rounds_cap), "--rounds-cap");
  check(bc_config_set_steps(raw, g.steps), "--steps");
  check(bc_config_set_variance_floor(raw, g.var_floor), "--var-floor");
  check(bc_config_set_bidder_beta(raw, g.bidder_beta), "--bidder-beta");
  check(bc_config_set_approximate_gap(raw, g.approx_gap), "--approx-gap");
  check(bc_config_set_threads(raw, g.threads), "--threads");
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian clearing mechanism for single-minded combinatorial auctions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bc_version());

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->envname("BAYESCLEAR_SEED");
  app.add_option("--beta", g.beta, "Auctioneer's probit precision")->capture_default_str();
  app.add_option("--rounds-cap", g.rounds_cap, "Round cap")->capture_default_str();
  app.add_option("--steps", g.steps, "Clock step-size grid size")->capture_default_str();
  app.add_option("--var-floor", g.var_floor, "Belief variance floor")->capture_default_str();
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv"}))
      ->capture_default_str();
  app.add_option("--bidder-beta", g.bidder_beta,
                 "Simulated bidders' probit precision (0: exact best response)")
      ->capture_default_str();
  app.add_option("--approx-gap", g.approx_gap,
                 "Declare clearing once the dual gap is below this (0: exact check)")
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0: all cores)")->capture_default_str();

  // llg-sweep
  auto* sweep = app.add_subcommand("llg-sweep", "Rounds to clear LLG against global prior variance");
  sweep->fallthrough();
  std::vector<double> variances;
  std::string sweep_out;
  sweep->add_option("--variances", variances, "Global prior variances (default 1..25)");
  sweep->add_option("-o,--out", sweep_out, "Output CSV (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Bayesian auction against the clock auction grid");
  bench->fallthrough();
  std::string style = "paths";
  std::vector<std::string> cats_files;
  std::string domain_name;
  std::string out_dir;
  int corpora = 10, per_corpus = 10, bids = 1000, training = 500, items = 12, agents = 10;
  bench->add_option("--style", style, "Synthetic corpus style")
      ->check(CLI::IsMember({"paths", "regions", "arbitrary", "scheduling"}))
      ->capture_default_str();
  bench->add_option("--cats", cats_files, "CATS bid files, one corpus each")
      ->check(CLI::ExistingFile);
  bench->add_option("--domain", domain_name, "Domain label for CATS input");
  bench->add_option("--corpora", corpora, "Synthetic corpora")->capture_default_str();
  bench->add_option("--instances-per-corpus", per_corpus)->capture_default_str();
  bench->add_option("--bids", bids, "Bids per synthetic corpus")->capture_default_str();
  bench->add_option("--training", training, "Training bids per corpus")->capture_default_str();
  bench->add_option("--items", items, "Items per synthetic corpus")->capture_default_str();
  bench->add_option("--agents", agents, "Agents per instance")->capture_default_str();
  bench->add_option("-o,--out-dir", out_dir, "Directory for runs/aggregate/plot CSVs")
      ->required();

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic bid corpus in CATS format");
  gen->fallthrough();
  std::string gen_style = "paths", gen_out;
  int gen_items = 12, gen_count = 1000;
  gen->add_option("--style", gen_style)
      ->check(CLI::IsMember({"paths", "regions", "arbitrary", "scheduling"}))
      ->capture_default_str();
  gen->add_option("--items", gen_items)->capture_default_str();
  gen->add_option("--count", gen_count)->capture_default_str();
  gen->add_option("-o,--out", gen_out, "Output file (default stdout)");

  // fit-prior
  auto* fit = app.add_subcommand("fit-prior", "Fit a linear value prior on a CATS corpus");
  fit->fallthrough();
  std::string fit_corpus, fit_out;
  std::optional<std::size_t> fit_train;
  fit->add_option("--corpus", fit_corpus, "CATS bid file")->required()->check(CLI::ExistingFile);
  fit->add_option("--train", fit_train, "Fit on a random training split of this size");
  fit->add_option("-o,--out", fit_out, "Output JSON (default stdout)");

  // run-one
  auto* one = app.add_subcommand("run-one", "Run one auction on one instance");
  one->fallthrough();
  std::string instance_path, auction = "bayes", trace_out;
  double tau = 0.0, global_mean = 10.0, global_var = 1.0;
  auto* inst_opt = one->add_option("--instance", instance_path, "Instance JSON")
                       ->check(CLI::ExistingFile);
  auto* llg_flag = one->add_flag("--llg", "Use the LLG instance");
  inst_opt->excludes(llg_flag);
  one->add_option("--global-mean", global_mean, "LLG global prior mean")->capture_default_str();
  one->add_option("--global-var", global_var, "LLG global prior variance")
      ->capture_default_str();
  one->add_option("--auction", auction)
      ->check(CLI::IsMember({"bayes", "clock", "vcg"}))
      ->capture_default_str();
  one->add_option("--tau", tau, "Clock step size");
  one->add_option("--trace", trace_out, "Write the round trace as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    ConfigPtr config = make_config(g);

    if (*sweep) {
      if (variances.empty())
        for (int v = 1; v <= 25; ++v) variances.push_back(v);
      char* csv = nullptr;
      check(bc_llg_sweep_csv(config.get(), variances.data(), variances.size(), g.seed, &csv),
            "llg-sweep");
      write_output(sweep_out, take(csv));
    } else if (*bench) {
      check(bc_config_set_domain(config.get(), corpora, per_corpus, bids, training, items, agents),
            "bench");
      bc_report* raw = nullptr;
      if (!cats_files.empty()) {
        std::vector<const char*> paths;
        for (const auto& p : cats_files) paths.push_back(p.c_str());
        const std::string label = domain_name.empty() ? "cats" : domain_name;
        check(bc_benchmark_cats(config.get(), paths.data(), paths.size(), label.c_str(), g.seed,
                                &raw),
              "bench");
      } else {
        check(bc_benchmark_synthetic(config.get(), style.c_str(), g.seed, &raw), "bench");
      }
      ReportPtr report(raw);
      check(bc_report_write(report.get(), out_dir.c_str()), "bench");
      char* agg = nullptr;
      check(bc_report_csv(report.get(), "aggregate", &agg), "bench");
      std::cout << take(agg);
    } else if (*gen) {
      bc_corpus* raw = nullptr;
      check(bc_corpus_generate(gen_style.c_str(), gen_items, gen_count, g.seed, &raw),
            "gen-corpus");
      CorpusPtr corpus(raw);
      char* text = nullptr;
      check(bc_corpus_to_cats(corpus.get(), &text), "gen-corpus");
      write_output(gen_out, take(text));
    } else if (*fit) {
      bc_corpus* raw = nullptr;
      check(bc_corpus_load_cats(fit_corpus.c_str(), &raw), "fit-prior");
      CorpusPtr corpus(raw);
      if (fit_train) check(bc_corpus_split(corpus.get(), *fit_train, g.seed), "fit-prior");
      bc_prior_model* model_raw = nullptr;
      check(bc_prior_fit(corpus.get(), &model_raw), "fit-prior");
      PriorPtr model(model_raw);
      char* text = nullptr;
      check(bc_prior_to_json(model.get(), &text), "fit-prior");
      write_output(fit_out, take(text));
    } else if (*one) {
      bc_instance* raw = nullptr;
      if (*llg_flag) {
        check(bc_instance_llg(global_mean, global_var, &raw), "run-one");
      } else if (!instance_path.empty()) {
        check(bc_instance_load(instance_path.c_str(), &raw), "run-one");
      } else {
        throw Failure{"run-one: one of --instance or --llg is required"};
      }
      InstancePtr instance(raw);
      if (auction == "vcg") {
        std::size_t n = 0;
        check(bc_instance_num_agents(instance.get(), &n), "run-one");
        std::vector<double> payments(n);
        std::vector<int> available(n);
        int all_cleared = 0;
        check(bc_run_vcg(instance.get(), config.get(), g.seed, payments.data(), available.data(),
                         n, &all_cleared),
              "run-one");
        std::cout << "agent,payment\n";
        for (std::size_t i = 0; i < n; ++i)
          std::cout << i << "," << (available[i] ? fmt(payments[i]) : "") << "\n";
        return all_cleared ? 0 : 2;
      }
      bc_result* res_raw = nullptr;
      if (auction == "clock") {
        if (!(tau > 0.0)) throw Failure{"run-one: --tau > 0 is required for the clock auction"};
        check(bc_run_clock(instance.get(), config.get(), tau, g.seed, &res_raw), "run-one");
      } else {
        check(bc_run_bayesian(instance.get(), config.get(), g.seed, &res_raw), "run-one");
      }
      ResultPtr result(res_raw);
      int cleared = 0, rounds = 0;
      double gap = 0.0;
      std::size_t m = 0;
      check(bc_result_cleared(result.get(), &cleared), "run-one");
      check(bc_result_rounds(result.get(), &rounds), "run-one");
      check(bc_result_objective_gap(result.get(), &gap), "run-one");
      check(bc_result_prices(result.get(), nullptr, 0, &m), "run-one");
      std::vector<double> prices(m);
      check(bc_result_prices(result.get(), prices.data(), m, &m), "run-one");
      std::string price_text;
      for (std::size_t j = 0; j < m; ++j) price_text += (j ? ";" : "") + fmt(prices[j]);
      std::cout << "auction,cleared,rounds,objective_gap,prices\n"
                << auction << "," << cleared << "," << rounds << "," << fmt(gap) << ","
                << price_text << "\n";
      if (!trace_out.empty()) {
        char* json = nullptr;
        check(bc_result_trace_json(result.get(), &json), "run-one");
        write_output(trace_out, take(json));
      }
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.what << "\n";
    return 1;
  }
  return 0;
}
