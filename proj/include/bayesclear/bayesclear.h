#ifndef BAYESCLEAR_H
#define BAYESCLEAR_H

/* C interface to the bayesclear library.
 *
 * Every function returns a bc_status; on failure a description is available
 * from bc_last_error() on the calling thread. Objects are opaque handles
 * released with their matching *_destroy function. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * bc_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BAYESCLEAR_BUILDING_LIBRARY)
#    define BC_API __declspec(dllexport)
#  else
#    define BC_API __declspec(dllimport)
#  endif
#else
#  define BC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bc_status {
  BC_OK = 0,
  BC_INVALID_ARGUMENT = 1,
  BC_DIMENSION_MISMATCH = 2,
  BC_SIZE_LIMIT = 3,
  BC_PARSE = 4,
  BC_IO = 5,
  BC_NUMERIC = 6,
  BC_PRECONDITION = 7,
  BC_INTERNAL = 100
} bc_status;

typedef struct bc_config bc_config;
typedef struct bc_instance bc_instance;
typedef struct bc_result bc_result;
typedef struct bc_corpus bc_corpus;
typedef struct bc_prior_model bc_prior_model;
typedef struct bc_report bc_report;

BC_API const char* bc_version(void);
BC_API const char* bc_last_error(void);
BC_API const char* bc_status_name(bc_status status);
BC_API void bc_string_free(char* text);

/* Configuration shared by auction runs, sweeps and benchmarks. */
BC_API bc_status bc_config_create(bc_config** out);
BC_API void bc_config_destroy(bc_config* config);
BC_API bc_status bc_config_set_beta(bc_config* config, double beta);
BC_API bc_status bc_config_set_variance_floor(bc_config* config, double floor);
BC_API bc_status bc_config_set_round_cap(bc_config* config, int cap);
/* beta <= 0 selects exact best-response bidders (the default). */
BC_API bc_status bc_config_set_bidder_beta(bc_config* config, double beta);
/* gap <= 0 restores the exact clearing check (the default). */
BC_API bc_status bc_config_set_approximate_gap(bc_config* config, double gap);
BC_API bc_status bc_config_set_steps(bc_config* config, int steps);
BC_API bc_status bc_config_set_threads(bc_config* config, int threads);
BC_API bc_status bc_config_set_domain(bc_config* config, int corpora, int instances_per_corpus,
                                      int bids_per_corpus, int training_bids, int num_items,
                                      int num_agents);

/* Instances. */
BC_API bc_status bc_instance_create(int num_items, bc_instance** out);
BC_API bc_status bc_instance_llg(double global_mean, double global_variance, bc_instance** out);
BC_API bc_status bc_instance_from_json(const char* text, bc_instance** out);
BC_API bc_status bc_instance_load(const char* path, bc_instance** out);
BC_API void bc_instance_destroy(bc_instance* instance);
BC_API bc_status bc_instance_add_agent(bc_instance* instance, const int* items, size_t count,
                                       double value);
/* Agents without an explicit prior default to N(value, 0.01). */
BC_API bc_status bc_instance_set_prior(bc_instance* instance, size_t agent, double mean,
                                       double variance);
BC_API bc_status bc_instance_to_json(const bc_instance* instance, char** out);
BC_API bc_status bc_instance_save(const bc_instance* instance, const char* path);
BC_API bc_status bc_instance_num_items(const bc_instance* instance, int* out);
BC_API bc_status bc_instance_num_agents(const bc_instance* instance, size_t* out);

/* Single auction runs. The instance must carry priors for a Bayesian run. */
BC_API bc_status bc_run_bayesian(const bc_instance* instance, const bc_config* config,
                                 uint64_t seed, bc_result** out);
BC_API bc_status bc_run_clock(const bc_instance* instance, const bc_config* config, double tau,
                              uint64_t seed, bc_result** out);
BC_API void bc_result_destroy(bc_result* result);
BC_API bc_status bc_result_cleared(const bc_result* result, int* out);
BC_API bc_status bc_result_rounds(const bc_result* result, int* out);
/* Copies up to `capacity` prices; *count receives the number of items. */
BC_API bc_status bc_result_prices(const bc_result* result, double* prices, size_t capacity,
                                  size_t* count);
BC_API bc_status bc_result_objective_gap(const bc_result* result, double* out);
BC_API bc_status bc_result_trace_json(const bc_result* result, char** out);

/* VCG payments from n + 1 Bayesian trajectories. payments and available must
 * hold one entry per agent; available[i] is 0 when agent i's payment could
 * not be determined. */
BC_API bc_status bc_run_vcg(const bc_instance* instance, const bc_config* config, uint64_t seed,
                            double* payments, int* available, size_t num_agents,
                            int* all_cleared);

/* Bid corpora. style is one of paths, regions, arbitrary, scheduling. */
BC_API bc_status bc_corpus_generate(const char* style, int num_items, int count, uint64_t seed,
                                    bc_corpus** out);
BC_API bc_status bc_corpus_load_cats(const char* path, bc_corpus** out);
BC_API bc_status bc_corpus_to_cats(const bc_corpus* corpus, char** out);
BC_API bc_status bc_corpus_save_cats(const bc_corpus* corpus, const char* path);
BC_API void bc_corpus_destroy(bc_corpus* corpus);
BC_API bc_status bc_corpus_size(const bc_corpus* corpus, size_t* out);
BC_API bc_status bc_corpus_num_items(const bc_corpus* corpus, int* out);
BC_API bc_status bc_corpus_split(bc_corpus* corpus, size_t train_count, uint64_t seed);

/* Value priors fitted on a corpus's training split (all records when no
 * split was made). */
BC_API bc_status bc_prior_fit(const bc_corpus* corpus, bc_prior_model** out);
BC_API bc_status bc_prior_load(const char* path, bc_prior_model** out);
BC_API bc_status bc_prior_to_json(const bc_prior_model* model, char** out);
BC_API bc_status bc_prior_save(const bc_prior_model* model, const char* path);
BC_API void bc_prior_destroy(bc_prior_model* model);
BC_API bc_status bc_prior_predict(const bc_prior_model* model, const int* items, size_t count,
                                  double variance_floor, double* mean, double* variance);

/* LLG prior-variance sweep. biased != 0 fixes the global prior mean at 4,
 * otherwise at 10. rounds and cleared receive one entry per variance. */
BC_API bc_status bc_llg_sweep(const bc_config* config, const double* variances, size_t count,
                              int biased, uint64_t seed, int* rounds, int* cleared);
/* Both sweeps as long-format CSV (figure,series,x,y). */
BC_API bc_status bc_llg_sweep_csv(const bc_config* config, const double* variances,
                                  size_t count, uint64_t seed, char** out);

/* Benchmarks against the clock auction over the configured step grid. */
BC_API bc_status bc_benchmark_synthetic(const bc_config* config, const char* style,
                                        uint64_t seed, bc_report** out);
BC_API bc_status bc_benchmark_cats(const bc_config* config, const char* const* paths,
                                   size_t count, const char* domain, uint64_t seed,
                                   bc_report** out);
BC_API void bc_report_destroy(bc_report* report);
BC_API bc_status bc_report_write(const bc_report* report, const char* directory);
/* which: "runs", "aggregate" or "plot". */
BC_API bc_status bc_report_csv(const bc_report* report, const char* which, char** out);
/* auction: bayes, sio, saoc, saor. stat: instances, cleared, step,
 * mean_rounds_cleared, common_instances, common_q1, common_median,
 * common_q3, common_mean. BC_PRECONDITION when the statistic is undefined. */
BC_API bc_status bc_report_stat(const bc_report* report, const char* auction, const char* stat,
                                double* out);

#ifdef __cplusplus
}
#endif

#endif
