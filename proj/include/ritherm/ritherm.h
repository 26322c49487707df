#ifndef RITHERM_H
#define RITHERM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef RTH_BUILDING_LIBRARY
#    define RTH_API __declspec(dllexport)
#  else
#    define RTH_API __declspec(dllimport)
#  endif
#else
#  define RTH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rth_status {
  RTH_OK = 0,
  RTH_INVALID_ARGUMENT = 1,
  RTH_DIMENSION = 2,
  RTH_CONTRACT = 3,
  RTH_NUMERICAL = 4,
  RTH_PARSE = 5,
  RTH_IO = 6,
  RTH_DEGENERATE = 7,
  RTH_NON_ERGODIC = 8,
  RTH_INVALID_WINDOW = 9,
  RTH_INTERNAL = 10,
  RTH_CHECK_FAILED = 11, /* run finished and wrote its outputs, but a check row failed */
} rth_status;

RTH_API const char* rth_version(void);
RTH_API const char* rth_status_string(rth_status status);
/* Message of the most recent failure on the calling thread; empty after a success. */
RTH_API const char* rth_last_error(void);
/* Frees strings returned through char** out parameters. */
RTH_API void rth_string_free(char* s);

/* Matrices cross the boundary as column-major arrays of n*n doubles. */

typedef struct rth_hamiltonian rth_hamiltonian;

RTH_API rth_status rth_hamiltonian_from_eigenvalues(const double* eigenvalues, size_t n, rth_hamiltonian** out);
RTH_API rth_status rth_hamiltonian_qubit(double gap, rth_hamiltonian** out);
RTH_API rth_status rth_hamiltonian_harmonic(size_t dim, double gap, rth_hamiltonian** out);
/* Same formats as the "system" field of an experiment config. */
RTH_API rth_status rth_hamiltonian_from_json(const char* json, const char* base_dir, rth_hamiltonian** out);
RTH_API void rth_hamiltonian_free(rth_hamiltonian* h);
RTH_API size_t rth_hamiltonian_dim(const rth_hamiltonian* h);
/* Sorted ascending; out holds dim entries. */
RTH_API rth_status rth_hamiltonian_eigenvalues(const rth_hamiltonian* h, double* out);
RTH_API rth_status rth_delta_min(const rth_hamiltonian* h, double* out);
/* beta may be INFINITY. */
RTH_API rth_status rth_gibbs_probabilities(const rth_hamiltonian* h, double beta, double* out);

typedef struct rth_generator rth_generator;

typedef enum rth_gamma_mode {
  RTH_GAMMA_UNIFORM = 0,           /* gamma uniform on [lo, hi]; hi < 0 selects 4 ||H|| */
  RTH_GAMMA_PERFECT_KNOWLEDGE = 1, /* gamma drawn from the pair differences */
} rth_gamma_mode;

/* On-resonance generator for a fixed ancilla gap; include_off_resonance adds the off-resonance terms. */
RTH_API rth_status rth_generator_fixed(const rth_hamiltonian* h, double beta, double gamma, double alpha, double t,
                                       int include_off_resonance, rth_generator** out);
RTH_API rth_status rth_generator_expected(const rth_hamiltonian* h, double beta, double alpha, double t,
                                          rth_gamma_mode mode, double lo, double hi, rth_generator** out);
RTH_API void rth_generator_free(rth_generator* g);
RTH_API size_t rth_generator_dim(const rth_generator* g);
RTH_API rth_status rth_generator_matrix(const rth_generator* g, double* out);
RTH_API rth_status rth_generator_gap(const rth_generator* g, double* absolute_gap, double* rescaled_gap);
RTH_API rth_status rth_generator_fixed_point(const rth_generator* g, double* out);
RTH_API rth_status rth_generator_json(const rth_generator* g, char** out_json);

typedef struct rth_channel_params {
  double alpha;
  double t;
  double beta;
  double gamma; /* fixed ancilla gap; use rth_run_experiment for other gamma policies */
  size_t n_samples;
  uint64_t seed;
  int antithetic;
} rth_channel_params;

RTH_API rth_channel_params rth_channel_params_default(void);

/* One Monte Carlo estimate of the channel on rho (re and im parts, column-major). */
RTH_API rth_status rth_apply_channel(const rth_hamiltonian* h, const rth_channel_params* params,
                                     uint64_t interaction, const double* rho_re, const double* rho_im,
                                     double* out_re, double* out_im);

/* Fewest interactions from the maximally mixed state whose mean distance to the Gibbs state is below epsilon.
   *reached is 0 when max_steps is not enough; *mean_distance is then the value at the last evaluated step. */
RTH_API rth_status rth_min_interactions(const rth_hamiltonian* h, const rth_channel_params* params, double epsilon,
                                        uint64_t max_steps, size_t trials, unsigned threads, uint64_t* steps,
                                        int* reached, double* mean_distance);

/* JSON in, JSON out. base_dir resolves relative system files and may be NULL. */
RTH_API rth_status rth_plan(const char* request_json, const char* base_dir, char** out_json);
RTH_API rth_status rth_markov_report(const char* request_json, const char* base_dir, char** out_json);
/* overrides_json (may be NULL) is merged over the config before parsing. Writes <out>/<name>.csv and
   <name>.meta.json and returns the meta document. */
RTH_API rth_status rth_run_experiment(const char* config_json, const char* base_dir, const char* overrides_json,
                                      char** out_json);

RTH_API rth_status rth_fit_power_law(const double* xs, const double* ys, size_t n, double* slope, double* intercept,
                                     double* r2);

#ifdef __cplusplus
}
#endif

#endif
