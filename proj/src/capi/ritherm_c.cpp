#include "ritherm/ritherm.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include <json.hpp>

#include "core/channel.hpp"
#include "core/errors.hpp"
#include "core/experiment.hpp"
#include "core/hamiltonian.hpp"
#include "core/weak_coupling.hpp"

using nlohmann::json;
namespace rt = ritherm;

struct rth_hamiltonian {
  rt::Hamiltonian h;
};

struct rth_generator {
  rt::TransitionGenerator g;
};

namespace {

thread_local std::string g_last_error;

rth_status to_status(rt::ErrorCode c) {
  switch (c) {
    case rt::ErrorCode::InvalidArgument: return RTH_INVALID_ARGUMENT;
    case rt::ErrorCode::Dimension: return RTH_DIMENSION;
    case rt::ErrorCode::Contract: return RTH_CONTRACT;
    case rt::ErrorCode::Numerical: return RTH_NUMERICAL;
    case rt::ErrorCode::Parse: return RTH_PARSE;
    case rt::ErrorCode::Io: return RTH_IO;
    case rt::ErrorCode::Degenerate: return RTH_DEGENERATE;
    case rt::ErrorCode::NonErgodic: return RTH_NON_ERGODIC;
    case rt::ErrorCode::InvalidWindow: return RTH_INVALID_WINDOW;
    case rt::ErrorCode::Internal: return RTH_INTERNAL;
  }
  return RTH_INTERNAL;
}

// Runs f, mapping exceptions onto status codes and the thread-local message.
template <class F>
rth_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const rt::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return RTH_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RTH_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RTH_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) rt::fail(rt::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::filesystem::path dir_or_empty(const char* base_dir) { return base_dir ? std::filesystem::path(base_dir) : std::filesystem::path(); }

rth_status wrap_hamiltonian(rt::Hamiltonian h, rth_hamiltonian** out) {
  *out = new rth_hamiltonian{std::move(h)};
  return RTH_OK;
}

rt::ChannelParams to_params(const rth_channel_params* p) {
  rt::ChannelParams cp;
  cp.alpha = p->alpha;
  cp.t = p->t;
  cp.beta = p->beta;
  cp.gamma = rt::FixedGamma{p->gamma};
  cp.n_samples = p->n_samples;
  cp.seed = p->seed;
  cp.antithetic = p->antithetic != 0;
  return cp;
}

}  // namespace

extern "C" {

const char* rth_version(void) { return "0.1.0"; }

const char* rth_status_string(rth_status status) {
  switch (status) {
    case RTH_OK: return "ok";
    case RTH_INVALID_ARGUMENT: return "invalid argument";
    case RTH_DIMENSION: return "dimension mismatch";
    case RTH_CONTRACT: return "contract violation";
    case RTH_NUMERICAL: return "numerical failure";
    case RTH_PARSE: return "parse error";
    case RTH_IO: return "i/o error";
    case RTH_DEGENERATE: return "degenerate spectrum";
    case RTH_NON_ERGODIC: return "non-ergodic generator";
    case RTH_INVALID_WINDOW: return "invalid window";
    case RTH_INTERNAL: return "internal error";
    case RTH_CHECK_FAILED: return "check failed";
  }
  return "unknown status";
}

const char* rth_last_error(void) { return g_last_error.c_str(); }

void rth_string_free(char* s) { std::free(s); }

rth_status rth_hamiltonian_from_eigenvalues(const double* eigenvalues, size_t n, rth_hamiltonian** out) {
  return guarded([&] {
    need(out, "out");
    need(eigenvalues, "eigenvalues");
    rt::require(n >= 1, "need at least one eigenvalue", rt::ErrorCode::Dimension);
    return wrap_hamiltonian(rt::Hamiltonian::from_eigenvalues(std::vector<double>(eigenvalues, eigenvalues + n)), out);
  });
}

rth_status rth_hamiltonian_qubit(double gap, rth_hamiltonian** out) {
  return guarded([&] {
    need(out, "out");
    return wrap_hamiltonian(rt::make_qubit(gap), out);
  });
}

rth_status rth_hamiltonian_harmonic(size_t dim, double gap, rth_hamiltonian** out) {
  return guarded([&] {
    need(out, "out");
    return wrap_hamiltonian(rt::make_harmonic(dim, gap), out);
  });
}

rth_status rth_hamiltonian_from_json(const char* text, const char* base_dir, rth_hamiltonian** out) {
  return guarded([&] {
    need(out, "out");
    need(text, "json");
    return wrap_hamiltonian(rt::build_system(json::parse(text), dir_or_empty(base_dir)), out);
  });
}

void rth_hamiltonian_free(rth_hamiltonian* h) { delete h; }

size_t rth_hamiltonian_dim(const rth_hamiltonian* h) { return h ? h->h.dim() : 0; }

rth_status rth_hamiltonian_eigenvalues(const rth_hamiltonian* h, double* out) {
  return guarded([&] {
    need(h, "hamiltonian");
    need(out, "out");
    for (std::size_t i = 0; i < h->h.dim(); ++i) out[i] = h->h.eigenvalue(i);
    return RTH_OK;
  });
}

rth_status rth_delta_min(const rth_hamiltonian* h, double* out) {
  return guarded([&] {
    need(h, "hamiltonian");
    need(out, "out");
    *out = rt::spectral_profile(h->h).delta_min;
    return RTH_OK;
  });
}

rth_status rth_gibbs_probabilities(const rth_hamiltonian* h, double beta, double* out) {
  return guarded([&] {
    need(h, "hamiltonian");
    need(out, "out");
    const rt::RealVector p = rt::gibbs_probabilities(h->h, beta);
    for (Eigen::Index i = 0; i < p.size(); ++i) out[i] = p(i);
    return RTH_OK;
  });
}

rth_status rth_generator_fixed(const rth_hamiltonian* h, double beta, double gamma, double alpha, double t,
                               int include_off_resonance, rth_generator** out) {
  return guarded([&] {
    need(h, "hamiltonian");
    need(out, "out");
    *out = new rth_generator{include_off_resonance ? rt::build_full_T(h->h, beta, gamma, alpha, t)
                                                   : rt::build_T(h->h, beta, gamma, alpha, t)};
    return RTH_OK;
  });
}

rth_status rth_generator_expected(const rth_hamiltonian* h, double beta, double alpha, double t, rth_gamma_mode mode,
                                  double lo, double hi, rth_generator** out) {
  return guarded([&] {
    need(h, "hamiltonian");
    need(out, "out");
    rt::ExpectationMode m;
    if (mode == RTH_GAMMA_UNIFORM) {
      m = rt::UniformWindow{lo, hi};
    } else if (mode == RTH_GAMMA_PERFECT_KNOWLEDGE) {
      m = rt::PerfectKnowledge{};
    } else {
      rt::fail(rt::ErrorCode::InvalidArgument, "unknown gamma mode");
    }
    *out = new rth_generator{rt::build_expected_T(h->h, beta, alpha, t, m)};
    return RTH_OK;
  });
}

void rth_generator_free(rth_generator* g) { delete g; }

size_t rth_generator_dim(const rth_generator* g) { return g ? g->g.dim() : 0; }

rth_status rth_generator_matrix(const rth_generator* g, double* out) {
  return guarded([&] {
    need(g, "generator");
    need(out, "out");
    std::memcpy(out, g->g.T.data(), sizeof(double) * static_cast<std::size_t>(g->g.T.size()));
    return RTH_OK;
  });
}

rth_status rth_generator_gap(const rth_generator* g, double* absolute_gap, double* rescaled_gap) {
  return guarded([&] {
    need(g, "generator");
    const rt::GapReport r = rt::spectral_gap(g->g);
    if (absolute_gap) *absolute_gap = r.absolute_gap;
    if (rescaled_gap) *rescaled_gap = r.rescaled_gap;
    return RTH_OK;
  });
}

rth_status rth_generator_fixed_point(const rth_generator* g, double* out) {
  return guarded([&] {
    need(g, "generator");
    need(out, "out");
    const rt::RealVector p = rt::fixed_point(g->g);
    for (Eigen::Index i = 0; i < p.size(); ++i) out[i] = p(i);
    return RTH_OK;
  });
}

rth_status rth_generator_json(const rth_generator* g, char** out_json) {
  return guarded([&] {
    need(g, "generator");
    need(out_json, "out_json");
    *out_json = dup_string(rt::generator_to_json(g->g).dump());
    return RTH_OK;
  });
}

rth_channel_params rth_channel_params_default(void) {
  rth_channel_params p;
  p.alpha = 0.0;
  p.t = 1.0;
  p.beta = 1.0;
  p.gamma = 1.0;
  p.n_samples = 1000;
  p.seed = 0;
  p.antithetic = 1;
  return p;
}

rth_status rth_apply_channel(const rth_hamiltonian* h, const rth_channel_params* params, uint64_t interaction,
                             const double* rho_re, const double* rho_im, double* out_re, double* out_im) {
  return guarded([&] {
    need(h, "hamiltonian");
    need(params, "params");
    need(rho_re, "rho_re");
    need(out_re, "out_re");
    const auto n = static_cast<Eigen::Index>(h->h.dim());
    rt::ComplexMatrix rho(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r)
        rho(r, c) = rt::Complex(rho_re[c * n + r], rho_im ? rho_im[c * n + r] : 0.0);
    const rt::ChannelEstimate est =
        rt::apply_channel(h->h, rt::DensityMatrix::checked(rho), to_params(params), interaction);
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r) {
        out_re[c * n + r] = est.mean.matrix()(r, c).real();
        if (out_im) out_im[c * n + r] = est.mean.matrix()(r, c).imag();
      }
    return RTH_OK;
  });
}

rth_status rth_min_interactions(const rth_hamiltonian* h, const rth_channel_params* params, double epsilon,
                                uint64_t max_steps, size_t trials, unsigned threads, uint64_t* steps, int* reached,
                                double* mean_distance) {
  return guarded([&] {
    need(h, "hamiltonian");
    need(params, "params");
    rt::SearchOptions so;
    so.threads = threads == 0 ? 1 : threads;
    const auto res = rt::min_interactions(h->h, rt::DensityMatrix::maximally_mixed(h->h.dim()), to_params(params),
                                          rt::gibbs_state(h->h, params->beta), epsilon, max_steps, trials, so);
    if (steps) *steps = res.steps.value_or(0);
    if (reached) *reached = res.steps.has_value() ? 1 : 0;
    if (mean_distance) *mean_distance = res.mean_distance;
    return RTH_OK;
  });
}

rth_status rth_plan(const char* request_json, const char* base_dir, char** out_json) {
  return guarded([&] {
    need(request_json, "request_json");
    need(out_json, "out_json");
    *out_json = dup_string(rt::plan_report(json::parse(request_json), dir_or_empty(base_dir)).dump());
    return RTH_OK;
  });
}

rth_status rth_markov_report(const char* request_json, const char* base_dir, char** out_json) {
  return guarded([&] {
    need(request_json, "request_json");
    need(out_json, "out_json");
    *out_json = dup_string(rt::markov_report(json::parse(request_json), dir_or_empty(base_dir)).dump());
    return RTH_OK;
  });
}

rth_status rth_run_experiment(const char* config_json, const char* base_dir, const char* overrides_json,
                              char** out_json) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out_json, "out_json");
    json cfg = json::parse(config_json);
    if (overrides_json) cfg.merge_patch(json::parse(overrides_json));
    const rt::ExperimentConfig c = rt::parse_config(cfg, dir_or_empty(base_dir));
    rt::RunOptions opts;
    opts.log = [](const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); };
    const rt::ExperimentResult res = rt::run_experiment(c, opts);
    json meta = res.meta;
    meta["csv_path"] = res.csv_path.string();
    meta["meta_path"] = res.meta_path.string();
    *out_json = dup_string(meta.dump());
    if (!res.ok) {
      g_last_error = "one or more checks failed";
      return RTH_CHECK_FAILED;
    }
    return RTH_OK;
  });
}

rth_status rth_fit_power_law(const double* xs, const double* ys, size_t n, double* slope, double* intercept,
                             double* r2) {
  return guarded([&] {
    need(xs, "xs");
    need(ys, "ys");
    const rt::PowerFit f = rt::fit_power_law(std::vector<double>(xs, xs + n), std::vector<double>(ys, ys + n));
    if (slope) *slope = f.slope;
    if (intercept) *intercept = f.intercept;
    if (r2) *r2 = f.r2;
    return RTH_OK;
  });
}

}  // extern "C"
