#include "core/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "core/channel.hpp"
#include "core/checks.hpp"
#include "core/errors.hpp"
#include "core/planner.hpp"
#include "core/random.hpp"
#include "core/weak_coupling.hpp"

namespace ritherm {

using nlohmann::json;

namespace {

const std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::Trajectory, "trajectory"},
    {ExperimentKind::MinL, "min-L"},
    {ExperimentKind::SweepT, "sweep-t"},
    {ExperimentKind::SweepBeta, "sweep-beta"},
    {ExperimentKind::SweepEpsilon, "sweep-epsilon"},
    {ExperimentKind::SweepGammaNoise, "sweep-gamma-noise"},
    {ExperimentKind::ValidateWeakCoupling, "validate-weak-coupling"},
    {ExperimentKind::Validate, "validate"},
    {ExperimentKind::HaarChecks, "haar-checks"},
};

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorCode::Parse, where + ": " + what);
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where, "must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) bad(where + "." + key, "unknown field");
}

double get_double(const json& j, const char* key, const std::string& where, double fallback) {
  if (!j.contains(key)) return fallback;
  return json_to_double(j.at(key), where + "." + key);
}

template <class T>
T get_uint(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad(where + "." + key, "must be a nonnegative integer");
  return static_cast<T>(v.get<std::uint64_t>());
}

std::string get_string(const json& j, const char* key, const std::string& where, std::string fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) bad(where + "." + key, "must be a string");
  return j.at(key).get<std::string>();
}

bool get_bool(const json& j, const char* key, const std::string& where, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) bad(where + "." + key, "must be true or false");
  return j.at(key).get<bool>();
}

std::vector<double> get_list(const json& j, const char* key, const std::string& where) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (!v.is_array() || v.empty()) bad(where + "." + key, "must be a nonempty array");
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(json_to_double(v[i], where + "." + key + "[" + std::to_string(i) + "]"));
  return out;
}

json list_json(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(json_number(x));
  return a;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double alpha_from_tilde(double a2, double t, std::size_t dim_s) {
  return std::sqrt(a2 * (2.0 * static_cast<double>(dim_s) + 1.0)) / t;
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (const auto& [kind, name] : kKindNames)
    if (s == name) return kind;
  fail(ErrorCode::Parse, "unknown experiment kind '" + s + "'");
}

bool is_check_kind(ExperimentKind k) {
  return k == ExperimentKind::ValidateWeakCoupling || k == ExperimentKind::Validate || k == ExperimentKind::HaarChecks;
}

Hamiltonian build_system(const json& spec, const std::filesystem::path& base_dir) {
  const std::string where = "config.system";
  if (!spec.is_object()) bad(where, "must be an object");
  if (spec.contains("file")) {
    std::filesystem::path p = get_string(spec, "file", where, "");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return load_hamiltonian(p.string());
  }
  if (spec.contains("format")) return parse_hamiltonian(spec);
  const std::string builder = get_string(spec, "builder", where, "");
  if (builder == "qubit") {
    reject_unknown(spec, where, {"builder", "gap"});
    return make_qubit(get_double(spec, "gap", where, 1.0));
  }
  if (builder == "harmonic") {
    reject_unknown(spec, where, {"builder", "dim", "gap"});
    return make_harmonic(get_uint<std::size_t>(spec, "dim", where, 4), get_double(spec, "gap", where, 1.0));
  }
  if (builder == "random") {
    reject_unknown(spec, where, {"builder", "dim", "seed"});
    return random_nondegenerate(get_uint<std::size_t>(spec, "dim", where, 4), get_uint<std::uint64_t>(spec, "seed", where, 1));
  }
  if (builder.empty()) bad(where, "needs one of 'builder', 'format' or 'file'");
  bad(where + ".builder", "unknown builder '" + builder + "'");
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    const std::string w = "config";
    reject_unknown(j, w,
                   {"name", "kind", "system", "channel", "grid", "t_policy", "alpha_policy", "epsilon", "L", "L_max",
                    "trials", "seed", "threads", "out", "search", "initial", "escalate", "haar_samples",
                    "check_samples", "checkpoint"});
    c.name = get_string(j, "name", w, c.name);
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) bad(w + ".name", "must be a plain file stem");
    if (j.contains("kind")) c.kind = experiment_kind_from_string(get_string(j, "kind", w, ""));
    if (j.contains("system")) c.system = j.at("system");

    if (j.contains("channel")) {
      const json& ch = j.at("channel");
      const std::string cw = w + ".channel";
      reject_unknown(ch, cw,
                     {"alpha", "alpha_tilde_sq", "t", "beta", "gamma", "n_samples", "antithetic", "eigenvalue_stddev"});
      if (ch.contains("alpha") && ch.contains("alpha_tilde_sq")) bad(cw, "give either alpha or alpha_tilde_sq, not both");
      if (ch.contains("alpha")) c.channel.alpha = get_double(ch, "alpha", cw, 0.0);
      if (ch.contains("alpha_tilde_sq")) c.channel.alpha_tilde_sq = get_double(ch, "alpha_tilde_sq", cw, 0.0);
      if (c.channel.alpha && !(*c.channel.alpha >= 0.0)) bad(cw + ".alpha", "must be nonnegative");
      if (c.channel.alpha_tilde_sq && !(*c.channel.alpha_tilde_sq >= 0.0)) bad(cw + ".alpha_tilde_sq", "must be nonnegative");
      c.channel.t = get_double(ch, "t", cw, c.channel.t);
      if (!(c.channel.t > 0.0) || std::isinf(c.channel.t)) bad(cw + ".t", "must be positive and finite");
      c.channel.beta = get_double(ch, "beta", cw, c.channel.beta);
      if (!(c.channel.beta >= 0.0)) bad(cw + ".beta", "must be nonnegative");
      if (ch.contains("gamma")) {
        if (!ch.at("gamma").is_object()) bad(cw + ".gamma", "must be an object");
        c.channel.gamma = ch.at("gamma");
      }
      c.channel.n_samples = get_uint<std::size_t>(ch, "n_samples", cw, c.channel.n_samples);
      if (c.channel.n_samples < 1) bad(cw + ".n_samples", "must be at least 1");
      c.channel.antithetic = get_bool(ch, "antithetic", cw, c.channel.antithetic);
      c.channel.eigenvalue_stddev = get_double(ch, "eigenvalue_stddev", cw, c.channel.eigenvalue_stddev);
      if (!(c.channel.eigenvalue_stddev >= 0.0)) bad(cw + ".eigenvalue_stddev", "must be nonnegative");
    }

    if (j.contains("grid")) {
      const json& g = j.at("grid");
      const std::string gw = w + ".grid";
      reject_unknown(g, gw, {"beta", "epsilon", "sigma", "alpha", "t", "alpha_tilde_sq"});
      c.grid.beta = get_list(g, "beta", gw);
      c.grid.epsilon = get_list(g, "epsilon", gw);
      c.grid.sigma = get_list(g, "sigma", gw);
      c.grid.alpha = get_list(g, "alpha", gw);
      c.grid.t = get_list(g, "t", gw);
      c.grid.alpha_tilde_sq = get_list(g, "alpha_tilde_sq", gw);
      for (double b : c.grid.beta)
        if (!(b >= 0.0)) bad(gw + ".beta", "entries must be nonnegative");
      for (double e : c.grid.epsilon)
        if (!(e > 0.0)) bad(gw + ".epsilon", "entries must be positive");
      for (double s : c.grid.sigma)
        if (!(s >= 0.0)) bad(gw + ".sigma", "entries must be nonnegative");
      for (double t : c.grid.t)
        if (!(t > 0.0) || std::isinf(t)) bad(gw + ".t", "entries must be positive and finite");
      for (double a : c.grid.alpha)
        if (!(a >= 0.0)) bad(gw + ".alpha", "entries must be nonnegative");
      for (double a : c.grid.alpha_tilde_sq)
        if (!(a >= 0.0)) bad(gw + ".alpha_tilde_sq", "entries must be nonnegative");
      if (!c.grid.alpha.empty() && !c.grid.alpha_tilde_sq.empty()) bad(gw, "give either alpha or alpha_tilde_sq, not both");
    }

    if (j.contains("t_policy")) {
      const json& tp = j.at("t_policy");
      const std::string tw = w + ".t_policy";
      reject_unknown(tp, tw, {"kind", "snap_to_period"});
      c.t_policy.kind = get_string(tp, "kind", tw, c.t_policy.kind);
      if (c.t_policy.kind != "fixed" && c.t_policy.kind != "harmonic") bad(tw + ".kind", "must be 'fixed' or 'harmonic'");
      c.t_policy.snap_to_period = get_bool(tp, "snap_to_period", tw, false);
    }
    if (j.contains("alpha_policy")) {
      const json& ap = j.at("alpha_policy");
      const std::string aw = w + ".alpha_policy";
      reject_unknown(ap, aw, {"kind", "c", "alpha_tilde_sq_at_max_epsilon"});
      c.alpha_policy.kind = get_string(ap, "kind", aw, c.alpha_policy.kind);
      if (c.alpha_policy.kind != "fixed" && c.alpha_policy.kind != "cubic") bad(aw + ".kind", "must be 'fixed' or 'cubic'");
      if (ap.contains("c")) c.alpha_policy.c = get_double(ap, "c", aw, 0.0);
      if (ap.contains("alpha_tilde_sq_at_max_epsilon"))
        c.alpha_policy.alpha_tilde_sq_at_max_epsilon = get_double(ap, "alpha_tilde_sq_at_max_epsilon", aw, 0.0);
      const bool has_c = c.alpha_policy.c.has_value();
      const bool has_a2 = c.alpha_policy.alpha_tilde_sq_at_max_epsilon.has_value();
      if (c.alpha_policy.kind == "cubic" && has_c == has_a2)
        bad(aw, "cubic policy needs exactly one of 'c' and 'alpha_tilde_sq_at_max_epsilon'");
    }

    c.epsilon = get_double(j, "epsilon", w, c.epsilon);
    if (!(c.epsilon > 0.0)) bad(w + ".epsilon", "must be positive");
    c.steps = get_uint<std::uint64_t>(j, "L", w, c.steps);
    c.max_steps = get_uint<std::uint64_t>(j, "L_max", w, c.max_steps);
    if (c.max_steps < 1) bad(w + ".L_max", "must be at least 1");
    c.trials = get_uint<std::size_t>(j, "trials", w, c.trials);
    if (c.trials < 1) bad(w + ".trials", "must be at least 1");
    c.seed = get_uint<std::uint64_t>(j, "seed", w, c.seed);
    c.threads = get_uint<unsigned>(j, "threads", w, c.threads);
    if (c.threads < 1) bad(w + ".threads", "must be at least 1");
    c.out = get_string(j, "out", w, c.out);
    c.search = get_string(j, "search", w, c.search);
    if (c.search != "binary" && c.search != "linear") bad(w + ".search", "must be 'binary' or 'linear'");
    if (j.contains("initial")) {
      c.initial = j.at("initial");
      const bool ok = (c.initial.is_string() && c.initial.get<std::string>() == "maximally-mixed") ||
                      (c.initial.is_object() && c.initial.contains("basis") && c.initial.at("basis").is_number_unsigned());
      if (!ok) bad(w + ".initial", "must be \"maximally-mixed\" or {\"basis\": k}");
    }
    if (j.contains("escalate")) {
      const json& e = j.at("escalate");
      const std::string ew = w + ".escalate";
      reject_unknown(e, ew, {"enabled", "max_trials"});
      c.escalate.enabled = get_bool(e, "enabled", ew, c.escalate.enabled);
      c.escalate.max_trials = get_uint<std::size_t>(e, "max_trials", ew, c.escalate.max_trials);
    }
    c.haar_samples = get_uint<std::size_t>(j, "haar_samples", w, c.haar_samples);
    c.check_samples = get_uint<std::size_t>(j, "check_samples", w, c.check_samples);
    if (c.haar_samples < 2) bad(w + ".haar_samples", "must be at least 2");
    if (c.check_samples < 2) bad(w + ".check_samples", "must be at least 2");
    c.checkpoint = get_bool(j, "checkpoint", w, c.checkpoint);

    // Kind-specific requirements.
    const bool needs_system = c.kind != ExperimentKind::Validate && c.kind != ExperimentKind::HaarChecks;
    if (needs_system && c.system.is_null()) bad(w + ".system", "required for kind " + to_string(c.kind));
    const bool coupling_from_grid = !c.grid.alpha.empty() || !c.grid.alpha_tilde_sq.empty() ||
                                    (c.kind == ExperimentKind::SweepEpsilon && c.alpha_policy.kind == "cubic");
    if (needs_system && !c.channel.alpha && !c.channel.alpha_tilde_sq && !coupling_from_grid)
      bad(w + ".channel", "needs alpha or alpha_tilde_sq");
    switch (c.kind) {
      case ExperimentKind::SweepT:
        if (c.grid.t.empty()) bad(w + ".grid.t", "required for sweep-t");
        break;
      case ExperimentKind::SweepBeta:
        if (c.grid.beta.empty()) bad(w + ".grid.beta", "required for sweep-beta");
        break;
      case ExperimentKind::SweepEpsilon:
        if (c.grid.epsilon.empty()) bad(w + ".grid.epsilon", "required for sweep-epsilon");
        break;
      case ExperimentKind::SweepGammaNoise:
        if (c.grid.sigma.empty()) bad(w + ".grid.sigma", "required for sweep-gamma-noise");
        break;
      default:
        break;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  return c;
}

json config_for_record(const ExperimentConfig& c) {
  json ch = {{"t", c.channel.t},
             {"beta", json_number(c.channel.beta)},
             {"gamma", c.channel.gamma},
             {"n_samples", c.channel.n_samples},
             {"antithetic", c.channel.antithetic},
             {"eigenvalue_stddev", c.channel.eigenvalue_stddev}};
  if (c.channel.alpha) ch["alpha"] = *c.channel.alpha;
  if (c.channel.alpha_tilde_sq) ch["alpha_tilde_sq"] = *c.channel.alpha_tilde_sq;
  json grid = json::object();
  auto put = [&](const char* k, const std::vector<double>& v) {
    if (!v.empty()) grid[k] = list_json(v);
  };
  put("beta", c.grid.beta);
  put("epsilon", c.grid.epsilon);
  put("sigma", c.grid.sigma);
  put("alpha", c.grid.alpha);
  put("t", c.grid.t);
  put("alpha_tilde_sq", c.grid.alpha_tilde_sq);
  json ap = {{"kind", c.alpha_policy.kind}};
  if (c.alpha_policy.c) ap["c"] = *c.alpha_policy.c;
  if (c.alpha_policy.alpha_tilde_sq_at_max_epsilon)
    ap["alpha_tilde_sq_at_max_epsilon"] = *c.alpha_policy.alpha_tilde_sq_at_max_epsilon;
  json j = {{"name", c.name},
            {"kind", to_string(c.kind)},
            {"channel", ch},
            {"grid", grid},
            {"t_policy", {{"kind", c.t_policy.kind}, {"snap_to_period", c.t_policy.snap_to_period}}},
            {"alpha_policy", ap},
            {"epsilon", c.epsilon},
            {"L", c.steps},
            {"L_max", c.max_steps},
            {"trials", c.trials},
            {"seed", c.seed},
            {"threads", c.threads},
            {"out", c.out},
            {"search", c.search},
            {"initial", c.initial},
            {"escalate", {{"enabled", c.escalate.enabled}, {"max_trials", c.escalate.max_trials}}},
            {"haar_samples", c.haar_samples},
            {"check_samples", c.check_samples},
            {"checkpoint", c.checkpoint}};
  if (!c.system.is_null()) j["system"] = c.system;
  return j;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  json j = config_for_record(c);
  // Thread count, output location and checkpoint switch do not change the rows.
  j.erase("threads");
  j.erase("out");
  j.erase("checkpoint");
  return fnv1a64(j.dump());
}

std::vector<std::string> sweep_columns() {
  return {"kind",           "label",  "dim_s",         "beta",    "gamma_policy", "sigma",  "alpha",
          "t",              "alpha_tilde_sq", "epsilon", "n_samples", "trials",    "L",      "L_times_t",
          "mean_distance",  "stderr_distance", "reached", "gap_rescaled", "seed"};
}

std::vector<std::string> check_columns() {
  return {"kind", "check", "label", "dim", "value", "expected", "deviation", "allowed", "passed", "seed"};
}

PowerFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), "fit_power_law: length mismatch", ErrorCode::Dimension);
  require(xs.size() >= 3, "fit_power_law: need at least three points");
  const std::size_t n = xs.size();
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(xs[i] > 0.0 && ys[i] > 0.0 && std::isfinite(xs[i]) && std::isfinite(ys[i]),
            "fit_power_law: data must be positive and finite");
    a(i, 0) = std::log(xs[i]);
    a(i, 1) = 1.0;
    b(i) = std::log(ys[i]);
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  PowerFit f{coef(0), coef(1), 1.0};
  const double ss_res = (a * coef - b).squaredNorm();
  const double ss_tot = (b.array() - b.mean()).matrix().squaredNorm();
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

namespace {

struct Point {
  std::string label;
  double beta = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double t = 0.0;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  GammaPolicy gamma;
};

double resolve_alpha(const ChannelSpec& ch, double t, std::size_t dim_s) {
  if (ch.alpha) return *ch.alpha;
  if (ch.alpha_tilde_sq) return alpha_from_tilde(*ch.alpha_tilde_sq, t, dim_s);
  fail(ErrorCode::Parse, "config.channel: needs alpha or alpha_tilde_sq");
}

std::string fmt_g(double v) { return format_number(v); }

std::vector<Point> expand_grid(const ExperimentConfig& c, const Hamiltonian& h) {
  const std::size_t n = h.dim();
  const GammaPolicy base_gamma = policy_from_json(c.channel.gamma, h);
  Point base{"", c.channel.beta, c.epsilon, 0.0, c.channel.t, std::numeric_limits<double>::quiet_NaN(), base_gamma};
  std::vector<Point> pts;
  auto with_coupling = [&](Point p, std::vector<Point>& out) {
    if (!c.grid.alpha.empty()) {
      for (double a : c.grid.alpha) {
        Point q = p;
        q.alpha = a;
        q.label = p.label + (p.label.empty() ? "" : " ") + "alpha=" + fmt_g(a);
        out.push_back(q);
      }
    } else if (!c.grid.alpha_tilde_sq.empty()) {
      for (double a2 : c.grid.alpha_tilde_sq) {
        Point q = p;
        q.alpha = alpha_from_tilde(a2, q.t, n);
        q.label = p.label + (p.label.empty() ? "" : " ") + "alpha_tilde_sq=" + fmt_g(a2);
        out.push_back(q);
      }
    } else {
      p.alpha = resolve_alpha(c.channel, p.t, n);
      if (p.label.empty()) p.label = "alpha=" + fmt_g(p.alpha);
      out.push_back(p);
    }
  };

  switch (c.kind) {
    case ExperimentKind::Trajectory:
    case ExperimentKind::MinL:
      with_coupling(base, pts);
      break;
    case ExperimentKind::SweepT: {
      // Coupling outer, t inner, so each coupling traces one curve.
      std::vector<Point> couplings;
      with_coupling(base, couplings);
      for (std::size_t k = 0; k < couplings.size(); ++k)
        for (double t : c.grid.t) {
          Point p = base;
          p.t = t;
          if (!c.grid.alpha_tilde_sq.empty()) {
            p.alpha = alpha_from_tilde(c.grid.alpha_tilde_sq[k], t, n);
          } else if (!c.grid.alpha.empty()) {
            p.alpha = c.grid.alpha[k];
          } else {
            p.alpha = resolve_alpha(c.channel, t, n);
          }
          p.label = couplings[k].label;
          pts.push_back(p);
        }
      break;
    }
    case ExperimentKind::SweepBeta:
      for (double b : c.grid.beta) {
        Point p = base;
        p.beta = b;
        p.alpha = resolve_alpha(c.channel, p.t, n);
        p.label = "beta=" + fmt_g(b);
        pts.push_back(p);
      }
      break;
    case ExperimentKind::SweepEpsilon: {
      const double delta = spectral_profile(h).delta_min;
      double gap = 1.0;
      if (c.t_policy.kind == "harmonic" && !std::isinf(c.channel.beta))
        gap = spectral_gap(build_T(h, c.channel.beta, delta, 1.0, 1.0)).rescaled_gap;
      for (double e : c.grid.epsilon) {
        Point p = base;
        p.epsilon = e;
        if (c.t_policy.kind == "harmonic") {
          p.t = static_cast<double>(n) / (delta * std::sqrt(e * gap));
          if (c.t_policy.snap_to_period) {
            const double period = 2.0 * M_PI / delta;
            p.t = std::max(1.0, std::round(p.t / period)) * period;
          }
        }
        p.label = "epsilon=" + fmt_g(e);
        pts.push_back(p);
      }
      if (c.alpha_policy.kind == "cubic") {
        double cc = 0.0;
        if (c.alpha_policy.c) {
          cc = *c.alpha_policy.c;
        } else {
          const auto it = std::max_element(pts.begin(), pts.end(),
                                            [](const Point& a, const Point& b) { return a.epsilon < b.epsilon; });
          cc = alpha_from_tilde(*c.alpha_policy.alpha_tilde_sq_at_max_epsilon, it->t, n) * std::pow(it->t, 3);
        }
        for (auto& p : pts) p.alpha = cc / std::pow(p.t, 3);
      } else {
        for (auto& p : pts) p.alpha = resolve_alpha(c.channel, p.t, n);
      }
      break;
    }
    case ExperimentKind::SweepGammaNoise:
      for (double s : c.grid.sigma) {
        Point p = base;
        p.sigma = s;
        p.gamma = eigdiff_policy(h, s);
        p.alpha = resolve_alpha(c.channel, p.t, n);
        p.label = "sigma=" + fmt_g(s);
        pts.push_back(p);
      }
      break;
    default:
      fail(ErrorCode::Internal, "expand_grid: not a sweep kind");
  }
  return pts;
}

double rescaled_gap_for(const Hamiltonian& h, const Point& p) {
  try {
    return std::visit(
        [&](const auto& g) -> double {
          using P = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<P, FixedGamma>) {
            return spectral_gap(build_T(h, p.beta, g.gamma, p.alpha, p.t)).rescaled_gap;
          } else if constexpr (std::is_same_v<P, UniformGamma>) {
            return spectral_gap(build_expected_T(h, p.beta, p.alpha, p.t, UniformWindow{g.lo, g.hi})).rescaled_gap;
          } else if constexpr (std::is_same_v<P, PerfectKnowledgeGamma>) {
            return spectral_gap(build_expected_T(h, p.beta, p.alpha, p.t, PerfectKnowledge{})).rescaled_gap;
          } else {
            return std::numeric_limits<double>::quiet_NaN();
          }
        },
        p.gamma);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

DensityMatrix initial_state(const ExperimentConfig& c, std::size_t n) {
  if (c.initial.is_object()) {
    const auto k = c.initial.at("basis").get<std::size_t>();
    require(k < n, "config.initial.basis: index out of range");
    return DensityMatrix::basis_state(n, k);
  }
  return DensityMatrix::maximally_mixed(n);
}

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double sum = 0.0, sq = 0.0;
  for (double x : xs) {
    sum += x;
    sq += x * x;
  }
  const double m = sum / n;
  const double se = xs.size() > 1 ? std::sqrt(std::max(0.0, (sq / n - m * m) * n / (n - 1.0)) / n) : 0.0;
  return {m, se};
}

double col_value(const CsvTable& t, std::size_t row, const std::string& col) {
  const auto& cols = t.columns();
  const auto it = std::find(cols.begin(), cols.end(), col);
  const std::string& cell = t.row_line(row)[static_cast<std::size_t>(it - cols.begin())];
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  return std::stod(cell);
}

std::vector<std::vector<std::string>> sweep_point_rows(const ExperimentConfig& c, const Hamiltonian& h,
                                                       const Point& p, std::uint64_t row_seed) {
  const std::size_t n = h.dim();
  ChannelParams params;
  params.alpha = p.alpha;
  params.t = p.t;
  params.beta = p.beta;
  params.gamma = p.gamma;
  params.n_samples = c.channel.n_samples;
  params.seed = row_seed;
  params.antithetic = c.channel.antithetic;
  params.eigenvalue_stddev = c.channel.eigenvalue_stddev;
  const DensityMatrix target = gibbs_state(h, p.beta);
  const DensityMatrix rho0 = initial_state(c, n);
  const double a2 = rescaled_coupling_sq(p.alpha, p.t, n);
  const double gap = rescaled_gap_for(h, p);
  const std::string kind = to_string(c.kind);
  const std::string policy = describe(p.gamma);

  auto row = [&](std::size_t trials, std::optional<std::uint64_t> steps, double mean, double se, bool reached) {
    return std::vector<std::string>{kind,
                                    p.label,
                                    format_number(static_cast<std::uint64_t>(n)),
                                    format_number(p.beta),
                                    policy,
                                    format_number(p.sigma),
                                    format_number(p.alpha),
                                    format_number(p.t),
                                    format_number(a2),
                                    format_number(p.epsilon),
                                    format_number(static_cast<std::uint64_t>(c.channel.n_samples)),
                                    format_number(static_cast<std::uint64_t>(trials)),
                                    steps ? format_number(*steps) : "",
                                    steps ? format_number(static_cast<double>(*steps) * p.t) : "",
                                    format_number(mean),
                                    format_number(se),
                                    reached ? "1" : "0",
                                    format_number(gap),
                                    format_number(row_seed)};
  };

  std::vector<std::vector<std::string>> rows;
  if (c.kind == ExperimentKind::Trajectory) {
    const TrajectoryEnsemble ens = run_trajectories(h, rho0, params, c.steps, target, c.trials, c.threads);
    for (std::uint64_t s = 0; s <= c.steps; ++s)
      rows.push_back(row(c.trials, s, ens.mean[s], ens.stderr_mean[s], ens.mean[s] < p.epsilon));
    return rows;
  }

  SearchOptions so;
  so.strategy = c.search == "linear" ? SearchStrategy::Linear : SearchStrategy::Binary;
  so.threads = c.threads;
  std::size_t trials = c.trials;
  MinInteractionsResult res;
  for (;;) {
    res = min_interactions(h, rho0, params, target, p.epsilon, c.max_steps, trials, so);
    if (!c.escalate.enabled || !res.steps || trials >= c.escalate.max_trials) break;
    const auto [m, se] = mean_stderr(res.trial_distances);
    if (se < m / 10.0) break;
    trials = std::min(2 * trials, c.escalate.max_trials);
  }
  const auto [m, se] = mean_stderr(res.trial_distances);
  rows.push_back(row(trials, res.steps, m, se, res.steps.has_value()));
  return rows;
}

std::vector<CheckResult> run_checks(const ExperimentConfig& c, const Hamiltonian* h) {
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> rs) { out.insert(out.end(), rs.begin(), rs.end()); };
  switch (c.kind) {
    case ExperimentKind::ValidateWeakCoupling: {
      const GammaPolicy g = policy_from_json(c.channel.gamma, *h);
      const auto* fixed = std::get_if<FixedGamma>(&g);
      if (!fixed) fail(ErrorCode::Parse, "config.channel.gamma: validate-weak-coupling needs a fixed gamma");
      AgreementOptions o;
      o.beta = c.channel.beta;
      o.gamma = fixed->gamma;
      o.t = c.channel.t;
      o.alpha = resolve_alpha(c.channel, c.channel.t, h->dim());
      o.samples = c.check_samples;
      o.seed = c.seed;
      append(weak_coupling_agreement(*h, o));
      break;
    }
    case ExperimentKind::Validate: {
      append(channel_validity_checks(1000, c.seed));
      FixedPointOptions fo;
      fo.seed = c.seed;
      append(fixed_point_checks(fo));
      append(ground_gap_checks(c.seed));
      append(mixing_bound_checks({0.1, 0.01}));
      AgreementOptions o;
      o.samples = c.check_samples;
      o.seed = c.seed;
      append(weak_coupling_agreement(make_qubit(1.0), o));
      append(weak_coupling_agreement(make_harmonic(3, 1.0), o));
      break;
    }
    case ExperimentKind::HaarChecks: {
      HaarCheckOptions ho;
      ho.samples = c.haar_samples;
      ho.seed = c.seed;
      append(haar_moment_checks(ho));
      Rng rng = make_stream(c.seed, {7});
      std::uniform_real_distribution<double> u(-2.0, 2.0);
      RealVector e(4);
      for (int i = 0; i < 4; ++i) e(i) = u(rng);
      const double x = u(rng), y = u(rng);
      append(heisenberg_product_checks(e, x, y, c.haar_samples, c.seed));
      append(sandwich_checks(e, 0, 1, x, y, c.haar_samples, c.seed));
      append(sandwich_checks(e, 2, 2, x, y, c.haar_samples, c.seed));
      break;
    }
    default:
      fail(ErrorCode::Internal, "run_checks: not a check kind");
  }
  return out;
}

struct Checkpoint {
  std::filesystem::path path;
  std::string hash;
  std::map<std::size_t, std::vector<std::vector<std::string>>> done;
};

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& hash) {
  Checkpoint cp{path, hash, {}};
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    // A torn final line from an interrupted write is skipped.
    if (j.is_discarded() || j.value("hash", std::string()) != hash) continue;
    cp.done[j.at("index").get<std::size_t>()] = j.at("rows").get<std::vector<std::vector<std::string>>>();
  }
  return cp;
}

void append_checkpoint(const Checkpoint& cp, std::size_t index, const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(cp.path, std::ios::app);
  if (!f) fail(ErrorCode::Io, "cannot append to checkpoint " + cp.path.string());
  f << json{{"hash", cp.hash}, {"index", index}, {"rows", rows}}.dump() << '\n';
}

json sweep_fits(const ExperimentConfig& c, const CsvTable& t) {
  json fit = json::object();
  if (c.kind == ExperimentKind::SweepEpsilon) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double lt = col_value(t, i, "L_times_t");
      if (std::isfinite(lt) && lt > 0.0) {
        xs.push_back(1.0 / col_value(t, i, "epsilon"));
        ys.push_back(lt);
      }
    }
    if (xs.size() >= 3) {
      const PowerFit pf = fit_power_law(xs, ys);
      fit = {{"x", "1/epsilon"}, {"y", "L_times_t"}, {"slope", pf.slope}, {"intercept", pf.intercept}, {"r2", pf.r2},
             {"points", xs.size()}};
    } else {
      fit = {{"x", "1/epsilon"}, {"y", "L_times_t"}, {"slope", nullptr}, {"points", xs.size()}};
    }
  } else if (c.kind == ExperimentKind::SweepBeta) {
    std::vector<double> ls;
    bool all = true;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double l = col_value(t, i, "L");
      all = all && std::isfinite(l);
      ls.push_back(l);
    }
    if (all && !ls.empty()) {
      const double mx = *std::max_element(ls.begin(), ls.end());
      std::vector<std::size_t> at_max;
      for (std::size_t i = 0; i < ls.size(); ++i)
        if (ls[i] == mx) at_max.push_back(i);
      const bool interior = ls.size() >= 3 && std::none_of(at_max.begin(), at_max.end(), [&](std::size_t i) {
                              return i == 0 || i + 1 == ls.size();
                            });
      fit = {{"max_L", mx}, {"argmax_beta", list_json([&] {
                std::vector<double> b;
                for (auto i : at_max) b.push_back(col_value(t, i, "beta"));
                return b;
              }())},
             {"interior_maximum", interior}};
    } else {
      fit = {{"interior_maximum", nullptr}, {"note", "some grid points did not reach epsilon"}};
    }
  } else if (c.kind == ExperimentKind::SweepGammaNoise) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double lt = col_value(t, i, "L_times_t");
      if (std::isfinite(lt)) {
        xs.push_back(col_value(t, i, "sigma"));
        ys.push_back(lt);
      }
    }
    if (xs.size() >= 2) {
      Eigen::MatrixXd a(xs.size(), 2);
      Eigen::VectorXd b(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        a(i, 0) = xs[i];
        a(i, 1) = 1.0;
        b(i) = ys[i];
      }
      const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
      fit = {{"x", "sigma"}, {"y", "L_times_t"}, {"linear_slope", coef(0)}, {"nondecreasing_trend", coef(0) >= 0.0}};
    }
  }
  return fit;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c, const RunOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto log = [&](const std::string& s) {
    if (opts.log) opts.log(s);
  };
  ExperimentResult res;
  json meta = {{"schema", kCsvSchemaVersion}, {"config", config_for_record(c)}, {"config_hash", hex64(config_hash(c))}};
  const std::filesystem::path out_dir = c.out.empty() ? std::filesystem::path(".") : std::filesystem::path(c.out);
  res.csv_path = out_dir / (c.name + ".csv");
  res.meta_path = out_dir / (c.name + ".meta.json");

  std::optional<Hamiltonian> h;
  if (!c.system.is_null()) h = build_system(c.system, c.base_dir);

  if (is_check_kind(c.kind)) {
    res.table = CsvTable("check", check_columns());
    const auto checks = run_checks(c, h ? &*h : nullptr);
    json failed = json::array();
    for (const auto& r : checks) {
      res.table.add_row({to_string(c.kind), r.check, r.label, format_number(static_cast<std::uint64_t>(r.dim)),
                         format_number(r.value), format_number(r.expected), format_number(r.deviation),
                         format_number(r.allowed), r.passed ? "1" : "0", format_number(c.seed)});
      if (!r.passed) failed.push_back(r.check + " " + r.label);
    }
    res.ok = failed.empty();
    meta["failed_checks"] = failed;
    log(std::to_string(checks.size() - failed.size()) + "/" + std::to_string(checks.size()) + " checks passed");
  } else {
    res.table = CsvTable("sweep", sweep_columns());
    const auto points = expand_grid(c, *h);
    const std::string hash = hex64(config_hash(c));
    const auto cp_path = out_dir / (c.name + ".checkpoint.jsonl");
    const bool use_cp = c.checkpoint && opts.write_files;
    Checkpoint cp{cp_path, hash, {}};
    if (use_cp) {
      std::filesystem::create_directories(out_dir);
      cp = load_checkpoint(cp_path, hash);
    }
    json walls = json::array();
    std::size_t resumed = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::vector<std::vector<std::string>> rows;
      const auto tp = clock::now();
      if (auto it = cp.done.find(i); it != cp.done.end()) {
        rows = it->second;
        ++resumed;
        log("[" + std::to_string(i + 1) + "/" + std::to_string(points.size()) + "] " + points[i].label + " (resumed)");
      } else {
        rows = sweep_point_rows(c, *h, points[i], derive_seed(c.seed, {i}));
        if (use_cp) append_checkpoint(cp, i, rows);
        log("[" + std::to_string(i + 1) + "/" + std::to_string(points.size()) + "] " + points[i].label +
            (rows.back()[12].empty() ? " not reached" : " L=" + rows.back()[12]));
      }
      walls.push_back(std::chrono::duration<double>(clock::now() - tp).count());
      for (auto& r : rows) res.table.add_row(std::move(r));
    }
    meta["point_wall_seconds"] = walls;
    meta["resumed_points"] = resumed;
    meta["fit"] = sweep_fits(c, res.table);
    if (use_cp) std::filesystem::remove(cp_path);
  }
  meta["table"] = res.table.schema();
  meta["columns"] = res.table.columns();
  meta["rows"] = res.table.size();
  meta["ok"] = res.ok;
  meta["wall_seconds"] = std::chrono::duration<double>(clock::now() - t0).count();
  res.meta = meta;
  if (opts.write_files) {
    write_text_file(res.csv_path, res.table.str());
    write_text_file(res.meta_path, meta.dump(2) + "\n");
  }
  return res;
}

json markov_report(const json& request, const std::filesystem::path& base_dir) {
  const std::string w = "request";
  reject_unknown(request, w, {"system", "channel", "epsilon", "off_resonance"});
  if (!request.contains("system")) bad(w + ".system", "required");
  const Hamiltonian h = build_system(request.at("system"), base_dir);
  const json ch = request.value("channel", json::object());
  const std::string cw = w + ".channel";
  reject_unknown(ch, cw, {"alpha", "alpha_tilde_sq", "t", "beta", "gamma"});
  const double t = get_double(ch, "t", cw, 1.0);
  const double beta = get_double(ch, "beta", cw, 1.0);
  ChannelSpec spec;
  if (ch.contains("alpha")) spec.alpha = get_double(ch, "alpha", cw, 0.0);
  if (ch.contains("alpha_tilde_sq")) spec.alpha_tilde_sq = get_double(ch, "alpha_tilde_sq", cw, 0.0);
  const double alpha = spec.alpha || spec.alpha_tilde_sq ? resolve_alpha(spec, t, h.dim()) : 1e-3;
  const double epsilon = get_double(request, "epsilon", w, 0.05);
  const bool off = get_bool(request, "off_resonance", w, false);
  const GammaPolicy policy = policy_from_json(ch.value("gamma", json{{"kind", "fixed"}}), h);

  TransitionGenerator gen;
  if (const auto* f = std::get_if<FixedGamma>(&policy)) {
    gen = off ? build_full_T(h, beta, f->gamma, alpha, t) : build_T(h, beta, f->gamma, alpha, t);
  } else if (const auto* u = std::get_if<UniformGamma>(&policy)) {
    gen = build_expected_T(h, beta, alpha, t, UniformWindow{u->lo, u->hi});
  } else if (std::holds_alternative<PerfectKnowledgeGamma>(policy)) {
    gen = build_expected_T(h, beta, alpha, t, PerfectKnowledge{});
  } else {
    fail(ErrorCode::InvalidArgument, "markov: no analytic generator for gamma policy " + describe(policy));
  }
  const GapReport gap = spectral_gap(gen);
  const RealVector gibbs = gibbs_probabilities(h, beta);
  json eig = json::array();
  for (const auto& z : gap.markov_eigenvalues) eig.push_back({z.real(), z.imag()});
  json report = {{"system", hamiltonian_to_json(h)},
                 {"generator", generator_to_json(gen)},
                 {"gap", {{"absolute", gap.absolute_gap}, {"rescaled", gap.rescaled_gap}, {"triangular", gap.triangular},
                          {"markov_eigenvalues", eig}}},
                 {"gibbs", std::vector<double>(gibbs.data(), gibbs.data() + gibbs.size())},
                 {"detailed_balance_residual", detailed_balance_residual(gen.T, gibbs)}};
  try {
    const RealVector fp = fixed_point(gen);
    report["fixed_point"] = std::vector<double>(fp.data(), fp.data() + fp.size());
    report["fixed_point_distance"] = (fp - gibbs).cwiseAbs().sum();
  } catch (const Error& e) {
    report["fixed_point"] = nullptr;
    report["fixed_point_error"] = e.what();
  }
  if (gap.absolute_gap > 0.0 && gap.absolute_gap <= 1.0) {
    const JerisonBound jb = jerison_steps(h.dim(), gap.absolute_gap, epsilon);
    report["mixing"] = {{"epsilon", epsilon}, {"steps", jb.steps}, {"bound", jb.bound}, {"j_term", jb.j_term}};
    const double dmin = spectral_profile(h).delta_min;
    report["budget"] = budget_to_json(error_budget(alpha, t, h.dim(), dmin, jb.steps, epsilon));
  } else {
    report["mixing"] = nullptr;
  }
  return report;
}

json plan_report(const json& request, const std::filesystem::path& base_dir) {
  const std::string w = "request";
  reject_unknown(request, w, {"system", "plan"});
  if (!request.contains("system")) bad(w + ".system", "required");
  const Hamiltonian h = build_system(request.at("system"), base_dir);
  const json p = request.value("plan", json::object());
  const std::string pw = w + ".plan";
  reject_unknown(p, pw, {"kind", "beta", "epsilon", "sigma", "multiplier"});
  PlanRequest req;
  req.kind = plan_kind_from_string(get_string(p, "kind", pw, h.dim() == 2 ? "single-qubit" : "harmonic"));
  req.beta = get_double(p, "beta", pw, req.beta);
  req.epsilon = get_double(p, "epsilon", pw, req.epsilon);
  req.sigma = get_double(p, "sigma", pw, req.sigma);
  req.multiplier = get_double(p, "multiplier", pw, req.multiplier);
  json out = plan_to_json(plan_for(h, req));
  out["system"] = hamiltonian_to_json(h);
  return out;
}

}  // namespace ritherm
