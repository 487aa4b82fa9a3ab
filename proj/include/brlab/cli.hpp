#pragma once

// Experiment runner behind the brlab command: configuration merging,
// dispatch to the verify scans, report assembly and CSV/JSON emission.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "brlab/errors.hpp"
#include "brlab/verify.hpp"

namespace brlab::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

enum Exit : int { exit_pass = 0, exit_fail = 1, exit_config = 2, exit_budget = 3, exit_unwritable = 4 };

// Invalid configuration: unknown key, wrong type or out-of-domain value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- defaults

inline const std::vector<std::string>& experiments() {
  static const std::vector<std::string> names = {"partition",  "reproduce",      "kernel-decay",
                                                 "l2-rate",    "decay-in-j",     "factorization",
                                                 "counterexample", "convergence", "exponent-table"};
  return names;
}

inline json defaults(const std::string& experiment) {
  if (experiment == "partition") return {{"lo", 1e-3}, {"hi", 1e3}, {"count", 10000}, {"tolerance", 1e-12}};
  if (experiment == "reproduce") {
    // tolerance 0: 1e-12 for beta = 1, delta = 0; 1e-6 for beta < 1 or delta < 0; 1e-8 otherwise.
    return {{"beta", 1.5}, {"delta", 0.25}, {"R", 1.0}, {"eta", {0.0, 0.3, 0.6, 0.9}}, {"tolerance", 0.0}};
  }
  if (experiment == "kernel-decay") {
    return {{"n", 2},           {"j", 10},          {"rho_lo", 4.0},        {"rho_hi", 256.0},
            {"samples", 2048},  {"tolerance", 0.15}, {"tail_j", {8, 10, 12}}, {"multiples", {1.0, 2.0, 4.0, 8.0}},
            {"offsets", 9},     {"tail_spread", 3.0}};
  }
  if (experiment == "l2-rate") return {{"j_lo", 4}, {"j_hi", 14}, {"j_ratio", 8}, {"spread", 0.02}, {"ratio_tol", 0.01}};
  if (experiment == "decay-in-j") {
    return {{"family", "gtilde_psi"}, {"n", 2},        {"p", 4.0 / 3.0},   {"j_lo", 4},       {"j_hi", 9},
            {"members", 2},           {"seed", std::uint64_t{1}},     {"width", 2.0},     {"beta", 1.5},     {"delta", 0.25},
            {"alpha", 1.5},           {"bstar_nodes", 8}, {"grid_factor", 8}, {"tolerance", 0.1},
            {"max_points", std::uint64_t{1} << 26}};
  }
  if (experiment == "factorization") {
    return {{"k", 2},       {"N", 0},       {"alpha", 1.5},    {"delta", 0.4},        {"beta", 1.1},
            {"j_lo", 2},    {"j_hi", 8},    {"members", 3},    {"seed", std::uint64_t{7}},           {"bstar_nodes", 24},
            {"golden", 0.0}, {"golden_tol", 0.05}, {"max_points", std::uint64_t{1} << 26}};
  }
  if (experiment == "counterexample") {
    return {{"n", 2},     {"k", 2},          {"epsilon", 0.05},         {"M", {16.0, 32.0, 64.0, 128.0}},
            {"alpha", 0.5}, {"p", 2.0},      {"nodes_transverse", 24},  {"nodes_axial", 64},
            {"tolerance", 0.2}, {"eps_doubling", true}, {"shift_tol", 0.05}};
  }
  if (experiment == "convergence") {
    return {{"n", 1},      {"k", 2},     {"N", 256},    {"L", 1.0},       {"alpha", 1.0},
            {"R", {15.0, 30.0, 60.0, 120.0}}, {"seed", std::uint64_t{3}}, {"modes", 5}, {"band", 3.0}, {"tolerance", 0.1},
            {"max_points", std::uint64_t{1} << 26}};
  }
  if (experiment == "exponent-table") return {{"n", 2}, {"p", {2.0, 2.0}}, {"gamma", json::array()}};
  throw ConfigError("unknown experiment '" + experiment + "'");
}

// ---------------------------------------------------------------- config merging

namespace detail {

inline std::string kind_of(const json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_unsigned() || v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "list of numbers";
  return "value";
}

// Value v is acceptable where the default is d.
inline bool compatible(const json& d, const json& v) {
  if (d.is_boolean()) return v.is_boolean();
  if (d.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (d.is_number_integer()) return v.is_number_integer();
  if (d.is_number()) return v.is_number();
  if (d.is_string()) return v.is_string();
  if (d.is_array()) {
    if (!v.is_array()) return false;
    for (const json& e : v) {
      if (!e.is_number()) return false;
    }
    return true;
  }
  return false;
}

// Parse a flag value according to the type of the default.
inline json parse_flag(const std::string& key, const json& d, const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw ConfigError("--" + key + ": '" + s + "' is not a number");
    return v;
  };
  auto integer = [&](const std::string& s) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw ConfigError("--" + key + ": '" + s + "' is not an integer");
    return v;
  };
  if (d.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("--" + key + ": expected true or false, got '" + text + "'");
  }
  if (d.is_number_unsigned()) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.empty() || text[0] == '-') {
      throw ConfigError("--" + key + ": '" + text + "' is not an unsigned 64-bit integer");
    }
    return static_cast<std::uint64_t>(v);
  }
  if (d.is_number_integer()) return integer(text);
  if (d.is_number()) return number(text);
  if (d.is_string()) return text;
  json list = json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) list.push_back(number(item));
  return list;
}

}  // namespace detail

// defaults <- file object <- flag overrides (flag text keyed by config key).
inline json merge_config(const std::string& experiment, const json& file,
                         const std::map<std::string, std::string>& flags) {
  json cfg = defaults(experiment);
  if (!file.is_null()) {
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (key == "experiment") {
        if (value != experiment) throw ConfigError("config file is for experiment " + value.dump());
        continue;
      }
      if (!cfg.contains(key)) throw ConfigError("config key '" + key + "' does not apply to " + experiment);
      if (!detail::compatible(cfg[key], value)) {
        throw ConfigError("config key '" + key + "' must be a " + detail::kind_of(cfg[key]));
      }
      cfg[key] = cfg[key].is_number_float() && value.is_number() ? json(value.get<double>()) : value;
    }
  }
  for (const auto& [key, text] : flags) {
    if (!cfg.contains(key)) throw ConfigError("option --" + key + " does not apply to " + experiment);
    cfg[key] = detail::parse_flag(key, cfg[key], text);
  }
  return cfg;
}

// ---------------------------------------------------------------- report

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  std::string relation;  // "<=", ">=", "within"
  bool pass = false;
};

struct Report {
  std::string experiment;
  json config;
  std::vector<std::string> columns;
  std::vector<json> records;  // objects keyed by columns
  json fits = json::object();
  json predicted = json::object();
  std::vector<Check> checks;
  double wall_time = 0.0;

  bool pass() const {
    for (const Check& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
  void check(std::string name, double value, double limit, std::string relation, bool ok) {
    checks.push_back({std::move(name), value, limit, std::move(relation), ok});
  }
  void check_le(std::string name, double value, double limit) {
    check(std::move(name), value, limit, "<=", value <= limit);
  }
  void add_fit(const std::string& name, const FitResult& f) {
    fits[name] = {{"slope", f.slope},         {"intercept", f.intercept}, {"residual_rms", f.residual_rms},
                  {"predicted", f.predicted}, {"tolerance", f.tolerance}, {"one_sided", f.one_sided},
                  {"pass", f.pass}};
    check("fit:" + name, f.slope, f.predicted + (f.one_sided ? f.tolerance : 0.0), f.one_sided ? "<=" : "within",
          f.pass);
    if (!f.one_sided) checks.back().limit = f.tolerance;
  }
};

// ---------------------------------------------------------------- experiments

namespace detail {

inline std::vector<double> numbers(const json& v) { return v.get<std::vector<double>>(); }

inline void run_partition(const json& c, Report& r) {
  const PartitionResult p = partition_of_unity(c["lo"].get<double>(), c["hi"].get<double>(), c["count"].get<int>());
  r.columns = {"decade_lo", "decade_hi", "points", "max_residual", "worst_xi"};
  // One record per decade of xi above lo; the endpoint joins the last decade.
  const double lo = c["lo"].get<double>();
  const int decades = std::max(1, static_cast<int>(std::ceil(std::log10(c["hi"].get<double>() / lo) - 1e-9)));
  std::vector<double> worst(static_cast<std::size_t>(decades), -1.0), where(worst.size(), 0.0);
  std::vector<std::size_t> count(worst.size(), 0);
  for (std::size_t i = 0; i < p.xi.size(); ++i) {
    const int d = std::clamp(static_cast<int>(std::floor(std::log10(p.xi[i] / lo) + 1e-9)), 0, decades - 1);
    const auto u = static_cast<std::size_t>(d);
    ++count[u];
    if (p.residual[i] > worst[u]) {
      worst[u] = p.residual[i];
      where[u] = p.xi[i];
    }
  }
  for (std::size_t d = 0; d < worst.size(); ++d) {
    if (count[d] == 0) continue;
    const double dlo = lo * std::pow(10.0, static_cast<double>(d));
    r.records.push_back({{"decade_lo", dlo}, {"decade_hi", 10.0 * dlo}, {"points", count[d]},
                         {"max_residual", worst[d]}, {"worst_xi", where[d]}});
  }
  r.check_le("max_residual", p.max_residual, c["tolerance"].get<double>());
}

inline void run_reproduce(const json& c, Report& r) {
  const double beta = c["beta"].get<double>(), delta = c["delta"].get<double>(), R = c["R"].get<double>();
  double tol = c["tolerance"].get<double>();
  if (tol == 0.0) tol = beta == 1.0 && delta == 0.0 ? 1e-12 : (beta < 1.0 || delta < 0.0 ? 1e-6 : 1e-8);
  r.columns = {"eta", "rel_error", "quad_error", "converged"};
  double worst = 0.0;
  bool converged = true;
  for (double eta : numbers(c["eta"])) {
    const double e[1] = {eta};
    const ReproducingResult res = check_reproducing(beta, delta, R, e);
    worst = std::max(worst, res.max_rel_error);
    converged = converged && res.converged;
    r.records.push_back({{"eta", eta}, {"rel_error", res.max_rel_error}, {"quad_error", res.max_quad_error},
                         {"converged", res.converged}});
  }
  r.predicted["C_beta_delta"] = c_beta_delta(beta, delta);
  r.check_le("max_rel_error", worst, tol);
  r.check("quadrature_converged", converged ? 1.0 : 0.0, 1.0, ">=", converged);
}

inline void run_kernel_decay(const json& c, Report& r) {
  const int n = c["n"].get<int>();
  const KernelEnvelope env = kernel_envelope(n, c["j"].get<int>(), c["rho_lo"].get<double>(),
                                             c["rho_hi"].get<double>(), c["samples"].get<int>(),
                                             c["tolerance"].get<double>());
  r.columns = {"kind", "j", "radius", "value"};
  for (std::size_t i = 0; i < env.peak_radii.size(); ++i) {
    r.records.push_back({{"kind", "peak"}, {"j", c["j"]}, {"radius", env.peak_radii[i]}, {"value", env.peak_values[i]}});
  }
  r.add_fit("envelope", env.fit);
  const std::vector<double> mult = numbers(c["multiples"]);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double jd : numbers(c["tail_j"])) {
    const int j = static_cast<int>(jd);
    const double C = kernel_tail_constant(n, j, mult, c["offsets"].get<int>());
    lo = std::min(lo, C);
    hi = std::max(hi, C);
    r.records.push_back({{"kind", "tail_constant"}, {"j", j}, {"radius", std::ldexp(mult.back(), j)}, {"value", C}});
  }
  r.check_le("tail_constant_spread", hi / lo, c["tail_spread"].get<double>());
}

inline void run_l2_rate(const json& c, Report& r) {
  const int lo = c["j_lo"].get<int>(), hi = c["j_hi"].get<int>(), jr = c["j_ratio"].get<int>();
  if (lo < 1 || hi < lo) throw ConfigError("l2-rate: need 1 <= j_lo <= j_hi");
  r.columns = {"j", "opnorm", "scaled", "ratio_to_previous"};
  double smin = std::numeric_limits<double>::infinity(), smax = 0.0, worst_ratio = 0.0, prev = 0.0;
  for (int j = lo; j <= hi; ++j) {
    const double v = l2_opnorm_g_psi_j(j);
    const double scaled = v * std::exp2(0.5 * j);
    smin = std::min(smin, scaled);
    smax = std::max(smax, scaled);
    const double ratio = j > lo ? v / prev : std::numeric_limits<double>::quiet_NaN();
    if (j > lo && j >= jr) worst_ratio = std::max(worst_ratio, std::fabs(ratio * std::numbers::sqrt2 - 1.0));
    r.records.push_back({{"j", j}, {"opnorm", v}, {"scaled", scaled}, {"ratio_to_previous", ratio}});
    prev = v;
  }
  r.predicted["ratio"] = std::numbers::sqrt2 / 2.0;
  r.check_le("scaled_spread", smax / smin - 1.0, c["spread"].get<double>());
  r.check_le("ratio_deviation", worst_ratio, c["ratio_tol"].get<double>());
}

inline DecayFamily parse_family(const std::string& s) {
  for (DecayFamily f : {DecayFamily::g_psi, DecayFamily::gtilde_psi, DecayFamily::maximal_band, DecayFamily::b_star,
                        DecayFamily::m_j}) {
    if (s == to_string(f)) return f;
  }
  throw ConfigError("family must be one of g_psi, gtilde_psi, maximal_band, b_star, m_j; got '" + s + "'");
}

inline void run_decay(const json& c, Report& r) {
  DecaySpec s;
  s.family = parse_family(c["family"].get<std::string>());
  s.n = c["n"].get<int>();
  s.p = c["p"].get<double>();
  s.j_lo = c["j_lo"].get<int>();
  s.j_hi = c["j_hi"].get<int>();
  s.members = c["members"].get<int>();
  s.seed = c["seed"].get<std::uint64_t>();
  s.annulus_width = c["width"].get<double>();
  s.beta = c["beta"].get<double>();
  s.delta = c["delta"].get<double>();
  s.alpha = c["alpha"].get<double>();
  s.bstar_nodes = c["bstar_nodes"].get<int>();
  s.grid_factor = c["grid_factor"].get<int>();
  s.budget.max_points = c["max_points"].get<std::uint64_t>();
  const DecayScan scan = decay_in_j_scan(s, c["tolerance"].get<double>());
  r.columns = {"j", "N", "ratio", "log2_ratio"};
  for (std::size_t i = 0; i < scan.j.size(); ++i) {
    r.records.push_back({{"j", scan.j[i]}, {"N", scan.N[i]}, {"ratio", scan.ratio[i]}, {"log2_ratio", std::log2(scan.ratio[i])}});
  }
  r.predicted["slope"] = s.predicted();
  r.add_fit(to_string(s.family), scan.fit);
  if (s.family == DecayFamily::m_j) r.fits["m_j"]["note"] = "sign check only";
}

inline void run_factorization(const json& c, Report& r) {
  FactorizationSpec s;
  s.k = c["k"].get<int>();
  s.N = c["N"].get<int>();
  s.alpha = c["alpha"].get<double>();
  s.delta = c["delta"].get<double>();
  s.beta = c["beta"].get<double>();
  s.j_lo = c["j_lo"].get<int>();
  s.j_hi = c["j_hi"].get<int>();
  s.members = c["members"].get<int>();
  s.seed = c["seed"].get<std::uint64_t>();
  s.bstar_nodes = c["bstar_nodes"].get<int>();
  s.budget.max_points = c["max_points"].get<std::uint64_t>();
  const FactorizationScan scan = factorization_scan(s);
  r.columns = {"j", "ratio"};
  for (std::size_t i = 0; i < scan.j.size(); ++i) r.records.push_back({{"j", scan.j[i]}, {"ratio", scan.ratio[i]}});
  r.predicted["max_ratio"] = scan.max_ratio;
  r.check("finite", scan.max_ratio, 0.0, ">=", std::isfinite(scan.max_ratio) && scan.max_ratio > 0.0);
  const double golden = c["golden"].get<double>();
  if (golden > 0.0) {
    const double dev = std::fabs(scan.max_ratio / golden - 1.0);
    r.check_le("golden_deviation", dev, c["golden_tol"].get<double>());
  }
}

inline CounterexampleSpec counterexample_spec(const json& c) {
  CounterexampleSpec s;
  s.n = c["n"].get<int>();
  s.k = c["k"].get<int>();
  s.epsilon = c["epsilon"].get<double>();
  s.M_list = numbers(c["M"]);
  s.alpha = c["alpha"].get<double>();
  s.p = c["p"].get<double>();
  s.nodes_transverse = c["nodes_transverse"].get<int>();
  s.nodes_axial = c["nodes_axial"].get<int>();
  return s;
}

inline void run_counterexample(const json& c, Report& r) {
  const CounterexampleSpec s = counterexample_spec(c);
  const double tol = c["tolerance"].get<double>();
  r.columns = {"epsilon", "M", "R", "abs_B", "re_B", "im_B", "norm"};
  auto record = [&](const CounterexampleSpec& spec, const CounterexampleScan& scan) {
    for (const CounterexamplePoint& pt : scan.points) {
      r.records.push_back({{"epsilon", spec.epsilon}, {"M", pt.M}, {"R", pt.R}, {"abs_B", std::abs(pt.value)},
                           {"re_B", pt.value.real()}, {"im_B", pt.value.imag()}, {"norm", pt.norm}});
    }
  };
  const CounterexampleScan scan = counterexample_scan(s, tol);
  record(s, scan);
  r.predicted["slope"] = s.predicted_slope();
  r.predicted["critical_index"] = exponents::critical_index(s.n, s.k, s.p);
  r.add_fit("abs_B", scan.fit);
  r.add_fit("norm", scan.norm_fit);
  r.check_le("envelope_spread", scan.envelope_spread, 2.0);
  if (c["eps_doubling"].get<bool>()) {
    CounterexampleSpec s2 = s;
    s2.epsilon = 2.0 * s.epsilon;
    if (s2.epsilon > 0.1) throw ConfigError("eps_doubling needs epsilon <= 0.05");
    const CounterexampleScan scan2 = counterexample_scan(s2, tol);
    record(s2, scan2);
    r.fits["abs_B_doubled_epsilon"] = {{"slope", scan2.fit.slope}, {"intercept", scan2.fit.intercept},
                                       {"residual_rms", scan2.fit.residual_rms}};
    r.check_le("epsilon_doubling_shift", std::fabs(scan2.fit.slope - scan.fit.slope), c["shift_tol"].get<double>());
  }
}

inline void run_convergence(const json& c, Report& r) {
  const int n = c["n"].get<int>(), k = c["k"].get<int>(), N = c["N"].get<int>();
  if (k < 1) throw ConfigError("convergence: k must be >= 1");
  Budget b;
  b.max_points = c["max_points"].get<std::uint64_t>();
  check_budget(n, k, N, b);
  const GridSpec g(n, c["L"].get<double>(), N);
  const std::uint64_t seed = c["seed"].get<std::uint64_t>();
  const double band = c["band"].get<double>();
  std::vector<Field> fields;
  for (int i = 0; i < k; ++i) {
    Rng rng(brlab::detail::derive_seed(seed, static_cast<std::uint64_t>(i)));
    fields.push_back(make_band_limited(g, random_modes(g, rng, c["modes"].get<int>(), 0.0, band)));
  }
  const double alpha = c["alpha"].get<double>();
  const std::vector<double> R = numbers(c["R"]);
  const ConvergenceScan scan = convergence_scan(fields, alpha, R, c["tolerance"].get<double>());
  r.columns = {"R", "sup_error", "beyond_band"};
  for (std::size_t i = 0; i < scan.R.size(); ++i) {
    r.records.push_back({{"R", scan.R[i]}, {"sup_error", scan.errors[i]}, {"beyond_band", scan.R[i] > scan.band_radius}});
  }
  r.predicted["band_radius"] = scan.band_radius;
  if (alpha > 0.0) {
    r.predicted["slope"] = -2.0;
    r.add_fit("sup_error", scan.fit);
  } else {
    double worst = 0.0;
    for (std::size_t i = 0; i < scan.R.size(); ++i) {
      if (scan.R[i] > scan.band_radius) worst = std::max(worst, scan.errors[i]);
    }
    r.check("zero_beyond_band", worst, 1e-12 * std::max(scan.scale, 1.0), "<=", scan.zero_beyond_band);
  }
}

inline void run_exponent_table(const json& c, Report& r) {
  const std::vector<double> p = numbers(c["p"]), gamma = numbers(c["gamma"]);
  const ExponentTable t = predict_exponents(c["n"].get<int>(), p, gamma);
  r.columns = {"quantity", "value"};
  auto add = [&](const char* name, double v) {
    r.records.push_back({{"quantity", name}, {"value", v}});
    r.predicted[name] = v;
  };
  add("p_out", t.p_out);
  add("alpha_threshold", t.alpha_threshold);
  add("critical_index", t.critical_index);
  add("sign_change_p", t.sign_change_p);
  if (!gamma.empty()) {
    add("weighted_threshold", t.weighted_threshold);
    add("weighted_gamma", t.weighted_gamma);
  }
}

}  // namespace detail

// Runs one experiment on a merged config. Throws ConfigError, DomainError,
// NyquistError or BudgetError.
inline Report run(const std::string& experiment, const json& config) {
  Report r;
  r.experiment = experiment;
  r.config = config;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (experiment == "partition") detail::run_partition(config, r);
    else if (experiment == "reproduce") detail::run_reproduce(config, r);
    else if (experiment == "kernel-decay") detail::run_kernel_decay(config, r);
    else if (experiment == "l2-rate") detail::run_l2_rate(config, r);
    else if (experiment == "decay-in-j") detail::run_decay(config, r);
    else if (experiment == "factorization") detail::run_factorization(config, r);
    else if (experiment == "counterexample") detail::run_counterexample(config, r);
    else if (experiment == "convergence") detail::run_convergence(config, r);
    else if (experiment == "exponent-table") detail::run_exponent_table(config, r);
    else throw ConfigError("unknown experiment '" + experiment + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// ---------------------------------------------------------------- emission

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void write_string(std::ostream& os, const std::string& s) {
  os << json(s).dump(-1, ' ', false, json::error_handler_t::replace);
}

inline void write_json(std::ostream& os, const json& v, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (const auto& [key, value] : v.items()) {
        if (!first) os << ",\n";
        first = false;
        os << pad;
        write_string(os, key);
        os << ": ";
        write_json(os, value, indent + 2);
      }
      os << "\n" << close << "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        os << "[]";
        return;
      }
      // Arrays of scalars on one line.
      bool scalar = true;
      for (const json& e : v) scalar = scalar && !e.is_structured();
      os << (scalar ? "[" : "[\n");
      bool first = true;
      for (const json& e : v) {
        if (!first) os << (scalar ? ", " : ",\n");
        first = false;
        if (!scalar) os << pad;
        write_json(os, e, indent + 2);
      }
      if (!scalar) os << "\n" << close;
      os << "]";
      return;
    }
    case json::value_t::number_float:
      os << format_double(v.get<double>());
      return;
    case json::value_t::string:
      write_string(os, v.get<std::string>());
      return;
    default:
      os << v.dump();
  }
}

}  // namespace detail

// JSON with doubles at 17 significant digits, line-feed terminated.
inline std::string to_json_text(const json& v) {
  std::ostringstream os;
  detail::write_json(os, v, 0);
  os << "\n";
  return os.str();
}

inline json to_json(const Report& r) {
  json checks = json::array();
  for (const Check& c : r.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"limit", c.limit}, {"pass", c.pass}});
  }
  json records = json::array();
  for (const json& rec : r.records) records.push_back(rec);
  return {{"library", "brlab"},   {"version", kVersion},  {"experiment", r.experiment}, {"config", r.config},
          {"records", records},   {"fits", r.fits},       {"predicted", r.predicted},   {"checks", checks},
          {"pass", r.pass()},     {"wall_time_s", r.wall_time}};
}

namespace detail {

inline std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) {
    const double d = v.get<double>();
    return std::isfinite(d) ? format_double(d) : "nan";
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return v.dump();
}

}  // namespace detail

// One row per record under a header row.
inline std::string to_csv_text(const Report& r) {
  std::ostringstream os;
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
  os << "\n";
  for (const json& rec : r.records) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
      os << (i ? "," : "") << (rec.contains(r.columns[i]) ? detail::csv_cell(rec[r.columns[i]]) : "");
    }
    os << "\n";
  }
  return os.str();
}

// Write to a sibling temporary and rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw OutputError("cannot write " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw OutputError("cannot write " + path.string() + ": " + ec.message());
  }
}

}  // namespace brlab::cli
