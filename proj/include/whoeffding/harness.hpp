#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "json.hpp"
#include "whoeffding/concentration.hpp"
#include "whoeffding/errors.hpp"
#include "whoeffding/functional.hpp"
#include "whoeffding/markov.hpp"
#include "whoeffding/models.hpp"
#include "whoeffding/numerics.hpp"
#include "whoeffding/rng.hpp"
#include "whoeffding/subordinator.hpp"

namespace whoeffding {

struct Interval {
  double lo;
  double hi;
};

/// Exact (Clopper-Pearson) binomial interval for k successes in n trials.
inline Interval clopper_pearson(std::int64_t k, std::int64_t n, double confidence = 0.99) {
  if (n <= 0 || k < 0 || k > n) throw ArgumentError("clopper_pearson needs 0 <= k <= n, n > 0");
  const double a = 1.0 - confidence;
  const double dk = static_cast<double>(k), dn = static_cast<double>(n);
  const double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(dk, dn - dk + 1.0, 0.5 * a);
  const double hi = k == n ? 1.0 : boost::math::ibeta_inv(dk + 1.0, dn - dk, 1.0 - 0.5 * a);
  return {lo, hi};
}

struct TailEstimate {
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
  std::int64_t n = 0;
  std::int64_t exceedances = 0;
  std::uint64_t seed = 0;
  double t = 0.0;
  double eps = 0.0;
};

inline constexpr std::int64_t kMinTailSamples = 100;

/// P_x(|S_{t-1} - pi(f) t| > t eps) for each eps, from the same n replicas.
/// Replica r uses derive_seed(seed, r); counts are summed, so the result does
/// not depend on the number of worker threads.
inline std::vector<TailEstimate> estimate_tails(const ModelSpec& model, const Functional& f, double x0, double t,
                                                const std::vector<double>& eps, std::int64_t n, std::uint64_t seed,
                                                unsigned threads = 0) {
  if (n < kMinTailSamples) throw ArgumentError("estimate_tail needs at least 100 samples");
  if (!(t > 0.0)) throw ArgumentError("t must be > 0");
  for (double e : eps) {
    if (!(e > 0.0)) throw ArgumentError("eps must be > 0");
  }
  double pi_f;
  try {
    pi_f = invariant_mean(model, f);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("pi(f) unavailable: ") + e.what());
  }
  if (!std::isfinite(pi_f)) throw ConfigError("pi(f) unavailable");
  const State start = State::make(x0, model.space());
  const TimeDomain domain = model.time_domain();

  auto deviation = [&](std::uint64_t replica) {
    const auto path = simulate_path(model, start, t, derive_seed(seed, replica));
    return std::fabs(time_average_statistic(path, f, t, domain) - pi_f * t);
  };

  std::vector<std::int64_t> counts(eps.size(), 0);
  auto tally = [&](double dev, std::vector<std::int64_t>& into, std::int64_t weight) {
    for (std::size_t k = 0; k < eps.size(); ++k) {
      if (dev > t * eps[k]) into[k] += weight;
    }
  };

  if (model.kind() == ModelSpec::Kind::Flow) {
    tally(deviation(0), counts, n);  // deterministic path
  } else {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::int64_t>(threads, n));
    std::vector<std::vector<std::int64_t>> partial(threads, std::vector<std::int64_t>(eps.size(), 0));
    auto work = [&](unsigned w) {
      for (auto r = static_cast<std::int64_t>(w); r < n; r += threads) {
        tally(deviation(static_cast<std::uint64_t>(r)), partial[w], 1);
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }
    for (const auto& p : partial) {
      for (std::size_t k = 0; k < eps.size(); ++k) counts[k] += p[k];
    }
  }

  std::vector<TailEstimate> out;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    TailEstimate e;
    e.n = n;
    e.exceedances = counts[k];
    e.p_hat = static_cast<double>(counts[k]) / static_cast<double>(n);
    const auto ci = clopper_pearson(counts[k], n);
    e.ci_lo = std::min(ci.lo, e.p_hat);
    e.ci_hi = std::max(ci.hi, e.p_hat);
    e.seed = seed;
    e.t = t;
    e.eps = eps[k];
    out.push_back(e);
  }
  return out;
}

inline TailEstimate estimate_tail(const ModelSpec& model, const Functional& f, double x0, double t, double eps,
                                  std::int64_t n, std::uint64_t seed, unsigned threads = 0) {
  return estimate_tails(model, f, x0, t, {eps}, n, seed, threads).front();
}

// ---------------------------------------------------------------------------
// Configuration

/// Flat key = value file, '#' starts a comment. Keys:
///   model = flow | ar1 | torus        alpha = 1.5
///   functional = identity | cosine | clipped-distance | constant:<c>
///   x0 = 0.5                          t = 50, 100     eps = 0.2, 0.3
///   samples = 100000                  seed = 7
///   sub = none | unit | poisson:<lambda> | iid:<file.json>
///   gamma = auto | <value>            bound = published | scale-consistent
///   out = results.csv                 format = csv | json
struct ExperimentConfig {
  std::string model = "ar1";
  double alpha = 1.0;
  std::string functional;  // empty: identity on intervals, cosine on the circle
  double x0 = 0.0;
  std::vector<double> t;
  std::vector<double> eps;
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  std::string sub = "none";
  std::optional<double> gamma;
  BoundVariant variant = BoundVariant::Published;
  std::string out;
  std::string format = "csv";
  std::filesystem::path base_dir;  // resolves relative iid: paths
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument("not a finite number");
  return d;
}

inline std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_real(item));
  }
  return out;
}

inline std::uint64_t parse_unsigned(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) throw std::invalid_argument("not an unsigned integer");
  return std::stoull(v);
}

}  // namespace detail

/// Parses the subordinator selector used by the CLI and config files.
inline std::optional<SubordinatorSpec> parse_subordinator(const std::string& spec,
                                                          const std::filesystem::path& base_dir = {}) {
  if (spec.empty() || spec == "none") return std::nullopt;
  if (spec == "unit") return SubordinatorSpec::unit();
  if (spec.rfind("poisson:", 0) == 0) return SubordinatorSpec::poisson(detail::parse_real(spec.substr(8)));
  if (spec.rfind("iid:", 0) == 0) {
    std::filesystem::path p = spec.substr(4);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open step law file '" + p.string() + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("step law file '" + p.string() + "': " + e.what());
    }
    return SubordinatorSpec::discrete_iid(DiscreteMeasure::from_json(j));
  }
  throw ConfigError("unknown subordinator '" + spec + "' (none, unit, poisson:<lambda>, iid:<file.json>)");
}

inline ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  ExperimentConfig cfg;
  std::string raw;
  int line_no = 0;
  std::vector<std::string> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    auto fail = [&](const std::string& msg) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
    };
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) fail("missing key");
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) fail("duplicate key '" + key + "'");
    seen.push_back(key);
    try {
      if (key == "model") {
        if (value != "flow" && value != "ar1" && value != "torus") fail("model must be flow, ar1 or torus");
        cfg.model = value;
      } else if (key == "alpha") {
        cfg.alpha = detail::parse_real(value);
      } else if (key == "functional") {
        cfg.functional = value;
      } else if (key == "x0") {
        cfg.x0 = detail::parse_real(value);
      } else if (key == "t") {
        cfg.t = detail::parse_list(value);
        for (double v : cfg.t) {
          if (!(v > 0.0)) fail("t values must be positive");
        }
      } else if (key == "eps") {
        cfg.eps = detail::parse_list(value);
        for (double v : cfg.eps) {
          if (!(v > 0.0)) fail("eps values must be positive");
        }
      } else if (key == "samples") {
        cfg.samples = static_cast<std::int64_t>(detail::parse_unsigned(value));
        if (cfg.samples < kMinTailSamples) fail("samples must be at least 100");
      } else if (key == "seed") {
        cfg.seed = detail::parse_unsigned(value);
      } else if (key == "sub") {
        cfg.sub = value;
      } else if (key == "gamma") {
        if (value == "auto") {
          cfg.gamma.reset();
        } else {
          cfg.gamma = detail::parse_real(value);
          if (!(*cfg.gamma >= 0.0)) fail("gamma must be >= 0");
        }
      } else if (key == "bound") {
        if (value == "published") {
          cfg.variant = BoundVariant::Published;
        } else if (value == "scale-consistent") {
          cfg.variant = BoundVariant::ScaleConsistent;
        } else {
          fail("bound must be published or scale-consistent");
        }
      } else if (key == "out") {
        cfg.out = value;
      } else if (key == "format") {
        if (value != "csv" && value != "json") fail("format must be csv or json");
        cfg.format = value;
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      fail("invalid value '" + value + "' for '" + key + "'");
    } catch (const std::out_of_range&) {
      fail("value out of range for '" + key + "'");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  auto cfg = parse_config(in, path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

inline ModelSpec build_model(const ExperimentConfig& cfg) {
  auto base = ModelSpec::by_name(cfg.model, cfg.alpha);
  const auto sub = parse_subordinator(cfg.sub, cfg.base_dir);
  return sub ? subordinate_model(base, *sub) : base;
}

inline Functional build_functional(const ExperimentConfig& cfg, const ModelSpec& model) {
  std::string name = cfg.functional;
  if (name.empty()) name = model.space().is_circle() ? "cosine" : "identity";
  return functionals::by_name(name, model.space());
}

struct GammaChoice {
  double value = 0.0;
  std::string source;  // "user", "gamma_bound", "poisson-solution"
  std::string provenance;
  std::optional<GammaReport> report;
};

/// gamma for the bound: the user's value, else gamma_bound when finite, else
/// sup|f_hat| / Lip(f) when the Poisson equation is solvable in closed form.
inline GammaChoice resolve_gamma(const ModelSpec& model, const Functional& f, std::optional<double> user) {
  GammaChoice g;
  if (user) {
    g.value = *user;
    g.source = "user";
    g.provenance = "supplied in the configuration";
    return g;
  }
  g.report = gamma_bound(model);
  if (g.report->finite()) {
    g.value = g.report->value;
    g.source = "gamma_bound";
    g.provenance = g.report->provenance;
    return g;
  }
  if (const auto sup = exact_fhat_sup(model, f); sup && f.lip > 0.0) {
    g.value = *sup / f.lip;
    g.source = "poisson-solution";
    g.provenance = "gamma diverges (" + g.report->witness +
                   "); the bound only uses gamma through |f_hat| <= Lip(f) gamma, so the closed-form sup|f_hat| / Lip(f) "
                   "is used";
    return g;
  }
  throw ConfigError("gamma is infinite for " + model.name() + " (" + g.report->witness +
                    "); set gamma = <value> explicitly");
}

struct CertifyRow {
  double t = 0.0;
  double eps = 0.0;
  BoundReport bound;
  TailEstimate tail;
  bool pass = true;
  double tightness = 0.0;  // bound / p_hat, inf when p_hat = 0
};

struct CertifyReport {
  std::string model_name;
  std::string functional;
  double lip = 0.0;
  double sup_f = 0.0;
  double x0 = 0.0;
  TimeDomain domain = TimeDomain::Discrete;
  BoundVariant variant = BoundVariant::Published;
  double pi_f = 0.0;
  GammaChoice gamma;
  std::optional<std::pair<std::string, SeriesResult>> integrated_rate;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<CertifyRow> rows;
  bool all_pass = true;
};

/// The rate r with W(P^s(x,.), pi) <= c(x) r(s) for the base of a subordinated model.
inline std::optional<RateFunction> base_rate(const ModelSpec& model) {
  switch (model.root().kind()) {
    case ModelSpec::Kind::Flow:
      return model.alpha() == 1.0 ? RateFunction::exp_decay(1.0) : RateFunction::poly_decay(model.alpha());
    case ModelSpec::Kind::Ar1Binary: return RateFunction::exp_decay(std::numbers::ln2);
    default: return std::nullopt;
  }
}

/// Bound vs Monte Carlo tail on every (t, eps) grid point; a point passes when
/// the lower 99% confidence limit does not exceed the bound.
inline CertifyReport certify(const ExperimentConfig& cfg, unsigned threads = 0) {
  const ModelSpec model = build_model(cfg);
  const Functional f = build_functional(cfg, model);
  CertifyReport rep;
  rep.model_name = model.name();
  rep.functional = f.name;
  rep.lip = f.lip;
  rep.sup_f = f.sup_norm;
  rep.x0 = model.require_state(cfg.x0);
  rep.domain = model.time_domain();
  rep.variant = cfg.variant;
  rep.pi_f = invariant_mean(model, f);
  rep.samples = cfg.samples;
  rep.seed = cfg.seed;
  rep.gamma = resolve_gamma(model, f, cfg.gamma);
  if (model.subordinated()) {
    if (const auto r = base_rate(model)) {
      rep.integrated_rate.emplace(r->name(), integrated_rate(model.subordinator(), *r, model.time_domain()));
    }
  }
  for (std::size_t i = 0; i < cfg.t.size(); ++i) {
    // one replica stream per t, shared by all eps at that t
    const auto tails = estimate_tails(model, f, rep.x0, cfg.t[i], cfg.eps, cfg.samples, derive_seed(cfg.seed, 1000003 + i),
                                      threads);
    for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
      CertifyRow row;
      row.t = cfg.t[i];
      row.eps = cfg.eps[k];
      row.bound = hoeffding_bound({f.lip, f.sup_norm, rep.gamma.value, row.eps, row.t, rep.domain, cfg.variant});
      row.tail = tails[k];
      row.tail.seed = cfg.seed;
      row.pass = row.tail.ci_lo <= row.bound.bound;
      row.tightness = row.tail.p_hat > 0.0 ? row.bound.bound / row.tail.p_hat : std::numeric_limits<double>::infinity();
      rep.all_pass = rep.all_pass && row.pass;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

inline constexpr const char* kCertifyCsvHeader =
    "model,x0,t,eps,lip,sup_f,gamma,domain,bound,regime,p_hat,ci_lo,ci_hi,n,seed,pass,tightness";

inline void write_certify_csv(const CertifyReport& rep, std::ostream& os) {
  os << kCertifyCsvHeader << '\n';
  for (const auto& r : rep.rows) {
    os << rep.model_name << ',' << format_real(rep.x0) << ',' << format_real(r.t) << ',' << format_real(r.eps) << ','
       << format_real(rep.lip) << ',' << format_real(rep.sup_f) << ',' << format_real(rep.gamma.value) << ','
       << to_string(rep.domain) << ',' << format_real(r.bound.bound) << ',' << to_string(r.bound.regime) << ','
       << format_real(r.tail.p_hat) << ',' << format_real(r.tail.ci_lo) << ',' << format_real(r.tail.ci_hi) << ','
       << r.tail.n << ',' << rep.seed << ',' << (r.pass ? "true" : "false") << ',' << format_real(r.tightness) << '\n';
  }
}

inline nlohmann::json series_json(const SeriesResult& s) {
  return {{"status", to_string(s.status)}, {"value", format_real(s.value)},  {"partial", s.partial},
          {"tail", s.tail_estimate},      {"error", s.error_estimate},       {"blocks", s.blocks}};
}

inline nlohmann::json gamma_json(const GammaReport& g) {
  nlohmann::json j = {{"value", format_real(g.value)},
                      {"status", to_string(g.status)},
                      {"argmax", g.argmax},
                      {"horizon", g.horizon},
                      {"head", g.head},
                      {"tail", g.tail},
                      {"grid_correction", g.grid_correction},
                      {"series", g.series},
                      {"provenance", g.provenance}};
  if (!g.witness.empty()) j["witness"] = g.witness;
  if (g.rate_series) j["rate_series"] = series_json(*g.rate_series);
  return j;
}

inline nlohmann::json certify_json(const CertifyReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"t", r.t},
                    {"eps", r.eps},
                    {"bound", r.bound.bound},
                    {"theta_star", r.bound.theta_star},
                    {"regime", to_string(r.bound.regime)},
                    {"p_hat", r.tail.p_hat},
                    {"ci_lo", r.tail.ci_lo},
                    {"ci_hi", r.tail.ci_hi},
                    {"exceedances", r.tail.exceedances},
                    {"n", r.tail.n},
                    {"pass", r.pass},
                    {"tightness", format_real(r.tightness)}});
  }
  nlohmann::json gamma = {{"value", rep.gamma.value}, {"source", rep.gamma.source}, {"provenance", rep.gamma.provenance}};
  if (rep.gamma.report) gamma["report"] = gamma_json(*rep.gamma.report);
  nlohmann::json j = {{"model", rep.model_name},
                      {"functional", {{"name", rep.functional}, {"lip", rep.lip}, {"sup_norm", rep.sup_f}}},
                      {"x0", rep.x0},
                      {"domain", to_string(rep.domain)},
                      {"bound_variant", to_string(rep.variant)},
                      {"pi_f", rep.pi_f},
                      {"gamma", gamma},
                      {"samples", rep.samples},
                      {"seed", rep.seed},
                      {"confidence", 0.99},
                      {"rows", rows},
                      {"all_pass", rep.all_pass}};
  if (rep.integrated_rate) {
    j["integrated_rate"] = series_json(rep.integrated_rate->second);
    j["integrated_rate"]["rate"] = rep.integrated_rate->first;
  }
  return j;
}

/// certify() plus output: CSV at `out` with a JSON sidecar at `out`.json, or
/// the JSON report alone for format = json. Without `out`, writes to `os`.
inline CertifyReport run_experiment(const ExperimentConfig& cfg, std::ostream& os, unsigned threads = 0) {
  const auto rep = certify(cfg, threads);
  auto open = [](const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path + "'");
    return f;
  };
  if (cfg.format == "json") {
    const std::string text = certify_json(rep).dump(2) + "\n";
    if (cfg.out.empty()) {
      os << text;
    } else {
      auto f = open(cfg.out);
      f << text;
    }
    return rep;
  }
  if (cfg.out.empty()) {
    write_certify_csv(rep, os);
    return rep;
  }
  {
    auto f = open(cfg.out);
    write_certify_csv(rep, f);
  }
  auto side = open(cfg.out + ".json");
  side << certify_json(rep).dump(2) << '\n';
  return rep;
}

inline CertifyReport run_experiment(const std::filesystem::path& config_file, std::ostream& os, unsigned threads = 0) {
  return run_experiment(load_config(config_file), os, threads);
}

}  // namespace whoeffding
