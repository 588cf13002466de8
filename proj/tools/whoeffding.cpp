// whoeffding: evaluate and certify the Hoeffding bound for the example models.
//
//   whoeffding bound   --lip 1 --sup 1 --gamma 1 --eps 0.5 --t 100
//   whoeffding certify --config configs/ar1.conf
//   whoeffding tail    --model torus --sub poisson:1 --t 50 --eps 0.2 --samples 100000
//
// Exit status: 0 on success, 2 when a certification or check fails, 1 on error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "whoeffding/whoeffding.hpp"

namespace wh = whoeffding;
using nlohmann::json;

namespace {

constexpr int kExitFail = 2;

struct Options {
  std::string config;
  std::string model = "ar1";
  double alpha = 1.0;
  std::string functional;
  double x0 = 0.0;
  std::vector<double> t;
  std::vector<double> eps;
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  std::string sub = "none";
  std::string gamma = "auto";
  std::string variant = "published";
  std::string out;
  std::string format = "csv";
  // command specific
  double lip = -1.0, sup = -1.0;
  std::string domain;
  double horizon = -1.0;
  double trunc = 60.0;
  std::string phi = "v";
  double kappa = 1.0, rho = 0.5, eps_iv = 0.5;
  std::string psi;
  double rho_r2 = 2.0;
  unsigned threads = 0;
};

struct Registered {
  CLI::Option* model;
  CLI::Option* alpha;
  CLI::Option* functional;
  CLI::Option* x0;
  CLI::Option* t;
  CLI::Option* eps;
  CLI::Option* samples;
  CLI::Option* seed;
  CLI::Option* sub;
  CLI::Option* gamma;
  CLI::Option* variant;
  CLI::Option* out;
  CLI::Option* format;
};

Registered add_common(CLI::App* app, Options& o) {
  Registered r;
  app->add_option("--config", o.config, "flat key = value experiment file; flags override it");
  r.model = app->add_option("--model", o.model, "flow | ar1 | torus")->check(CLI::IsMember({"flow", "ar1", "torus"}));
  r.alpha = app->add_option("--alpha", o.alpha, "flow exponent in [1, 2)");
  r.functional = app->add_option("--functional", o.functional, "identity | cosine | clipped-distance | constant:<c>");
  r.x0 = app->add_option("--x0", o.x0, "initial state");
  r.t = app->add_option("--t", o.t, "time horizons (comma separated)")->delimiter(',');
  r.eps = app->add_option("--eps", o.eps, "deviation levels (comma separated)")->delimiter(',');
  r.samples = app->add_option("--samples", o.samples, "Monte Carlo replicas (>= 100)");
  r.seed = app->add_option("--seed", o.seed, "base seed");
  r.sub = app->add_option("--sub", o.sub, "none | unit | poisson:<lambda> | iid:<file.json>");
  r.gamma = app->add_option("--gamma", o.gamma, "auto | <value>");
  r.variant = app->add_option("--variant", o.variant, "published | scale-consistent")
                  ->check(CLI::IsMember({"published", "scale-consistent"}));
  r.out = app->add_option("--out", o.out, "output file (default stdout)");
  r.format = app->add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--threads", o.threads, "worker threads (0 = all cores); results do not depend on it");
  return r;
}

// Config file first, then every flag given on the command line.
wh::ExperimentConfig merge(const Options& o, const Registered& r) {
  wh::ExperimentConfig cfg = o.config.empty() ? wh::ExperimentConfig{} : wh::load_config(o.config);
  if (o.config.empty() || r.model->count()) cfg.model = o.model;
  if (r.alpha->count()) cfg.alpha = o.alpha;
  if (r.functional->count()) cfg.functional = o.functional;
  if (r.x0->count()) cfg.x0 = o.x0;
  if (r.t->count()) cfg.t = o.t;
  if (r.eps->count()) cfg.eps = o.eps;
  if (r.samples->count()) cfg.samples = o.samples;
  if (r.seed->count()) cfg.seed = o.seed;
  if (r.sub->count()) cfg.sub = o.sub;
  if (r.gamma->count()) {
    if (o.gamma == "auto") {
      cfg.gamma.reset();
    } else {
      cfg.gamma = std::stod(o.gamma);
    }
  }
  if (r.variant->count()) {
    cfg.variant = o.variant == "published" ? wh::BoundVariant::Published : wh::BoundVariant::ScaleConsistent;
  }
  if (r.out->count()) cfg.out = o.out;
  if (r.format->count()) cfg.format = o.format;
  return cfg;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& os) const {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_field(r[i]);
      os << '\n';
    }
  }
};

void emit(const wh::ExperimentConfig& cfg, const json& j, const Table& table) {
  std::ostringstream text;
  if (cfg.format == "json") {
    text << j.dump(2) << '\n';
  } else {
    table.write(text);
  }
  if (cfg.out.empty()) {
    std::cout << text.str();
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw wh::IoError("cannot write '" + cfg.out + "'");
  f << text.str();
}

std::string num(double v) { return wh::format_real(v); }

int cmd_bound(const Options& o, const Registered& r) {
  auto cfg = merge(o, r);
  if (cfg.t.empty() || cfg.eps.empty()) throw wh::ArgumentError("bound needs --t and --eps");
  double lip, sup, gamma;
  wh::TimeDomain domain = wh::TimeDomain::Discrete;
  json prov;
  if (o.lip >= 0.0) {
    if (o.sup < 0.0 || !cfg.gamma) throw wh::ArgumentError("explicit mode needs --lip, --sup and a numeric --gamma");
    lip = o.lip;
    sup = o.sup;
    gamma = *cfg.gamma;
    prov = "explicit";
  } else {
    const auto model = wh::build_model(cfg);
    const auto f = wh::build_functional(cfg, model);
    const auto g = wh::resolve_gamma(model, f, cfg.gamma);
    lip = f.lip;
    sup = f.sup_norm;
    gamma = g.value;
    domain = model.time_domain();
    prov = {{"model", model.name()}, {"functional", f.name}, {"gamma_source", g.source}, {"provenance", g.provenance}};
  }
  if (!o.domain.empty()) {
    if (o.domain != "discrete" && o.domain != "continuous") throw wh::ArgumentError("--domain is discrete or continuous");
    domain = o.domain == "discrete" ? wh::TimeDomain::Discrete : wh::TimeDomain::Continuous;
  }
  Table tab{{"t", "eps", "lip", "sup_f", "gamma", "domain", "variant", "bound", "theta_star", "regime"}, {}};
  json rows = json::array();
  for (double t : cfg.t) {
    for (double e : cfg.eps) {
      const auto b = wh::hoeffding_bound({lip, sup, gamma, e, t, domain, cfg.variant});
      tab.rows.push_back({num(t), num(e), num(lip), num(sup), num(gamma), wh::to_string(domain),
                          wh::to_string(cfg.variant), num(b.bound), num(b.theta_star), wh::to_string(b.regime)});
      rows.push_back({{"t", t}, {"eps", e}, {"bound", b.bound}, {"theta_star", b.theta_star}, {"regime", wh::to_string(b.regime)}});
    }
  }
  emit(cfg, {{"lip", lip}, {"sup_f", sup}, {"gamma", gamma}, {"domain", wh::to_string(domain)},
             {"variant", wh::to_string(cfg.variant)}, {"source", prov}, {"rows", rows}},
       tab);
  return 0;
}

int cmd_tail(const Options& o, const Registered& r) {
  auto cfg = merge(o, r);
  if (cfg.t.empty() || cfg.eps.empty()) throw wh::ArgumentError("tail needs --t and --eps");
  const auto model = wh::build_model(cfg);
  const auto f = wh::build_functional(cfg, model);
  Table tab{{"model", "x0", "t", "eps", "p_hat", "ci_lo", "ci_hi", "exceedances", "n", "seed"}, {}};
  json rows = json::array();
  for (std::size_t i = 0; i < cfg.t.size(); ++i) {
    const auto tails = wh::estimate_tails(model, f, cfg.x0, cfg.t[i], cfg.eps, cfg.samples,
                                          wh::derive_seed(cfg.seed, 1000003 + i), o.threads);
    for (const auto& e : tails) {
      tab.rows.push_back({model.name(), num(cfg.x0), num(e.t), num(e.eps), num(e.p_hat), num(e.ci_lo), num(e.ci_hi),
                          std::to_string(e.exceedances), std::to_string(e.n), std::to_string(cfg.seed)});
      rows.push_back({{"t", e.t}, {"eps", e.eps}, {"p_hat", e.p_hat}, {"ci_lo", e.ci_lo}, {"ci_hi", e.ci_hi},
                      {"exceedances", e.exceedances}, {"n", e.n}});
    }
  }
  emit(cfg, {{"model", model.name()}, {"functional", f.name}, {"x0", cfg.x0}, {"seed", cfg.seed}, {"rows", rows}}, tab);
  return 0;
}

int cmd_gamma(const Options& o, const Registered& r) {
  auto cfg = merge(o, r);
  const auto model = wh::build_model(cfg);
  wh::GammaReport g;
  if (o.horizon >= 0.0) {
    std::vector<double> grid{model.space().is_circle() ? 0.0 : model.space().lo(), model.space().is_circle() ? 0.0 : model.space().hi()};
    if (model.kind() == wh::ModelSpec::Kind::Ar1Binary) {
      grid.clear();
      for (int i = 0; i <= 64; ++i) grid.push_back(i / 64.0);
    }
    g = wh::gamma_bound(model, grid, o.horizon);
  } else {
    g = wh::gamma_bound(model);
  }
  Table tab{{"model", "gamma", "status", "argmax", "head", "tail", "grid_correction", "provenance", "witness"}, {}};
  tab.rows.push_back({model.name(), num(g.value), wh::to_string(g.status), num(g.argmax), num(g.head), num(g.tail),
                      num(g.grid_correction), g.provenance, g.witness});
  json j = wh::gamma_json(g);
  j["model"] = model.name();
  emit(cfg, j, tab);
  return 0;
}

int cmd_poisson(const Options& o, const Registered& r) {
  auto cfg = merge(o, r);
  const auto model = wh::build_model(cfg);
  const auto f = wh::build_functional(cfg, model);
  const auto sol = wh::poisson_solution(model, f, cfg.x0, o.trunc);
  Table tab{{"model", "functional", "x0", "fhat", "tail_bound", "truncation", "pi_f", "t", "residual", "tolerance", "ok"}, {}};
  json res = json::array();
  bool ok = true;
  const std::vector<std::string> base{model.name(), f.name, num(cfg.x0), num(sol.value), num(sol.tail_bound),
                                      num(sol.truncation), num(sol.pi_f)};
  for (double t : cfg.t) {
    const auto rc = wh::poisson_residual(model, f, cfg.x0, t, o.trunc);
    ok = ok && rc.ok();
    auto row = base;
    row.insert(row.end(), {num(t), num(rc.residual), num(rc.tolerance), rc.ok() ? "true" : "false"});
    tab.rows.push_back(row);
    res.push_back({{"t", t}, {"residual", rc.residual}, {"tolerance", rc.tolerance}, {"ok", rc.ok()}});
  }
  if (cfg.t.empty()) {
    auto row = base;
    row.insert(row.end(), {"", "", "", ""});
    tab.rows.push_back(row);
  }
  emit(cfg, {{"model", model.name()}, {"functional", f.name}, {"x0", cfg.x0}, {"fhat", sol.value},
             {"tail_bound", sol.tail_bound}, {"truncation", sol.truncation}, {"pi_f", sol.pi_f}, {"residuals", res}},
       tab);
  return ok ? 0 : kExitFail;
}

int cmd_check(const Options& o, const Registered& r) {
  auto cfg = merge(o, r);
  const auto model = wh::build_model(cfg);
  wh::DriftSpec drift = wh::DriftSpec::trivial();
  drift.kappa = o.kappa;
  if (o.phi == "sqrt") {
    drift.phi = [](double v) { return std::sqrt(v); };
  } else if (o.phi == "log1p") {
    drift.phi = [](double v) { return std::log1p(v); };
  } else if (o.phi != "v") {
    throw wh::ArgumentError("--phi is v, sqrt or log1p");
  }
  drift.name = "V=1,phi=" + o.phi + ",kappa=" + num(o.kappa);
  wh::ConditionOptions copt;
  copt.times = cfg.t;
  const auto rep = wh::check_conditions(model, drift, o.rho, o.eps_iv, copt);
  Table tab{{"condition", "pass", "value", "detail"}, {}};
  json j = {{"model", model.name()}, {"drift", drift.name}, {"rho", o.rho}, {"epsilon", o.eps_iv}};
  auto add = [&](const char* name, const wh::ConditionCheck& c) {
    tab.rows.push_back({name, c.pass ? "true" : "false", num(c.value), c.detail});
    j[name] = {{"pass", c.pass}, {"value", num(c.value)}, {"detail", c.detail}};
  };
  add("i", rep.bounded_metric);
  add("ii", rep.contraction);
  add("iii", rep.drift);
  add("iv", rep.phi_integral);
  json by_t = json::array();
  for (auto [t, m] : rep.contraction_by_t) by_t.push_back({{"t", t}, {"max_ratio", m}});
  j["contraction_by_t"] = by_t;
  j["phi_inverse_at_one"] = rep.phi_inverse_at_one;
  j["phi_lebesgue"] = wh::series_json(rep.phi_lebesgue);
  if (rep.phi_counting) j["phi_counting"] = wh::series_json(*rep.phi_counting);
  j["all_pass"] = rep.all_pass();
  emit(cfg, j, tab);
  return rep.all_pass() ? 0 : kExitFail;
}

wh::BernsteinFunction parse_psi(const std::string& s) {
  auto arg = [&](std::size_t at) { return std::stod(s.substr(at)); };
  if (s == "log") return wh::BernsteinFunction::geometric_stable();
  if (s.rfind("stable:", 0) == 0) return wh::BernsteinFunction::stable_power(arg(7));
  if (s.rfind("poisson:", 0) == 0) return wh::BernsteinFunction::poisson_exponent(arg(8));
  if (s.rfind("drift:", 0) == 0) return wh::BernsteinFunction::drift_plus_levy(arg(6), {});
  throw wh::ArgumentError("--psi is log, stable:<g>, poisson:<lambda> or drift:<b>");
}

json r2_json(const wh::R2Diagnostic& d) {
  return {{"pass", d.pass},
          {"liminf_log_ratio", num(d.liminf_log_ratio)},
          {"liminf_scaling_ratio", num(d.liminf_scaling_ratio)},
          {"margin_log", num(d.margin_log)},
          {"margin_scaling", num(d.margin_scaling)},
          {"note", d.note}};
}

int cmd_subordinate(const Options& o, const Registered& r) {
  auto cfg = merge(o, r);
  json j;
  Table tab{{"t", "expected_rate", "mean_clock", "w_to_invariant"}, {}};
  std::optional<wh::BernsteinFunction> psi;
  if (!o.psi.empty()) psi = parse_psi(o.psi);
  const auto sub = wh::parse_subordinator(cfg.sub, cfg.base_dir);
  if (sub) {
    const auto base = wh::ModelSpec::by_name(cfg.model, cfg.alpha);
    const auto model = wh::subordinate_model(base, *sub);
    j["model"] = model.name();
    j["domain"] = wh::to_string(model.time_domain());
    j["invariant"] = model.invariant().name();
    const auto rate = wh::base_rate(model);
    if (rate) {
      j["rate"] = rate->name();
      j["integrated_rate"] = wh::series_json(wh::integrated_rate(*sub, *rate, model.time_domain()));
    }
    if (cfg.t.empty()) cfg.t = {0, 1, 2, 4, 8};
    json rows = json::array();
    for (double t : cfg.t) {
      const double er = rate ? wh::expected_rate(*sub, *rate, t) : std::nan("");
      double mean = std::nan("");
      if (sub->integer_valued()) {
        const auto law = wh::subordinator_law(*sub, t);
        mean = 0.0;
        for (std::size_t i = 0; i < law.p.size(); ++i) mean += law.p[i] * static_cast<double>(law.first + static_cast<std::int64_t>(i));
      }
      double w = std::nan("");
      try {
        w = wh::exact_w_to_invariant(model, cfg.x0, t);
      } catch (const wh::ArgumentError&) {
        // beyond the exact-law caps
      }
      tab.rows.push_back({num(t), num(er), num(mean), num(w)});
      rows.push_back({{"t", t}, {"expected_rate", num(er)}, {"mean_clock", num(mean)}, {"w_to_invariant", num(w)}});
    }
    j["rows"] = rows;
    if (!psi) psi = sub->psi();
  } else if (!psi) {
    throw wh::ArgumentError("subordinate needs --sub or --psi");
  }
  if (psi) {
    j["psi"] = psi->name();
    j["R2"] = r2_json(wh::check_R2(*psi, o.rho_r2));
    if (cfg.alpha > 1.0 && cfg.alpha < 2.0) {
      const auto ri = wh::check_rate_integral(*psi, cfg.alpha);
      j["rate_integral"] = wh::series_json(ri.result);
      j["rate_integral"]["note"] = ri.note;
    }
  }
  emit(cfg, j, tab);
  return 0;
}

int cmd_certify(const Options& o, const Registered& r) {
  auto cfg = merge(o, r);
  const auto rep = wh::run_experiment(cfg, std::cout, o.threads);
  return rep.all_pass ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hoeffding bounds for Wasserstein-ergodic Markov models"};
  app.require_subcommand(1);
  Options o;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&, const Registered&);
  };
  const Command commands[] = {
      {"bound", "evaluate the bound over a (t, eps) grid", cmd_bound},
      {"tail", "Monte Carlo tail probabilities with 99% Clopper-Pearson intervals", cmd_tail},
      {"gamma", "integrated Wasserstein distance to the invariant law", cmd_gamma},
      {"poisson", "truncated Poisson-equation solution and residuals", cmd_poisson},
      {"check", "conditions (i)-(iv) on a probe grid", cmd_check},
      {"subordinate", "subordinated model rates and Bernstein diagnostics", cmd_subordinate},
      {"certify", "bound versus Monte Carlo tails; exit 2 on any violation", cmd_certify},
  };
  std::vector<std::pair<CLI::App*, Registered>> subs;
  for (const auto& c : commands) {
    auto* s = app.add_subcommand(c.name, c.help);
    subs.emplace_back(s, add_common(s, o));
    const std::string name = c.name;
    if (name == "bound") {
      s->add_option("--lip", o.lip, "Lipschitz constant (explicit mode)");
      s->add_option("--sup", o.sup, "sup norm (explicit mode)");
      s->add_option("--domain", o.domain, "discrete | continuous");
    } else if (name == "gamma") {
      s->add_option("--horizon", o.horizon, "exact-law horizon");
    } else if (name == "poisson") {
      s->add_option("--trunc", o.trunc, "truncation horizon");
    } else if (name == "check") {
      s->add_option("--phi", o.phi, "v | sqrt | log1p");
      s->add_option("--kappa", o.kappa, "drift constant");
      s->add_option("--rho", o.rho, "contraction probe rho in (0, 1)");
      s->add_option("--eps-iv", o.eps_iv, "epsilon in (0, 1) for condition (iv)");
    } else if (name == "subordinate") {
      s->add_option("--psi", o.psi, "log | stable:<g> | poisson:<lambda> | drift:<b>");
      s->add_option("--rho", o.rho_r2, "rho > 1 for the scaling condition");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i].first->parsed()) return commands[i].run(o, subs[i].second);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "whoeffding: error: %s\n", e.what());
    return 1;
  }
  return 1;
}
