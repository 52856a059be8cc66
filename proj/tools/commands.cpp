#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "rdcert/analytic.hpp"

namespace rdcert::app {

namespace {

std::string num(double v, int digits = 10) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

void print_mat(std::ostream& out, const std::string& name, const Mat& m) {
  out << name << " =\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << "   ";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const auto s = num(m(i, j), 8);
      out << std::string(s.size() < 15 ? 15 - s.size() : 1, ' ') << s;
    }
    out << '\n';
  }
}

std::string describe_d(const Mat& d) {
  std::ostringstream os;
  if (d.is_diagonal()) {
    os << "diag(";
    for (std::size_t i = 0; i < d.rows(); ++i) os << (i ? ", " : "") << num(d(i, i), 6);
    os << ')';
  } else {
    os << "full " << d.rows() << "x" << d.cols() << " matrix";
  }
  return os.str();
}

double min_diag(const Mat& d) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.rows(); ++i) m = std::min(m, d(i, i));
  return m;
}

const char* method_title(const std::string& m) {
  if (m == "vertex") return "vertex LMIs (one Lyapunov inequality per envelope vertex)";
  if (m == "composite") return "composite LMI (rank-one box terms with S-procedure multipliers)";
  if (m == "secant") return "secant criterion on the cyclic composite matrix";
  return "Othmer norm condition sup|J|_2 < lambda2 min d";
}

void header(std::ostream& out, const RunConfig& cfg, double l2) {
  out << "model: " << cfg.model.name << " (n = " << cfg.d.rows() << ")\n";
  out << "coupling D = " << describe_d(cfg.d) << '\n';
  if (!std::isnan(l2)) out << "lambda2 = " << num(l2) << "  [" << cfg.lambda2_source() << "]\n";
}

LmiProblem build_lmi(const Envelope& env, const std::string& method, double l2, const Mat& d, Structure st) {
  return method == "composite" ? composite_lmi(env, l2, d, st) : vertex_lmis(env, l2, d, st);
}

// Composite matrix for diagonal P and its cyclic structure, if any.
std::optional<CyclicSpec> cyclic_composite(const Envelope& env, double l2, const Mat& d) {
  if (env.has_cone() || env.base().size() != 1) return std::nullopt;
  const auto prob = composite_lmi(env, l2, d, Structure::kDiagonal);
  return detect_cyclic(prob.constraints.front().m);
}

struct Certified {
  int code = kExitError;
  std::optional<Certificate> cert;
  json report;
};

Certified certify_core(const RunConfig& cfg, std::ostream& out) {
  const Envelope env = cfg.model.build_envelope();
  const double l2 = cfg.lambda2();
  Certified res;
  json& rep = res.report;
  rep["command"] = "certify";
  rep["method"] = cfg.method;
  rep["lambda2"] = l2;
  rep["lambda2_source"] = cfg.lambda2_source();
  header(out, cfg, l2);
  out << "method: " << method_title(cfg.method) << '\n';

  if (cfg.method == "othmer") {
    const auto r = othmer_check(env, l2, cfg.d);
    out << "sup |J|_2 over the envelope = " << num(r.sup_norm) << "  (induced 2-norm, attained at a vertex)\n";
    out << "lambda2 min d = " << num(r.bound) << '\n';
    rep["sup_norm"] = std::isfinite(r.sup_norm) ? json(r.sup_norm) : json("inf");
    rep["bound"] = r.bound;
    if (r.pass) {
      Certificate c;
      c.origin = "vertex";
      c.structure = Structure::kDiagonal;
      c.p = SymMat::identity(env.dim());
      c.epsilon = certified_epsilon(c.p, env, l2, cfg.d);
      c.margin = c.epsilon;
      res.cert = c;
      out << "result: satisfied; P = I certifies the vertex inequalities, epsilon = " << num(c.epsilon) << '\n';
      rep["status"] = "feasible";
      rep["p"] = mat_json(c.p.mat());
      rep["epsilon"] = c.epsilon;
      res.code = kExitOk;
    } else {
      out << "result: not satisfied"
          << (std::isfinite(r.sup_norm) ? " (needs lambda2 min d > " + num(r.sup_norm) + ")" : " (unbounded envelope)")
          << '\n';
      rep["status"] = "infeasible";
      res.code = kExitFailed;
    }
    return res;
  }

  if (cfg.method == "secant") {
    const auto cyc = cyclic_composite(env, l2, cfg.d);
    if (!cyc) throw Unsupported("the secant criterion needs a cyclic composite matrix");
    const auto s = secant_criterion(*cyc);
    out << "cycle length " << cyc->size() << ": ratio = " << num(s.ratio) << ", sec(pi/n)^n = " << num(s.threshold)
        << '\n';
    out << "result: " << (s.pass ? "diagonally stable" : "not diagonally stable") << '\n';
    rep["structure"] = "diagonal";
    rep["ratio"] = s.ratio;
    rep["threshold"] = s.threshold;
    rep["status"] = s.pass ? "feasible" : "infeasible";
    res.code = s.pass ? kExitOk : kExitFailed;
    return res;
  }

  rep["structure"] = to_string(cfg.structure);
  out << "structure: " << to_string(cfg.structure) << " P\n";
  const auto prob = build_lmi(env, cfg.method, l2, cfg.d, cfg.structure);
  for (const auto& note : prob.notes) out << "note: " << note << '\n';
  out << prob.constraints.size() << " constraint(s), " << prob.num_vars() << " unknowns, block size " << prob.dim()
      << '\n';
  const auto r = solve_feasibility(prob, cfg.solver);
  out << "status: " << to_string(r.status) << "  (" << r.iterations << " IPM iterations, normalized margin "
      << num(r.check.normalized_margin, 4) << ")\n";
  if (!r.message.empty()) out << "solver: " << r.message << '\n';
  rep["status"] = to_string(r.status);
  rep["normalized_margin"] = r.check.normalized_margin;
  rep["notes"] = prob.notes;

  if (r.cert) {
    const auto& c = *r.cert;
    if (r.status == Status::kFeasible) {
      print_mat(out, "P", c.p.mat());
      if (!c.q.empty()) {
        out << "q =";
        for (double q : c.q) out << ' ' << num(q, 8);
        out << '\n';
      }
      out << "margin = " << num(c.margin) << ", epsilon = " << num(c.epsilon) << '\n';
      rep["p"] = mat_json(c.p.mat());
      rep["q"] = c.q;
      rep["margin"] = c.margin;
      rep["epsilon"] = c.epsilon;
      res.cert = c;
    }
    json entries = json::array();
    std::size_t shown = 0;
    for (const auto& e : r.check.entries) {
      entries.push_back({{"label", e.label},
                         {"kind", e.kind == ConstraintKind::kStrict ? "strict" : "weak"},
                         {"lambda_max", e.lambda_max},
                         {"ok", e.ok}});
      if (shown++ < 16)
        out << "  " << (e.ok ? "ok  " : "FAIL") << ' ' << e.label << "  lambda_max = " << num(e.lambda_max, 6) << '\n';
    }
    if (shown > 16) out << "  ... " << shown - 16 << " more\n";
    rep["constraints"] = entries;
  }

  if (cfg.method == "composite" && cfg.structure == Structure::kDiagonal) {
    if (const auto cyc = cyclic_composite(env, l2, cfg.d)) {
      const auto s = secant_criterion(*cyc);
      const bool agree = s.pass == (r.status == Status::kFeasible);
      out << "secant criterion: ratio " << num(s.ratio) << " vs " << num(s.threshold) << " -> "
          << (s.pass ? "pass" : "fail") << (agree ? " (agrees with the LMI)" : " (DISAGREES with the LMI)") << '\n';
      rep["secant"] = {{"ratio", s.ratio}, {"threshold", s.threshold}, {"pass", s.pass}, {"agrees", agree}};
    }
  }
  if (cfg.model.name == "fhn" && cfg.d.is_diagonal() && min_diag(cfg.d) > 0.0) {
    const auto f = fhn_certificate(cfg.model.fhn, l2, cfg.d);
    if (f.cert) {
      out << "explicit P = diag(1/c, c): valid, margin " << num(f.cert->margin) << '\n';
      rep["explicit_certificate"] = {{"valid", true}, {"margin", f.cert->margin}};
    } else {
      out << "explicit P = diag(1/c, c): refused, " << f.refusal << '\n';
      rep["explicit_certificate"] = {{"valid", false}, {"reason", f.refusal}};
    }
  }
  res.code = r.status == Status::kFeasible ? kExitOk : r.status == Status::kInfeasible ? kExitFailed : kExitError;
  return res;
}

// Smallest x in [lo, hi] with pred(x) true, to within tol; pred monotone.
// Expands hi by factors of 4 when it was not given.
struct Bracket {
  double lo, hi;
};

Bracket find_bracket(const std::function<bool(double)>& pred, std::optional<double> lo, std::optional<double> hi) {
  Bracket b{lo.value_or(0.0), hi.value_or(1.0)};
  if (pred(b.lo)) throw BracketError("already satisfied at the lower end " + num(b.lo));
  if (!hi) {
    b.hi = std::max(1.0, 2.0 * b.lo);
    for (int k = 0; k < 20 && !pred(b.hi); ++k) {
      b.lo = b.hi;
      b.hi *= 4.0;
    }
  }
  if (!pred(b.hi)) throw BracketError("not satisfied at the upper end " + num(b.hi));
  return b;
}

double bisect(const std::function<bool(double)>& pred, Bracket b, double tol) {
  while (b.hi - b.lo > tol) {
    const double mid = 0.5 * (b.lo + b.hi);
    (pred(mid) ? b.hi : b.lo) = mid;
  }
  return b.hi;
}

struct ThresholdRow {
  std::string method;
  std::string structure;
  double value = std::numeric_limits<double>::quiet_NaN();
  int evaluations = 0;
  std::string error;
};

ThresholdRow threshold_for(const RunConfig& cfg, const Envelope& env, const std::string& method, Structure st) {
  ThresholdRow row;
  row.method = method;
  row.structure = method == "othmer" ? "-" : to_string(st);
  try {
    if (method == "othmer") {
      const auto r = othmer_check(env, 1.0, cfg.d);
      if (!std::isfinite(r.sup_norm)) throw Unsupported("unbounded envelope");
      row.value = r.sup_norm / min_diag(cfg.d);
    } else if (method == "secant") {
      if (!cyclic_composite(env, 1.0, cfg.d)) throw Unsupported("composite matrix is not cyclic");
      auto pred = [&](double l2) {
        ++row.evaluations;
        const auto c = cyclic_composite(env, l2, cfg.d);
        return c && secant_criterion(*c).pass;
      };
      row.value = bisect(pred, find_bracket(pred, cfg.threshold.lo, cfg.threshold.hi), cfg.threshold.tol);
    } else {
      auto feasible = [&](double l2) {
        return solve_feasibility(build_lmi(env, method, l2, cfg.d, st), cfg.solver).status == Status::kFeasible;
      };
      const auto b = find_bracket(feasible, cfg.threshold.lo, cfg.threshold.hi);
      const auto t = threshold_search([&](double l2) { return build_lmi(env, method, l2, cfg.d, st); }, b.lo, b.hi,
                                      cfg.threshold.tol, cfg.solver);
      row.value = t.mu_star;
      row.evaluations = t.evaluations;
    }
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

json row_json(const ThresholdRow& r, const Mat& d) {
  json j = {{"method", r.method}, {"structure", r.structure}, {"evaluations", r.evaluations}};
  if (r.error.empty()) {
    j["lambda2_star"] = r.value;
    j["lambda2_star_min_d"] = r.value * min_diag(d);
  } else {
    j["error"] = r.error;
  }
  return j;
}

// Initial state from the simulation init block.
std::vector<double> make_init(const json& init, std::size_t nodes, std::size_t n, const PdeGrid* grid) {
  if (init.is_null()) throw ConfigError("/simulation/init: missing");
  const auto kind = init["kind"].get<std::string>();
  if (kind == "cosine") {
    if (!grid) throw ConfigError("/simulation/init/kind: cosine initial data needs a PDE grid");
    const auto base = init["base"].get<std::vector<double>>();
    if (base.size() != n) throw ConfigError("/simulation/init/base: expected " + std::to_string(n) + " entries");
    return cosine_initial(*grid, base, init.value("amplitude", 0.1), init.value("mode", 1));
  }
  if (kind == "random") {
    const auto lo = init["lo"].get<std::vector<double>>(), hi = init["hi"].get<std::vector<double>>();
    if (lo.size() != n) throw ConfigError("/simulation/init/lo: expected " + std::to_string(n) + " entries");
    return random_node_states(nodes, lo, hi, init["seed"].get<std::uint64_t>());
  }
  auto v = init["values"].get<std::vector<double>>();
  if (v.size() == n) {
    std::vector<double> x;
    for (std::size_t j = 0; j < nodes; ++j) x.insert(x.end(), v.begin(), v.end());
    return x;
  }
  if (v.size() != nodes * n)
    throw ConfigError("/simulation/init/values: expected " + std::to_string(n) + " or " + std::to_string(nodes * n) +
                      " entries");
  return v;
}

struct SimCertificate {
  std::optional<SymMat> p;
  double epsilon = 0.0;
  std::string source;
};

SimCertificate sim_certificate(const RunConfig& cfg) {
  SimCertificate sc;
  if (!cfg.sim.certificate.empty()) {
    const auto path = cfg.base_dir / cfg.sim.certificate;
    std::ifstream in(path);
    if (!in) throw ConfigError("/simulation/certificate: cannot open " + path.string());
    json rep;
    try {
      rep = json::parse(in);
      sc.p = SymMat::from(Mat::from_rows(rep.at("p").get<std::vector<std::vector<double>>>()));
      sc.epsilon = rep.value("epsilon", 0.0);
    } catch (const json::exception& e) {
      throw ConfigError("/simulation/certificate: " + std::string(e.what()));
    }
    sc.source = "certificate file " + cfg.sim.certificate;
  } else if (cfg.sim.certify) {
    std::ostringstream sink;
    const auto c = certify_core(cfg, sink);
    if (c.cert) {
      sc.p = c.cert->p;
      sc.epsilon = c.cert->epsilon;
      sc.source = "certify (" + cfg.method + ", " + to_string(cfg.structure) + ")";
    } else {
      sc.source = "certify found no certificate";
    }
  }
  if (sc.p && sc.p->dim() != cfg.d.rows()) throw ConfigError("/simulation/certificate: P has the wrong size");
  return sc;
}

SimOptions sim_options(const RunConfig& cfg, const SimCertificate& sc) {
  SimOptions o;
  o.t_end = cfg.sim.t_end;
  o.dt = cfg.sim.dt;
  o.output_dt = cfg.sim.output_dt;
  o.stepper = cfg.sim.stepper;
  o.threads = cfg.sim.threads;
  o.lyapunov_p = sc.p;
  o.record_states = cfg.sim.record_states;
  return o;
}

void write_csv(const Trace& tr, const std::string& path, bool states, json& rep, std::ostream& out) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path);
  write_trace_csv(f, tr, states);
  out << "trace written to " << path << '\n';
  rep["csv"] = path;
}

// Decay summary shared by both simulators; returns the fitted rate of `series`.
void summarize(const RunConfig& cfg, const Trace& tr, const std::vector<double>& series, const std::string& name,
               const SimCertificate& sc, json& rep, std::ostream& out) {
  const double first = series.front(), last = series.back();
  const double ratio = first > 0.0 ? last / first : 0.0;
  out << name << ": " << num(first, 6) << " -> " << num(last, 6) << " at t = " << num(tr.times.back(), 6)
      << " (ratio " << num(ratio, 4) << ")\n";
  const bool decayed = first > 0.0 && last <= cfg.sim.decay_factor * first;
  rep[name] = {{"initial", first}, {"final", last}, {"ratio", ratio}, {"decayed", decayed}};
  const double t0 = cfg.sim.fit_t0.value_or(0.2 * tr.times.back()), t1 = cfg.sim.fit_t1.value_or(tr.times.back());
  try {
    const auto fit = fit_decay_rate(tr.times, series, t0, t1);
    out << "fitted rate of " << name << " on [" << num(t0, 4) << ", " << num(tr.times[fit.last], 4)
        << "]: " << num(fit.rate, 6) << " (r^2 " << num(fit.r2, 6) << (fit.shrunk ? ", window shrunk" : "") << ")\n";
    rep[name]["rate"] = fit.rate;
    rep[name]["r2"] = fit.r2;
  } catch (const Error& e) {
    out << "no decay fit: " << e.what() << '\n';
  }
  if (sc.p) {
    out << "Lyapunov matrix from " << sc.source << '\n';
    bool monotone = true;
    // Below 1e-16 V(0) the differences are round-off.
    for (std::size_t s = 1; s < tr.lyapunov.size() && tr.lyapunov[s - 1] > 1e-16 * tr.lyapunov[0]; ++s)
      if (tr.times[s] >= t0 && tr.lyapunov[s] > tr.lyapunov[s - 1] * (1.0 + 1e-9)) monotone = false;
    out << "V nonincreasing after t = " << num(t0, 4) << " (down to 1e-16 V(0)): " << (monotone ? "yes" : "no")
        << '\n';
    rep["lyapunov_nonincreasing"] = monotone;
    if (sc.epsilon > 0.0) {
      const double bound = -sc.epsilon / max_eig(*sc.p);
      out << "certified bound on the V decay rate: " << num(bound, 6) << '\n';
      rep["v_rate_bound"] = bound;
      try {
        const auto fv = fit_decay_rate(tr.times, tr.lyapunov, t0, t1);
        out << "fitted V rate: " << num(fv.rate, 6) << '\n';
        rep["v_rate"] = fv.rate;
      } catch (const Error&) {
      }
    }
  } else if (!sc.source.empty()) {
    out << sc.source << '\n';
  }
  if (tr.blew_up) out << "warning: solution blew up at t = " << num(tr.times.back(), 6) << '\n';
  if (tr.left_domain)
    out << "warning: state left the model's domain at t = " << num(tr.excursion_time, 6)
        << "; the envelope is not guaranteed there\n";
  rep["blew_up"] = tr.blew_up;
  rep["left_domain"] = tr.left_domain;
  out << (decayed ? "decay confirmed" : "decay not confirmed") << " (threshold factor " << num(cfg.sim.decay_factor, 3)
      << ")\n";
}

}  // namespace

CommandResult cmd_certify(const RunConfig& cfg, std::ostream& out) {
  auto c = certify_core(cfg, out);
  c.report["config"] = cfg.echo;
  c.report["exit_code"] = c.code;
  return {c.code, c.report};
}

CommandResult cmd_threshold(const RunConfig& cfg, std::ostream& out) {
  const Envelope env = cfg.model.build_envelope();
  header(out, cfg, std::numeric_limits<double>::quiet_NaN());
  auto structures = cfg.threshold.structures;
  if (structures.empty()) structures.push_back(cfg.structure);
  if (cfg.method == "othmer" || cfg.method == "secant") structures = {Structure::kDiagonal};
  out << "method: " << method_title(cfg.method) << '\n';
  json rep = {{"command", "threshold"}, {"method", cfg.method}, {"results", json::array()}};
  int code = kExitOk;
  for (auto st : structures) {
    const auto row = threshold_for(cfg, env, cfg.method, st);
    rep["results"].push_back(row_json(row, cfg.d));
    if (!row.error.empty()) {
      out << row.structure << ": error: " << row.error << '\n';
      code = kExitError;
      continue;
    }
    out << row.structure << ": lambda2* = " << num(row.value, 8) << "  (lambda2* min d = " << num(row.value * min_diag(cfg.d), 8)
        << ", tol " << num(cfg.threshold.tol, 3) << ")\n";
  }
  rep["config"] = cfg.echo;
  rep["exit_code"] = code;
  return {code, rep};
}

CommandResult cmd_compare(const RunConfig& cfg, std::ostream& out) {
  const Envelope env = cfg.model.build_envelope();
  const bool have_l2 = cfg.spatial.source != SpatialSpec::Source::kNone;
  const double l2 = have_l2 ? cfg.lambda2() : std::numeric_limits<double>::quiet_NaN();
  out << "model: " << cfg.model.name << ", coupling D = " << describe_d(cfg.d) << '\n';
  if (have_l2) out << "lambda2 = " << num(l2) << "  [" << cfg.lambda2_source() << "]\n";
  out << "smallest lambda2 (and lambda2 min d) for which each criterion holds:\n";
  json rep = {{"command", "compare"}, {"rows", json::array()}};
  const std::vector<std::pair<std::string, Structure>> rows = {
      {"othmer", Structure::kDiagonal},   {"secant", Structure::kDiagonal},   {"vertex", Structure::kFull},
      {"vertex", Structure::kDiagonal},   {"composite", Structure::kFull},    {"composite", Structure::kDiagonal}};
  char line[160];
  std::snprintf(line, sizeof line, "  %-10s %-9s %16s %16s %s\n", "method", "P", "lambda2*", "lambda2* min d",
                have_l2 ? "at lambda2" : "");
  out << line;
  for (const auto& [m, st] : rows) {
    const auto r = threshold_for(cfg, env, m, st);
    json j = row_json(r, cfg.d);
    std::string at_l2;
    if (have_l2 && r.error.empty()) {
      at_l2 = l2 > r.value ? "holds" : "fails";
      j["holds_at_lambda2"] = l2 > r.value;
    }
    if (r.error.empty())
      std::snprintf(line, sizeof line, "  %-10s %-9s %16s %16s %s\n", m.c_str(), r.structure.c_str(),
                    num(r.value, 7).c_str(), num(r.value * min_diag(cfg.d), 7).c_str(), at_l2.c_str());
    else
      std::snprintf(line, sizeof line, "  %-10s %-9s %16s   (%s)\n", m.c_str(), r.structure.c_str(), "n/a",
                    r.error.c_str());
    out << line;
    rep["rows"].push_back(j);
  }
  rep["config"] = cfg.echo;
  rep["exit_code"] = kExitOk;
  return {kExitOk, rep};
}

CommandResult cmd_simulate_pde(const RunConfig& cfg, const std::string& csv_path, std::ostream& out) {
  const Model model = cfg.model.build_model();
  double length = cfg.sim.length;
  if (length <= 0.0) {
    switch (cfg.spatial.source) {
      case SpatialSpec::Source::kDomain:
        if (cfg.spatial.domain.kind != DomainSpec::Kind::kInterval)
          throw Unsupported("PDE simulation is one-dimensional; give simulation.length");
        length = cfg.spatial.domain.lx;
        break;
      case SpatialSpec::Source::kValue:
        if (!(cfg.spatial.value > 0.0)) throw ConfigError("/spatial/lambda2: must be positive to set the length");
        length = std::numbers::pi / std::sqrt(cfg.spatial.value);
        break;
      default:
        throw ConfigError("/simulation/length: missing (no interval domain or lambda2 to derive it from)");
    }
  }
  const PdeGrid grid{length, cfg.sim.m};
  grid.validate();
  const auto init = make_init(cfg.sim.init, grid.nodes(), model.n, &grid);
  const auto sc = sim_certificate(cfg);
  const double l2 = domain_lambda2(DomainSpec::interval(length));
  out << "model: " << cfg.model.name << ", interval L = " << num(length, 8) << " (lambda2 = " << num(l2, 8)
      << "), m = " << grid.m << ", D = " << describe_d(cfg.d) << '\n';
  const auto tr = simulate_pde(model, cfg.d, grid, init, sim_options(cfg, sc));
  json rep = {{"command", "simulate-pde"}, {"length", length}, {"lambda2", l2}, {"steps", tr.steps}, {"dt", tr.dt}};
  out << tr.steps << " steps of dt = " << num(tr.dt, 6) << '\n';
  out << "pure-diffusion reference rate -lambda2 min d = " << num(-l2 * min_diag(cfg.d), 6) << '\n';
  rep["diffusion_rate"] = -l2 * min_diag(cfg.d);
  summarize(cfg, tr, tr.nonuniformity, "nonuniformity", sc, rep, out);
  write_csv(tr, csv_path, cfg.sim.record_states, rep, out);
  rep["config"] = cfg.echo;
  rep["exit_code"] = kExitOk;
  return {kExitOk, rep};
}

CommandResult cmd_simulate_net(const RunConfig& cfg, const std::string& csv_path, std::ostream& out) {
  if (cfg.spatial.source != SpatialSpec::Source::kGraph) throw ConfigError("/spatial/graph: network simulation needs a graph");
  const Model model = cfg.model.build_model();
  const Graph& g = cfg.spatial.graph;
  const auto init = make_init(cfg.sim.init, g.n, model.n, nullptr);
  const auto sc = sim_certificate(cfg);
  const double l2 = cfg.lambda2();
  out << "model: " << cfg.model.name << ", " << g.n << "-node " << (g.directed ? "directed" : "undirected")
      << " graph, lambda2 = " << num(l2, 8) << ", D = " << describe_d(cfg.d) << '\n';
  json rep = {{"command", "simulate-net"}, {"lambda2", l2}};
  if (g.directed && sc.p) {
    const Mat pd = sc.p->mat() * cfg.d;
    const bool sym = (pd - pd.transpose()).max_abs() <= 1e-12 * std::max(1.0, pd.max_abs());
    out << "P D symmetric (needed for directed graphs): " << (sym ? "yes" : "no") << '\n';
    rep["pd_symmetric"] = sym;
  }
  const auto tr = simulate_network(model, cfg.d, g, init, sim_options(cfg, sc));
  rep["steps"] = tr.steps;
  summarize(cfg, tr, tr.sync_error, "sync_error", sc, rep, out);
  out << (rep["sync_error"]["decayed"].get<bool>() ? "sync confirmed" : "sync not confirmed") << '\n';
  write_csv(tr, csv_path, cfg.sim.record_states, rep, out);
  rep["config"] = cfg.echo;
  rep["exit_code"] = kExitOk;
  return {kExitOk, rep};
}

CommandResult cmd_spectral(const SpatialSpec& s, std::ostream& out) {
  json rep = {{"command", "spectral"}};
  double l2 = 0.0;
  switch (s.source) {
    case SpatialSpec::Source::kValue:
      l2 = s.value;
      out << "lambda2 = " << num(l2, 12) << " (given)\n";
      break;
    case SpatialSpec::Source::kDomain:
      l2 = domain_lambda2(s.domain);
      if (s.given) out << "(config lambda2 " << num(*s.given, 12) << " ignored here)\n";
      out << "lambda2 = " << num(l2, 12) << " (Neumann, "
          << (s.domain.kind == DomainSpec::Kind::kInterval ? "interval" : "rectangle") << ")\n";
      break;
    case SpatialSpec::Source::kGraph:
      if (s.graph.directed) {
        l2 = directed_algebraic_connectivity(s.graph);
        out << "lambda2 = " << num(l2, 12) << " (directed algebraic connectivity, " << s.graph.n << " nodes)\n";
      } else {
        l2 = graph_lambda2(s.graph);
        out << "lambda2 = " << num(l2, 12) << " (Laplacian, " << s.graph.n << " nodes)\n";
        if (!s.graph.connected()) {
          out << "warning: graph is disconnected\n";
          rep["warning"] = "disconnected";
        }
      }
      break;
    case SpatialSpec::Source::kNone:
      throw ConfigError("/spatial: nothing to evaluate (give --config, --interval or --edges)");
  }
  rep["lambda2"] = l2;
  rep["exit_code"] = kExitOk;
  return {kExitOk, rep};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rdcert: certificates of spatial uniformity and synchronization"};
  app.require_subcommand(1);

  std::string config_path, out_path, method, structure, edges;
  double lambda2 = 0.0, interval = 0.0;
  std::uint64_t seed = 0;
  bool directed = false;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config_path, "JSON run configuration");
    if (needs_config) c->required();
    sub->add_option("--method", method, "vertex | composite | secant | othmer");
    sub->add_option("--structure", structure, "full | diagonal");
    sub->add_option("--lambda2", lambda2, "override lambda2 (e.g. a lower bound)");
    sub->add_option("--out", out_path, "report (JSON) or trace (CSV) path");
    sub->add_option("--seed", seed, "seed for random initial states");
  };
  auto* certify = app.add_subcommand("certify", "check the LMI or analytic criterion at one lambda2");
  auto* threshold = app.add_subcommand("threshold", "bisect for the smallest certified lambda2");
  auto* compare = app.add_subcommand("compare", "tabulate thresholds of all criteria");
  auto* sim_pde = app.add_subcommand("simulate-pde", "simulate the reaction-diffusion PDE on an interval");
  auto* sim_net = app.add_subcommand("simulate-net", "simulate a diffusively coupled network");
  auto* spectral = app.add_subcommand("spectral", "lambda2 of a domain or graph");
  for (auto* s : {certify, threshold, compare, sim_pde, sim_net}) add_common(s, true);
  add_common(spectral, false);
  spectral->add_option("--interval", interval, "interval length");
  spectral->add_option("--edges", edges, "edge-list file (\"u v [w]\" per line, 0-indexed)");
  spectral->add_flag("--directed", directed, "treat the edge list as directed");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitError;
  }

  Overrides ov;
  if (!method.empty()) ov.method = method;
  if (!structure.empty()) ov.structure = structure;
  auto* active = app.get_subcommands().front();
  if (active->count("--lambda2")) ov.lambda2 = lambda2;
  if (active->count("--seed")) ov.seed = seed;

  try {
    CommandResult r;
    if (active == spectral) {
      SpatialSpec s;
      const int given = active->count("--interval") + active->count("--edges") + !config_path.empty() +
                        active->count("--lambda2");
      if (given != 1) throw ConfigError("spectral: give exactly one of --config, --interval, --edges, --lambda2");
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError(config_path + ": cannot open");
        const json j = json::parse(in);
        if (!j.is_object() || !j.contains("spatial")) throw ConfigError("/spatial: missing");
        s = parse_spatial(j["spatial"], std::filesystem::path(config_path).parent_path(), "/spatial");
      } else if (!edges.empty()) {
        std::ifstream in(edges);
        if (!in) throw ConfigError(edges + ": cannot open");
        s.source = SpatialSpec::Source::kGraph;
        s.graph = parse_edge_list(in, directed);
        if (s.graph.n < 2) throw InvalidInput(edges + ": fewer than two nodes");
      } else if (active->count("--interval")) {
        s.source = SpatialSpec::Source::kDomain;
        s.domain = DomainSpec::interval(interval);
      } else {
        s.source = SpatialSpec::Source::kValue;
        s.value = lambda2;
      }
      r = cmd_spectral(s, out);
    } else {
      const auto cfg = load_config(config_path, ov);
      if (active == certify) r = cmd_certify(cfg, out);
      if (active == threshold) r = cmd_threshold(cfg, out);
      if (active == compare) r = cmd_compare(cfg, out);
      if (active == sim_pde) r = cmd_simulate_pde(cfg, out_path, out);
      if (active == sim_net) r = cmd_simulate_net(cfg, out_path, out);
    }
    const bool writes_report = active != sim_pde && active != sim_net;
    if (writes_report && !out_path.empty()) {
      std::ofstream f(out_path);
      if (!f) throw InvalidInput("cannot write " + out_path);
      f << r.report.dump(2) << '\n';
    }
    return r.code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace rdcert::app
