#include "config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace rdcert::app {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError((path.empty() ? std::string("/") : path) + ": " + what);
}

std::string at(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string at(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) fail(at(path, k), "unknown key");
  }
}

double get_num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::size_t get_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string get_str(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> get_vec(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected a list of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(get_num(j[i], at(path, i)));
  return v;
}

Mat get_mat(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty list of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    rows.push_back(get_vec(j[i], at(path, i)));
    if (rows.back().size() != rows.front().size() || rows.back().empty()) fail(at(path, i), "ragged matrix");
  }
  return Mat::from_rows(rows);
}

Structure get_structure(const json& j, const std::string& path) {
  try {
    return parse_structure(get_str(j, path));
  } catch (const InvalidInput&) {
    fail(path, "structure must be \"full\" or \"diagonal\"");
  }
}

// Runs fn, prefixing library validation errors with the config path.
template <class Fn>
auto with_path(const std::string& path, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

void read_goodwin(const json& j, const std::string& path, GoodwinParams& p) {
  allow_keys(j, path, {"a1", "a2", "b1", "b2", "v1", "v3", "k1", "k3"});
  for (auto [key, dst] : {std::pair{"a1", &p.a1}, {"a2", &p.a2}, {"b1", &p.b1}, {"b2", &p.b2}, {"v1", &p.v1},
                          {"v3", &p.v3}, {"k1", &p.k1}, {"k3", &p.k3}})
    if (j.contains(key)) *dst = get_num(j[key], at(path, key));
  with_path(path, [&] { validate(p); });
}

void read_goldbeter(const json& j, const std::string& path, GoldbeterParams& p) {
  allow_keys(j, path, {"n", "vs", "ki", "ks", "k1", "k2", "v", "k", "vm", "vd", "kd", "km"});
  if (j.contains("n")) p.n = static_cast<int>(get_count(j["n"], at(path, "n")));
  for (auto [key, dst] : {std::pair{"vs", &p.vs}, {"ki", &p.ki}, {"ks", &p.ks}, {"k1", &p.k1}, {"k2", &p.k2},
                          {"vm", &p.vm}, {"vd", &p.vd}, {"kd", &p.kd}, {"km", &p.km}})
    if (j.contains(key)) *dst = get_num(j[key], at(path, key));
  if (j.contains("v")) p.v = get_vec(j["v"], at(path, "v"));
  if (j.contains("k")) p.k = get_vec(j["k"], at(path, "k"));
  with_path(path, [&] { validate(p); });
}

void read_fhn(const json& j, const std::string& path, FhnParams& p) {
  allow_keys(j, path, {"a", "b", "c"});
  for (auto [key, dst] : {std::pair{"a", &p.a}, {"b", &p.b}, {"c", &p.c}})
    if (j.contains(key)) *dst = get_num(j[key], at(path, key));
  with_path(path, [&] { validate(p); });
}

Envelope read_envelope(const json& j, const std::string& path) {
  allow_keys(j, path, {"a0", "box", "cone", "conv"});
  if (!j.contains("a0")) fail(at(path, "a0"), "missing");
  Envelope env;
  env.a0 = get_mat(j["a0"], at(path, "a0"));
  if (j.contains("box")) {
    const auto bp = at(path, "box");
    if (!j["box"].is_array()) fail(bp, "expected a list");
    for (std::size_t i = 0; i < j["box"].size(); ++i) {
      const auto& t = j["box"][i];
      const auto tp = at(bp, i);
      allow_keys(t, tp, {"b", "c", "matrix", "label"});
      const std::string label = t.contains("label") ? get_str(t["label"], at(tp, "label")) : "A" + std::to_string(i + 1);
      if (t.contains("matrix")) {
        const Mat m = get_mat(t["matrix"], at(tp, "matrix"));
        env.box_terms.push_back(with_path(tp, [&] { return box_term_from_matrix(m, label); }));
      } else {
        if (!t.contains("b") || !t.contains("c")) fail(tp, "box term needs b and c, or matrix");
        env.box_terms.push_back(make_box_term(get_vec(t["b"], at(tp, "b")), get_vec(t["c"], at(tp, "c")), label));
      }
    }
  }
  for (const char* key : {"cone", "conv"}) {
    if (!j.contains(key)) continue;
    const auto kp = at(path, key);
    if (!j[key].is_array()) fail(kp, "expected a list of matrices");
    auto& dst = std::string(key) == "cone" ? env.cone_gens : env.conv_vertices;
    for (std::size_t i = 0; i < j[key].size(); ++i) dst.push_back(get_mat(j[key][i], at(kp, i)));
  }
  with_path(path, [&] { env.validate(); });
  return env;
}

ModelSpec read_model(const json& j, const std::string& path) {
  ModelSpec m;
  if (j.is_string()) {
    m.name = j.get<std::string>();
    if (m.name == "linear" || m.name == "lure" || m.name == "explicit") fail(path, m.name + " model needs an object");
  } else {
    allow_keys(j, path, {"name", "params", "overparameterized", "a", "b", "c", "gamma", "envelope"});
    if (!j.contains("name")) fail(at(path, "name"), "missing");
    m.name = get_str(j["name"], at(path, "name"));
  }
  const json params = j.is_object() && j.contains("params") ? j["params"] : json::object();
  const auto pp = at(path, "params");
  if (m.name == "goodwin") {
    read_goodwin(params, pp, m.goodwin);
  } else if (m.name == "goldbeter") {
    read_goldbeter(params, pp, m.goldbeter);
    if (j.is_object() && j.contains("overparameterized"))
      m.overparameterized = get_bool(j["overparameterized"], at(path, "overparameterized"));
  } else if (m.name == "fhn") {
    read_fhn(params, pp, m.fhn);
  } else if (m.name == "linear" || m.name == "lure") {
    if (!j.contains("a")) fail(at(path, "a"), "missing");
    m.a = get_mat(j["a"], at(path, "a"));
    if (!m.a.square()) fail(at(path, "a"), "expected a square matrix");
    if (m.name == "lure") {
      if (!j.contains("b") || !j.contains("c")) fail(path, "Lur'e model needs b and c");
      m.b = get_vec(j["b"], at(path, "b"));
      m.c = get_vec(j["c"], at(path, "c"));
      if (j.contains("gamma")) m.gamma = get_num(j["gamma"], at(path, "gamma"));
      if (!(m.gamma > 0.0)) fail(at(path, "gamma"), "must be positive");
      with_path(path, [&] { return m.build_envelope(); });
    }
  } else if (m.name == "explicit") {
    if (!j.contains("envelope")) fail(at(path, "envelope"), "missing");
    m.envelope = read_envelope(j["envelope"], at(path, "envelope"));
  } else {
    fail(at(path, "name"), "unknown model \"" + m.name + "\" (goodwin, goldbeter, fhn, linear, lure, explicit)");
  }
  return m;
}

Graph read_graph(const json& j, const std::filesystem::path& base, const std::string& path) {
  allow_keys(j, path, {"edges", "adjacency", "edge_list", "builtin", "n", "directed"});
  const bool directed = j.contains("directed") && get_bool(j["directed"], at(path, "directed"));
  const std::size_t n = j.contains("n") ? get_count(j["n"], at(path, "n")) : 0;
  int sources = j.contains("edges") + j.contains("adjacency") + j.contains("edge_list") + j.contains("builtin");
  if (sources != 1) fail(path, "give exactly one of edges, adjacency, edge_list, builtin");
  return with_path(path, [&]() -> Graph {
    if (j.contains("builtin")) {
      const auto kind = get_str(j["builtin"], at(path, "builtin"));
      if (n == 0) fail(at(path, "n"), "builtin graphs need n");
      if (kind == "path" && !directed) return Graph::path(n);
      if (kind == "complete" && !directed) return Graph::complete(n);
      if (kind == "cycle") return Graph::cycle(n, directed);
      fail(at(path, "builtin"), "unknown builtin graph \"" + kind + "\"");
    }
    if (j.contains("adjacency")) {
      Graph g;
      g.weights = get_mat(j["adjacency"], at(path, "adjacency"));
      g.n = g.weights.rows();
      g.directed = directed;
      g.validate();
      return g;
    }
    if (j.contains("edge_list")) {
      const auto file = base / get_str(j["edge_list"], at(path, "edge_list"));
      std::ifstream in(file);
      if (!in) fail(at(path, "edge_list"), "cannot open " + file.string());
      return parse_edge_list(in, directed, n);
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    const auto ep = at(path, "edges");
    if (!j["edges"].is_array()) fail(ep, "expected a list of [u, v] pairs");
    std::size_t nn = n;
    for (std::size_t i = 0; i < j["edges"].size(); ++i) {
      const auto& e = j["edges"][i];
      if (!e.is_array() || e.size() != 2) fail(at(ep, i), "expected [u, v]");
      edges.emplace_back(get_count(e[0], at(at(ep, i), 0)), get_count(e[1], at(at(ep, i), 1)));
      if (n == 0) nn = std::max({nn, edges.back().first + 1, edges.back().second + 1});
    }
    return Graph::from_edges(nn, edges, directed);
  });
}

void check_init(const json& j, const std::string& path) {
  allow_keys(j, path, {"kind", "base", "amplitude", "mode", "lo", "hi", "seed", "values"});
  if (!j.contains("kind")) fail(at(path, "kind"), "missing");
  const auto kind = get_str(j["kind"], at(path, "kind"));
  if (kind == "cosine") {
    if (!j.contains("base")) fail(at(path, "base"), "missing");
    get_vec(j["base"], at(path, "base"));
    if (j.contains("amplitude")) get_num(j["amplitude"], at(path, "amplitude"));
    if (j.contains("mode")) get_count(j["mode"], at(path, "mode"));
  } else if (kind == "random") {
    if (!j.contains("lo") || !j.contains("hi")) fail(path, "random initial states need lo and hi");
    if (get_vec(j["lo"], at(path, "lo")).size() != get_vec(j["hi"], at(path, "hi")).size())
      fail(path, "lo and hi differ in length");
    if (!j.contains("seed")) fail(at(path, "seed"), "random initial states need a seed (or --seed)");
    get_count(j["seed"], at(path, "seed"));
  } else if (kind == "values") {
    if (!j.contains("values")) fail(at(path, "values"), "missing");
    get_vec(j["values"], at(path, "values"));
  } else {
    fail(at(path, "kind"), "unknown initial condition \"" + kind + "\" (cosine, random, values)");
  }
}

}  // namespace

Envelope ModelSpec::build_envelope() const {
  if (name == "goodwin") return goodwin_envelope(goodwin);
  if (name == "goldbeter") return goldbeter_envelope(goldbeter, overparameterized);
  if (name == "fhn") return fhn_envelope(fhn);
  if (name == "linear") {
    Envelope e;
    e.a0 = a;
    return e;
  }
  if (name == "lure") return lure_envelope(a, b, c, gamma);
  return envelope;
}

Model ModelSpec::build_model() const {
  if (name == "goodwin") return goodwin_model(goodwin);
  if (name == "goldbeter") return goldbeter_model(goldbeter);
  if (name == "fhn") return fhn_model(fhn);
  if (name == "linear") return linear_model(a);
  if (name == "lure") {
    const double g = gamma;
    return lure_model(
        a, b, c, [g](double s) { return g * std::tanh(s); },
        [g](double s) {
          const double t = std::tanh(s);
          return g * (1.0 - t * t);
        });
  }
  throw Unsupported("an explicit envelope has no vector field to simulate");
}

std::size_t ModelSpec::dim() const { return build_envelope().dim(); }

SpatialSpec parse_spatial(const json& j, const std::filesystem::path& base_dir, const std::string& path) {
  allow_keys(j, path, {"lambda2", "domain", "graph"});
  SpatialSpec s;
  if (j.contains("domain") && j.contains("graph")) fail(path, "give at most one of domain, graph");
  if (j.empty()) fail(path, "give lambda2, domain or graph");
  if (j.contains("lambda2")) {
    s.source = SpatialSpec::Source::kValue;
    s.value = get_num(j["lambda2"], at(path, "lambda2"));
    if (s.value < 0.0) fail(at(path, "lambda2"), "must be nonnegative");
    if (j.size() == 1) return s;
    s.given = s.value;
  }
  if (j.contains("domain")) {
    const auto& d = j["domain"];
    const auto dp = at(path, "domain");
    allow_keys(d, dp, {"kind", "length", "lx", "ly"});
    const auto kind = d.contains("kind") ? get_str(d["kind"], at(dp, "kind")) : std::string("interval");
    s.source = SpatialSpec::Source::kDomain;
    if (kind == "interval") {
      if (!d.contains("length")) fail(at(dp, "length"), "missing");
      s.domain = DomainSpec::interval(get_num(d["length"], at(dp, "length")));
    } else if (kind == "rectangle") {
      if (!d.contains("lx") || !d.contains("ly")) fail(dp, "rectangle needs lx and ly");
      s.domain = DomainSpec::rectangle(get_num(d["lx"], at(dp, "lx")), get_num(d["ly"], at(dp, "ly")));
    } else {
      fail(at(dp, "kind"), "unknown domain \"" + kind + "\" (interval, rectangle)");
    }
    with_path(dp, [&] { s.domain.validate(); });
  } else {
    s.source = SpatialSpec::Source::kGraph;
    s.graph = read_graph(j["graph"], base_dir, at(path, "graph"));
  }
  return s;
}

double RunConfig::lambda2() const {
  if (spatial.given) return *spatial.given;
  switch (spatial.source) {
    case SpatialSpec::Source::kValue:
      return spatial.value;
    case SpatialSpec::Source::kDomain:
      return domain_lambda2(spatial.domain);
    case SpatialSpec::Source::kGraph:
      return spatial.graph.directed ? directed_algebraic_connectivity(spatial.graph) : graph_lambda2(spatial.graph);
    case SpatialSpec::Source::kNone:
      break;
  }
  throw ConfigError("/spatial: no lambda2 source (give spatial or --lambda2)");
}

std::string RunConfig::lambda2_source() const {
  std::ostringstream os;
  if (spatial.given)
    return spatial.overridden ? "command-line override (may be a lower bound)" : "config value (may be a lower bound)";
  switch (spatial.source) {
    case SpatialSpec::Source::kValue:
      return spatial.overridden ? "command-line override (may be a lower bound)" : "config value (may be a lower bound)";
    case SpatialSpec::Source::kDomain:
      if (spatial.domain.kind == DomainSpec::Kind::kInterval)
        os << "computed: Neumann eigenvalue of interval L=" << spatial.domain.lx;
      else
        os << "computed: Neumann eigenvalue of rectangle " << spatial.domain.lx << " x " << spatial.domain.ly;
      return os.str();
    case SpatialSpec::Source::kGraph:
      os << "computed: " << (spatial.graph.directed ? "directed algebraic connectivity" : "Laplacian eigenvalue")
         << " of a " << spatial.graph.n << "-node graph";
      if (!spatial.graph.directed && !spatial.graph.connected()) os << " (disconnected: lambda2 = 0)";
      return os.str();
    case SpatialSpec::Source::kNone:
      break;
  }
  return "none";
}

RunConfig parse_config(json j, const std::filesystem::path& base_dir, const Overrides& ov) {
  if (!j.is_object()) fail("", "expected a JSON object");
  if (ov.method) j["method"] = *ov.method;
  if (ov.structure) j["structure"] = *ov.structure;
  if (ov.lambda2) {
    if (!j.contains("spatial") || !j["spatial"].is_object()) j["spatial"] = json::object();
    j["spatial"]["lambda2"] = *ov.lambda2;
  }
  if (ov.seed && j.contains("simulation") && j["simulation"].is_object() && j["simulation"].contains("init") &&
      j["simulation"]["init"].is_object())
    j["simulation"]["init"]["seed"] = *ov.seed;

  allow_keys(j, "", {"model", "coupling", "spatial", "method", "structure", "solver", "threshold", "simulation"});
  RunConfig cfg;
  cfg.echo = j;
  cfg.base_dir = base_dir;
  if (!j.contains("model")) fail("/model", "missing");
  cfg.model = read_model(j["model"], "/model");
  const std::size_t n = with_path("/model", [&] { return cfg.model.dim(); });

  cfg.d = Mat::identity(n);
  if (j.contains("coupling")) {
    const auto& c = j["coupling"];
    allow_keys(c, "/coupling", {"d", "D"});
    if (c.size() != 1) fail("/coupling", "give exactly one of d (diagonal) or D (matrix)");
    if (c.contains("d")) {
      const auto d = get_vec(c["d"], "/coupling/d");
      if (d.size() != n) fail("/coupling/d", "expected " + std::to_string(n) + " entries");
      cfg.d = Mat::diagonal(d);
    } else {
      cfg.d = get_mat(c["D"], "/coupling/D");
      if (cfg.d.rows() != n || cfg.d.cols() != n) fail("/coupling/D", "expected a " + std::to_string(n) + "x" +
                                                                           std::to_string(n) + " matrix");
    }
  }

  if (j.contains("spatial")) cfg.spatial = parse_spatial(j["spatial"], base_dir, "/spatial");
  cfg.spatial.overridden = ov.lambda2.has_value();

  if (j.contains("method")) cfg.method = get_str(j["method"], "/method");
  if (cfg.method != "vertex" && cfg.method != "composite" && cfg.method != "secant" && cfg.method != "othmer")
    fail("/method", "unknown method \"" + cfg.method + "\" (vertex, composite, secant, othmer)");
  if (j.contains("structure")) cfg.structure = get_structure(j["structure"], "/structure");
  if (cfg.method == "secant") {
    if (j.contains("structure") && cfg.structure != Structure::kDiagonal)
      fail("/structure", "the secant criterion is a diagonal-P test");
    cfg.structure = Structure::kDiagonal;
  }

  if (j.contains("solver")) {
    const auto& s = j["solver"];
    allow_keys(s, "/solver", {"margin_tol", "weak_tol", "trace_cap", "max_iters", "gap_tol", "feas_tol"});
    if (s.contains("margin_tol")) cfg.solver.margin_tol = get_num(s["margin_tol"], "/solver/margin_tol");
    if (s.contains("weak_tol")) cfg.solver.weak_tol = get_num(s["weak_tol"], "/solver/weak_tol");
    if (s.contains("trace_cap")) cfg.solver.trace_cap = get_num(s["trace_cap"], "/solver/trace_cap");
    if (s.contains("max_iters")) cfg.solver.sdp.max_iters = static_cast<int>(get_count(s["max_iters"], "/solver/max_iters"));
    if (s.contains("gap_tol")) cfg.solver.sdp.gap_tol = get_num(s["gap_tol"], "/solver/gap_tol");
    if (s.contains("feas_tol")) cfg.solver.sdp.feas_tol = get_num(s["feas_tol"], "/solver/feas_tol");
  }

  if (j.contains("threshold")) {
    const auto& t = j["threshold"];
    allow_keys(t, "/threshold", {"lo", "hi", "tol", "structures"});
    if (t.contains("lo")) cfg.threshold.lo = get_num(t["lo"], "/threshold/lo");
    if (t.contains("hi")) cfg.threshold.hi = get_num(t["hi"], "/threshold/hi");
    if (t.contains("tol")) cfg.threshold.tol = get_num(t["tol"], "/threshold/tol");
    if (!(cfg.threshold.tol > 0.0)) fail("/threshold/tol", "must be positive");
    if (t.contains("structures")) {
      if (!t["structures"].is_array()) fail("/threshold/structures", "expected a list");
      for (std::size_t i = 0; i < t["structures"].size(); ++i)
        cfg.threshold.structures.push_back(get_structure(t["structures"][i], at("/threshold/structures", i)));
    }
  }

  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    const std::string sp = "/simulation";
    allow_keys(s, sp,
               {"t_end", "dt", "output_dt", "m", "length", "stepper", "threads", "init", "certificate", "certify",
                "decay_factor", "fit_window", "record_states"});
    auto& o = cfg.sim;
    if (s.contains("t_end")) o.t_end = get_num(s["t_end"], at(sp, "t_end"));
    if (s.contains("dt")) o.dt = get_num(s["dt"], at(sp, "dt"));
    if (s.contains("output_dt")) o.output_dt = get_num(s["output_dt"], at(sp, "output_dt"));
    if (s.contains("m")) o.m = get_count(s["m"], at(sp, "m"));
    if (s.contains("length")) o.length = get_num(s["length"], at(sp, "length"));
    if (s.contains("stepper")) {
      const auto st = get_str(s["stepper"], at(sp, "stepper"));
      if (st == "split-cn")
        o.stepper = Stepper::kSplitCn;
      else if (st == "explicit-rk4")
        o.stepper = Stepper::kExplicitRk4;
      else
        fail(at(sp, "stepper"), "unknown stepper \"" + st + "\" (split-cn, explicit-rk4)");
    }
    if (s.contains("threads")) o.threads = std::max<std::size_t>(1, get_count(s["threads"], at(sp, "threads")));
    if (s.contains("init")) {
      check_init(s["init"], at(sp, "init"));
      o.init = s["init"];
    }
    if (s.contains("certificate")) o.certificate = get_str(s["certificate"], at(sp, "certificate"));
    if (s.contains("certify")) o.certify = get_bool(s["certify"], at(sp, "certify"));
    if (s.contains("decay_factor")) o.decay_factor = get_num(s["decay_factor"], at(sp, "decay_factor"));
    if (s.contains("fit_window")) {
      const auto w = get_vec(s["fit_window"], at(sp, "fit_window"));
      if (w.size() != 2 || !(w[0] < w[1])) fail(at(sp, "fit_window"), "expected [t0, t1] with t0 < t1");
      o.fit_t0 = w[0];
      o.fit_t1 = w[1];
    }
    if (s.contains("record_states")) o.record_states = get_bool(s["record_states"], at(sp, "record_states"));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(std::move(j), path.parent_path(), ov);
}

}  // namespace rdcert::app
