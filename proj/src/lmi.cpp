#include "rdcert/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "rdcert/error.hpp"

namespace rdcert {

std::string to_string(Structure s) { return s == Structure::kFull ? "full" : "diagonal"; }

Structure parse_structure(std::string_view s) {
  if (s == "full") return Structure::kFull;
  if (s == "diagonal" || s == "diag") return Structure::kDiagonal;
  throw InvalidInput("unknown structure '" + std::string(s) + "' (expected full or diagonal)");
}

namespace {

void check_coupling(const Envelope& env, double lambda2, const Mat& d) {
  env.validate();
  if (d.rows() != env.dim() || d.cols() != env.dim()) throw DimensionMismatch("diffusion matrix must be n x n");
  if (!d.all_finite()) throw InvalidInput("non-finite diffusion matrix");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw InvalidInput("lambda2 must be a finite nonnegative number");
}

bool is_scaled_identity(const Mat& d) {
  if (!d.is_diagonal()) return false;
  for (std::size_t i = 1; i < d.rows(); ++i)
    if (d(i, i) != d(0, 0)) return false;
  return true;
}

bool diagonal_nonnegative(const Mat& d) {
  if (!d.is_diagonal()) return false;
  for (std::size_t i = 0; i < d.rows(); ++i)
    if (d(i, i) < 0.0) return false;
  return true;
}

bool diagonal_nonpositive(const Mat& s) {
  if (!s.is_diagonal()) return false;
  for (std::size_t i = 0; i < s.rows(); ++i)
    if (s(i, i) > 0.0) return false;
  return true;
}

/// Adds the P D + D^T P >= 0 constraint unless it holds for every admissible P.
void add_d_constraint(LmiProblem& prob, const Mat& d) {
  if (d.is_zero()) return;
  if (is_scaled_identity(d) && d(0, 0) >= 0.0) {
    prob.notes.push_back("P D + D^T P >= 0 holds for every P > 0 (D = c I, c >= 0); not imposed");
    return;
  }
  if (prob.structure == Structure::kDiagonal && diagonal_nonnegative(d)) {
    prob.notes.push_back("P D + D^T P >= 0 holds for diagonal P and diagonal D >= 0; not imposed");
    return;
  }
  Mat m(prob.dim(), prob.dim());
  for (std::size_t i = 0; i < prob.n; ++i)
    for (std::size_t j = 0; j < prob.n; ++j) m(i, j) = -d(i, j);
  prob.constraints.push_back({ConstraintKind::kWeak, "PD+D'P>=0", std::move(m)});
}

std::string subset_label(const Envelope& env, std::size_t base_index, std::uint64_t subset) {
  std::string s = "vertex";
  if (env.conv_vertices.size() > 1) s += " Z" + std::to_string(base_index + 1);
  s += " {";
  bool first = true;
  for (std::size_t i = 0; i < env.box_terms.size(); ++i)
    if (subset & (std::uint64_t{1} << i)) {
      if (!first) s += ",";
      first = false;
      s += env.box_terms[i].label.empty() ? "A" + std::to_string(i + 1) : env.box_terms[i].label;
    }
  return s + "}";
}

}  // namespace

std::size_t LmiProblem::num_vars() const {
  const std::size_t pv = structure == Structure::kFull ? n * (n + 1) / 2 : n;
  return pv + multipliers;
}

std::vector<SymMat> LmiProblem::basis() const {
  const std::size_t N = dim();
  std::vector<SymMat> out;
  out.reserve(num_vars());
  if (structure == Structure::kFull) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        SymMat g(N);
        g.set(i, j, 1.0);
        out.push_back(std::move(g));
      }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      SymMat g(N);
      g.set(i, i, 1.0);
      out.push_back(std::move(g));
    }
  }
  for (std::size_t k = 0; k < multipliers; ++k) {
    SymMat g(N);
    g.set(n + k, n + k, 1.0);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<double> LmiProblem::balancing() const {
  // Osborne iteration on the summed magnitudes: each sweep rescales index i so
  // that its off-diagonal row and column sums agree. Fixed sweep count keeps
  // the result a deterministic function of the constraints.
  const std::size_t N = dim();
  Mat s(N, N);
  for (const auto& c : constraints)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) s(i, j) += std::abs(c.m(i, j));
  std::vector<double> t(N, 1.0);
  for (int sweep = 0; sweep < 50; ++sweep) {
    for (std::size_t i = 0; i < N; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        r += s(i, j) * t[j] / t[i];
        c += s(j, i) * t[i] / t[j];
      }
      if (r > 0.0 && c > 0.0) t[i] *= std::sqrt(r / c);
    }
  }
  return t;
}

std::string LmiProblem::dump() const {
  std::ostringstream os;
  char buf[64];
  os << "lmi origin=" << origin << " structure=" << to_string(structure) << " n=" << n
     << " multipliers=" << multipliers << " variables=" << num_vars() << " constraints=" << constraints.size()
     << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", lambda2);
  os << "lambda2 " << buf << "\n";
  for (const auto& note : notes) os << "note " << note << "\n";
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    const auto& c = constraints[k];
    os << "constraint " << k << " " << (c.kind == ConstraintKind::kStrict ? "strict" : "weak") << " "
       << c.label << "\n";
    for (std::size_t i = 0; i < c.m.rows(); ++i) {
      os << " ";
      for (std::size_t j = 0; j < c.m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, " %.17g", c.m(i, j));
        os << buf;
      }
      os << "\n";
    }
  }
  return os.str();
}

LmiProblem vertex_lmis(const Envelope& env, double lambda2, const Mat& d, Structure structure,
                       std::size_t max_terms) {
  check_coupling(env, lambda2, d);
  LmiProblem prob;
  prob.origin = "vertex";
  prob.structure = structure;
  prob.n = env.dim();
  prob.env = env;
  prob.lambda2 = lambda2;
  prob.d = d;
  const Mat shift = lambda2 * d;
  for (auto& v : env.labelled_vertices(max_terms)) {
    Mat m = v.z;
    m -= shift;
    prob.constraints.push_back({ConstraintKind::kStrict, subset_label(env, v.base_index, v.subset), std::move(m)});
  }
  for (std::size_t k = 0; k < env.cone_gens.size(); ++k) {
    const Mat& s = env.cone_gens[k];
    const std::string label = "cone S" + std::to_string(k + 1);
    if (s.is_zero()) continue;
    if (structure == Structure::kDiagonal && diagonal_nonpositive(s)) {
      prob.notes.push_back(label + " is diagonal nonpositive; holds for diagonal P, not imposed");
      continue;
    }
    prob.constraints.push_back({ConstraintKind::kWeak, label, s});
  }
  add_d_constraint(prob, d);
  return prob;
}

Mat composite_matrix(const Envelope& env, double lambda2, const Mat& d, const std::vector<std::size_t>& terms) {
  const std::size_t n = env.dim(), l = terms.size();
  const Mat& a0 = env.conv_vertices.empty() ? env.a0 : env.conv_vertices.front();
  Mat a(n + l, n + l);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = a0(i, j) - lambda2 * d(i, j);
  for (std::size_t k = 0; k < l; ++k) {
    const auto& t = env.box_terms.at(terms[k]);
    for (std::size_t i = 0; i < n; ++i) {
      a(i, n + k) = t.b[i];
      a(n + k, i) = t.c[i];
    }
    a(n + k, n + k) = -1.0;
  }
  return a;
}

LmiProblem composite_lmi(const Envelope& env, double lambda2, const Mat& d, Structure structure) {
  check_coupling(env, lambda2, d);
  if (env.has_cone()) throw Unsupported("composite inequality needs a box envelope; use vertex LMIs for cones");
  if (env.conv_vertices.size() > 1)
    throw Unsupported("composite inequality needs a single nominal matrix; use vertex LMIs");
  LmiProblem prob;
  prob.origin = "composite";
  prob.structure = structure;
  prob.n = env.dim();
  prob.env = env;
  prob.lambda2 = lambda2;
  prob.d = d;
  for (std::size_t k = 0; k < env.box_terms.size(); ++k) {
    const auto& t = env.box_terms[k];
    if (structure == Structure::kDiagonal && t.diag_nonpositive) {
      prob.notes.push_back("box term " + (t.label.empty() ? std::to_string(k + 1) : t.label) +
                           " is diagonal nonpositive; omitted for diagonal P");
      continue;
    }
    prob.kept_terms.push_back(k);
  }
  prob.multipliers = prob.kept_terms.size();
  prob.constraints.push_back(
      {ConstraintKind::kStrict, "composite", composite_matrix(env, lambda2, d, prob.kept_terms)});
  add_d_constraint(prob, d);
  return prob;
}

SymMat Certificate::blocked() const {
  const std::size_t n = p.dim();
  SymMat out(n + q.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) out.set(i, j, p(i, j));
  for (std::size_t k = 0; k < q.size(); ++k) out.set(n + k, n + k, q[k]);
  return out;
}

CheckReport certificate_check(const Certificate& cert, const LmiProblem& prob, double margin_tol, double weak_tol) {
  if (cert.p.dim() != prob.n || cert.q.size() != prob.multipliers)
    throw StructureMismatch("certificate shape does not match the problem's variables");
  if (prob.structure == Structure::kDiagonal && !cert.p.mat().is_diagonal())
    throw StructureMismatch("problem requires a diagonal P");

  CheckReport rep;
  const SymMat pp = cert.blocked();
  const std::size_t N = prob.dim();
  rep.p_min_eig = min_eig(pp);

  const auto t = prob.balancing();
  SymMat pb(N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i; j < N; ++j) pb.set(i, j, t[i] * pp(i, j) * t[j]);
  const auto pev = sym_eigenvalues(pb);
  const double pmin = pev.front(), pmax = std::max(std::abs(pev.front()), std::abs(pev.back()));

  rep.valid = true;
  if (!(pmin > 0.0)) {
    rep.valid = false;
    rep.reason = "P is not positive definite";
  }
  for (double q : cert.q)
    if (!(q > 0.0) && rep.valid) {
      rep.valid = false;
      rep.reason = "nonpositive multiplier";
    }

  double worst_strict = -std::numeric_limits<double>::infinity();
  double worst_norm = std::numeric_limits<double>::infinity();
  for (const auto& c : prob.constraints) {
    ConstraintReport r;
    r.label = c.label;
    r.kind = c.kind;
    r.lambda_max = max_eig_of_sym_part(c.m, pp);
    Mat mb(N, N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) mb(i, j) = c.m(i, j) * t[j] / t[i];
    const double w = 2.0 * (1.0 + mb.frobenius_norm());
    const double lb = max_eig_of_sym_part(mb, pb);
    if (c.kind == ConstraintKind::kStrict) {
      r.normalized = pmin > 0.0 ? -lb / (w * pmin) : -std::numeric_limits<double>::infinity();
      r.ok = r.normalized >= margin_tol;
      worst_strict = std::max(worst_strict, r.lambda_max);
      worst_norm = std::min(worst_norm, r.normalized);
    } else {
      r.normalized = pmax > 0.0 ? lb / (w * pmax) : std::numeric_limits<double>::infinity();
      r.ok = r.normalized <= weak_tol;
    }
    if (!r.ok && rep.valid) {
      rep.valid = false;
      rep.reason = "constraint '" + c.label + "' fails";
    }
    rep.entries.push_back(std::move(r));
  }
  rep.margin = -worst_strict;
  rep.normalized_margin = worst_norm;
  return rep;
}

double certified_epsilon(const SymMat& p, const Envelope& env, double lambda2, const Mat& d, std::size_t max_terms) {
  check_coupling(env, lambda2, d);
  if (p.dim() != env.dim()) throw DimensionMismatch("P and envelope dimensions differ");
  Envelope reduced = env;
  if (p.mat().is_diagonal())
    std::erase_if(reduced.box_terms, [](const BoxTerm& t) { return t.diag_nonpositive; });
  const Mat shift = lambda2 * d;
  double worst = -std::numeric_limits<double>::infinity();
  for (auto& z : reduced.vertices(max_terms)) {
    z -= shift;
    worst = std::max(worst, max_eig_of_sym_part(z, p));
  }
  return -worst;
}

ConverseResult lemma_s_converse_search(const SymMat& p, const Envelope& env, double lambda2, const Mat& d) {
  check_coupling(env, lambda2, d);
  if (env.box_terms.size() != 1 || env.has_cone() || env.conv_vertices.size() > 1)
    throw InvalidInput("converse search needs exactly one box term and a single nominal matrix");
  if (p.dim() != env.dim()) throw DimensionMismatch("P and envelope dimensions differ");
  const Mat a = composite_matrix(env, lambda2, d, {0});
  const std::size_t n = env.dim();
  auto margin_at = [&](double s) {
    SymMat pp(n + 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) pp.set(i, j, p(i, j));
    pp.set(n, n, std::exp(s));
    return -max_eig_of_sym_part(a, pp);
  };
  // Coarse scan, then golden section around the best grid point. The margin is
  // concave in q, hence unimodal in log q.
  double best_s = -40.0, best = margin_at(best_s);
  for (int k = 1; k <= 320; ++k) {
    const double s = -40.0 + 0.25 * k;
    const double v = margin_at(s);
    if (v > best) {
      best = v;
      best_s = s;
    }
  }
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = best_s - 0.25, hi = best_s + 0.25;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = margin_at(x1), f2 = margin_at(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = margin_at(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = margin_at(x1);
    }
  }
  if (f1 > best) {
    best = f1;
    best_s = x1;
  }
  if (f2 > best) {
    best = f2;
    best_s = x2;
  }
  ConverseResult r;
  r.q = std::exp(best_s);
  r.margin = best;
  const double scale = std::max(spectral_norm(p.mat()), r.q) * (1.0 + a.frobenius_norm());
  r.found = best > 1e-12 * scale;
  return r;
}

}  // namespace rdcert
