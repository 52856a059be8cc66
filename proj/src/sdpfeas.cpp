#include "rdcert/sdpfeas.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rdcert/error.hpp"

namespace rdcert {

std::string to_string(Status s) {
  switch (s) {
    case Status::kFeasible:
      return "feasible";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kInconclusive:
      return "inconclusive";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat symmetrize(const Mat& a) {
  Mat s = a + a.transpose();
  s *= 0.5;
  return s;
}

/// Nesterov-Todd scaling of one block: W Z W = X, W = G G^T and
/// G^-1 X G^-T = G^T Z G = diag(v).
struct NtScaling {
  Mat g, gt, w;
  std::vector<double> v;
};

NtScaling nt_scaling(const Mat& x, const Mat& z) {
  const std::size_t n = x.rows();
  const auto ex = sym_eigs(SymMat::symmetric_part(x));
  Mat xh(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += ex.vectors(i, k) * std::sqrt(std::max(ex.values[k], 1e-300)) * ex.vectors(j, k);
      xh(i, j) = xh(j, i) = s;
    }
  const auto et = sym_eigs(SymMat::symmetric_part(xh * z * xh));
  NtScaling s;
  s.v.resize(n);
  Mat u = et.vectors;
  for (std::size_t k = 0; k < n; ++k) {
    const double th = std::max(et.values[k], 1e-300);
    s.v[k] = std::sqrt(th);
    const double f = std::pow(th, -0.25);
    for (std::size_t i = 0; i < n; ++i) u(i, k) *= f;
  }
  s.g = xh * u;
  s.gt = s.g.transpose();
  s.w = symmetrize(s.g * s.gt);
  return s;
}

/// Largest alpha with diag(v) + alpha D >= 0 (D symmetrized), or +inf.
double max_step(const std::vector<double>& v, const Mat& d) {
  const std::size_t n = v.size();
  SymMat s(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) s.set(i, j, 0.5 * (d(i, j) + d(j, i)) / std::sqrt(v[i] * v[j]));
  const double lm = min_eig(s);
  return lm < 0.0 ? -1.0 / lm : kInf;
}

bool solve_spd(Mat m, const std::vector<double>& rhs, std::vector<double>& out) {
  if (cholesky_solve(m, rhs, out)) return true;
  double dmax = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) dmax = std::max(dmax, std::abs(m(i, i)));
  double reg = 1e-14 * std::max(dmax, 1.0);
  for (int k = 0; k < 8; ++k, reg *= 100.0) {
    Mat r = m;
    for (std::size_t i = 0; i < r.rows(); ++i) r(i, i) += reg;
    if (cholesky_solve(r, rhs, out)) return true;
  }
  return false;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

SdpResult solve_sdp(const SdpProblem& prob, const SdpOptions& opts) {
  const std::size_t nblocks = prob.c.size();
  const std::size_t m = prob.b.size();
  if (prob.a.size() != nblocks) throw DimensionMismatch("SDP block count mismatch");
  std::vector<std::size_t> dims(nblocks);
  std::size_t ntot = 0;
  for (std::size_t k = 0; k < nblocks; ++k) {
    dims[k] = prob.c[k].rows();
    ntot += dims[k];
    if (prob.a[k].size() != m) throw DimensionMismatch("SDP constraint count mismatch");
  }

  double bnorm = norm2(prob.b), cnorm = 0.0;
  for (const auto& c : prob.c) cnorm += inner(c, c);
  cnorm = std::sqrt(cnorm);

  SdpResult res;
  res.y.assign(m, 0.0);
  res.x.resize(nblocks);
  res.z.resize(nblocks);
  for (std::size_t k = 0; k < nblocks; ++k) {
    const double sq = std::sqrt(static_cast<double>(dims[k]));
    double xi = std::max(10.0, sq), eta = std::max({10.0, sq, prob.c[k].frobenius_norm()});
    for (std::size_t i = 0; i < m; ++i) {
      const double an = prob.a[k][i].frobenius_norm();
      xi = std::max(xi, sq * (1.0 + std::abs(prob.b[i])) / (1.0 + an));
      eta = std::max(eta, an);
    }
    res.x[k] = xi * Mat::identity(dims[k]);
    res.z[k] = eta * Mat::identity(dims[k]);
  }

  std::vector<NtScaling> sc(nblocks);
  std::vector<Mat> rd(nblocks);
  std::vector<double> rp(m);
  SdpResult best = res;
  double best_merit = std::numeric_limits<double>::infinity();
  int last_progress = 0;

  for (int iter = 0;; ++iter) {
    // Residuals and stopping test.
    double pobj = 0.0, dobj = 0.0, mu = 0.0, dinf = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      rp[i] = prob.b[i];
      dobj += prob.b[i] * res.y[i];
    }
    for (std::size_t k = 0; k < nblocks; ++k) {
      pobj += inner(prob.c[k], res.x[k]);
      mu += inner(res.x[k], res.z[k]);
      rd[k] = prob.c[k] - res.z[k];
      for (std::size_t i = 0; i < m; ++i) {
        rp[i] -= inner(prob.a[k][i], res.x[k]);
        if (res.y[i] != 0.0) rd[k] -= res.y[i] * prob.a[k][i];
      }
      dinf += inner(rd[k], rd[k]);
    }
    mu /= static_cast<double>(ntot);
    res.primal_obj = pobj;
    res.dual_obj = dobj;
    res.rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    res.primal_infeas = norm2(rp) / (1.0 + bnorm);
    res.dual_infeas = std::sqrt(dinf) / (1.0 + cnorm);
    res.iterations = iter;
    if (opts.trace)
      std::fprintf(stderr, "sdp %3d pobj % .10e dobj % .10e gap %.2e pinf %.2e dinf %.2e mu %.2e\n", iter, pobj, dobj,
                   res.rel_gap, res.primal_infeas, res.dual_infeas, mu);
    const double merit = std::max({res.rel_gap, res.primal_infeas, res.dual_infeas});
    if (!std::isfinite(merit)) break;
    if (merit < best_merit) {
      if (merit < 0.9 * best_merit) last_progress = iter;
      best_merit = merit;
      best = res;
    }
    if (res.rel_gap <= opts.gap_tol && res.primal_infeas <= opts.feas_tol && res.dual_infeas <= opts.feas_tol) break;
    // Past the attainable accuracy the iterates drift; stop on stalls.
    if (iter >= opts.max_iters || iter - last_progress >= 5) break;

    // Schur complement M_il = sum_k <A_ki, W A_kl W>.
    std::vector<std::vector<Mat>> waw(nblocks);
    Mat schur(m, m);
    for (std::size_t k = 0; k < nblocks; ++k) {
      sc[k] = nt_scaling(res.x[k], res.z[k]);
      waw[k].resize(m);
      for (std::size_t l = 0; l < m; ++l) waw[k][l] = sc[k].w * prob.a[k][l] * sc[k].w;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = i; l < m; ++l) {
          const double v = inner(prob.a[k][i], waw[k][l]);
          schur(i, l) += v;
          if (l != i) schur(l, i) += v;
        }
    }
    std::vector<double> rdterm(m, 0.0);
    for (std::size_t k = 0; k < nblocks; ++k) {
      const Mat wrw = sc[k].w * rd[k] * sc[k].w;
      for (std::size_t i = 0; i < m; ++i) rdterm[i] += inner(prob.a[k][i], wrw);
    }

    struct Direction {
      std::vector<double> dy;
      std::vector<Mat> dx, dz, dxs, dzs;  // unscaled and scaled
      double ap = 0.0, ad = 0.0;
      bool ok = true;
    };
    // Direction for the scaled complementarity right-hand side r[k].
    auto direction = [&](const std::vector<Mat>& r) {
      Direction d;
      std::vector<Mat> s(nblocks);
      std::vector<double> rhs(m);
      for (std::size_t i = 0; i < m; ++i) rhs[i] = rp[i] + rdterm[i];
      for (std::size_t k = 0; k < nblocks; ++k) {
        const auto& v = sc[k].v;
        s[k] = Mat(dims[k], dims[k]);
        for (std::size_t i = 0; i < dims[k]; ++i)
          for (std::size_t j = 0; j < dims[k]; ++j) s[k](i, j) = 2.0 * r[k](i, j) / (v[i] + v[j]);
        const Mat gsg = sc[k].g * s[k] * sc[k].gt;
        for (std::size_t i = 0; i < m; ++i) rhs[i] -= inner(prob.a[k][i], gsg);
      }
      if (!solve_spd(schur, rhs, d.dy) ||
          !std::all_of(d.dy.begin(), d.dy.end(), [](double v) { return std::isfinite(v); })) {
        d.ok = false;
        return d;
      }
      d.ap = d.ad = 1.0 / opts.step_fraction;
      for (std::size_t k = 0; k < nblocks; ++k) {
        Mat dz = rd[k];
        for (std::size_t i = 0; i < m; ++i) dz -= d.dy[i] * prob.a[k][i];
        Mat dzs = symmetrize(sc[k].gt * dz * sc[k].g);
        Mat dxs = symmetrize(s[k] - dzs);
        if (!dzs.all_finite() || !dxs.all_finite()) {
          d.ok = false;
          return d;
        }
        d.dx.push_back(symmetrize(sc[k].g * dxs * sc[k].gt));
        d.ap = std::min(d.ap, max_step(sc[k].v, dxs));
        d.ad = std::min(d.ad, max_step(sc[k].v, dzs));
        d.dz.push_back(symmetrize(dz));
        d.dxs.push_back(std::move(dxs));
        d.dzs.push_back(std::move(dzs));
      }
      d.ap = std::min(1.0, opts.step_fraction * d.ap);
      d.ad = std::min(1.0, opts.step_fraction * d.ad);
      return d;
    };

    std::vector<Mat> r(nblocks);
    for (std::size_t k = 0; k < nblocks; ++k) {
      r[k] = Mat(dims[k], dims[k]);
      for (std::size_t i = 0; i < dims[k]; ++i) r[k](i, i) = -sc[k].v[i] * sc[k].v[i];
    }
    const Direction pred = direction(r);
    if (!pred.ok) break;

    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nblocks; ++k)
      mu_aff += inner(res.x[k] + pred.ap * pred.dx[k], res.z[k] + pred.ad * pred.dz[k]);
    mu_aff /= static_cast<double>(ntot);
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    for (std::size_t k = 0; k < nblocks; ++k) {
      const Mat cross = symmetrize(pred.dxs[k] * pred.dzs[k]);
      for (std::size_t i = 0; i < dims[k]; ++i) {
        for (std::size_t j = 0; j < dims[k]; ++j) r[k](i, j) = -cross(i, j);
        r[k](i, i) += sigma * mu - sc[k].v[i] * sc[k].v[i];
      }
    }
    const Direction corr = direction(r);
    if (!corr.ok) break;

    for (std::size_t k = 0; k < nblocks; ++k) {
      res.x[k] += corr.ap * corr.dx[k];
      res.z[k] += corr.ad * corr.dz[k];
    }
    for (std::size_t i = 0; i < m; ++i) res.y[i] += corr.ad * corr.dy[i];
    if (std::max(corr.ap, corr.ad) < 1e-10) break;
  }
  best.iterations = res.iterations;
  best.converged = best_merit <= opts.acceptable_tol;
  return best;
}

namespace {

/// Weak constraint sym(P u v^T) <= 0 split into (I - vv^T) P u = 0 and v^T P u <= 0
/// when the matrix is rank one.
struct RankOneSplit {
  std::vector<double> u, v;  // v unit
};

std::optional<RankOneSplit> rank_one(const Mat& s) {
  try {
    const auto t = box_term_from_matrix(s);
    RankOneSplit r{t.b, t.c};
    double nv = norm2(r.v);
    for (auto& x : r.v) x /= nv;
    for (auto& x : r.u) x *= nv;
    return r;
  } catch (const InvalidEnvelope&) {
    return std::nullopt;
  }
}

Mat sym_times(const Mat& h, const Mat& m) {
  Mat a = h * m;
  return a + a.transpose();
}

}  // namespace

FeasibilityResult solve_feasibility(const LmiProblem& prob, const SolveOptions& opts) {
  const std::size_t N = prob.dim();
  if (prob.constraints.empty()) throw InvalidInput("LMI problem has no constraints");
  const auto t = prob.balancing();
  const auto basis = prob.basis();
  const std::size_t nv = basis.size();

  std::vector<Mat> strict, weak_full;
  std::vector<RankOneSplit> weak_r1;
  std::vector<std::string> notes;
  for (const auto& c : prob.constraints) {
    if (c.m.rows() != N || c.m.cols() != N) throw DimensionMismatch("constraint '" + c.label + "' has wrong size");
    Mat mb(N, N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) mb(i, j) = c.m(i, j) * t[j] / t[i];
    if (c.kind == ConstraintKind::kStrict) {
      strict.push_back(std::move(mb));
      continue;
    }
    if (mb.is_zero()) continue;
    bool diag_nonpos = prob.structure == Structure::kDiagonal && mb.is_diagonal();
    for (std::size_t i = 0; diag_nonpos && i < N; ++i) diag_nonpos = mb(i, i) <= 0.0;
    if (diag_nonpos) continue;  // P diagonal: sym(P S) = 2 P S <= 0 already
    if (auto r1 = rank_one(mb))
      weak_r1.push_back(std::move(*r1));
    else
      weak_full.push_back(std::move(mb));
  }
  if (strict.empty()) throw InvalidInput("LMI problem has no strict constraint");

  // Equalities from rank-one weak constraints, eliminated through a null-space basis.
  std::vector<std::vector<double>> eq_rows;
  for (const auto& r : weak_r1) {
    for (std::size_t row = 0; row < N; ++row) {
      std::vector<double> e(nv);
      for (std::size_t l = 0; l < nv; ++l) {
        const auto gu = basis[l].mat() * std::span<const double>(r.u);
        double vg = 0.0;
        for (std::size_t i = 0; i < N; ++i) vg += r.v[i] * gu[i];
        e[l] = gu[row] - r.v[row] * vg;
      }
      const double ne = norm2(e);
      if (ne == 0.0) continue;
      for (auto& x : e) x /= ne;
      eq_rows.push_back(std::move(e));
    }
  }
  Mat nb = eq_rows.empty() ? Mat::identity(nv) : null_space(Mat::from_rows(eq_rows));
  const std::size_t nz = nb.cols();
  std::vector<Mat> h(nz, Mat(N, N));
  for (std::size_t j = 0; j < nz; ++j)
    for (std::size_t l = 0; l < nv; ++l)
      if (nb(l, j) != 0.0) h[j] += nb(l, j) * basis[l].mat();

  FeasibilityResult out;
  if (nz == 0) {
    out.status = Status::kInfeasible;
    out.message = "weak constraints force P = 0";
    return out;
  }

  // y = (z_1..z_nz, t); maximize t.
  const std::size_t m = nz + 1;
  SdpProblem sdp;
  sdp.b.assign(m, 0.0);
  sdp.b[nz] = 1.0;
  auto add_block = [&](Mat c, std::vector<Mat> a) {
    sdp.c.push_back(std::move(c));
    sdp.a.push_back(std::move(a));
  };
  for (const auto& mb : strict) {
    const double w = 2.0 * (1.0 + mb.frobenius_norm());
    std::vector<Mat> a;
    for (std::size_t j = 0; j < nz; ++j) {
      Mat s = sym_times(h[j], mb);
      s *= 1.0 / w;
      a.push_back(std::move(s));
    }
    a.push_back(Mat::identity(N));
    add_block(Mat(N, N), std::move(a));
  }
  for (const auto& mb : weak_full) {
    std::vector<Mat> a;
    for (std::size_t j = 0; j < nz; ++j) a.push_back(sym_times(h[j], mb));
    a.push_back(Mat(N, N));
    add_block(Mat(N, N), std::move(a));
  }
  for (const auto& r : weak_r1) {
    std::vector<Mat> a;
    for (std::size_t j = 0; j < nz; ++j) {
      const auto hu = h[j] * std::span<const double>(r.u);
      double s = 0.0;
      for (std::size_t i = 0; i < N; ++i) s += r.v[i] * hu[i];
      a.push_back(Mat(1, 1, s));
    }
    a.push_back(Mat(1, 1));
    add_block(Mat(1, 1), std::move(a));
  }
  {
    std::vector<Mat> a;
    for (std::size_t j = 0; j < nz; ++j) a.push_back(-h[j]);
    a.push_back(Mat(N, N));
    add_block(-1.0 * Mat::identity(N), std::move(a));
  }
  {
    std::vector<Mat> a;
    for (std::size_t j = 0; j < nz; ++j) a.push_back(Mat(1, 1, trace(h[j])));
    a.push_back(Mat(1, 1));
    add_block(Mat(1, 1, opts.trace_cap * static_cast<double>(N)), std::move(a));
  }

  const SdpResult sr = solve_sdp(sdp, opts.sdp);
  out.iterations = sr.iterations;
  out.rel_gap = sr.rel_gap;
  out.primal_infeas = sr.primal_infeas;
  out.dual_infeas = sr.dual_infeas;
  out.best_margin = sr.y[nz];

  // Back to original coordinates: P = T^-1 P' T^-1.
  Mat pb(N, N);
  for (std::size_t j = 0; j < nz; ++j) pb += sr.y[j] * h[j];
  SymMat pfull(N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i; j < N; ++j) pfull.set(i, j, 0.5 * (pb(i, j) + pb(j, i)) / (t[i] * t[j]));
  if (!pfull.mat().all_finite()) {
    out.status = Status::kInconclusive;
    out.message = "solver diverged";
    return out;
  }
  const double lmin = min_eig(pfull);
  if (lmin > 0.0) pfull *= 1.0 / lmin;

  Certificate cert;
  cert.origin = prob.origin;
  cert.structure = prob.structure;
  cert.p = SymMat(prob.n);
  for (std::size_t i = 0; i < prob.n; ++i)
    for (std::size_t j = i; j < prob.n; ++j) cert.p.set(i, j, pfull(i, j));
  for (std::size_t k = 0; k < prob.multipliers; ++k) cert.q.push_back(pfull(prob.n + k, prob.n + k));

  out.check = certificate_check(cert, prob, opts.margin_tol, opts.weak_tol);
  cert.margin = out.check.margin;
  cert.epsilon = cert.margin;
  if (out.check.valid) {
    try {
      const bool composite = prob.origin == "composite";
      // Composite margin is a lower bound on epsilon; the vertex value is exact.
      if (!composite || prob.kept_terms.size() <= 20)
        cert.epsilon = certified_epsilon(cert.p, prob.env, prob.lambda2, prob.d);
    } catch (const Error&) {
    }
  }
  out.cert = cert;

  if (out.check.valid) {
    out.status = Status::kFeasible;
    out.message = "certificate verified";
  } else if (sr.converged) {
    out.status = Status::kInfeasible;
    out.message = "optimal margin " + std::to_string(out.best_margin) + " below tolerance";
  } else {
    out.status = Status::kInconclusive;
    out.message = "interior-point method stopped after " + std::to_string(sr.iterations) +
                  " iterations without convergence";
  }
  return out;
}

ThresholdResult threshold_search(const std::function<LmiProblem(double)>& builder, double lo, double hi,
                                 double tol, const SolveOptions& opts) {
  if (!(lo < hi) || !(tol > 0.0)) throw InvalidInput("threshold search needs lo < hi and tol > 0");
  ThresholdResult r;
  r.at_lo = solve_feasibility(builder(lo), opts);
  r.at_hi = solve_feasibility(builder(hi), opts);
  r.evaluations = 2;
  if (r.at_lo.status == Status::kFeasible || r.at_hi.status != Status::kFeasible)
    throw BracketError("bracket does not straddle the feasibility boundary: lower end " + to_string(r.at_lo.status) +
                       ", upper end " + to_string(r.at_hi.status));
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    auto fr = solve_feasibility(builder(mid), opts);
    ++r.evaluations;
    if (fr.status == Status::kFeasible) {
      hi = mid;
      r.at_hi = std::move(fr);
    } else {
      lo = mid;
      r.at_lo = std::move(fr);
    }
  }
  r.lo = lo;
  r.hi = hi;
  r.mu_star = hi;
  return r;
}

}  // namespace rdcert
