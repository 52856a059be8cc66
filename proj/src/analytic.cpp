#include "rdcert/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "rdcert/error.hpp"

namespace rdcert {

namespace {

// Positive diagonal diffusion matrix; returns its diagonal.
std::vector<double> positive_diagonal(const Mat& d, std::size_t n) {
  if (d.rows() != n || d.cols() != n) throw DimensionMismatch("diffusion matrix has the wrong size");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && d(i, j) != 0.0) throw InvalidInput("diffusion matrix must be diagonal");
      if (i == j) {
        if (!(d(i, i) > 0.0) || !std::isfinite(d(i, i))) throw InvalidInput("diffusion entries must be positive");
        out[i] = d(i, i);
      }
    }
  return out;
}

}  // namespace

void CyclicSpec::validate() const {
  const std::size_t n = alphas.size();
  if (betas.size() != n) throw DimensionMismatch("alphas and betas differ in length");
  if (n < 3) throw Unsupported("secant criterion needs n >= 3");
  for (double a : alphas)
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidInput("alphas must be positive");
  for (double b : betas)
    if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidInput("betas must be nonnegative");
}

Mat CyclicSpec::matrix() const {
  validate();
  const std::size_t n = size();
  Mat a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = -alphas[i];
  for (std::size_t i = 0; i + 1 < n; ++i) a(i + 1, i) = betas[i];
  a(0, n - 1) = -betas[n - 1];
  return a;
}

std::optional<CyclicSpec> detect_cyclic(const Mat& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n || n < 3) return std::nullopt;
  // next[j] = the unique i != j with a(i, j) != 0
  std::vector<std::size_t> next(n, n);
  std::vector<int> row_count(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!(a(j, j) < 0.0)) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j || a(i, j) == 0.0) continue;
      if (next[j] != n) return std::nullopt;
      next[j] = i;
      ++row_count[i];
    }
    if (next[j] == n) return std::nullopt;
  }
  for (int c : row_count)
    if (c != 1) return std::nullopt;

  CyclicSpec spec;
  double sign = 1.0;
  std::size_t v = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && v == 0) return std::nullopt;  // shorter cycle through 0
    spec.alphas.push_back(-a(v, v));
    const double g = a(next[v], v);
    spec.betas.push_back(std::abs(g));
    if (g < 0.0) sign = -sign;
    v = next[v];
  }
  if (v != 0 || sign > 0.0) return std::nullopt;
  return spec;
}

SecantResult secant_criterion(const CyclicSpec& spec) {
  spec.validate();
  const std::size_t n = spec.size();
  // accumulate as a product of ratios to stay in range
  double ratio = 1.0;
  for (std::size_t i = 0; i < n; ++i) ratio *= spec.betas[i] / spec.alphas[i];
  SecantResult r;
  r.ratio = ratio;
  r.threshold = std::pow(1.0 / std::cos(std::numbers::pi / static_cast<double>(n)), static_cast<double>(n));
  r.pass = ratio < r.threshold;
  return r;
}

double goodwin_secant_threshold(const GoodwinParams& p) {
  validate(p);
  const double g = p.b1 * p.b2 * p.v1 / (p.k1 * p.k1);
  auto rhs = [&](double mu) { return 4.0 * (p.a1 + mu) * (p.a2 + mu) * mu; };
  double lo = 0.0, hi = 1.0;
  while (rhs(hi) < g) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rhs(mid) < g ? lo : hi) = mid;
  }
  return hi;
}

double goodwin_secant_ratio(const GoodwinParams& p, double lambda2, const std::vector<double>& d) {
  validate(p);
  if (d.size() != 3) throw DimensionMismatch("Goodwin diffusion needs three entries");
  if (!(lambda2 >= 0.0)) throw InvalidInput("lambda2 must be nonnegative");
  const double g = p.b1 * p.b2 * p.v1 / (p.k1 * p.k1);
  return g / ((p.a1 + lambda2 * d[0]) * (p.a2 + lambda2 * d[1]) * lambda2 * d[2]);
}

OthmerResult othmer_check(const Envelope& env, double lambda2, const Mat& d, std::size_t max_terms) {
  env.validate();
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw InvalidInput("lambda2 must be nonnegative");
  const auto dd = positive_diagonal(d, env.dim());
  OthmerResult r;
  double dmin = dd[0];
  for (double x : dd) dmin = std::min(dmin, x);
  r.bound = lambda2 * dmin;
  if (env.has_cone()) {
    r.sup_norm = std::numeric_limits<double>::infinity();
    return r;
  }
  const auto verts = env.vertices(max_terms);
  for (std::size_t k = 0; k < verts.size(); ++k) {
    const double s = spectral_norm(verts[k]);
    if (k == 0 || s > r.sup_norm) {
      r.sup_norm = s;
      r.worst_vertex = k;
    }
  }
  r.pass = r.sup_norm < r.bound;
  return r;
}

FhnCertificate fhn_certificate(const FhnParams& p, double lambda2, const Mat& d) {
  validate(p);
  const auto dd = positive_diagonal(d, 2);
  FhnCertificate out;
  if (!(lambda2 * dd[0] > p.c)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "lambda2*d1 = %.6g is not greater than c = %.6g", lambda2 * dd[0], p.c);
    out.refusal = buf;
    return out;
  }
  const auto prob = vertex_lmis(fhn_envelope(p), lambda2, d, Structure::kDiagonal);
  Certificate cert;
  cert.origin = prob.origin;
  cert.structure = Structure::kDiagonal;
  const double pd[] = {1.0 / p.c, p.c};
  cert.p = SymMat::diagonal(pd);
  out.check = certificate_check(cert, prob);
  cert.margin = out.check.margin;
  cert.epsilon = certified_epsilon(cert.p, prob.env, lambda2, d);
  if (!out.check.valid) {
    out.refusal = "diag(1/c, c) failed the check: " + out.check.reason;
    return out;
  }
  out.cert = std::move(cert);
  return out;
}

}  // namespace rdcert
