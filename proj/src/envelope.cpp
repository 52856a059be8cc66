#include "rdcert/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "rdcert/error.hpp"

namespace rdcert {

namespace {

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

BoxTerm make_box_term(std::vector<double> b, std::vector<double> c, std::string label) {
  if (b.size() != c.size() || b.empty()) throw InvalidEnvelope("box term factors must have equal, nonzero length");
  if (!finite(b) || !finite(c)) throw InvalidEnvelope("non-finite box term factor");
  BoxTerm t{std::move(b), std::move(c), false, std::move(label)};
  const Mat a = t.matrix();
  bool diag = a.is_diagonal();
  for (std::size_t i = 0; diag && i < a.rows(); ++i) diag = a(i, i) <= 0.0;
  t.diag_nonpositive = diag;
  return t;
}

BoxTerm box_term_from_matrix(const Mat& a, std::string label) {
  if (!a.square()) throw InvalidEnvelope("box term matrix must be square");
  // Pivot on the largest entry: a = col * row / a(p,q) when rank one.
  std::size_t p = 0, q = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (std::abs(a(i, j)) > best) {
        best = std::abs(a(i, j));
        p = i;
        q = j;
      }
  if (best == 0.0) throw InvalidEnvelope("box term matrix is zero");
  std::vector<double> b = a.col(q);
  std::vector<double> c(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) c[j] = a(p, j) / a(p, q);
  Mat r = Mat::outer(b, c);
  r -= a;
  if (r.max_abs() > 1e-12 * best) throw InvalidEnvelope("box term '" + label + "' is not rank one");
  return make_box_term(std::move(b), std::move(c), std::move(label));
}

const std::vector<Mat>& Envelope::base() const {
  if (!conv_vertices.empty()) return conv_vertices;
  base_cache_.assign(1, a0);
  return base_cache_;
}

std::size_t Envelope::vertex_count() const {
  const std::size_t nb = conv_vertices.empty() ? 1 : conv_vertices.size();
  if (box_terms.size() >= 63) return std::numeric_limits<std::size_t>::max();
  const std::uint64_t combos = std::uint64_t{1} << box_terms.size();
  if (combos > std::numeric_limits<std::size_t>::max() / nb) return std::numeric_limits<std::size_t>::max();
  return nb * combos;
}

std::vector<Envelope::Vertex> Envelope::labelled_vertices(std::size_t max_terms) const {
  if (box_terms.size() > max_terms)
    throw VertexExplosion("envelope has " + std::to_string(box_terms.size()) +
                          " box terms; 2^l vertex enumeration is capped at l = " +
                          std::to_string(max_terms) + ", use the composite inequality instead");
  std::vector<Mat> terms;
  terms.reserve(box_terms.size());
  for (const auto& t : box_terms) terms.push_back(t.matrix());
  const auto& bases = base();
  std::vector<Vertex> out;
  out.reserve(vertex_count());
  for (std::size_t bi = 0; bi < bases.size(); ++bi) {
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << terms.size()); ++s) {
      Mat z = bases[bi];
      for (std::size_t i = 0; i < terms.size(); ++i)
        if (s & (std::uint64_t{1} << i)) z += terms[i];
      out.push_back({std::move(z), bi, s});
    }
  }
  return out;
}

std::vector<Mat> Envelope::vertices(std::size_t max_terms) const {
  std::vector<Mat> out;
  for (auto& v : labelled_vertices(max_terms)) out.push_back(std::move(v.z));
  return out;
}

bool Envelope::has_cone() const {
  return std::any_of(cone_gens.begin(), cone_gens.end(), [](const Mat& s) { return !s.is_zero(); });
}

void Envelope::validate() const {
  const std::size_t n = dim();
  if (n == 0 || !a0.square()) throw InvalidEnvelope("nominal matrix must be square and non-empty");
  if (!a0.all_finite()) throw InvalidEnvelope("non-finite nominal matrix");
  for (const auto& t : box_terms)
    if (t.b.size() != n || t.c.size() != n) throw InvalidEnvelope("box term dimension mismatch");
  for (const auto& s : cone_gens)
    if (s.rows() != n || s.cols() != n || !s.all_finite()) throw InvalidEnvelope("bad cone generator");
  for (const auto& z : conv_vertices)
    if (z.rows() != n || z.cols() != n || !z.all_finite()) throw InvalidEnvelope("bad convex vertex");
}

bool Model::contains(std::span<const double> x) const {
  if (x.size() != n) return false;
  switch (domain) {
    case StateDomain::kEverywhere:
      return finite(x);
    case StateDomain::kNonnegativeOrthant:
      return std::all_of(x.begin(), x.end(), [](double v) { return v >= 0.0 && std::isfinite(v); });
    case StateDomain::kBox:
      for (std::size_t i = 0; i < n; ++i)
        if (!(x[i] >= box_lo[i] && x[i] <= box_hi[i])) return false;
      return true;
  }
  return false;
}

std::string Model::domain_name() const {
  switch (domain) {
    case StateDomain::kEverywhere:
      return "R^" + std::to_string(n);
    case StateDomain::kNonnegativeOrthant:
      return "nonnegative orthant of R^" + std::to_string(n);
    case StateDomain::kBox:
      return "box in R^" + std::to_string(n);
  }
  return "?";
}

Mat finite_difference_jacobian(const Model& model, std::span<const double> x) {
  const std::size_t n = model.n;
  Mat j(n, n);
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t k = 0; k < n; ++k) {
    const double h = 1e-6 * (1.0 + std::abs(x[k]));
    xp[k] = x[k] + h;
    const auto fp = model.f(xp);
    xp[k] = x[k] - h;
    const auto fm = model.f(xp);
    xp[k] = x[k];
    for (std::size_t i = 0; i < n; ++i) j(i, k) = (fp[i] - fm[i]) / (2.0 * h);
  }
  return j;
}

MembershipReport membership_audit(const Envelope& env, const Model& model,
                                  const std::vector<std::vector<double>>& samples) {
  env.validate();
  const std::size_t n = env.dim();
  if (model.n != n) throw DimensionMismatch("model and envelope dimensions differ");

  // Entrywise interval hull of conv{base} + box + cone.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  Mat lo(n, n, kInf), hi(n, n, -kInf);
  for (const auto& z : env.base())
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        lo(i, j) = std::min(lo(i, j), z(i, j));
        hi(i, j) = std::max(hi(i, j), z(i, j));
      }
  std::vector<Mat> terms;
  for (const auto& t : env.box_terms) terms.push_back(t.matrix());
  for (const auto& a : terms)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        lo(i, j) += std::min(0.0, a(i, j));
        hi(i, j) += std::max(0.0, a(i, j));
      }
  for (const auto& s : env.cone_gens)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (s(i, j) < 0.0) lo(i, j) = -kInf;
        if (s(i, j) > 0.0) hi(i, j) = kInf;
      }

  // Coefficient recovery is only meaningful for a single base matrix, no cone
  // and linearly independent box terms.
  const std::size_t l = terms.size();
  Mat gram(l, l);
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b) gram(a, b) = inner(terms[a], terms[b]);
  std::vector<double> probe(l, 0.0), tmp;
  bool identifiable = l > 0 && env.base().size() == 1 && !env.has_cone() &&
                      cholesky_solve(gram, probe, tmp);
  if (identifiable) {
    // Reject near-singular Gram matrices (e.g. collinear overparameterized terms).
    const auto ev = sym_eigenvalues(SymMat::symmetric_part(gram));
    identifiable = ev.front() > 1e-10 * ev.back();
  }

  MembershipReport rep;
  rep.coefficients_checked = identifiable;
  auto record = [&](double v, std::size_t s, std::size_t i, std::size_t j) {
    if (v > rep.worst_violation) {
      rep.worst_violation = v;
      rep.worst_sample = s;
      rep.worst_row = i;
      rep.worst_col = j;
    }
  };

  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& x = samples[s];
    if (x.size() != n) throw DimensionMismatch("sample dimension");
    if (!model.contains(x)) {
      rep.outside_domain.push_back(s);
      continue;
    }
    const Mat jx = model.jac(x);
    ++rep.samples_checked;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double v = jx(i, j);
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                             std::max({1.0, std::abs(lo(i, j)) < kInf ? std::abs(lo(i, j)) : 0.0,
                                       std::abs(hi(i, j)) < kInf ? std::abs(hi(i, j)) : 0.0});
        double viol = 0.0;
        if (v < lo(i, j) - slack) viol = lo(i, j) - v;
        if (v > hi(i, j) + slack) viol = v - hi(i, j);
        record(viol, s, i, j);
      }
    if (identifiable) {
      Mat r = jx - env.a0;
      std::vector<double> rhs(l), gamma;
      for (std::size_t a = 0; a < l; ++a) rhs[a] = inner(terms[a], r);
      cholesky_solve(gram, rhs, gamma);
      for (std::size_t a = 0; a < l; ++a) {
        r -= gamma[a] * terms[a];
        const double out = std::max({0.0, -gamma[a], gamma[a] - 1.0}) * terms[a].max_abs();
        if (out > 1e-9 * (1.0 + terms[a].max_abs())) record(out, s, 0, 0);
      }
      const double resid = r.max_abs();
      if (resid > 1e-9 * (1.0 + jx.max_abs())) record(resid, s, 0, 0);
    }
  }
  return rep;
}

}  // namespace rdcert
