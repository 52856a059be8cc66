#include "rdcert/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "rdcert/error.hpp"

namespace rdcert {

void DomainSpec::validate() const {
  if (!(lx > 0.0) || !std::isfinite(lx)) throw InvalidInput("domain length must be positive");
  if (kind == Kind::kRectangle && (!(ly > 0.0) || !std::isfinite(ly)))
    throw InvalidInput("domain length must be positive");
}

double domain_lambda2(const DomainSpec& d) {
  d.validate();
  const double pi = std::numbers::pi;
  switch (d.kind) {
    case DomainSpec::Kind::kInterval:
      return (pi / d.lx) * (pi / d.lx);
    case DomainSpec::Kind::kRectangle:
      return std::min((pi / d.lx) * (pi / d.lx), (pi / d.ly) * (pi / d.ly));
  }
  throw Unsupported("unknown domain kind");
}

double neumann_grid_eigenvalue(double length, std::size_t m, std::size_t k) {
  if (!(length > 0.0)) throw InvalidInput("domain length must be positive");
  if (m < 2 || k > m) throw InvalidInput("need m >= 2 and k <= m");
  const double h = length / static_cast<double>(m);
  const double s = 1.0 / (h * h);
  // Symmetrized with trapezoid weights: the end couplings become sqrt(2).
  std::vector<double> diag(m + 1, 2.0 * s), off(m, -s);
  off.front() = off.back() = -std::sqrt(2.0) * s;

  // Sturm count: number of eigenvalues below x.
  auto count_below = [&](double x) {
    std::size_t c = 0;
    double q = diag[0] - x;
    if (q < 0.0) ++c;
    for (std::size_t i = 1; i <= m; ++i) {
      if (q == 0.0) q = 1e-300;
      q = diag[i] - x - off[i - 1] * off[i - 1] / q;
      if (q < 0.0) ++c;
    }
    return c;
  };
  double lo = -1.0, hi = 4.0 * s + 1.0;  // Gershgorin
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (count_below(mid) > k ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

Graph Graph::from_edges(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                        bool directed) {
  Graph g;
  g.n = n;
  g.directed = directed;
  g.weights = Mat(n, n);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw InvalidInput("edge index out of range");
    g.weights(u, v) = 1.0;
    if (!directed) g.weights(v, u) = 1.0;
  }
  g.validate();
  return g;
}

Graph Graph::path(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return from_edges(n, e);
}

Graph Graph::complete(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return from_edges(n, e);
}

Graph Graph::cycle(std::size_t n, bool directed) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return from_edges(n, e, directed);
}

void Graph::validate() const {
  if (weights.rows() != n || weights.cols() != n) throw DimensionMismatch("adjacency must be n x n");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double w = weights(i, j);
      if (!std::isfinite(w) || w < 0.0) throw InvalidInput("edge weights must be finite and nonnegative");
      if (i == j && w != 0.0) throw InvalidInput("self-loop at node " + std::to_string(i));
      if (!directed && w != weights(j, i)) throw InvalidInput("undirected graph with asymmetric adjacency");
    }
}

bool Graph::connected() const {
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack = {0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < n; ++v)
      if (!seen[v] && (weights(u, v) > 0.0 || weights(v, u) > 0.0)) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == n;
}

Mat graph_laplacian(const Graph& g) {
  g.validate();
  Mat l(g.n, g.n);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j) {
      if (i == j) continue;
      l(i, j) = -g.weights(i, j);
      l(i, i) += g.weights(i, j);
    }
  return l;
}

double graph_lambda2(const Graph& g) {
  if (g.directed) throw InvalidInput("graph_lambda2 needs an undirected graph");
  if (g.n < 2 || !g.connected()) return 0.0;
  return sym_eigenvalues(SymMat::from(graph_laplacian(g)))[1];
}

double directed_algebraic_connectivity(const Mat& l) {
  const std::size_t n = l.rows();
  if (l.cols() != n) throw DimensionMismatch("Laplacian must be square");
  if (n < 2) return 0.0;
  const double scale = std::max(1.0, l.max_abs());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += l(i, j);
    if (std::abs(s) > 1e-12 * scale * static_cast<double>(n))
      throw InvalidInput("Laplacian row " + std::to_string(i) + " does not sum to zero");
  }
  // Householder reflector H with H e_0 = 1/sqrt(n); columns 1..n-1 span 1-perp.
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  v[0] -= 1.0;
  double vv = 0.0;
  for (double x : v) vv += x * x;
  Mat q(n, n - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 1; j < n; ++j) q(i, j - 1) = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j] / vv;
  const Mat s = 0.5 * (l + l.transpose());
  return min_eig(SymMat::symmetric_part(q.transpose() * s * q));
}

double directed_algebraic_connectivity(const Graph& g) { return directed_algebraic_connectivity(graph_laplacian(g)); }

Graph parse_edge_list(std::istream& in, bool directed, std::size_t n_nodes) {
  struct Arc {
    std::size_t u, v;
    double w;
  };
  std::vector<Arc> arcs;
  std::size_t max_index = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u)) continue;
    if (!(ls >> v) || u < 0 || v < 0) throw InvalidInput("bad edge on line " + std::to_string(lineno));
    double w = 1.0;
    if (!(ls >> w)) w = 1.0;
    std::string rest;
    if (ls >> rest) throw InvalidInput("trailing text on line " + std::to_string(lineno));
    arcs.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v), w});
    max_index = std::max({max_index, arcs.back().u, arcs.back().v});
  }
  Graph g;
  g.n = n_nodes ? n_nodes : (arcs.empty() ? 0 : max_index + 1);
  g.directed = directed;
  g.weights = Mat(g.n, g.n);
  for (const auto& a : arcs) {
    if (a.u >= g.n || a.v >= g.n) throw InvalidInput("edge index out of range");
    g.weights(a.u, a.v) = a.w;
    if (!directed) g.weights(a.v, a.u) = a.w;
  }
  g.validate();
  return g;
}

}  // namespace rdcert
