#pragma once

// lambda2 for continuous domains (Neumann Laplacian) and for graphs.

#include <cstddef>
#include <istream>
#include <utility>
#include <vector>

#include "rdcert/numerics.hpp"

namespace rdcert {

struct DomainSpec {
  enum class Kind { kInterval, kRectangle };
  Kind kind = Kind::kInterval;
  double lx = 1.0;
  double ly = 1.0;  ///< rectangle only

  static DomainSpec interval(double length) { return {Kind::kInterval, length, 0.0}; }
  static DomainSpec rectangle(double lx, double ly) { return {Kind::kRectangle, lx, ly}; }
  void validate() const;
};

/// Second Neumann eigenvalue of -Laplacian: (pi/L)^2, or min over the sides.
double domain_lambda2(const DomainSpec& d);

/// k-th smallest eigenvalue (k = 0, 1, ...) of the second-difference Neumann
/// Laplacian on m + 1 equally spaced nodes of [0, L], mirror closure at the ends.
double neumann_grid_eigenvalue(double length, std::size_t m, std::size_t k);

/// Weighted graph on n nodes. weights(i, j) is the strength of arc i <- j, i.e.
/// node i listens to node j. Undirected graphs must be symmetric.
struct Graph {
  std::size_t n = 0;
  Mat weights;
  bool directed = false;

  /// Unit weights; for undirected graphs each pair is added in both directions.
  static Graph from_edges(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                          bool directed = false);
  static Graph path(std::size_t n);
  static Graph complete(std::size_t n);
  static Graph cycle(std::size_t n, bool directed = false);

  /// Throws InvalidInput on self-loops, negative or non-finite weights, or an
  /// asymmetric undirected graph.
  void validate() const;
  bool connected() const;  ///< weak connectivity
};

/// L(i, i) = sum_j w(i, j), L(i, j) = -w(i, j); L 1 = 0.
Mat graph_laplacian(const Graph& g);

/// Second-smallest Laplacian eigenvalue. Exactly 0 for a disconnected graph.
double graph_lambda2(const Graph& g);

/// min over unit y orthogonal to 1 of y^T L y. Throws InvalidInput when L has a
/// nonzero row sum.
double directed_algebraic_connectivity(const Mat& laplacian);
double directed_algebraic_connectivity(const Graph& g);

/// Lines "u v" or "u v w" (0-indexed); '#' starts a comment. n is one more
/// than the largest index unless n_nodes is given.
Graph parse_edge_list(std::istream& in, bool directed = false, std::size_t n_nodes = 0);

}  // namespace rdcert
