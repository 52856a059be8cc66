#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rdcert/numerics.hpp"

namespace rdcert {

/// Rank-one box term B C^T with scalar coefficient ranging over [0, 1].
struct BoxTerm {
  std::vector<double> b;
  std::vector<double> c;
  /// B C^T is diagonal with nonpositive entries. Such terms can be dropped
  /// from the composite inequality when P is diagonal.
  bool diag_nonpositive = false;
  std::string label;

  Mat matrix() const { return Mat::outer(b, c); }
};

/// Builds a box term from its factors and records the diagonal-nonpositive flag.
BoxTerm make_box_term(std::vector<double> b, std::vector<double> c, std::string label = {});
/// Factors a rank-one matrix; throws InvalidEnvelope if a is not rank one.
BoxTerm box_term_from_matrix(const Mat& a, std::string label = {});

/// Constant-matrix parameterization of a Jacobian:
///   conv{base} + box{terms} + cone{cone_gens}
/// where base is conv_vertices when given and {a0} otherwise.
struct Envelope {
  Mat a0;
  std::vector<BoxTerm> box_terms;
  std::vector<Mat> cone_gens;
  std::vector<Mat> conv_vertices;

  std::size_t dim() const { return a0.rows(); }
  const std::vector<Mat>& base() const;
  /// Number of vertices |base| * 2^l; saturates at SIZE_MAX.
  std::size_t vertex_count() const;
  /// All vertices Z + sum_{i in S} B_i C_i^T. Throws VertexExplosion above max_terms.
  std::vector<Mat> vertices(std::size_t max_terms = 20) const;
  /// Same, paired with the subset bitmask and base index used to build each one.
  struct Vertex {
    Mat z;
    std::size_t base_index;
    std::uint64_t subset;
  };
  std::vector<Vertex> labelled_vertices(std::size_t max_terms = 20) const;
  /// True when some cone generator is nonzero (the envelope is unbounded).
  bool has_cone() const;

  /// Throws InvalidEnvelope on inconsistent dimensions or non-finite data.
  void validate() const;

 private:
  mutable std::vector<Mat> base_cache_;
};

enum class StateDomain { kNonnegativeOrthant, kEverywhere, kBox };

/// Reaction vector field with analytic Jacobian and the state set X on which
/// the Jacobian envelope is claimed to hold.
struct Model {
  std::string name;
  std::size_t n = 0;
  std::function<std::vector<double>(std::span<const double>)> f;
  std::function<Mat(std::span<const double>)> jac;
  StateDomain domain = StateDomain::kEverywhere;
  std::vector<double> box_lo;
  std::vector<double> box_hi;

  bool contains(std::span<const double> x) const;
  /// Human readable description of the state domain.
  std::string domain_name() const;
};

struct MembershipReport {
  double worst_violation = 0.0;  ///< 0 when every sample is inside the envelope
  std::size_t worst_sample = 0;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
  std::size_t samples_checked = 0;
  std::vector<std::size_t> outside_domain;  ///< sample indices outside model.domain
  /// Box coefficients were recovered by least squares and checked against [0,1]
  /// (only when the box terms are linearly independent).
  bool coefficients_checked = false;
};

/// Sampling audit of J(x) in envelope. Checks every Jacobian entry against the
/// entrywise interval hull of the envelope and, for identifiable box
/// parameterizations, that the recovered coefficients lie in [0,1].
MembershipReport membership_audit(const Envelope& env, const Model& model,
                                  const std::vector<std::vector<double>>& samples);

/// Central-difference Jacobian with step 1e-6 * (1 + |x_i|).
Mat finite_difference_jacobian(const Model& model, std::span<const double> x);

}  // namespace rdcert
