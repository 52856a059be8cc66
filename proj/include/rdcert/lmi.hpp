#pragma once

// Constant-matrix Lyapunov inequalities built from Jacobian envelopes.
//
// Every constraint has the form  sym(P M) = P M + M^T P  (< 0 strict, <= 0 weak)
// where P is the structured decision matrix: an n x n block (full or diagonal)
// optionally followed by scalar multipliers q_1..q_l on the diagonal.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "rdcert/envelope.hpp"
#include "rdcert/numerics.hpp"

namespace rdcert {

enum class Structure { kFull, kDiagonal };
std::string to_string(Structure s);
/// "full" or "diagonal"; throws InvalidInput otherwise.
Structure parse_structure(std::string_view s);

enum class ConstraintKind { kStrict, kWeak };

struct LmiConstraint {
  ConstraintKind kind = ConstraintKind::kStrict;
  std::string label;
  Mat m;
};

struct LmiProblem {
  std::string origin;  ///< "vertex" or "composite"
  Structure structure = Structure::kFull;
  std::size_t n = 0;            ///< size of the P block
  std::size_t multipliers = 0;  ///< number of q_i
  std::vector<LmiConstraint> constraints;
  /// Reductions applied while assembling (omitted terms, skipped constraints).
  std::vector<std::string> notes;

  // Source data, kept so a certificate's epsilon can be evaluated on the envelope.
  Envelope env;
  double lambda2 = 0.0;
  Mat d;
  /// Composite only: indices of the box terms that entered B and C.
  std::vector<std::size_t> kept_terms;

  std::size_t dim() const { return n + multipliers; }
  std::size_t num_vars() const;
  /// Symmetric basis matrices G_l with P = sum_l x_l G_l.
  std::vector<SymMat> basis() const;
  /// Diagonal congruence T (as its diagonal) used for normalization; a pure
  /// function of the constraint matrices.
  std::vector<double> balancing() const;
  /// Plain-text listing of all constraint matrices, 17 significant digits.
  std::string dump() const;
};

/// One strict constraint per vertex of env shifted by -lambda2 D, one weak
/// constraint per cone generator and, unless it holds automatically, the weak
/// constraint P D + D^T P >= 0.
LmiProblem vertex_lmis(const Envelope& env, double lambda2, const Mat& d, Structure structure,
                       std::size_t max_terms = 20);

/// Composite matrix [[A0 - lambda2 D, B], [C^T, -I]] over the listed box terms.
Mat composite_matrix(const Envelope& env, double lambda2, const Mat& d, const std::vector<std::size_t>& terms);

/// Single strict inequality on the composite matrix with P = blockdiag(P, q_1..q_l').
/// Under diagonal structure, box terms flagged diag_nonpositive are omitted.
LmiProblem composite_lmi(const Envelope& env, double lambda2, const Mat& d, Structure structure);

struct Certificate {
  std::string origin;
  Structure structure = Structure::kFull;
  SymMat p;
  std::vector<double> q;
  /// -max over strict constraints of lambda_max(sym(P M)).
  double margin = 0.0;
  /// Certified epsilon of the state-dependent inequality on the whole envelope.
  double epsilon = 0.0;

  /// blockdiag(P, diag(q)).
  SymMat blocked() const;
};

struct ConstraintReport {
  std::string label;
  ConstraintKind kind = ConstraintKind::kStrict;
  double lambda_max = 0.0;  ///< of sym(P M), original coordinates
  double normalized = 0.0;  ///< strict: normalized margin; weak: normalized lambda_max
  bool ok = false;
};

struct CheckReport {
  std::vector<ConstraintReport> entries;
  double p_min_eig = 0.0;
  double margin = 0.0;             ///< -max strict lambda_max
  double normalized_margin = 0.0;  ///< min over strict constraints
  bool valid = false;
  std::string reason;
};

/// Independent re-evaluation of a certificate. In balanced coordinates
/// (P' = T P T, M' = T^-1 M T) a strict constraint passes when
///   -lambda_max(sym(P' M')) / (2 (1 + |M'|_F) lambda_min(P')) >= margin_tol
/// and a weak one when lambda_max(sym(P' M')) / (2 (1 + |M'|_F) |P'|_2) <= weak_tol.
CheckReport certificate_check(const Certificate& cert, const LmiProblem& prob, double margin_tol = 1e-7,
                              double weak_tol = 1e-9);

/// -max over envelope vertices of lambda_max(sym(P (Z - lambda2 D))). Box terms
/// that are diagonal nonpositive are skipped when P is diagonal (they can only
/// lower the maximum). Throws VertexExplosion above max_terms remaining terms.
double certified_epsilon(const SymMat& p, const Envelope& env, double lambda2, const Mat& d,
                         std::size_t max_terms = 20);

struct ConverseResult {
  bool found = false;
  double q = 0.0;
  double margin = 0.0;  ///< -lambda_max of the composite at q
};

/// Given P feasible for the two vertex inequalities of a one-term box envelope,
/// searches log q in [-40, 40] for a multiplier making the composite inequality
/// strict.
ConverseResult lemma_s_converse_search(const SymMat& p, const Envelope& env, double lambda2, const Mat& d);

}  // namespace rdcert
