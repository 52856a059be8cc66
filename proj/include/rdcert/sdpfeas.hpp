#pragma once

// Strict feasibility of LMI problems by a dense primal-dual interior-point
// method, plus bisection over a scalar coupling parameter.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rdcert/lmi.hpp"

namespace rdcert {

/// Block-diagonal SDP in the form
///   primal: min <C, X>  s.t. <A_i, X> = b_i, X >= 0
///   dual:   max b^T y   s.t. Z = C - sum_i y_i A_i >= 0
/// c[k] and a[k][i] are the k-th diagonal blocks.
struct SdpProblem {
  std::vector<Mat> c;
  std::vector<std::vector<Mat>> a;
  std::vector<double> b;
};

struct SdpOptions {
  int max_iters = 100;
  double gap_tol = 1e-9;
  double feas_tol = 1e-9;
  /// Iterations continue towards gap_tol/feas_tol; the result counts as
  /// converged when the best iterate reached this accuracy.
  double acceptable_tol = 1e-7;
  double step_fraction = 0.98;
  bool trace = false;  ///< per-iteration log on stderr
};

struct SdpResult {
  std::vector<double> y;
  std::vector<Mat> x;
  std::vector<Mat> z;
  bool converged = false;
  int iterations = 0;  ///< iterations performed; the returned iterate is the most accurate one
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double rel_gap = 0.0;
  double primal_infeas = 0.0;
  double dual_infeas = 0.0;
};

/// Infeasible-start Mehrotra predictor-corrector with Nesterov-Todd scaling.
SdpResult solve_sdp(const SdpProblem& prob, const SdpOptions& opts = {});

struct SolveOptions {
  double margin_tol = 1e-7;
  double weak_tol = 1e-9;
  /// trace(P') <= trace_cap * dim in balanced coordinates.
  double trace_cap = 1e3;
  SdpOptions sdp;
};

enum class Status { kFeasible, kInfeasible, kInconclusive };
std::string to_string(Status s);

struct FeasibilityResult {
  Status status = Status::kInconclusive;
  /// Maximizing P (rescaled so lambda_min = 1). Present unless the solver failed
  /// outright; for infeasible results it is the best attempt.
  std::optional<Certificate> cert;
  CheckReport check;
  double best_margin = 0.0;  ///< optimal t of the normalized max-margin problem
  int iterations = 0;
  double rel_gap = 0.0;
  double primal_infeas = 0.0;
  double dual_infeas = 0.0;
  std::string message;
};

/// max t  s.t.  sym(P' M'_k) / (2 (1 + |M'_k|_F)) + t I <= 0 for strict constraints,
///              sym(P' M'_k) <= 0 for weak ones, P' >= I, trace(P') <= cap,
/// in the balanced coordinates of LmiProblem::balancing(). Feasible iff the
/// extracted certificate passes certificate_check.
FeasibilityResult solve_feasibility(const LmiProblem& prob, const SolveOptions& opts = {});

struct ThresholdResult {
  double mu_star = 0.0;  ///< smallest value found feasible (upper bracket end)
  double lo = 0.0;
  double hi = 0.0;
  FeasibilityResult at_lo;
  FeasibilityResult at_hi;
  int evaluations = 0;
};

/// Bisection on mu until hi - lo <= tol. builder(lo) must be infeasible and
/// builder(hi) feasible; throws BracketError otherwise. Inconclusive midpoints
/// are treated as infeasible.
ThresholdResult threshold_search(const std::function<LmiProblem(double)>& builder, double lo, double hi,
                                 double tol = 1e-4, const SolveOptions& opts = {});

}  // namespace rdcert
