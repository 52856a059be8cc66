#pragma once

// Closed-form criteria: secant condition for cyclic matrices, Othmer's norm
// bound and the explicit FitzHugh-Nagumo certificate.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rdcert/envelope.hpp"
#include "rdcert/lmi.hpp"
#include "rdcert/models.hpp"

namespace rdcert {

/// Negative-feedback cycle
///   [[-a1,  0, ..., -bn],
///    [ b1, -a2, ...,  0 ],
///    ...
///    [  0, ..., b_{n-1}, -an]]
/// Any cycle whose sign product is negative is diagonally similar to this one.
struct CyclicSpec {
  std::vector<double> alphas;
  std::vector<double> betas;

  std::size_t size() const { return alphas.size(); }
  /// Throws Unsupported for n < 3, InvalidInput for alphas <= 0 or betas < 0.
  void validate() const;
  Mat matrix() const;
};

/// Recovers a CyclicSpec from a matrix with negative diagonal whose
/// off-diagonal pattern is a single n-cycle with negative sign product.
std::optional<CyclicSpec> detect_cyclic(const Mat& a);

struct SecantResult {
  double ratio = 0.0;      ///< prod beta / prod alpha
  double threshold = 0.0;  ///< sec(pi/n)^n
  bool pass = false;       ///< ratio < threshold
};

SecantResult secant_criterion(const CyclicSpec& spec);

/// Solves b1 b2 V1 / K1^2 = 4 (a1 + mu)(a2 + mu) mu for mu >= 0. With equal
/// diffusion this is the exact threshold on lambda2 d; otherwise it bounds
/// lambda2 min d from above.
double goodwin_secant_threshold(const GoodwinParams& p);

/// Left side of the secant test for the Goodwin composite matrix with
/// diffusion d = (d1, d2, d3).
double goodwin_secant_ratio(const GoodwinParams& p, double lambda2, const std::vector<double>& d);

struct OthmerResult {
  double sup_norm = 0.0;  ///< max spectral norm over envelope vertices; +inf with a cone
  double bound = 0.0;     ///< lambda2 min d_i
  bool pass = false;      ///< sup_norm < bound
  std::size_t worst_vertex = 0;
};

/// The norm is the induced 2-norm. It is convex and the envelope is affine in
/// the box coefficients, so the supremum is attained at a vertex.
OthmerResult othmer_check(const Envelope& env, double lambda2, const Mat& d, std::size_t max_terms = 20);

struct FhnCertificate {
  std::optional<Certificate> cert;
  CheckReport check;
  std::string refusal;  ///< set when cert is empty
};

/// P = diag(1/c, c), valid when lambda2 d1 > c. The margin and epsilon come
/// from certificate_check on the vertex inequalities of fhn_envelope.
FhnCertificate fhn_certificate(const FhnParams& p, double lambda2, const Mat& d);

}  // namespace rdcert
