#pragma once

// Built-in reaction models and their Jacobian envelopes.

#include <functional>
#include <vector>

#include "rdcert/envelope.hpp"

namespace rdcert {

/// Three-species Goodwin oscillator with Michaelis-Menten degradation of x3:
///   x1' = -a1 x1 + V1 / (K1 + x3)
///   x2' = b1 x1 - a2 x2
///   x3' = b2 x2 - V3 x3 / (K3 + x3)
struct GoodwinParams {
  double a1 = 0.01, a2 = 0.01, b1 = 0.01, b2 = 0.01;
  double v1 = 9.0, v3 = 1.0, k1 = 1.0, k3 = 1.0;
};

/// Five-species circadian model (mRNA M, protein P0, P1, P2, nuclear PN).
struct GoldbeterParams {
  int n = 4;
  double vs = 0.76, ki = 1.0, ks = 0.38, k1 = 1.9, k2 = 1.3;
  std::vector<double> v = {3.2, 1.58, 5.0, 2.5};  ///< V1..V4
  std::vector<double> k = {2.0, 2.0, 2.0, 2.0};   ///< K1..K4
  double vm = 0.65, vd = 0.95, kd = 0.2, km = 0.5;
};

/// x1' = c (x1 - x1^3/3 + x2),  x2' = (a - x1 - b x2) / c
struct FhnParams {
  double a = 0.0, b = 1.0, c = 2.0;
};

void validate(const GoodwinParams& p);
void validate(const GoldbeterParams& p);
void validate(const FhnParams& p);

Model goodwin_model(const GoodwinParams& p);
/// Box envelope on the nonnegative orthant: A0 plus A1 = B1 C1^T (b3 = V1/(K1+x3)^2)
/// and the diagonal term A2 = -(V3/K3) e3 e3^T.
Envelope goodwin_envelope(const GoodwinParams& p);

Model goldbeter_model(const GoldbeterParams& p);
/// Supremum over PN >= 0 of |d/dPN vs KI^n / (KI^n + PN^n)|.
double goldbeter_phi5_bound(const GoldbeterParams& p);
/// Seven box terms: A1..A4 each carry one phosphorylation nonlinearity in both
/// rows it appears in, A5 the repression term, A6 and A7 the diagonal
/// degradation terms. With overparameterize every occurrence gets its own
/// term (11 in total).
Envelope goldbeter_envelope(const GoldbeterParams& p, bool overparameterize = false);

Model fhn_model(const FhnParams& p);
/// Exact envelope conv{Z1} + cone{-e1 e1^T} with Z1 the Jacobian at x1 = 0.
Envelope fhn_envelope(const FhnParams& p);

/// x' = A x + B phi(C^T x) with phi' <= gamma.
Model lure_model(const Mat& a, const std::vector<double>& b, const std::vector<double>& c,
                 std::function<double(double)> phi, std::function<double(double)> dphi);
/// conv{A + gamma B C^T} + cone{-B C^T}.
Envelope lure_envelope(const Mat& a, const std::vector<double>& b, const std::vector<double>& c,
                       double gamma);

/// f(x) = A x on all of R^n; the envelope is {A}.
Model linear_model(const Mat& a);

}  // namespace rdcert
