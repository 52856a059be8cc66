#pragma once

// Seeded random box envelopes shared by the property tests and the acceptance run.

#include <random>

#include "rdcert/envelope.hpp"

namespace rdcert::testing {

/// n x n nominal matrix with a stabilizing diagonal shift and l random rank-one
/// box terms; coefficients are drawn so that roughly half the instances admit
/// a certificate.
inline Envelope random_box_envelope(std::mt19937_64& rng, std::size_t n, std::size_t l) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> shift(0.5, 3.0);
  Envelope env;
  env.a0 = Mat(n, n);
  for (auto& v : env.a0.data()) v = g(rng);
  const double s = shift(rng);
  for (std::size_t i = 0; i < n; ++i) env.a0(i, i) -= s;
  for (std::size_t k = 0; k < l; ++k) {
    std::vector<double> b(n), c(n);
    for (auto& v : b) v = 0.8 * g(rng);
    for (auto& v : c) v = 0.8 * g(rng);
    env.box_terms.push_back(make_box_term(b, c, "A" + std::to_string(k + 1)));
  }
  return env;
}

}  // namespace rdcert::testing
