#include <cmath>
#include <random>

#include "doctest.h"
#include "rdcert/envelope.hpp"
#include "rdcert/error.hpp"
#include "rdcert/models.hpp"

using namespace rdcert;
using doctest::Approx;

namespace {

std::vector<std::vector<double>> random_states(std::size_t n, std::size_t count, double lo, double hi,
                                               unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<std::vector<double>> out(count, std::vector<double>(n));
  for (auto& x : out)
    for (auto& v : x) v = u(rng);
  return out;
}

void check_jacobian(const Model& m, const std::vector<std::vector<double>>& xs) {
  for (const auto& x : xs) {
    const Mat ja = m.jac(x);
    const Mat jf = finite_difference_jacobian(m, x);
    const double scale = std::max(1.0, ja.max_abs());
    for (std::size_t i = 0; i < m.n; ++i)
      for (std::size_t j = 0; j < m.n; ++j) CHECK(std::abs(ja(i, j) - jf(i, j)) <= 1e-5 * scale);
  }
}

}  // namespace

TEST_CASE("goodwin envelope entries") {
  const GoodwinParams p;
  const auto env = goodwin_envelope(p);
  CHECK(env.a0(0, 0) == -0.01);
  CHECK(env.a0(1, 0) == 0.01);
  CHECK(env.a0(2, 1) == 0.01);
  CHECK(env.a0(2, 2) == 0.0);
  REQUIRE(env.box_terms.size() == 2);
  CHECK(env.box_terms[0].b == std::vector<double>{-9, 0, 0});
  CHECK(env.box_terms[0].c == std::vector<double>{0, 0, 1});
  CHECK_FALSE(env.box_terms[0].diag_nonpositive);
  CHECK(env.box_terms[1].diag_nonpositive);
  CHECK(env.vertex_count() == 4);

  GoodwinParams q;
  q.v1 = 1;
  q.k1 = 1;
  CHECK(goodwin_envelope(q).box_terms[0].b == std::vector<double>{-1, 0, 0});

  GoodwinParams bad;
  bad.a1 = 0;
  CHECK_THROWS_AS(goodwin_envelope(bad), InvalidParams);
}

TEST_CASE("goodwin jacobian at x3 = 1 sits inside the box") {
  const auto m = goodwin_model(GoodwinParams{});
  const std::vector<double> x{1, 1, 1};
  const Mat j = m.jac(x);
  CHECK(-j(0, 2) == Approx(2.25));
  CHECK(-j(2, 2) == Approx(0.25));
}

TEST_CASE("goldbeter bounds") {
  GoldbeterParams p;
  CHECK(goldbeter_phi5_bound(p) == Approx(25.0 * 0.76 / 16.0 * std::pow(0.6, 0.75)).epsilon(1e-14));
  CHECK(goldbeter_phi5_bound(p) == Approx(0.8095563).epsilon(1e-6));
  const auto env = goldbeter_envelope(p);
  REQUIRE(env.box_terms.size() == 7);
  const Mat a1 = env.box_terms[0].matrix();
  CHECK(a1(2, 1) == Approx(1.6));
  CHECK(a1(1, 1) == Approx(-1.6));
  p.n = 1;
  CHECK(goldbeter_phi5_bound(p) == Approx(p.vs / p.ki));
  p.n = 0;
  CHECK_THROWS_AS(goldbeter_envelope(p), InvalidParams);
}

TEST_CASE("goldbeter repeated-nonlinearity terms conserve flux") {
  const auto env = goldbeter_envelope(GoldbeterParams{});
  for (std::size_t t = 0; t < 4; ++t) {
    const Mat a = env.box_terms[t].matrix();
    for (std::size_t j = 0; j < 5; ++j) {
      double colsum = 0.0;
      for (std::size_t i = 0; i < 5; ++i) colsum += a(i, j);
      CHECK(colsum == 0.0);
    }
  }
  CHECK(env.box_terms[5].diag_nonpositive);
  CHECK(env.box_terms[6].diag_nonpositive);
  for (std::size_t t = 0; t < 5; ++t) CHECK_FALSE(env.box_terms[t].diag_nonpositive);

  const auto over = goldbeter_envelope(GoldbeterParams{}, true);
  CHECK(over.box_terms.size() == 11);
  int diag = 0;
  for (const auto& b : over.box_terms) diag += b.diag_nonpositive;
  CHECK(diag == 6);
}

TEST_CASE("fhn envelope") {
  const auto env = fhn_envelope(FhnParams{0.0, 1.0, 2.0});
  REQUIRE(env.conv_vertices.size() == 1);
  CHECK(env.conv_vertices[0] == Mat::from_rows({{2, 2}, {-0.5, -0.5}}));
  REQUIRE(env.cone_gens.size() == 1);
  CHECK(env.cone_gens[0] == Mat::from_rows({{-1, 0}, {0, 0}}));
  CHECK(fhn_envelope(FhnParams{0.3, 5.0, 0.7}).cone_gens[0] == Mat::from_rows({{-1, 0}, {0, 0}}));

  // J(x) - Z1 = omega S1 with omega = c x1^2.
  const FhnParams p{0.0, 1.0, 2.0};
  const auto m = fhn_model(p);
  for (const auto& x : random_states(2, 50, -3, 3, 4)) {
    Mat d = m.jac(x) - env.conv_vertices[0];
    d -= p.c * x[0] * x[0] * env.cone_gens[0];
    CHECK(d.max_abs() <= 1e-14 * (1 + x[0] * x[0]));
  }
  const std::vector<double> x1{1.0, 0.0};
  Mat d = m.jac(x1) - env.conv_vertices[0];
  CHECK(d == 2.0 * env.cone_gens[0]);
}

TEST_CASE("lure envelope") {
  const Mat a = Mat::from_rows({{-1, 2}, {0, -3}});
  const std::vector<double> b{1, 0}, c{0, 1};
  CHECK(lure_envelope(a, b, c, 0.0).conv_vertices[0] == a);
  const std::vector<double> e1{1, 0};
  const auto env = lure_envelope(Mat(2, 2), e1, e1, 1.0);
  CHECK(env.conv_vertices[0] == Mat::from_rows({{1, 0}, {0, 0}}));
  CHECK(env.cone_gens[0] == Mat::from_rows({{-1, 0}, {0, 0}}));
  // Z1 + g' S1 = A + (gamma - g') B C^T.
  const auto e2 = lure_envelope(a, b, c, 0.7);
  for (double g : {0.0, 0.3, 2.5}) {
    Mat lhs = e2.conv_vertices[0] + g * e2.cone_gens[0];
    Mat rhs = a + (0.7 - g) * Mat::outer(b, c);
    lhs -= rhs;
    CHECK(lhs.max_abs() < 1e-15);
  }
  CHECK_THROWS_AS(lure_envelope(a, std::vector<double>{1}, c, 1.0), DimensionMismatch);
}

TEST_CASE("analytic jacobians match finite differences") {
  check_jacobian(goodwin_model(GoodwinParams{}), random_states(3, 50, 0, 20, 1));
  check_jacobian(goldbeter_model(GoldbeterParams{}), random_states(5, 50, 0, 5, 2));
  check_jacobian(fhn_model(FhnParams{0.2, 1.0, 2.0}), random_states(2, 50, -3, 3, 3));
  const Mat a = Mat::from_rows({{-1, 2}, {0, -3}});
  check_jacobian(lure_model(a, {1, 0}, {1, 1}, [](double y) { return 0.5 * y - y * y * y; },
                            [](double y) { return 0.5 - 3 * y * y; }),
                 random_states(2, 50, -2, 2, 5));
}

TEST_CASE("membership audit") {
  const GoodwinParams gp;
  const auto genv = goodwin_envelope(gp);
  const auto gm = goodwin_model(gp);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 100; ++i) {
    const double x3 = i == 0 ? 0.0 : std::pow(10.0, -3.0 + 6.0 * i / 99.0);
    xs.push_back({1.0, 2.0, x3});
  }
  auto rep = membership_audit(genv, gm, xs);
  CHECK(rep.worst_violation == 0.0);
  CHECK(rep.samples_checked == 100);
  CHECK(rep.coefficients_checked);

  const GoldbeterParams bp;
  auto benv = goldbeter_envelope(bp);
  const auto bm = goldbeter_model(bp);
  const auto states = random_states(5, 200, 0, 4, 9);
  rep = membership_audit(benv, bm, states);
  CHECK(rep.worst_violation == 0.0);
  CHECK(rep.coefficients_checked);
  CHECK(membership_audit(goldbeter_envelope(bp, true), bm, states).worst_violation == 0.0);

  // Halve the A1 bound: slopes near P0 = 0 fall outside.
  auto shrunk = benv;
  auto b = shrunk.box_terms[0].b;
  for (auto& v : b) v *= 0.5;
  shrunk.box_terms[0] = make_box_term(b, shrunk.box_terms[0].c, "A1");
  rep = membership_audit(shrunk, bm, states);
  CHECK(rep.worst_violation > 0.1);

  // FHN: cone makes the (1,1) entry unbounded below.
  const FhnParams fp{0.0, 1.0, 2.0};
  rep = membership_audit(fhn_envelope(fp), fhn_model(fp), random_states(2, 50, -5, 5, 6));
  CHECK(rep.worst_violation == 0.0);

  // Negative concentrations are flagged, not fatal.
  rep = membership_audit(genv, gm, {{1, 1, -1}, {1, 1, 1}});
  CHECK(rep.outside_domain == std::vector<std::size_t>{0});
  CHECK(rep.samples_checked == 1);
}

TEST_CASE("box terms and vertex enumeration") {
  const Mat r1 = Mat::outer(std::vector<double>{1, 2}, std::vector<double>{3, -1});
  const auto t = box_term_from_matrix(r1);
  Mat back = t.matrix();
  back -= r1;
  CHECK(back.max_abs() < 1e-15);
  CHECK_THROWS_AS(box_term_from_matrix(Mat::identity(2)), InvalidEnvelope);
  CHECK(box_term_from_matrix(Mat::from_rows({{-2, 0}, {0, 0}})).diag_nonpositive);

  Envelope env;
  env.a0 = Mat(1, 1);
  for (int i = 0; i < 21; ++i) env.box_terms.push_back(make_box_term({1.0}, {1.0}));
  CHECK_THROWS_AS(env.vertices(), VertexExplosion);
  env.box_terms.resize(3);
  const auto v = env.vertices();
  CHECK(v.size() == 8);
  CHECK(v.back()(0, 0) == 3.0);
}
