#include <cmath>
#include <random>

#include "doctest.h"
#include "random_envelopes.hpp"
#include "rdcert/error.hpp"
#include "rdcert/models.hpp"
#include "rdcert/sdpfeas.hpp"

using namespace rdcert;
using doctest::Approx;

TEST_CASE("small SDP with known optimum") {
  // max y s.t. [[1, y], [y, 1]] >= 0  ->  y = 1
  SdpProblem p;
  p.c = {Mat::identity(2)};
  p.a = {{Mat::from_rows({{0, -1}, {-1, 0}})}};
  p.b = {1.0};
  const auto r = solve_sdp(p);
  CHECK(r.converged);
  CHECK(r.y[0] == Approx(1.0).epsilon(1e-7));

  // max -y1 - y2 s.t. diag(y1 - 1, y2 - 2) >= 0 as two 1x1 blocks -> y = (1, 2)
  SdpProblem q;
  q.c = {Mat(1, 1, -1.0), Mat(1, 1, -2.0)};
  q.a = {{Mat(1, 1, -1.0), Mat(1, 1)}, {Mat(1, 1), Mat(1, 1, -1.0)}};
  q.b = {-1.0, -1.0};
  const auto s = solve_sdp(q);
  CHECK(s.converged);
  CHECK(s.y[0] == Approx(1.0).epsilon(1e-7));
  CHECK(s.y[1] == Approx(2.0).epsilon(1e-7));
}

TEST_CASE("scalar stable matrix") {
  Envelope env;
  env.a0 = Mat(1, 1, -1.0);
  const auto r = solve_feasibility(vertex_lmis(env, 0.0, Mat(1, 1), Structure::kFull));
  REQUIRE(r.status == Status::kFeasible);
  CHECK((*r.cert).p(0, 0) == Approx(1.0));
  CHECK(r.cert->margin == Approx(2.0));
  CHECK(r.cert->epsilon == Approx(2.0));

  env.a0 = Mat(1, 1, 0.5);
  CHECK(solve_feasibility(vertex_lmis(env, 0.0, Mat(1, 1), Structure::kFull)).status == Status::kInfeasible);
}

TEST_CASE("goodwin vertex feasibility either side of the threshold") {
  const auto env = goodwin_envelope(GoodwinParams{});
  const auto above = solve_feasibility(vertex_lmis(env, 1.0, 0.06 * Mat::identity(3), Structure::kFull));
  CHECK(above.status == Status::kFeasible);
  CHECK(above.check.valid);
  const auto below = solve_feasibility(vertex_lmis(env, 1.0, 0.05 * Mat::identity(3), Structure::kFull));
  CHECK(below.status == Status::kInfeasible);
}

TEST_CASE("goodwin thresholds against the reference solver") {
  // Reference values from an independent conic solver on the same balanced,
  // normalized max-margin problem.
  const auto env = goodwin_envelope(GoodwinParams{});
  const Mat i3 = Mat::identity(3);
  auto vf = threshold_search([&](double mu) { return vertex_lmis(env, mu, i3, Structure::kFull); }, 0.01, 0.2, 1e-6);
  CHECK(std::abs(vf.mu_star - 0.054247) < 3e-6);
  auto cd =
      threshold_search([&](double mu) { return composite_lmi(env, mu, i3, Structure::kDiagonal); }, 0.01, 0.2, 1e-6);
  CHECK(std::abs(cd.mu_star - 0.054345) < 3e-6);
  auto vd =
      threshold_search([&](double mu) { return vertex_lmis(env, mu, i3, Structure::kDiagonal); }, 0.01, 0.2, 1e-6);
  CHECK(std::abs(vd.mu_star - 0.054345) < 3e-6);
  CHECK(vf.at_hi.status == Status::kFeasible);
  CHECK(vf.at_lo.status != Status::kFeasible);
  CHECK(vf.hi - vf.lo <= 1e-6);
}

TEST_CASE("bracket errors") {
  const auto env = goodwin_envelope(GoodwinParams{});
  const Mat i3 = Mat::identity(3);
  auto builder = [&](double mu) { return vertex_lmis(env, mu, i3, Structure::kFull); };
  CHECK_THROWS_AS(threshold_search(builder, 0.1, 0.2), BracketError);
  CHECK_THROWS_AS(threshold_search(builder, 0.01, 0.02), BracketError);
}

TEST_CASE("feasible certificates stay valid for larger coupling") {
  const auto env = goodwin_envelope(GoodwinParams{});
  const Mat d = Mat::from_rows({{1, 0, 0}, {0, 2, 0}, {0, 0, 0.5}});
  for (auto st : {Structure::kFull, Structure::kDiagonal}) {
    const auto r = solve_feasibility(vertex_lmis(env, 0.08, d, st));
    REQUIRE(r.status == Status::kFeasible);
    for (double mu : {0.1, 0.5, 3.0}) {
      const auto prob = vertex_lmis(env, mu, d, st);
      CHECK(certificate_check(*r.cert, prob).valid);
    }
  }
}

TEST_CASE("solver results are bit-identical across runs") {
  const auto env = goldbeter_envelope(GoldbeterParams{});
  const auto prob = composite_lmi(env, 0.6, Mat::identity(5), Structure::kFull);
  const auto a = solve_feasibility(prob);
  const auto b = solve_feasibility(prob);
  REQUIRE(a.cert.has_value());
  CHECK(a.cert->p.mat() == b.cert->p.mat());
  CHECK(a.cert->q == b.cert->q);
  CHECK(a.best_margin == b.best_margin);
}

TEST_CASE("weak cone constraints are honoured with full P") {
  const FhnParams fp{0.0, 1.0, 2.0};
  const auto prob = vertex_lmis(fhn_envelope(fp), 1.0, Mat::from_rows({{3, 0}, {0, 1}}), Structure::kFull);
  const auto r = solve_feasibility(prob);
  REQUIRE(r.status == Status::kFeasible);
  // -P e1 e1^T - e1 e1^T P <= 0 forces P12 = 0.
  CHECK(std::abs(r.cert->p(0, 1)) < 1e-9 * r.cert->p(0, 0));
  const auto bad = vertex_lmis(fhn_envelope(fp), 0.5, Mat::from_rows({{3, 0}, {0, 1}}), Structure::kFull);
  CHECK(solve_feasibility(bad).status == Status::kInfeasible);
}

TEST_CASE("composite feasibility implies vertex feasibility of the P block") {
  std::mt19937_64 rng(2024);
  int feasible = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + trial % 3, l = 1 + trial % 4;
    const auto env = testing::random_box_envelope(rng, n, l);
    for (auto st : {Structure::kFull, Structure::kDiagonal}) {
      const auto r = solve_feasibility(composite_lmi(env, 0.0, Mat(n, n), st));
      if (r.status != Status::kFeasible) continue;
      ++feasible;
      Certificate c = *r.cert;
      c.q.clear();
      CHECK(certificate_check(c, vertex_lmis(env, 0.0, Mat(n, n), st)).valid);
    }
  }
  CHECK(feasible >= 10);
}

TEST_CASE("omitted diagonal terms never invalidate a diagonal certificate") {
  const auto env = goodwin_envelope(GoodwinParams{});
  const Mat i3 = Mat::identity(3);
  const auto r = solve_feasibility(composite_lmi(env, 0.06, i3, Structure::kDiagonal));
  REQUIRE(r.status == Status::kFeasible);
  Certificate c = *r.cert;
  c.q.clear();
  const auto full_vertices = vertex_lmis(env, 0.06, i3, Structure::kDiagonal);
  CHECK(full_vertices.constraints.size() == 4);
  CHECK(certificate_check(c, full_vertices).valid);
  CHECK(r.cert->epsilon > 0.0);
}

TEST_CASE("rank-one rescaling leaves composite status unchanged") {
  const auto env = goodwin_envelope(GoodwinParams{});
  const Mat i3 = Mat::identity(3);
  for (double alpha : {0.01, 3.0, 100.0}) {
    auto scaled = env;
    auto b = scaled.box_terms[0].b, c = scaled.box_terms[0].c;
    for (auto& v : b) v *= alpha;
    for (auto& v : c) v /= alpha;
    scaled.box_terms[0] = make_box_term(b, c, "A1");
    for (double mu : {0.04, 0.054, 0.0547, 0.07}) {
      const auto s0 = solve_feasibility(composite_lmi(env, mu, i3, Structure::kDiagonal)).status;
      const auto s1 = solve_feasibility(composite_lmi(scaled, mu, i3, Structure::kDiagonal)).status;
      CHECK(s0 == s1);
    }
  }
}

TEST_CASE("grid search over diagonal P agrees with the solver") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  int compared = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 2;
    Envelope env;
    env.a0 = Mat(n, n);
    for (auto& v : env.a0.data()) v = g(rng);
    for (std::size_t i = 0; i < n; ++i) env.a0(i, i) -= 1.0;
    const auto prob = vertex_lmis(env, 0.0, Mat(n, n), Structure::kDiagonal);
    const auto r = solve_feasibility(prob);
    REQUIRE(r.status != Status::kInconclusive);
    if (std::abs(r.check.normalized_margin) <= 1e-3) continue;
    bool grid_feasible = false;
    for (int a = 0; a < 20 && !grid_feasible; ++a)
      for (int b = 0; b < 20 && !grid_feasible; ++b)
        for (int c = 0; c < (n == 3 ? 20 : 1) && !grid_feasible; ++c) {
          std::vector<double> d = {std::pow(10.0, -2 + 4.0 * a / 19), std::pow(10.0, -2 + 4.0 * b / 19)};
          if (n == 3) d.push_back(std::pow(10.0, -2 + 4.0 * c / 19));
          grid_feasible = max_eig_of_sym_part(env.a0, SymMat::diagonal(d)) < 0.0;
        }
    CHECK(grid_feasible == (r.status == Status::kFeasible));
    ++compared;
  }
  CHECK(compared >= 15);
}
