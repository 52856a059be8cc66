// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Tolerances and runtime budgets are fixed here and nowhere else.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "random_envelopes.hpp"
#include "rdcert/analytic.hpp"
#include "rdcert/dynamics.hpp"
#include "rdcert/lmi.hpp"
#include "rdcert/models.hpp"
#include "rdcert/sdpfeas.hpp"
#include "rdcert/spectral.hpp"

using namespace rdcert;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [miss: " << what << "]";
    }
  }
};

std::string g(double v, int digits = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail << " [over budget " << g(budget_s, 3) << " s]";
  }
  failures += !o.pass;
  std::printf("%s  %2d  %-50s %7.2fs %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.str().c_str());
  std::fflush(stdout);
}

bool bit_identical(const Trace& a, const Trace& b) {
  return a.times == b.times && a.means == b.means && a.nonuniformity == b.nonuniformity &&
         a.sync_error == b.sync_error && a.lyapunov == b.lyapunov;
}

double rel_err(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }

// Goodwin PDE at lambda2 d = 1.5 x 0.05425 on the interval with that eigenvalue.
constexpr double kGoodwinLambda2 = 1.5 * 0.05425;

PdeGrid goodwin_grid() { return {std::numbers::pi / std::sqrt(kGoodwinLambda2), 64}; }

SimOptions goodwin_opts(double t_end, std::size_t threads) {
  SimOptions o;
  o.t_end = t_end;
  o.dt = 0.05;
  o.output_dt = 0.5;
  o.threads = threads;
  return o;
}

std::vector<double> goodwin_init(const PdeGrid& grid) { return cosine_initial(grid, {0.5, 0.5, 0.5}, 0.1); }

SimOptions fhn_opts(std::size_t threads) {
  SimOptions o;
  o.t_end = 50.0;
  o.output_dt = 0.1;
  o.threads = threads;
  return o;
}

}  // namespace

int main() {
  const Mat i3 = Mat::identity(3);
  const auto goodwin_env = goodwin_envelope(GoodwinParams{});

  criterion(1, "Goodwin Othmer supremum = 9.0554 +- 1e-3", 1.0, [&](Outcome& o) {
    const auto r = othmer_check(goodwin_env, 1.0, i3);
    o.detail << "sup|J|_2 = " << g(r.sup_norm, 8);
    o.check(std::abs(r.sup_norm - 9.0554) <= 1e-3, "value");
  });

  criterion(2, "Goodwin secant threshold = 0.05435 +- 1e-4", 1.0, [&](Outcome& o) {
    const double mu = goodwin_secant_threshold(GoodwinParams{});
    o.detail << "mu* = " << g(mu, 8);
    o.check(std::abs(mu - 0.05435) <= 1e-4, "value");
  });

  criterion(3, "Goodwin vertex LMI full P = 0.05425 +- 1e-3", 10.0, [&](Outcome& o) {
    const auto t = threshold_search([&](double mu) { return vertex_lmis(goodwin_env, mu, i3, Structure::kFull); },
                                    0.01, 0.2, 1e-5);
    o.detail << "mu* = " << g(t.mu_star, 8) << " (" << t.evaluations << " solves)";
    o.check(std::abs(t.mu_star - 0.05425) <= 1e-3, "value");
  });

  criterion(4, "Goldbeter thresholds within 1% relative", 300.0, [&](Outcome& o) {
    const Mat i5 = Mat::identity(5);
    struct Case {
      bool over;
      Structure st;
      double ref;
    };
    for (const Case c : {Case{false, Structure::kFull, 0.4590}, Case{false, Structure::kDiagonal, 0.5393},
                         Case{true, Structure::kFull, 1.7892}, Case{true, Structure::kDiagonal, 1.7943}}) {
      const auto env = goldbeter_envelope(GoldbeterParams{}, c.over);
      const auto t =
          threshold_search([&](double mu) { return composite_lmi(env, mu, i5, c.st); }, 0.1, 3.0, 1e-5);
      const double err = rel_err(t.mu_star, c.ref);
      const std::string tag = std::string(c.over ? "overparam" : "grouped") + "/" + to_string(c.st);
      o.detail << tag << " " << g(t.mu_star, 6) << " vs " << g(c.ref, 5) << " (" << g(100 * err, 2) << "%); ";
      o.check(err <= 0.01, tag);
    }
  });

  criterion(5, "secant <=> diagonal-P SDP on 200 cyclic specs", 120.0, [&](Outcome& o) {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> logu(-1.0, 1.0), logr(-1.5, 1.5);
    int compared = 0, agree = 0, skipped = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 3 + trial % 4;
      CyclicSpec s;
      for (std::size_t i = 0; i < n; ++i) {
        s.alphas.push_back(std::pow(10.0, logu(rng)));
        s.betas.push_back(std::pow(10.0, logu(rng)));
      }
      const auto base = secant_criterion(s);
      s.betas[0] *= base.threshold * std::exp(logr(rng)) / base.ratio;
      const auto sec = secant_criterion(s);
      // margin from the boundary, relative to the threshold
      if (std::abs(sec.ratio - sec.threshold) < 1e-4 * sec.threshold) {
        ++skipped;
        continue;
      }
      Envelope env;
      env.a0 = s.matrix();
      const auto r = solve_feasibility(composite_lmi(env, 0.0, Mat(n, n), Structure::kDiagonal));
      ++compared;
      agree += sec.pass == (r.status == Status::kFeasible);
    }
    o.detail << agree << "/" << compared << " agree, " << skipped << " within 1e-4 of the boundary";
    o.check(agree == compared, "agreement");
    o.check(compared >= 190, "coverage");
  });

  criterion(6, "rank-one S-procedure forward and converse", 120.0, [&](Outcome& o) {
    std::mt19937_64 rng(606);
    int forward = 0, forward_fail = 0, draws = 0;
    while (forward < 50 && draws < 2000) {
      const std::size_t n = 2 + draws % 3, l = 1 + draws % 4;
      ++draws;
      const auto env = testing::random_box_envelope(rng, n, l);
      const auto st = draws % 2 ? Structure::kFull : Structure::kDiagonal;
      const auto r = solve_feasibility(composite_lmi(env, 0.0, Mat(n, n), st));
      if (r.status != Status::kFeasible) continue;
      ++forward;
      Certificate c = *r.cert;
      c.q.clear();
      forward_fail += !certificate_check(c, vertex_lmis(env, 0.0, Mat(n, n), st)).valid;
    }
    int converse = 0, converse_fail = 0;
    draws = 0;
    while (converse < 50 && draws < 2000) {
      const std::size_t n = 2 + draws % 3;
      ++draws;
      const auto env = testing::random_box_envelope(rng, n, 1);
      const auto r = solve_feasibility(vertex_lmis(env, 0.0, Mat(n, n), Structure::kFull));
      if (r.status != Status::kFeasible) continue;
      ++converse;
      converse_fail += !lemma_s_converse_search(r.cert->p, env, 0.0, Mat(n, n)).found;
    }
    o.detail << "composite => vertex " << forward - forward_fail << "/" << forward << ", converse q-search "
             << converse - converse_fail << "/" << converse;
    o.check(forward == 50 && forward_fail == 0, "forward");
    o.check(converse == 50 && converse_fail == 0, "converse");
  });

  criterion(7, "linear PDE vs modal oracle, modes 1-3, 1e-3 rel", 30.0, [&](Outcome& o) {
    std::mt19937_64 rng(707);
    std::normal_distribution<double> gauss;
    Mat a(3, 3);
    for (auto& v : a.data()) v = gauss(rng);
    a = a - (spectral_norm(a) + 0.5) * Mat::identity(3);
    const PdeGrid grid{std::numbers::pi, 256};
    std::vector<double> init(grid.nodes() * 3);
    std::vector<std::vector<double>> coef(3, std::vector<double>(3));
    for (auto& c : coef)
      for (auto& v : c) v = gauss(rng);
    for (std::size_t j = 0; j < grid.nodes(); ++j)
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < 3; ++i) init[j * 3 + i] += coef[k][i] * std::cos(double(k) * grid.xi(j));
    SimOptions opts;
    opts.t_end = 2.0;
    opts.output_dt = 0.5;
    opts.record_states = true;
    const auto tr = simulate_pde(linear_model(a), i3, grid, init, opts);
    const auto sigma0 = modal_projection(grid, 3, init, 3);
    const auto oracle = modal_oracle(a, i3, {0.0, 1.0, 4.0}, sigma0, {0.5, 1.0, 2.0});
    double worst = 0.0;
    for (std::size_t s = 0; s < oracle.times.size(); ++s) {
      const auto idx = static_cast<std::size_t>(std::llround(oracle.times[s] / 0.5));
      const auto proj = modal_projection(grid, 3, tr.states[idx], 3);
      for (std::size_t k = 0; k < 3; ++k) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
          num = std::max(num, std::abs(proj[k][i] - oracle.sigma[s][k][i]));
          den = std::max(den, std::abs(oracle.sigma[s][k][i]));
        }
        worst = std::max(worst, num / den);
      }
    }
    o.detail << "worst relative error " << g(worst, 3);
    o.check(worst <= 1e-3, "accuracy");
  });

  criterion(8, "heat-mode decay rate -lambda2 d within 2%", 10.0, [&](Outcome& o) {
    const double d = 0.5;
    const PdeGrid grid{std::numbers::pi, 256};
    SimOptions opts;
    opts.t_end = 3.0;
    opts.output_dt = 0.05;
    const auto tr = simulate_pde(linear_model(Mat(1, 1)), Mat(1, 1, d), grid, cosine_initial(grid, {0.0}, 1.0), opts);
    const auto fit = fit_decay_rate(tr.times, tr.nonuniformity, 0.5, 3.0);
    const double ref = -domain_lambda2(DomainSpec::interval(grid.length)) * d;
    o.detail << "rate " << g(fit.rate, 7) << " vs " << g(ref, 7) << " (r^2 " << g(fit.r2, 8) << ")";
    o.check(rel_err(fit.rate, ref) <= 0.02, "rate");
  });

  criterion(9, "Goodwin PDE at 1.5x threshold decays 6 orders", 60.0, [&](Outcome& o) {
    const auto grid = goodwin_grid();
    const double l2 = domain_lambda2(DomainSpec::interval(grid.length));
    const auto r = solve_feasibility(vertex_lmis(goodwin_env, l2, i3, Structure::kFull));
    o.check(r.status == Status::kFeasible, "certificate");
    if (r.status != Status::kFeasible) return;
    auto opts = goodwin_opts(400.0, 1);
    opts.lyapunov_p = r.cert->p;
    const auto tr = simulate_pde(goodwin_model(GoodwinParams{}), i3, grid, goodwin_init(grid), opts);
    const double ratio = tr.nonuniformity.back() / tr.nonuniformity.front();
    // below 1e-16 V(0) successive values differ by round-off only
    bool monotone = true;
    for (std::size_t s = 1; s < tr.lyapunov.size() && tr.lyapunov[s - 1] > 1e-16 * tr.lyapunov[0]; ++s)
      monotone = monotone && tr.lyapunov[s] <= tr.lyapunov[s - 1] * (1.0 + 1e-9);
    const auto fit = fit_decay_rate(tr.times, tr.lyapunov, 0.0, 100.0);
    const double bound = -r.cert->epsilon / max_eig(r.cert->p);
    o.detail << "lambda2 d = " << g(l2, 6) << ", |pi x| ratio " << g(ratio, 3) << ", V rate " << g(fit.rate, 4)
             << " <= " << g(bound, 4) << ", V monotone " << (monotone ? "yes" : "no");
    o.check(!tr.blew_up && !tr.left_domain, "trajectory");
    o.check(ratio <= 1e-6, "decay");
    o.check(monotone, "Lyapunov monotone");
    o.check(fit.rate <= bound * 0.95, "V rate");
  });

  criterion(10, "certified FHN networks synchronize (P3, 3-cycle)", 60.0, [&](Outcome& o) {
    const FhnParams fp;
    const Mat d = Mat::diagonal(std::vector<double>{3.0, 1.0});
    const auto env = fhn_envelope(fp);
    const auto model = fhn_model(fp);
    auto run_seeds = [&](const Graph& graph, const SymMat& p) {
      double worst = 0.0;
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto opts = fhn_opts(1);
        opts.lyapunov_p = p;
        const auto tr = simulate_network(model, d, graph, random_node_states(graph.n, {-1, -1}, {1, 1}, seed), opts);
        worst = std::max(worst, tr.blew_up ? INFINITY : tr.sync_error.back() / tr.sync_error.front());
      }
      return worst;
    };

    const auto path = Graph::path(3);
    const double l2 = graph_lambda2(path);
    const auto r = solve_feasibility(vertex_lmis(env, l2, d, Structure::kFull));
    o.check(r.status == Status::kFeasible, "P3 certificate");
    const double worst_path = r.cert ? run_seeds(path, r.cert->p) : INFINITY;

    const auto cyc = Graph::cycle(3, true);
    const double l2d = directed_algebraic_connectivity(cyc);
    const auto rd = solve_feasibility(vertex_lmis(env, l2d, d, Structure::kDiagonal));
    o.check(rd.status == Status::kFeasible, "3-cycle certificate");
    bool pd_sym = false;
    double worst_cycle = INFINITY;
    if (rd.cert) {
      const Mat pd = rd.cert->p.mat() * d;
      pd_sym = (pd - pd.transpose()).max_abs() == 0.0;
      worst_cycle = run_seeds(cyc, rd.cert->p);
    }
    o.detail << "P3 lambda2 " << g(l2, 6) << " worst ratio " << g(worst_path, 3) << "; 3-cycle lambda2 " << g(l2d, 6)
             << " worst ratio " << g(worst_cycle, 3) << ", PD symmetric " << (pd_sym ? "yes" : "no");
    o.check(worst_path < 1e-6, "P3 sync");
    o.check(pd_sym, "PD symmetry");
    o.check(worst_cycle < 1e-6, "3-cycle sync");
  });

  criterion(11, "mass conservation and 1 vs 4 thread determinism", 120.0, [&](Outcome& o) {
    // f = 0: spatial means are invariant
    const PdeGrid grid{2.0, 128};
    const Mat d = Mat::diagonal(std::vector<double>{1.0, 0.3});
    const auto init = random_node_states(grid.nodes(), {-1, 0}, {1, 2}, 11);
    double drift = 0.0;
    const double t_end = 5.0;
    for (auto st : {Stepper::kSplitCn, Stepper::kExplicitRk4}) {
      SimOptions opts;
      opts.t_end = t_end;
      opts.stepper = st;
      if (st == Stepper::kExplicitRk4) opts.dt = 0.4 * grid.h() * grid.h();
      const auto tr = simulate_pde(linear_model(Mat(2, 2)), d, grid, init, opts);
      for (std::size_t s = 0; s < tr.times.size(); ++s)
        for (std::size_t i = 0; i < 2; ++i)
          drift = std::max(drift, std::abs(tr.means[s][i] - tr.means[0][i]) / std::abs(tr.means[0][i]));
    }
    o.detail << "mean drift " << g(drift, 3) << " over t = " << t_end;
    o.check(drift <= 1e-10 * t_end, "conservation");

    int identical = 0, runs = 0;
    auto compare = [&](const std::function<Trace(std::size_t)>& sim) {
      ++runs;
      identical += bit_identical(sim(1), sim(4));
    };
    const auto gg = goodwin_grid();
    const auto gw = solve_feasibility(vertex_lmis(goodwin_env, kGoodwinLambda2, i3, Structure::kFull));
    compare([&](std::size_t th) {
      auto opts = goodwin_opts(100.0, th);
      if (gw.cert) opts.lyapunov_p = gw.cert->p;
      return simulate_pde(goodwin_model(GoodwinParams{}), i3, gg, goodwin_init(gg), opts);
    });
    compare([&](std::size_t th) {
      SimOptions opts;
      opts.t_end = 2.0;
      opts.threads = th;
      return simulate_pde(linear_model(Mat(2, 2)), d, grid, init, opts);
    });
    compare([&](std::size_t th) {
      const auto init_net = random_node_states(3, {-1, -1}, {1, 1}, 1);
      return simulate_network(fhn_model(FhnParams{}), Mat::diagonal(std::vector<double>{3.0, 1.0}), Graph::path(3), init_net,
                              fhn_opts(th));
    });
    compare([&](std::size_t th) {
      const auto init_net = random_node_states(3, {-1, -1}, {1, 1}, 2);
      return simulate_network(fhn_model(FhnParams{}), Mat::diagonal(std::vector<double>{3.0, 1.0}), Graph::cycle(3, true), init_net,
                              fhn_opts(th));
    });
    o.detail << ", " << identical << "/" << runs << " runs bit-identical";
    o.check(identical == runs, "determinism");
  });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
