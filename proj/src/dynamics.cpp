#include "rdcert/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "rdcert/error.hpp"

namespace rdcert {

WorkerPool::WorkerPool(std::size_t threads) {
  for (std::size_t s = 1; s < std::max<std::size_t>(threads, 1); ++s) workers_.emplace_back([this, s] { run(s); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lk(mu_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

void WorkerPool::run(std::size_t slot) {
  std::uint64_t seen = 0;
  for (;;) {
    const std::function<void(std::size_t, std::size_t)>* job;
    std::size_t n;
    {
      std::unique_lock lk(mu_);
      start_cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      n = job_n_;
    }
    const std::size_t k = size(), begin = slot * n / k, end = (slot + 1) * n / k;
    if (begin < end) (*job)(begin, end);
    {
      std::lock_guard lk(mu_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }
}

void WorkerPool::parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (workers_.empty() || n < 2) {
    fn(0, n);
    return;
  }
  {
    std::lock_guard lk(mu_);
    job_ = &fn;
    job_n_ = n;
    pending_ = workers_.size();
    ++generation_;
  }
  start_cv_.notify_all();
  const std::size_t end0 = n / size();
  if (end0 > 0) fn(0, end0);
  std::unique_lock lk(mu_);
  done_cv_.wait(lk, [&] { return pending_ == 0; });
}

void PdeGrid::validate() const {
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidInput("grid length must be positive");
  if (m < 8) throw InvalidInput("grid needs m >= 8");
}

namespace {

constexpr double kBlowUp = 1e12;

bool blown(const std::vector<double>& x) {
  for (double v : x)
    if (!(std::abs(v) <= kBlowUp)) return true;
  return false;
}

// Shared bookkeeping for both simulators.
class Recorder {
 public:
  Recorder(const Model& model, std::size_t nodes, std::vector<double> weights, const SimOptions& opts, Trace& tr)
      : model_(model), nodes_(nodes), w_(std::move(weights)), opts_(opts), tr_(tr) {
    for (double x : w_) total_ += x;
  }

  void record(double t, const std::vector<double>& x) {
    const std::size_t n = model_.n;
    std::vector<double> mean(n, 0.0);
    for (std::size_t j = 0; j < nodes_; ++j)
      for (std::size_t i = 0; i < n; ++i) mean[i] += w_[j] * x[j * n + i];
    for (auto& v : mean) v /= total_;

    double nu = 0.0, v = 0.0;
    std::vector<double> dev(n);
    for (std::size_t j = 0; j < nodes_; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dev[i] = x[j * n + i] - mean[i];
        s += dev[i] * dev[i];
      }
      nu += w_[j] * s;
      if (opts_.lyapunov_p) {
        double q = 0.0;
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) q += dev[a] * (*opts_.lyapunov_p)(a, b) * dev[b];
        v += 0.5 * w_[j] * q;
      }
    }
    double se = 0.0;
    for (std::size_t j = 0; j < nodes_; ++j)
      for (std::size_t k = j + 1; k < nodes_; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double dd = x[j * n + i] - x[k * n + i];
          s += dd * dd;
        }
        se = std::max(se, s);
      }
    if (!tr_.left_domain)
      for (std::size_t j = 0; j < nodes_; ++j)
        if (!model_.contains(std::span<const double>(x.data() + j * n, n))) {
          tr_.left_domain = true;
          tr_.excursion_time = t;
          break;
        }

    tr_.times.push_back(t);
    tr_.means.push_back(std::move(mean));
    tr_.nonuniformity.push_back(std::sqrt(nu));
    tr_.sync_error.push_back(std::sqrt(se));
    if (opts_.lyapunov_p) tr_.lyapunov.push_back(v);
    if (opts_.record_states) tr_.states.push_back(x);
  }

 private:
  const Model& model_;
  std::size_t nodes_;
  std::vector<double> w_;
  const SimOptions& opts_;
  Trace& tr_;
  double total_ = 0.0;
};

void check_model(const Model& model) {
  if (model.n == 0 || !model.f) throw InvalidInput("model has no vector field");
}

// Runs n_steps of step(), recording every stride and at the end.
template <class Step>
void drive(Trace& tr, Recorder& rec, std::vector<double>& x, std::size_t n_steps, double dt, std::size_t stride,
           Step step) {
  tr.dt = dt;
  rec.record(0.0, x);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    step(x);
    tr.steps = s;
    const double t = static_cast<double>(s) * dt;
    if (blown(x)) {
      tr.blew_up = true;
      rec.record(t, x);
      return;
    }
    if (s % stride == 0 || s == n_steps) rec.record(t, x);
  }
}

std::size_t step_count(double t_end, double& dt) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidInput("t_end must be nonnegative");
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  if (n > 0) dt = t_end / static_cast<double>(n);
  return n;
}

std::size_t stride_for(const SimOptions& opts, double dt) {
  if (opts.output_dt <= 0.0) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opts.output_dt / dt)));
}

// RK4 for y' = rhs(y), rhs writing into its second argument.
template <class Rhs>
void rk4(std::vector<double>& y, double dt, Rhs rhs, std::vector<double> (&k)[4], std::vector<double>& tmp) {
  const std::size_t len = y.size();
  rhs(y, k[0]);
  for (std::size_t i = 0; i < len; ++i) tmp[i] = y[i] + 0.5 * dt * k[0][i];
  rhs(tmp, k[1]);
  for (std::size_t i = 0; i < len; ++i) tmp[i] = y[i] + 0.5 * dt * k[1][i];
  rhs(tmp, k[2]);
  for (std::size_t i = 0; i < len; ++i) tmp[i] = y[i] + dt * k[2][i];
  rhs(tmp, k[3]);
  for (std::size_t i = 0; i < len; ++i) y[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
}

// (I - tau/2 K) u_new = (I + tau/2 K) u for one species, K the mirror-closed
// second difference times d / h^2. The LHS factorization is cached.
class CnSolver {
 public:
  CnSolver(std::size_t m, double r) : m_(m), r_(r), cp_(m + 1), inv_(m + 1) {
    // rows: sub[j] u_{j-1} + (1 + 2r) u_j + sup[j] u_{j+1}
    double prev_cp = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
      const double sub = j == 0 ? 0.0 : (j == m ? -2.0 * r : -r);
      const double sup = j == m ? 0.0 : (j == 0 ? -2.0 * r : -r);
      const double den = 1.0 + 2.0 * r - sub * prev_cp;
      inv_[j] = 1.0 / den;
      cp_[j] = sup * inv_[j];
      prev_cp = cp_[j];
    }
  }

  // u is strided: element j at u[j * stride]
  void apply(double* u, std::size_t stride, std::vector<double>& rhs) const {
    const std::size_t m = m_;
    const double r = r_;
    rhs.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
      const double uj = u[j * stride];
      const double left = j == 0 ? u[stride] : u[(j - 1) * stride];
      const double right = j == m ? u[(m - 1) * stride] : u[(j + 1) * stride];
      rhs[j] = (1.0 - 2.0 * r) * uj + r * (left + right);
    }
    // forward sweep
    double prev = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
      const double sub = j == 0 ? 0.0 : (j == m ? -2.0 * r : -r);
      prev = (rhs[j] - sub * prev) * inv_[j];
      rhs[j] = prev;
    }
    for (std::size_t j = m; j-- > 0;) rhs[j] -= cp_[j] * rhs[j + 1];
    for (std::size_t j = 0; j <= m; ++j) u[j * stride] = rhs[j];
  }

 private:
  std::size_t m_;
  double r_;
  std::vector<double> cp_, inv_;
};

std::vector<double> diffusion_diagonal(const Mat& d, std::size_t n) {
  if (d.rows() != n || d.cols() != n) throw DimensionMismatch("diffusion matrix has the wrong size");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && d(i, j) != 0.0) throw InvalidInput("PDE simulation needs a diagonal diffusion matrix");
      if (i == j) {
        if (!(d(i, i) >= 0.0) || !std::isfinite(d(i, i))) throw InvalidInput("diffusion entries must be >= 0");
        out[i] = d(i, i);
      }
    }
  return out;
}

}  // namespace

Trace simulate_pde(const Model& model, const Mat& d, const PdeGrid& grid, const std::vector<double>& init,
                   const SimOptions& opts) {
  check_model(model);
  grid.validate();
  const std::size_t n = model.n, nodes = grid.nodes(), m = grid.m;
  const auto dd = diffusion_diagonal(d, n);
  if (init.size() != nodes * n) throw DimensionMismatch("initial state must have (m + 1) * n entries");
  const double h = grid.h();
  double dt = opts.dt > 0.0 ? opts.dt : std::min(0.01, h) / 4.0;
  const double dmax = *std::max_element(dd.begin(), dd.end());
  if (opts.stepper == Stepper::kExplicitRk4 && dmax > 0.0 && dt > h * h / (2.0 * dmax))
    throw InvalidInput("explicit stepper needs dt <= h^2 / (2 max d)");
  const std::size_t n_steps = step_count(opts.t_end, dt);

  Trace tr;
  tr.n = n;
  std::vector<double> w(nodes);
  for (std::size_t j = 0; j < nodes; ++j) w[j] = grid.weight(j);
  Recorder rec(model, nodes, w, opts, tr);
  WorkerPool pool(opts.threads);
  std::vector<double> x = init;

  // Reaction RK4 per node over [0, tau].
  auto react = [&](std::vector<double>& y, double tau) {
    pool.parallel_for(nodes, [&](std::size_t b, std::size_t e) {
      std::vector<double> xi(n), tmp(n), k[4];
      for (std::size_t j = b; j < e; ++j) {
        std::copy_n(y.begin() + j * n, n, xi.begin());
        for (auto& kk : k) kk.resize(n);
        rk4(xi, tau, [&](const std::vector<double>& s, std::vector<double>& out) { out = model.f(s); }, k, tmp);
        std::copy_n(xi.begin(), n, y.begin() + j * n);
      }
    });
  };

  if (opts.stepper == Stepper::kSplitCn) {
    std::vector<CnSolver> cn;
    for (std::size_t i = 0; i < n; ++i) cn.emplace_back(m, dd[i] * (0.5 * dt) / (2.0 * h * h));
    auto diffuse = [&](std::vector<double>& y) {
      pool.parallel_for(n, [&](std::size_t b, std::size_t e) {
        std::vector<double> scratch;
        for (std::size_t i = b; i < e; ++i)
          if (dd[i] > 0.0) cn[i].apply(y.data() + i, n, scratch);
      });
    };
    drive(tr, rec, x, n_steps, dt, stride_for(opts, dt), [&](std::vector<double>& y) {
      diffuse(y);
      react(y, dt);
      diffuse(y);
    });
  } else {
    std::vector<double> k[4], tmp(x.size());
    for (auto& kk : k) kk.resize(x.size());
    auto rhs = [&](const std::vector<double>& y, std::vector<double>& out) {
      pool.parallel_for(nodes, [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
          const auto f = model.f(std::span<const double>(y.data() + j * n, n));
          const std::size_t jl = j == 0 ? 1 : j - 1, jr = j == m ? m - 1 : j + 1;
          for (std::size_t i = 0; i < n; ++i)
            out[j * n + i] =
                f[i] + dd[i] * (y[jl * n + i] - 2.0 * y[j * n + i] + y[jr * n + i]) / (h * h);
        }
      });
    };
    drive(tr, rec, x, n_steps, dt, stride_for(opts, dt),
          [&](std::vector<double>& y) { rk4(y, dt, rhs, k, tmp); });
  }
  return tr;
}

Trace simulate_network(const Model& model, const Mat& d, const Graph& g, const std::vector<double>& init,
                       const SimOptions& opts) {
  check_model(model);
  const std::size_t n = model.n, nodes = g.n;
  if (d.rows() != n || d.cols() != n) throw DimensionMismatch("diffusion matrix has the wrong size");
  if (init.size() != nodes * n) throw DimensionMismatch("initial state must have N * n entries");
  const Mat lap = graph_laplacian(g);
  double dt = opts.dt > 0.0 ? opts.dt : 0.01;
  const std::size_t n_steps = step_count(opts.t_end, dt);

  Trace tr;
  tr.n = n;
  Recorder rec(model, nodes, std::vector<double>(nodes, 1.0), opts, tr);
  WorkerPool pool(opts.threads);
  std::vector<double> x = init, k[4], tmp(x.size());
  for (auto& kk : k) kk.resize(x.size());
  auto rhs = [&](const std::vector<double>& y, std::vector<double>& out) {
    pool.parallel_for(nodes, [&](std::size_t b, std::size_t e) {
      std::vector<double> c(n);
      for (std::size_t kn = b; kn < e; ++kn) {
        const auto f = model.f(std::span<const double>(y.data() + kn * n, n));
        std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t j = 0; j < nodes; ++j) {
          const double l = lap(kn, j);
          if (l == 0.0) continue;
          for (std::size_t i = 0; i < n; ++i) c[i] += l * y[j * n + i];
        }
        for (std::size_t i = 0; i < n; ++i) {
          double s = f[i];
          for (std::size_t a = 0; a < n; ++a) s -= d(i, a) * c[a];
          out[kn * n + i] = s;
        }
      }
    });
  };
  drive(tr, rec, x, n_steps, dt, stride_for(opts, dt), [&](std::vector<double>& y) { rk4(y, dt, rhs, k, tmp); });
  return tr;
}

std::vector<double> cosine_initial(const PdeGrid& grid, const std::vector<double>& base, double amplitude,
                                   int mode) {
  grid.validate();
  const std::size_t n = base.size();
  std::vector<double> x(grid.nodes() * n);
  for (std::size_t j = 0; j < grid.nodes(); ++j) {
    const double c = amplitude * std::cos(mode * std::numbers::pi * grid.xi(j) / grid.length);
    for (std::size_t i = 0; i < n; ++i) x[j * n + i] = base[i] != 0.0 ? base[i] * (1.0 + c) : c;
  }
  return x;
}

std::vector<double> random_node_states(std::size_t nodes, const std::vector<double>& lo,
                                       const std::vector<double>& hi, std::uint64_t seed) {
  if (lo.size() != hi.size()) throw DimensionMismatch("lo and hi differ in length");
  std::mt19937_64 rng(seed);
  std::vector<double> x;
  x.reserve(nodes * lo.size());
  for (std::size_t j = 0; j < nodes; ++j)
    for (std::size_t i = 0; i < lo.size(); ++i) x.push_back(std::uniform_real_distribution<double>(lo[i], hi[i])(rng));
  return x;
}

std::vector<std::vector<double>> modal_projection(const PdeGrid& grid, std::size_t n,
                                                  const std::vector<double>& state, std::size_t modes) {
  if (state.size() != grid.nodes() * n) throw DimensionMismatch("state does not match grid");
  std::vector<std::vector<double>> sigma(modes, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < modes; ++k) {
    const double scale = (k == 0 ? 1.0 : 2.0) / grid.length;
    for (std::size_t j = 0; j < grid.nodes(); ++j) {
      const double c = grid.weight(j) * std::cos(static_cast<double>(k) * std::numbers::pi * grid.xi(j) / grid.length);
      for (std::size_t i = 0; i < n; ++i) sigma[k][i] += c * state[j * n + i];
    }
    for (auto& v : sigma[k]) v *= scale;
  }
  return sigma;
}

ModalCoeffs modal_oracle(const Mat& a, const Mat& d, const std::vector<double>& lambdas,
                         const std::vector<std::vector<double>>& sigma0, const std::vector<double>& times, double dt) {
  const std::size_t n = a.rows();
  if (a.cols() != n || d.rows() != n || d.cols() != n) throw DimensionMismatch("A and D must be n x n");
  if (lambdas.size() != sigma0.size()) throw DimensionMismatch("one initial vector per mode");
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  ModalCoeffs out;
  out.times = times;
  out.sigma.assign(times.size(), {});
  std::vector<double> k[4], tmp(n);
  for (auto& kk : k) kk.resize(n);
  for (std::size_t mode = 0; mode < lambdas.size(); ++mode) {
    if (sigma0[mode].size() != n) throw DimensionMismatch("initial mode vector has the wrong size");
    const Mat m = a - lambdas[mode] * d;
    auto rhs = [&](const std::vector<double>& y, std::vector<double>& o) { o = m * std::span<const double>(y); };
    std::vector<double> y = sigma0[mode];
    double t = 0.0;
    for (std::size_t s = 0; s < times.size(); ++s) {
      if (times[s] < t) throw InvalidInput("oracle times must be increasing");
      const double span = times[s] - t;
      const auto steps = static_cast<std::size_t>(std::ceil(span / (dt / 10.0) - 1e-9));
      for (std::size_t q = 0; q < steps; ++q) rk4(y, span / static_cast<double>(steps), rhs, k, tmp);
      t = times[s];
      out.sigma[s].push_back(y);
    }
  }
  return out;
}

DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values, double t0, double t1) {
  if (times.size() != values.size()) throw DimensionMismatch("times and values differ in length");
  DecayFit fit;
  std::vector<double> tx, ly;
  bool started = false;
  for (std::size_t s = 0; s < times.size(); ++s) {
    if (times[s] < t0 || times[s] > t1) continue;
    if (!(values[s] > 0.0) || !std::isfinite(values[s])) {
      fit.shrunk = true;
      break;
    }
    if (!started) fit.first = s;
    started = true;
    fit.last = s;
    tx.push_back(times[s]);
    ly.push_back(std::log(values[s]));
  }
  if (tx.size() < 2) throw InvalidInput("decay fit needs two positive samples in the window");
  const double k = static_cast<double>(tx.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    mt += tx[i];
    my += ly[i];
  }
  mt /= k;
  my /= k;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    stt += (tx[i] - mt) * (tx[i] - mt);
    sty += (tx[i] - mt) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  fit.rate = sty / stt;
  fit.r2 = syy > 0.0 ? sty * sty / (stt * syy) : 1.0;
  return fit;
}

void write_trace_csv(std::ostream& os, const Trace& tr, bool include_states) {
  os << 't';
  for (std::size_t i = 0; i < tr.n; ++i) os << ",mean_" << i;
  os << ",nonuniformity,sync_error";
  const bool has_v = !tr.lyapunov.empty();
  if (has_v) os << ",lyapunov";
  const bool states = include_states && !tr.states.empty();
  if (states)
    for (std::size_t e = 0; e < tr.states.front().size(); ++e) os << ",x_" << e / tr.n << '_' << e % tr.n;
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    os << buf;
  };
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    put(tr.times[s]);
    for (double v : tr.means[s]) os << ',', put(v);
    os << ',', put(tr.nonuniformity[s]);
    os << ',', put(tr.sync_error[s]);
    if (has_v) os << ',', put(tr.lyapunov[s]);
    if (states)
      for (double v : tr.states[s]) os << ',', put(v);
    os << '\n';
  }
}

}  // namespace rdcert
