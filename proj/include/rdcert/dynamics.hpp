#pragma once

// Simulation of the reaction-diffusion PDE on an interval (method of lines)
// and of diffusively coupled ODE networks, with the diagnostics used to
// cross-check certificates.

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "rdcert/envelope.hpp"
#include "rdcert/numerics.hpp"
#include "rdcert/spectral.hpp"

namespace rdcert {

/// Fixed set of threads running static chunks of an index range. With one
/// thread everything runs on the caller.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads = 1);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return workers_.size() + 1; }
  /// Calls fn(begin, end) on disjoint chunks covering [0, n); returns when all are done.
  void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

 private:
  void run(std::size_t slot);

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable start_cv_, done_cv_;
  const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
  std::size_t job_n_ = 0;
  std::uint64_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stop_ = false;
};

/// Vertex-centred grid on [0, L]: nodes xi_j = j h, j = 0..m, h = L / m.
struct PdeGrid {
  double length = 1.0;
  std::size_t m = 64;

  double h() const { return length / static_cast<double>(m); }
  std::size_t nodes() const { return m + 1; }
  double xi(std::size_t j) const { return static_cast<double>(j) * h(); }
  /// Trapezoid quadrature weight of node j; they sum to L.
  double weight(std::size_t j) const { return (j == 0 || j == m) ? 0.5 * h() : h(); }
  void validate() const;
};

enum class Stepper {
  kSplitCn,      ///< Strang: half CN diffusion, RK4 reaction, half CN diffusion
  kExplicitRk4,  ///< RK4 on the full semi-discrete system
};

struct SimOptions {
  double t_end = 1.0;
  double dt = 0.0;          ///< 0: min(0.01, h) / 4 for the PDE, 0.01 for networks
  double output_dt = 0.0;   ///< 0: every step
  Stepper stepper = Stepper::kSplitCn;
  std::size_t threads = 1;
  /// When set, V = 1/2 sum w |P^(1/2) (x - mean)|^2 is recorded.
  std::optional<SymMat> lyapunov_p;
  bool record_states = false;
};

/// Diagnostics sampled at the output times. For the PDE, "nodes" are grid
/// points weighted by the trapezoid rule; for networks all weights are 1.
struct Trace {
  std::size_t n = 0;                       ///< species per node
  std::vector<double> times;
  std::vector<std::vector<double>> means;  ///< weighted spatial (or node) average
  std::vector<double> nonuniformity;       ///< sqrt(sum w |x - mean|^2)
  std::vector<double> sync_error;          ///< max pairwise |x_k - x_j|
  std::vector<double> lyapunov;            ///< empty without lyapunov_p
  std::vector<std::vector<double>> states;  ///< node-major, only with record_states
  bool blew_up = false;
  bool left_domain = false;
  double excursion_time = 0.0;  ///< first output time outside the model's domain
  std::size_t steps = 0;
  double dt = 0.0;
};

/// x' = f(x) + D x_xi_xi on [0, L] with zero-flux ends (ghost x_{-1} = x_1).
/// init is node-major: init[j * n + i] is species i at node j.
Trace simulate_pde(const Model& model, const Mat& d, const PdeGrid& grid, const std::vector<double>& init,
                   const SimOptions& opts);

/// x_k' = f(x_k) - D sum_j L(k, j) x_j with L = graph_laplacian(g); RK4.
/// Directed graphs are accepted.
Trace simulate_network(const Model& model, const Mat& d, const Graph& g, const std::vector<double>& init,
                       const SimOptions& opts);

/// base_i (1 + amplitude cos(mode pi xi / L)); species with base_i = 0 get
/// amplitude cos(...) instead.
std::vector<double> cosine_initial(const PdeGrid& grid, const std::vector<double>& base, double amplitude,
                                   int mode = 1);
/// Independent uniform draws in [lo_i, hi_i] for every node, node-major.
std::vector<double> random_node_states(std::size_t nodes, const std::vector<double>& lo,
                                       const std::vector<double>& hi, std::uint64_t seed);

/// Cosine coefficients sigma_k, k = 1..modes, of a PDE state:
///   x(xi) = sum_k sigma_k cos((k - 1) pi xi / L).
/// sigma_1 is the spatial mean.
std::vector<std::vector<double>> modal_projection(const PdeGrid& grid, std::size_t n,
                                                  const std::vector<double>& state, std::size_t modes);

struct ModalCoeffs {
  std::vector<double> times;
  std::vector<std::vector<std::vector<double>>> sigma;  ///< [time][mode][species]
};

/// Integrates sigma_k' = (A - lambda_k D) sigma_k with RK4 at step dt / 10 and
/// samples at the requested (increasing) times.
ModalCoeffs modal_oracle(const Mat& a, const Mat& d, const std::vector<double>& lambdas,
                         const std::vector<std::vector<double>>& sigma0, const std::vector<double>& times,
                         double dt = 0.01);

struct DecayFit {
  double rate = 0.0;  ///< slope of log(value) against t
  double r2 = 0.0;
  std::size_t first = 0, last = 0;  ///< sample range used, inclusive
  bool shrunk = false;              ///< window cut short at a nonpositive value
};

/// Least squares on log(values) over samples with t0 <= t <= t1.
DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values, double t0,
                        double t1);

/// Header "t,mean_0..,nonuniformity,sync_error[,lyapunov][,x_j_i..]", 12 significant digits.
void write_trace_csv(std::ostream& os, const Trace& tr, bool include_states = false);

}  // namespace rdcert
