#pragma once

// Twisted-periodic particle chains in the (U, Xi) variables, Xi = U + 2 m0 dU/dtau,
// advanced by the explicit Euler scheme that inherits the comparison principle.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fkhom/model.hpp"
#include "fkhom/slope.hpp"

namespace fkhom {

/// N particles with U_{i+N} = U_i + Q, realizing slope p = n Q / N exactly.
///
/// Particle i has type i mod n and sits at lattice coordinate y = floor(i/n),
/// so the n reference particles (i = 0..n-1) are the values at y = 0.
class TwistedChain {
 public:
  TwistedChain(std::shared_ptr<const ForceModel> model, Slope p, int cells);

  const ForceModel& model() const { return *model_; }
  std::shared_ptr<const ForceModel> model_ptr() const { return model_; }
  Slope slope() const { return p_; }
  int size() const { return N_; }
  std::int64_t twist() const { return Q_; }
  int cells() const { return cells_; }

  std::vector<double> U;
  std::vector<double> Xi;
  double tau = 0.0;

  /// Position of particle i for any integer i, through the twist.
  double U_at(std::int64_t i) const;
  double Xi_at(std::int64_t i) const;

 private:
  std::shared_ptr<const ForceModel> model_;
  Slope p_;
  int cells_ = 1;
  int N_ = 1;
  std::int64_t Q_ = 1;
};

/// U_i = Xi_i = p i / n (+ perturbation_i). Rejects perturbations that break
/// strict ordering, including across the seam U_{N} = U_0 + Q.
TwistedChain init_linear(std::shared_ptr<const ForceModel> model, Slope p, int cells,
                         std::optional<std::vector<double>> perturbation = std::nullopt);

/// Largest monotone Euler step: safety / alpha0.
double cfl_dt(const ForceModel& model, double safety = 1.0);

/// Monotone step bound for the delta-perturbed dynamics
/// (diagonal coefficients of the Xi update stay nonnegative).
double cfl_dt_delta(const ForceModel& model, double p, double delta, double a0, double safety = 1.0);

/// One explicit Euler step of
///   dU/dtau = alpha0 (Xi - U),  dXi/dtau = 2 F_i(tau, [U]_{i,m}) + alpha0 (U - Xi).
/// Throws NumericalError (with the particle and time) on non-finite state.
void step(TwistedChain& chain, double dt);

/// Euler step with the additional term delta (a0 + a_i) q_i^+ in the Xi
/// equation, where a_i = min_k (Xi_k - p y_k) - (Xi_i - p y_i) over particles
/// of the same type and q_i is the one-y-cell difference of Xi, forward when
/// the advection speed delta (a0 + a_i) is nonnegative and backward otherwise.
/// delta == 0 reproduces step() bit for bit.
void step_delta(TwistedChain& chain, double dt, double delta, double a0);

struct Snapshot {
  double tau = 0.0;
  std::vector<double> U;
  std::vector<double> Xi;
};

/// Uniformly sampled series of the n reference particles, plus optional full states.
struct TrajectoryLog {
  double t0 = 0.0;
  double sample_dt = 1.0;
  int n = 1;
  int N = 1;
  std::int64_t Q = 1;
  Slope p;
  std::vector<std::vector<double>> U;   // [j][k], k-th sample of particle j
  std::vector<std::vector<double>> Xi;  // [j][k]
  std::vector<Snapshot> snapshots;

  std::size_t samples() const { return U.empty() ? 0 : U.front().size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * sample_dt; }
  double end_time() const { return samples() == 0 ? t0 : time(samples() - 1); }
};

struct RunOptions {
  double dt = 0.0;                 // integrator step, adjusted down so sample_dt is a multiple
  double sample_dt = 0.0;
  std::size_t snapshot_every = 0;  // keep a full state every k samples (0: none)
  double delta = 0.0;
  double a0 = 0.0;
};

/// Integrates to tau + T, sampling every sample_dt (the first sample is the
/// initial state). The chain is advanced in place.
TrajectoryLog run(TwistedChain& chain, double T, const RunOptions& opts);

/// Appends T more time to an existing log, continuing from `chain`
/// (which must be at log.end_time()).
void extend(TrajectoryLog& log, TwistedChain& chain, double T, const RunOptions& opts);

/// Classical RK4 on m0 U'' + U' = F_i in (U, U') variables; Xi = U + 2 m0 U'.
/// Independent of the Euler path; used as an accuracy oracle only.
TrajectoryLog rk4_oracle(const TwistedChain& chain0, double T, double dt, double sample_dt,
                         std::size_t snapshot_every = 0);

struct InvariantReport {
  double ordering_violation = 0.0;  // max (U_i - U_{i+1})^+, (Xi_i - Xi_{i+1})^+
  double u_xi_gap = 0.0;            // max |U_i - Xi_i|
  double space_osc = 0.0;           // max |U_{i+nk} - U_i - p k| (and the same for Xi)
  double delta_gradient = 0.0;      // max Xi_{i+n} - Xi_i

  double u_xi_bound = 0.0;
  bool ordering_ok = true;
  bool u_xi_ok = true;
  bool space_osc_ok = true;
};

InvariantReport monitor_invariants(const TwistedChain& chain, const ConstantsLedger& ledger);

/// Worst case over every snapshot with tau >= tau_min.
InvariantReport monitor_invariants(const TrajectoryLog& log, const ConstantsLedger& ledger, double tau_min = 0.0);

/// Same fields for a bare state (U, Xi) on a twisted ring.
InvariantReport measure_state(std::span<const double> U, std::span<const double> Xi, int n, Slope p,
                              std::int64_t Q, const ConstantsLedger& ledger);

}  // namespace fkhom
