#pragma once

// Effective Hamiltonian as a rotation number: [lambda_-(T), lambda_+(T)]
// brackets from tracked trajectories, window doubling, and (L, p) sweeps.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fkhom/chain.hpp"
#include "fkhom/model.hpp"
#include "fkhom/slope.hpp"

namespace fkhom {

struct LambdaBracket {
  double minus = 0.0;
  double plus = 0.0;
  double T = 0.0;      // window actually used (a multiple of the sample spacing)
  double slack = 0.0;  // sample_dt * max observed speed / T
};

/// lambda_+ (lambda_-) is the max (min) over the series U_j, Xi_j and over
/// sample times tau in [tau_cut, end - T] of (v(tau + T) - v(tau)) / T.
/// Refuses logs shorter than 2T after tau_cut. `only_type` restricts to one particle.
LambdaBracket lambda_pm(const TrajectoryLog& log, double T, double tau_cut = 0.0,
                        std::optional<int> only_type = std::nullopt);

enum class Integrator { euler, rk4 };

struct RotationOptions {
  double tol = 1e-6;
  double T_cap = 2000.0;
  double T0 = 4.0;
  int cells = 2;
  double dt_safety = 0.5;
  double sample_dt = 0.0;        // 0: about 0.05, rounded to a multiple of dt
  double perturbation = 0.0;     // relative to the spacing p/n, must stay below 0.5
  std::uint64_t seed = 0;
  std::optional<double> K0;      // default max(p, 1/p)
  Integrator integrator = Integrator::euler;
  std::size_t snapshot_every = 0;
  bool keep_log = false;
  bool keep_final_chain = false;
};

struct BracketStage {
  double T = 0.0;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  double slack = 0.0;
  double tau_cut = 0.0;
};

struct RotationEstimate {
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  double lambda_hat = 0.0;
  double T = 0.0;
  double certified_halfwidth = 0.0;  // C2 / T
  double empirical_width = 0.0;      // lambda_+ - lambda_-
  double sampling_slack = 0.0;
  double halfwidth = 0.0;            // min(width/2 + slack, C2/T)
  double tau_cut = 0.0;              // cutoff of the final stage
  double dt = 0.0;
  bool converged = false;
  ConstantsLedger ledger;
  std::vector<BracketStage> history;
  std::optional<TrajectoryLog> log;
  std::optional<TwistedChain> final_chain;
};

/// Initial chain for rotation runs: init_linear plus the optional seeded perturbation.
TwistedChain rotation_initial_chain(std::shared_ptr<const ForceModel> model, Slope p, const RotationOptions& opts);

/// Stage T uses the tail tau >= max(5/alpha0, T) of one growing trajectory.
/// Doubles T from T0 until min(lambda_+ - lambda_-, C2/T) <= 2 tol or T reaches T_cap.
/// The drive is shifted by L_extra. Throws ValidationError when the monotonicity assumptions fail.
RotationEstimate rotation_number(const ForceModel& model, Slope p, double L_extra, const RotationOptions& opts = {});

/// lambda_hat of rotation_number with the drive shifted by L.
double effective_hamiltonian(const ForceModel& model, Slope p, double L, const RotationOptions& opts = {});

struct TableEntry {
  double lambda = 0.0;
  double halfwidth = 0.0;
  double certified_halfwidth = 0.0;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  double C2 = 0.0;
  double C4 = 0.0;
  double T = 0.0;
  bool converged = false;
  std::string error;  // nonempty when the entry failed
};

struct SweepDiagnostics {
  double max_downward_jump_L = 0.0;   // max_k (lambda(L_k) - lambda(L_{k+1}))^+
  double max_excess_jump_L = 0.0;     // same minus 2 (halfwidth_k + halfwidth_{k+1}), clipped at 0
  double max_p_slope = 0.0;           // max |lambda(p_{k+1}) - lambda(p_k)| / (p_{k+1} - p_k)
  bool monotone_in_L = true;
  std::size_t failures = 0;
};

struct EffectiveTable {
  std::vector<Slope> p_grid;
  std::vector<double> L_grid;
  std::vector<std::vector<TableEntry>> entries;  // [L index][p index]
  SweepDiagnostics diagnostics;

  const TableEntry& at(std::size_t iL, std::size_t ip) const { return entries.at(iL).at(ip); }
};

/// Parallel over entries (fixed result slots, so output does not depend on
/// `threads`). Entry failures are recorded, not thrown.
EffectiveTable sweep(const ForceModel& model, const std::vector<Slope>& p_grid, const std::vector<double>& L_grid,
                     const RotationOptions& opts = {}, int threads = 1);

SweepDiagnostics sweep_diagnostics(const EffectiveTable& table);

struct DepinningBracket {
  double pinned_L = 0.0;  // largest L found with lambda indistinguishable from 0
  double moving_L = 0.0;  // smallest L found with lambda > 0
  int evaluations = 0;
};

/// Bisection on L in [L_lo, L_hi] (L_lo must be pinned and L_hi moving).
DepinningBracket depinning_threshold(const ForceModel& model, Slope p, double L_lo, double L_hi,
                                     const RotationOptions& opts = {}, int iterations = 12);

/// Runs fn(0..count-1) on up to `threads` workers; exceptions are rethrown after join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace fkhom
