#pragma once

// Hull functions (h_j, g_j) of traveling solutions
//   (U_i(tau), Xi_i(tau)) = (h_j(p y + lambda tau), g_j(p y + lambda tau)),  i = n y + j,
// sampled on a uniform phase grid and lifted so that h_j(z + 1) = h_j(z) + 1.

#include <optional>
#include <vector>

#include "fkhom/chain.hpp"
#include "fkhom/model.hpp"
#include "fkhom/rotation.hpp"
#include "fkhom/slope.hpp"

namespace fkhom {

class HullFunction {
 public:
  HullFunction() = default;
  HullFunction(Slope p, double lambda, int n, int Z, int tau_bins = 1);

  /// Identity hull h_j(z) = g_j(z) = z.
  static HullFunction identity(Slope p, double lambda, int n, int Z);

  Slope p;
  double lambda = 0.0;
  double tau_ref = 0.0;  // phase origin: z = p y + lambda (tau - tau_ref)
  bool tau_dependent = false;
  double isotonic_residual = 0.0;  // max |raw sample - monotone fit|
  std::size_t samples_per_type = 0;
  std::size_t distinct_phases = 0;

  int n() const { return n_; }
  int Z() const { return Z_; }
  int tau_bins() const { return bins_; }
  double z(int k) const { return static_cast<double>(k) / Z_; }

  /// Grid values for 0 <= j < n, 0 <= k < Z.
  double& h(int j, int k, int bin = 0) { return h_[index(j, k, bin)]; }
  double& g(int j, int k, int bin = 0) { return g_[index(j, k, bin)]; }
  double h(int j, int k, int bin = 0) const { return h_[index(j, k, bin)]; }
  double g(int j, int k, int bin = 0) const { return g_[index(j, k, bin)]; }

  /// Lifted linear interpolation for any real z and any integer j
  /// (j = t + n s maps to h_t(z + s p)).
  double eval_h(int j, double z, int bin = 0) const;
  double eval_g(int j, double z, int bin = 0) const;

  /// Time bin used for tau (always 0 for autonomous hulls).
  int bin_of(double tau) const;

  /// Largest increment of h or g over one grid cell.
  double cell_value_step() const;

 private:
  std::size_t index(int j, int k, int bin) const;
  double eval(const std::vector<double>& v, int j, double z, int bin) const;

  int n_ = 1;
  int Z_ = 1;
  int bins_ = 1;
  std::vector<double> h_, g_;
};

struct HullOptions {
  int Z = 64;
  int tau_bins = 0;  // 0: 1 for autonomous forces, 8 otherwise
};

/// Pools the log's snapshots into phase samples, projects them onto
/// nondecreasing functions (pool adjacent violators) and resamples on the grid.
/// Refuses when halfwidth times the snapshot window exceeds one grid cell or
/// when a type has fewer than Z samples.
HullFunction extract_hull(const TrajectoryLog& log, double lambda, double halfwidth, Slope p, const ForceModel& model,
                          const HullOptions& opts = {});

/// L2 isotonic regression (pool adjacent violators) of y in the given order.
std::vector<double> isotonic_fit(const std::vector<double>& y);

struct HullResidual {
  double r_h = 0.0;
  double r_g = 0.0;
};

/// Residuals of the stationary hull equations
///   lambda h' = alpha0 (g - h),  lambda g' = 2 F_j([h]_{j,m}) + alpha0 (h - g)
/// with one-sided differences upwinded by sign(lambda).
HullResidual hull_residual(const HullFunction& hull, const ForceModel& model);

struct HullAxiomReport {
  double wrap_error = 0.0;         // |h(z+1) - h(z) - 1|
  double shift_error = 0.0;        // |h_{j+n}(z) - h_j(z+p)|
  double monotone_violation = 0.0;
  std::optional<std::pair<int, int>> monotone_witness;  // (j, k) with h(z_k) > h(z_{k+1})
  double ordering_violation = 0.0; // max (h_j - h_{j+1})^+ and the same for g
  double displacement = 0.0;       // max |h - z|, |g - z|
  double displacement_bound = 0.0; // 2 ceil(C3)
  double gap = 0.0;                // max |g - h|
  bool ok = true;
};

HullAxiomReport verify_hull_axioms(const HullFunction& hull, const ConstantsLedger& ledger);

/// (h_j(p y + lambda tau), g_j(p y + lambda tau)).
std::pair<double, double> reconstruct_traveling_wave(const HullFunction& hull, double tau, double y, int j);

struct HullRun {
  RotationEstimate rotation;
  TrajectoryLog log;
  HullFunction hull;
  TwistedChain chain;  // state at the end of the snapshot window
};

struct HullRunOptions {
  RotationOptions rotation;
  HullOptions hull;
  double window = 0.0;  // snapshot window; 0 chooses one grid cell of phase smear, clamped to [2, 50]
  std::size_t snapshot_every = 1;
};

/// rotation_number, then a snapshot run from the converged state, then extract_hull.
HullRun hull_from_model(const ForceModel& model, Slope p, double L_extra, const HullRunOptions& opts = {});

}  // namespace fkhom
