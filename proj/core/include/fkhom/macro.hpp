#pragma once

// Homogenized equation u_t = Fbar(u_x) on a window, the rescaled
// microscopic field eps U_{j + n floor(x/eps)}(t/eps), and the eps-study between them.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fkhom/model.hpp"
#include "fkhom/rotation.hpp"

namespace fkhom {

/// Initial profile: either a callable or samples (linear interpolation,
/// affine extension with the edge chord slopes).
class Profile {
 public:
  static Profile from_function(std::function<double(double)> f, std::string label = "");
  static Profile from_samples(std::vector<double> x, std::vector<double> u);

  double operator()(double x) const;
  const std::string& label() const { return label_; }
  bool sampled() const { return !xs_.empty(); }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& us() const { return us_; }

 private:
  std::function<double(double)> fn_;
  std::vector<double> xs_, us_;
  std::string label_;
};

struct A0Report {
  bool ok = true;
  double min_slope = 0.0;
  double max_slope = 0.0;
  double margin = 0.0;  // min(min_slope - 1/K0, K0 - max_slope)
  std::optional<std::pair<double, double>> witness;  // chord interval of the worst slope
  double xi_gap = 0.0;  // max |u0 - xi0|
  bool xi_ok = true;
};

/// Chord slopes of the samples must lie in [1/K0, K0]; when xi0 is given,
/// max |u0 - xi0| <= M0 eps is also required.
A0Report check_A0(const std::vector<double>& x, const std::vector<double>& u0, double K0,
                  const std::optional<std::vector<double>>& xi0 = std::nullopt, double M0 = 0.0, double eps = 0.0);

/// Piecewise-linear p -> Fbar(p) through table nodes, chord extension outside.
class HamiltonianInterp {
 public:
  HamiltonianInterp() = default;
  HamiltonianInterp(std::vector<double> p_nodes, std::vector<double> values);
  /// Column L_grid[iL] of a sweep; failed entries are skipped.
  static HamiltonianInterp from_table(const EffectiveTable& table, std::size_t iL);

  double operator()(double p) const;
  double lip_est() const { return lip_; }
  bool covers(double p_lo, double p_hi) const;
  const std::vector<double>& nodes() const { return p_; }
  const std::vector<double>& values() const { return H_; }

 private:
  std::vector<double> p_, H_;
  double lip_ = 0.0;
};

struct MacroState {
  double x_lo = 0.0;
  double dx = 0.0;
  std::vector<double> x;
  std::vector<double> u;
  double t = 0.0;
  double dt = 0.0;
  double nu = 0.0;
  double K0 = 1.0;
  std::vector<double> times;                // recorded times (t = 0 first)
  std::vector<std::vector<double>> history; // u at each recorded time
  double min_slope = 0.0;                   // over all recorded times
  double max_slope = 0.0;
  bool slope_exit = false;                  // slopes left [1/K0, K0] by more than 2 dx
  bool extrapolated = false;                // slopes left the table range
};

struct HJOptions {
  double K0 = 0.0;          // 0: taken from the initial chord slopes
  int record_count = 1;     // records at T r / record_count
  double cfl = 0.5;         // dt = cfl dx / lip
};

/// Lax-Friedrichs:
///   u_k += dt [H((u_{k+1} - u_{k-1}) / 2dx) + nu (u_{k+1} - 2u_k + u_{k-1}) / dx],  nu = lip/2,
/// with ghost values moving as the affine extension of the initial edge slopes.
MacroState solve_hj(const HamiltonianInterp& H, std::vector<double> u_init, double x_lo, double dx, double T,
                    const HJOptions& opts = {});

/// Samples u0 on [x_lo, x_hi] with spacing dx and calls the grid version.
MacroState solve_hj(const HamiltonianInterp& H, const Profile& u0, double x_lo, double x_hi, double dx, double T,
                    const HJOptions& opts = {});

/// Linear interpolation of history[r] at x.
double macro_value(const MacroState& s, std::size_t r, double x);

struct MicroOptions {
  double dt_safety = 0.5;
  int record_count = 1;
  std::optional<std::int64_t> max_pad;      // refuse when the required pad exceeds this
  std::optional<Profile> xi0;               // default xi0 = u0
  std::int64_t max_particles = 60'000'000;  // work guard: particles times steps / 1000
};

/// eps U_{j + n floor(x/eps)}(t/eps) for x in the window.
struct MicroField {
  double eps = 0.0;
  int n = 1;
  std::int64_t i_lo = 0;  // first stored particle index
  std::int64_t y_lo = 0;
  std::int64_t y_hi = 0;
  std::int64_t pad = 0;   // particles simulated beyond the window on each side
  std::int64_t steps = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [record][i - i_lo], already multiplied by eps

  double eval(std::size_t r, double x, int j = 0) const;
  bool contains(double x) const;
};

/// Simulates the infinite chain on the window exactly: with pad = m * steps
/// particles per side the truncation can not reach the window, so the active
/// range shrinks by m per step and no boundary condition is ever used.
MicroField rescale_micro(const ForceModel& model, double L, double eps, const Profile& u0, double T, double x_lo,
                         double x_hi, const MicroOptions& opts = {});

/// Largest violation of eps floor(d/K0) <= u(x + eps d) - u(x) <= eps ceil(d K0)
/// over `probes` random lattice-aligned (t, x, d).
double gradient_sandwich_violation(const MicroField& field, double K0, int probes, std::uint64_t seed);

struct ConvergenceOptions {
  double dt_safety = 0.5;
  int record_count = 8;
  double hj_dx = 0.0;   // 0: min(eps) / 4
  int threads = 1;
};

struct ConvergenceReport {
  std::vector<double> eps;
  std::vector<double> errors;
  std::vector<double> rates;   // log2(e_k / e_{k+1}) / log2(eps_k / eps_{k+1})
  double t_lo = 0.0, t_hi = 0.0;
  double x_lo = 0.0, x_hi = 0.0;
  double hj_floor = 0.0;       // |u_dx - u_2dx| on the compact set
  double hj_dx = 0.0;
};

/// Sup error on t in [T/2, T], central half of the window, against a padded HJ solution.
ConvergenceReport convergence_study(const ForceModel& model, double L, const Profile& u0,
                                    const std::vector<double>& eps_list, double T, double x_lo, double x_hi,
                                    const HamiltonianInterp& H, const ConvergenceOptions& opts = {});

}  // namespace fkhom
