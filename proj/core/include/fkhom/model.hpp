#pragma once

// Force families F_j for generalized Frenkel-Kontorova chains, the structural
// assumption checks, and the explicit constants derived from them.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fkhom {

/// Nearest-neighbour FK force with n spring constants:
///   F_j(V) = theta_{j+1}(V_1 - V_0) - theta_j(V_0 - V_{-1}) + A sin(2 pi V_0) + drive
/// where j is the 0-based type index and theta is extended n-periodically.
struct ClassicalFK {
  std::vector<double> theta;
  double amplitude = 1.0;
  double drive = 0.0;
};

/// F_j(tau, V_{-m..m}); j is the 0-based particle type in [0, n).
using ForceFn = std::function<double(int j, double tau, std::span<const double> window)>;

/// User-supplied force. Periodicity and monotonicity are not assumed; they
/// are sampled by check_assumptions.
struct TabulatedForce {
  ForceFn fn;
  bool autonomous = true;  // false when F depends on tau
  std::string label;
};

struct ForceModel {
  int n = 1;
  int m = 1;
  double alpha0 = 1.0;  // 1/(2 m0)
  std::variant<ClassicalFK, TabulatedForce> force;
  double lip_V = 0.0;          // Lipschitz constant of every F_j in V, sup norm
  double f_at_zero_sup = 0.0;  // sup_{tau,j} |F_j(tau, 0, ..., 0)|
  double extra_drive = 0.0;    // constant added on top of a tabulated force

  double m0() const { return 0.5 / alpha0; }
  bool autonomous() const;
  bool is_classical() const { return std::holds_alternative<ClassicalFK>(force); }

  /// Same model with the drive L shifted by `dL` (F_j -> F_j + dL).
  ForceModel shifted(double dL) const;
};

ForceModel build_classical_fk(std::vector<double> theta, double amplitude, double drive, double m0);

/// Tabulated model. When lip_V / f_at_zero_sup are not given they are
/// estimated by sampling one periodicity cell.
ForceModel build_tabulated(int n, int m, double alpha0, TabulatedForce force,
                           std::optional<double> lip_V = std::nullopt,
                           std::optional<double> f_at_zero_sup = std::nullopt);

/// F == c for every type (the exactly solvable constant-force chain).
ForceModel build_constant_force(double c, double alpha0, int n = 1);

/// Evaluates F_j(tau, V). `j` is reduced modulo n. Throws ValidationError
/// when the window does not hold 2m+1 entries.
double eval_force(const ForceModel& model, int j, double tau, std::span<const double> window);

struct AssumptionCheck {
  bool holds = false;
  double margin = 0.0;                  // >= 0 iff holds (up to tolerance)
  std::optional<std::vector<double>> witness;  // (tau, V...) of the worst sample
};

struct AssumptionReport {
  AssumptionCheck a1, a2, a3, a4, a5, a6;
  double critical_mass = std::numeric_limits<double>::infinity();  // m0^c
  double lip_estimate = 0.0;

  bool monotone() const { return a1.holds && a2.holds && a3.holds && a4.holds && a5.holds; }
  bool all() const { return monotone() && a6.holds; }
};

/// Closed form for ClassicalFK; centered differences with step
/// 1/sample_density over [0,1)^{2m+2} for tabulated forces.
AssumptionReport check_assumptions(const ForceModel& model, int sample_density = 8);

/// Explicit constants for slope p (delta = 0 unless the perturbed dynamics is used).
struct ConstantsLedger {
  double p = 1.0;
  double K0 = 1.0;
  double M0 = 0.0;
  double C0 = 1.0;
  double delta = 0.0;
  double a0 = 0.0;
  double L0 = 0.0;
  double L2 = 0.0;
  double Gbar = 0.0;
  double K1 = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double C4 = 0.0;
  double alpha0 = 1.0;
  double lip_V = 0.0;

  double u_xi_bound() const { return C4 / alpha0; }
  double hull_bound() const;  // 2 ceil(C3)
  /// 13 + 6 C4/alpha0 + 7p + 2 K1, the closed form of C3.
  double C3_closed_form() const;
};

ConstantsLedger constants_ledger(const ForceModel& model, double p, double K0, double M0 = 0.0,
                                 double delta = 0.0, double a0 = 0.0);

/// Recomputes C1, C2, C3 and the C3 closed form in exact rational arithmetic
/// from the ledger's (C4, alpha0, p, K1) and reports whether C2 + 1 equals the
/// closed form exactly.
bool ledger_identity_exact(const ConstantsLedger& ledger);

/// Smallest double >= the exact rational value of C2 computed from the ledger inputs.
double ledger_C2_upper(const ConstantsLedger& ledger);

nlohmann::json to_json(const AssumptionReport& report);
nlohmann::json to_json(const ConstantsLedger& ledger);

/// Parses {n, m, m0 | alpha0, force: {kind, theta[], amplitude, drive}}.
/// Supported kinds: "classical", "constant". Errors carry a JSON-path prefix.
ForceModel model_from_json(const nlohmann::json& j, const std::string& path = "model");

}  // namespace fkhom
