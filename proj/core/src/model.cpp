#include "fkhom/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fkhom/error.hpp"

namespace fkhom {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;

int wrap_type(int j, int n) {
  const int r = j % n;
  return r < 0 ? r + n : r;
}

// sin(2 pi v), reduced first so that large positions keep full accuracy.
double sin_two_pi(double v) { return std::sin(kTwoPi * (v - std::nearbyint(v))); }

double classical_force(const ClassicalFK& fk, int j, std::span<const double> w) {
  const auto n = static_cast<int>(fk.theta.size());
  const double left = fk.theta[static_cast<std::size_t>(j)];
  const double right = fk.theta[static_cast<std::size_t>(wrap_type(j + 1, n))];
  return right * (w[2] - w[1]) - left * (w[1] - w[0]) + fk.amplitude * sin_two_pi(w[1]) + fk.drive;
}

// Iterates over a regular grid with `dims` coordinates k/density in [0,1).
template <class Visit>
void for_each_grid_point(int dims, int density, Visit&& visit) {
  std::vector<int> idx(static_cast<std::size_t>(dims), 0);
  std::vector<double> pt(static_cast<std::size_t>(dims), 0.0);
  const double h = 1.0 / density;
  while (true) {
    for (int d = 0; d < dims; ++d) pt[static_cast<std::size_t>(d)] = idx[static_cast<std::size_t>(d)] * h;
    visit(std::span<const double>(pt));
    int d = 0;
    while (d < dims && ++idx[static_cast<std::size_t>(d)] == density) {
      idx[static_cast<std::size_t>(d)] = 0;
      ++d;
    }
    if (d == dims) break;
  }
}

struct SampledAssumptions {
  double a2_min = std::numeric_limits<double>::infinity();
  double a3_min = std::numeric_limits<double>::infinity();
  double a6_min = std::numeric_limits<double>::infinity();
  double lip = 0.0;
  double neg_dF0_max = -std::numeric_limits<double>::infinity();  // sup(-2 dF/dV0)
  double periodicity = 0.0;
  double f_zero = 0.0;
  std::vector<double> a2_witness, a3_witness, a4_witness, a6_witness;
};

SampledAssumptions sample_assumptions(const ForceModel& model, int density) {
  const int m = model.m;
  const int w = 2 * m + 1;
  const double h = 1.0 / density;
  const double pts = std::pow(static_cast<double>(density), w + 1);
  if (pts > 4e6) {
    throw ValidationError(fmt::format("assumption sampling grid has {:.0f} points; lower sample_density", pts));
  }
  SampledAssumptions out;
  std::vector<double> v(static_cast<std::size_t>(w)), shifted(static_cast<std::size_t>(w));

  auto witness = [&](int j, double tau, std::span<const double> vals) {
    std::vector<double> wv{static_cast<double>(j), tau};
    wv.insert(wv.end(), vals.begin(), vals.end());
    return wv;
  };

  for (int j = 0; j < model.n; ++j) {
    for_each_grid_point(w + 1, density, [&](std::span<const double> pt) {
      const double tau = pt[0];
      std::copy(pt.begin() + 1, pt.end(), v.begin());
      const double f = eval_force(model, j, tau, v);

      double lip_row = 0.0;
      for (int i = 0; i < w; ++i) {
        shifted = v;
        shifted[static_cast<std::size_t>(i)] += h;
        const double fp = eval_force(model, j, tau, shifted);
        shifted[static_cast<std::size_t>(i)] -= 2 * h;
        const double fm = eval_force(model, j, tau, shifted);
        const double d = (fp - fm) / (2 * h);
        lip_row += std::abs(d);
        if (i == m) {
          const double a3 = model.alpha0 + 2 * d;
          if (a3 < out.a3_min) {
            out.a3_min = a3;
            out.a3_witness = witness(j, tau, v);
          }
          out.neg_dF0_max = std::max(out.neg_dF0_max, -2 * d);
        } else if (d < out.a2_min) {
          out.a2_min = d;
          out.a2_witness = witness(j, tau, v);
        }
      }
      out.lip = std::max(out.lip, lip_row);

      for (int i = 0; i < w; ++i) shifted[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)] + 1.0;
      double res = std::abs(eval_force(model, j, tau, shifted) - f);
      res = std::max(res, std::abs(eval_force(model, j, tau + 1.0, v) - f));
      if (res > out.periodicity) {
        out.periodicity = res;
        out.a4_witness = witness(j, tau, v);
      }
    });

    // Zero window across tau.
    std::vector<double> zero(static_cast<std::size_t>(w), 0.0);
    for (int k = 0; k < density; ++k) {
      out.f_zero = std::max(out.f_zero, std::abs(eval_force(model, j, k * h, zero)));
    }

    // Ordering: V_{-m..m+1} with each one-sided chain sorted, tau = 0.
    std::vector<double> big(static_cast<std::size_t>(w + 1));
    for_each_grid_point(w + 1, density, [&](std::span<const double> pt) {
      std::copy(pt.begin(), pt.end(), big.begin());
      std::sort(big.begin(), big.begin() + m + 1);
      std::sort(big.begin() + m + 1, big.end());
      std::span<const double> lower(big.data(), static_cast<std::size_t>(w));
      std::span<const double> upper(big.data() + 1, static_cast<std::size_t>(w));
      const double lhs = 2 * eval_force(model, j + 1, 0.0, upper) + model.alpha0 * big[static_cast<std::size_t>(m + 1)];
      const double rhs = 2 * eval_force(model, j, 0.0, lower) + model.alpha0 * big[static_cast<std::size_t>(m)];
      if (lhs - rhs < out.a6_min) {
        out.a6_min = lhs - rhs;
        out.a6_witness = witness(j, 0.0, big);
      }
    });
  }
  return out;
}

constexpr double kSampleTol = 1e-8;
constexpr double kPeriodicityTol = 1e-12;

}  // namespace

bool ForceModel::autonomous() const {
  if (const auto* t = std::get_if<TabulatedForce>(&force)) return t->autonomous;
  return true;
}

ForceModel ForceModel::shifted(double dL) const {
  ForceModel out = *this;
  if (auto* fk = std::get_if<ClassicalFK>(&out.force)) {
    fk->drive += dL;
    out.f_at_zero_sup = std::abs(fk->drive);
  } else {
    out.extra_drive += dL;
    out.f_at_zero_sup = f_at_zero_sup + std::abs(dL);
  }
  return out;
}

ForceModel build_classical_fk(std::vector<double> theta, double amplitude, double drive, double m0) {
  if (!(m0 > 0.0) || !std::isfinite(m0)) throw ValidationError(fmt::format("m0 = {} must be positive", m0));
  if (theta.empty()) throw ValidationError("theta must hold at least one spring constant");
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (!(theta[k] > 0.0) || !std::isfinite(theta[k])) {
      throw ValidationError(fmt::format("theta[{}] = {} must be positive", k, theta[k]));
    }
  }
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw ValidationError(fmt::format("amplitude = {} must be nonnegative", amplitude));
  }
  if (!std::isfinite(drive)) throw ValidationError("drive must be finite");

  ForceModel model;
  model.n = static_cast<int>(theta.size());
  model.m = 1;
  model.alpha0 = 1.0 / (2.0 * m0);
  double lip = 0.0;
  for (int j = 0; j < model.n; ++j) {
    const double s = theta[static_cast<std::size_t>(j)] + theta[static_cast<std::size_t>(wrap_type(j + 1, model.n))];
    // |dF/dV_-1| + |dF/dV_1| + sup|dF/dV_0| = s + (s + 2 pi A)
    lip = std::max(lip, 2.0 * s + kTwoPi * amplitude);
  }
  model.lip_V = lip;
  model.f_at_zero_sup = std::abs(drive);
  model.force = ClassicalFK{std::move(theta), amplitude, drive};
  return model;
}

ForceModel build_tabulated(int n, int m, double alpha0, TabulatedForce force, std::optional<double> lip_V,
                           std::optional<double> f_at_zero_sup) {
  if (n < 1 || m < 0) throw ValidationError(fmt::format("need n >= 1 and m >= 0 (got n={}, m={})", n, m));
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw ValidationError("alpha0 must be positive");
  if (!force.fn) throw ValidationError("tabulated force needs a callable");
  ForceModel model;
  model.n = n;
  model.m = m;
  model.alpha0 = alpha0;
  model.force = std::move(force);
  if (!lip_V || !f_at_zero_sup) {
    const auto s = sample_assumptions(model, 4);
    model.lip_V = lip_V.value_or(s.lip);
    model.f_at_zero_sup = f_at_zero_sup.value_or(s.f_zero);
  } else {
    model.lip_V = *lip_V;
    model.f_at_zero_sup = *f_at_zero_sup;
  }
  return model;
}

ForceModel build_constant_force(double c, double alpha0, int n) {
  TabulatedForce f{[c](int, double, std::span<const double>) { return c; }, true, fmt::format("constant {}", c)};
  return build_tabulated(n, 1, alpha0, std::move(f), 0.0, std::abs(c));
}

double eval_force(const ForceModel& model, int j, double tau, std::span<const double> window) {
  if (window.size() != static_cast<std::size_t>(2 * model.m + 1)) {
    throw ValidationError(fmt::format("force window has {} entries, expected {}", window.size(), 2 * model.m + 1));
  }
  const int t = wrap_type(j, model.n);
  if (const auto* fk = std::get_if<ClassicalFK>(&model.force)) return classical_force(*fk, t, window);
  const auto& tab = std::get<TabulatedForce>(model.force);
  return tab.fn(t, tau, window) + model.extra_drive;
}

AssumptionReport check_assumptions(const ForceModel& model, int sample_density) {
  if (sample_density < 2) throw ValidationError("sample_density must be >= 2");
  AssumptionReport rep;
  if (const auto* fk = std::get_if<ClassicalFK>(&model.force)) {
    const int n = model.n;
    const double A = fk->amplitude;
    double a2 = std::numeric_limits<double>::infinity();
    double a3 = a2, a6 = a2, need = 0.0;
    int a3_arg = 0, a6_arg = 0;
    for (int j = 0; j < n; ++j) {
      const double tl = fk->theta[static_cast<std::size_t>(j)];
      const double tr = fk->theta[static_cast<std::size_t>(wrap_type(j + 1, n))];
      a2 = std::min({a2, tl, tr});
      const double req = 2.0 * (tl + tr) + kFourPi * A;
      need = std::max(need, req);
      if (model.alpha0 - req < a3) {
        a3 = model.alpha0 - req;
        a3_arg = j;
      }
      const double req6 = 4.0 * tr + kFourPi * A;
      if (model.alpha0 - req6 < a6) {
        a6 = model.alpha0 - req6;
        a6_arg = j;
      }
    }
    rep.a1 = {true, 0.0, std::nullopt};
    rep.a2 = {a2 >= 0.0, a2, std::nullopt};
    // cos(2 pi V0) = -1 at V0 = 1/2 is where alpha0 + 2 dF/dV0 is smallest.
    rep.a3 = {a3 >= 0.0, a3, std::vector<double>{static_cast<double>(a3_arg), 0.0, 0.0, 0.5, 0.0}};
    rep.a4 = {true, 0.0, std::nullopt};
    rep.a5 = {true, 0.0, std::nullopt};
    rep.a6 = {a6 >= 0.0, a6, std::vector<double>{static_cast<double>(a6_arg), 0.0, 0.0, 0.0, 0.5, 0.5}};
    rep.critical_mass = 1.0 / (2.0 * need);
    rep.lip_estimate = model.lip_V;
    return rep;
  }

  const auto s = sample_assumptions(model, sample_density);
  rep.a1 = {std::isfinite(s.lip), 0.0, std::nullopt};
  rep.a2 = {s.a2_min >= -kSampleTol, std::isfinite(s.a2_min) ? s.a2_min : 0.0, s.a2_witness};
  rep.a3 = {s.a3_min >= -kSampleTol, s.a3_min, s.a3_witness};
  rep.a4 = {s.periodicity <= kPeriodicityTol, -s.periodicity,
            s.periodicity > kPeriodicityTol ? std::optional(s.a4_witness) : std::nullopt};
  rep.a5 = {true, 0.0, std::nullopt};
  rep.a6 = {s.a6_min >= -kSampleTol, s.a6_min, s.a6_witness};
  rep.critical_mass = s.neg_dF0_max > 0.0 ? 1.0 / (2.0 * s.neg_dF0_max) : std::numeric_limits<double>::infinity();
  rep.lip_estimate = s.lip;
  return rep;
}

double ConstantsLedger::hull_bound() const { return 2.0 * std::ceil(C3); }

double ConstantsLedger::C3_closed_form() const { return 13.0 + 6.0 * C4 / alpha0 + 7.0 * p + 2.0 * K1; }

ConstantsLedger constants_ledger(const ForceModel& model, double p, double K0, double M0, double delta, double a0) {
  if (!(p > 0.0)) throw ValidationError("ledger slope p must be positive");
  if (K0 + 1e-12 < std::max(p, 1.0 / p)) {
    throw ValidationError(fmt::format("K0 = {} must be >= max(p, 1/p) = {}", K0, std::max(p, 1.0 / p)));
  }
  if (!(M0 >= 0.0)) throw ValidationError("M0 must be nonnegative");
  if (!(delta >= 0.0 && delta <= 1.0)) throw ValidationError("delta must lie in [0, 1]");

  ConstantsLedger c;
  c.p = p;
  c.K0 = K0;
  c.M0 = M0;
  c.C0 = 1.0;
  c.delta = delta;
  c.a0 = delta == 0.0 ? 0.0 : a0;
  c.alpha0 = model.alpha0;
  c.lip_V = model.lip_V;

  const double lf = model.lip_V;
  const double f0 = model.f_at_zero_sup;
  const double n = model.n;
  const double m = model.m;

  c.Gbar = 2.0 * f0 + delta * std::abs(c.a0) * K0;
  c.L2 = delta * K0;
  c.L0 = std::max(2.0 * lf + model.alpha0, delta * (std::abs(c.a0) + c.C0));
  c.K1 = std::max(c.L2 * c.C0 + c.L0 * (2.0 + K0 * m / n + M0) + c.Gbar, model.alpha0 * M0);
  c.C4 = std::max(model.alpha0 * M0, lf * (2.0 + p * (m + n)) + f0 + (p / 2.0 + lf) * (c.a0 + c.C0));
  c.C1 = c.C4 / model.alpha0 + 3.0 + 2.0 * p;
  c.C2 = 6.0 + 4.0 * c.C4 / model.alpha0 + 3.0 * p + 2.0 * c.C1 + 2.0 * c.K1;
  c.C3 = c.C2 + 1.0;
  return c;
}

namespace {

using Rational = boost::multiprecision::cpp_rational;

struct ExactLedger {
  Rational C1, C2, C3_closed;
};

ExactLedger exact_ledger(const ConstantsLedger& c) {
  const Rational c4(c.C4), a(c.alpha0), p(c.p), k1(c.K1);
  ExactLedger e;
  e.C1 = c4 / a + 3 + 2 * p;
  e.C2 = 6 + 4 * c4 / a + 3 * p + 2 * e.C1 + 2 * k1;
  e.C3_closed = 13 + 6 * c4 / a + 7 * p + 2 * k1;
  return e;
}

}  // namespace

bool ledger_identity_exact(const ConstantsLedger& ledger) {
  const auto e = exact_ledger(ledger);
  return e.C2 + 1 == e.C3_closed;
}

double ledger_C2_upper(const ConstantsLedger& ledger) {
  const auto e = exact_ledger(ledger);
  double d = static_cast<double>(e.C2);
  if (Rational(d) < e.C2) d = std::nextafter(d, std::numeric_limits<double>::infinity());
  return d;
}

namespace {

nlohmann::json check_json(const AssumptionCheck& c) {
  nlohmann::json j{{"holds", c.holds}, {"margin", c.margin}};
  if (c.witness) j["witness"] = *c.witness;
  return j;
}

}  // namespace

nlohmann::json to_json(const AssumptionReport& r) {
  nlohmann::json j;
  j["a1"] = check_json(r.a1);
  j["a2"] = check_json(r.a2);
  j["a3"] = check_json(r.a3);
  j["a4"] = check_json(r.a4);
  j["a5"] = check_json(r.a5);
  j["a6"] = check_json(r.a6);
  if (std::isfinite(r.critical_mass)) {
    j["critical_mass"] = r.critical_mass;
  } else {
    j["critical_mass"] = nullptr;
  }
  j["lip_estimate"] = r.lip_estimate;
  j["monotone"] = r.monotone();
  return j;
}

nlohmann::json to_json(const ConstantsLedger& c) {
  return nlohmann::json{{"p", c.p},   {"K0", c.K0}, {"M0", c.M0}, {"C0", c.C0}, {"delta", c.delta},
                        {"a0", c.a0}, {"L0", c.L0}, {"L2", c.L2}, {"Gbar", c.Gbar}, {"K1", c.K1},
                        {"C1", c.C1}, {"C2", c.C2}, {"C3", c.C3}, {"C4", c.C4}, {"alpha0", c.alpha0},
                        {"lip_V", c.lip_V}};
}

namespace {

double require_number(const nlohmann::json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ValidationError(fmt::format("{}.{}: missing", path, key));
  const auto& v = j.at(key);
  if (!v.is_number()) throw ValidationError(fmt::format("{}.{}: expected a number", path, key));
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(fmt::format("{}.{}: must be finite", path, key));
  return d;
}

double optional_number(const nlohmann::json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  return require_number(j, key, path);
}

int require_int(const nlohmann::json& j, const std::string& key, const std::string& path) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(fmt::format("{}.{}: expected an integer", path, key));
  return v.get<int>();
}

}  // namespace

ForceModel model_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(fmt::format("{}: expected an object", path));
  double m0 = 0.0;
  const bool has_m0 = j.contains("m0"), has_alpha = j.contains("alpha0");
  if (has_m0 == has_alpha) throw ValidationError(fmt::format("{}: give exactly one of m0 or alpha0", path));
  if (has_m0) {
    m0 = require_number(j, "m0", path);
    if (!(m0 > 0.0)) throw ValidationError(fmt::format("{}.m0: must be positive", path));
  } else {
    const double a = require_number(j, "alpha0", path);
    if (!(a > 0.0)) throw ValidationError(fmt::format("{}.alpha0: must be positive", path));
    m0 = 0.5 / a;
  }
  if (!j.contains("force") || !j.at("force").is_object()) {
    throw ValidationError(fmt::format("{}.force: missing or not an object", path));
  }
  const auto& f = j.at("force");
  const std::string fpath = path + ".force";
  if (!f.contains("kind") || !f.at("kind").is_string()) throw ValidationError(fpath + ".kind: expected a string");
  const auto kind = f.at("kind").get<std::string>();

  ForceModel model;
  if (kind == "classical") {
    if (!f.contains("theta") || !f.at("theta").is_array() || f.at("theta").empty()) {
      throw ValidationError(fpath + ".theta: expected a nonempty array");
    }
    std::vector<double> theta;
    for (std::size_t k = 0; k < f.at("theta").size(); ++k) {
      const auto& t = f.at("theta")[k];
      if (!t.is_number() || !(t.get<double>() > 0.0) || !std::isfinite(t.get<double>())) {
        throw ValidationError(fmt::format("{}.theta[{}]: must be a positive number", fpath, k));
      }
      theta.push_back(t.get<double>());
    }
    const double amp = optional_number(f, "amplitude", fpath, 1.0);
    if (!(amp >= 0.0)) throw ValidationError(fpath + ".amplitude: must be nonnegative");
    const double drive = optional_number(f, "drive", fpath, 0.0);
    model = build_classical_fk(std::move(theta), amp, drive, m0);
    if (j.contains("m") && require_int(j, "m", path) != 1) {
      throw ValidationError(path + ".m: classical force has interaction radius 1");
    }
  } else if (kind == "constant") {
    int n = 1;
    if (j.contains("n")) n = require_int(j, "n", path);
    if (n < 1) throw ValidationError(path + ".n: must be >= 1");
    model = build_constant_force(optional_number(f, "drive", fpath, 0.0), 0.5 / m0, n);
  } else {
    throw ValidationError(fmt::format("{}.kind: unknown force kind '{}'", fpath, kind));
  }
  if (j.contains("n") && require_int(j, "n", path) != model.n) {
    throw ValidationError(fmt::format("{}.n: {} disagrees with the force definition (n = {})", path,
                                      j.at("n").dump(), model.n));
  }
  return model;
}

}  // namespace fkhom
