#include "fkhom/macro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "fkhom/error.hpp"
#include "fkhom/kernel.hpp"

namespace fkhom {

namespace {

std::int64_t floor_to_int(double v) { return static_cast<std::int64_t>(std::floor(v)); }

int type_of(std::int64_t i, int n) {
  const auto r = static_cast<int>(i % n);
  return r < 0 ? r + n : r;
}

}  // namespace

// ---------------------------------------------------------------- Profile

Profile Profile::from_function(std::function<double(double)> f, std::string label) {
  if (!f) throw ValidationError("profile needs a callable");
  Profile p;
  p.fn_ = std::move(f);
  p.label_ = std::move(label);
  return p;
}

Profile Profile::from_samples(std::vector<double> x, std::vector<double> u) {
  if (x.size() != u.size() || x.size() < 2) throw ValidationError("profile needs at least two (x, u) samples");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(u[k])) throw ValidationError(fmt::format("profile sample {} is not finite", k));
    if (k > 0 && !(x[k] > x[k - 1])) throw ValidationError(fmt::format("profile x must increase strictly (row {})", k));
  }
  Profile p;
  p.xs_ = std::move(x);
  p.us_ = std::move(u);
  p.label_ = "samples";
  return p;
}

double Profile::operator()(double x) const {
  if (fn_) return fn_(x);
  const auto& X = xs_;
  const auto& U = us_;
  std::size_t k;
  if (x <= X.front()) {
    k = 0;
  } else if (x >= X.back()) {
    k = X.size() - 2;
  } else {
    k = static_cast<std::size_t>(std::upper_bound(X.begin(), X.end(), x) - X.begin()) - 1;
  }
  const double s = (U[k + 1] - U[k]) / (X[k + 1] - X[k]);
  return U[k] + s * (x - X[k]);
}

// ---------------------------------------------------------------- initial data

A0Report check_A0(const std::vector<double>& x, const std::vector<double>& u0, double K0,
                  const std::optional<std::vector<double>>& xi0, double M0, double eps) {
  if (!(K0 >= 1.0)) throw ValidationError("K0 must be >= 1");
  if (x.size() != u0.size() || x.size() < 2) throw ValidationError("check_A0 needs matching samples (at least two)");
  constexpr double tol = 1e-12;
  A0Report r;
  r.min_slope = std::numeric_limits<double>::infinity();
  r.max_slope = -r.min_slope;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    if (!(x[k + 1] > x[k])) throw ValidationError("check_A0 needs increasing x");
    const double s = (u0[k + 1] - u0[k]) / (x[k + 1] - x[k]);
    r.min_slope = std::min(r.min_slope, s);
    r.max_slope = std::max(r.max_slope, s);
    const double m = std::min(s - 1.0 / K0, K0 - s);
    if (m < worst) {
      worst = m;
      r.witness = std::pair{x[k], x[k + 1]};
    }
  }
  r.margin = worst;
  r.ok = worst >= -tol;
  if (r.ok) r.witness.reset();
  if (xi0) {
    if (xi0->size() != u0.size()) throw ValidationError("xi0 samples must match u0");
    for (std::size_t k = 0; k < u0.size(); ++k) r.xi_gap = std::max(r.xi_gap, std::abs(u0[k] - (*xi0)[k]));
    r.xi_ok = r.xi_gap <= M0 * eps + tol;
    r.ok = r.ok && r.xi_ok;
  }
  return r;
}

// ---------------------------------------------------------------- Hamiltonian

HamiltonianInterp::HamiltonianInterp(std::vector<double> p_nodes, std::vector<double> values)
    : p_(std::move(p_nodes)), H_(std::move(values)) {
  if (p_.empty() || p_.size() != H_.size()) throw ValidationError("Hamiltonian needs matching nonempty nodes");
  for (std::size_t k = 0; k < p_.size(); ++k) {
    if (!std::isfinite(p_[k]) || !std::isfinite(H_[k])) throw ValidationError("Hamiltonian nodes must be finite");
    if (k > 0 && !(p_[k] > p_[k - 1])) throw ValidationError("Hamiltonian nodes must increase strictly");
    if (k > 0) lip_ = std::max(lip_, std::abs(H_[k] - H_[k - 1]) / (p_[k] - p_[k - 1]));
  }
}

HamiltonianInterp HamiltonianInterp::from_table(const EffectiveTable& table, std::size_t iL) {
  std::vector<double> p, H;
  for (std::size_t ip = 0; ip < table.p_grid.size(); ++ip) {
    const auto& e = table.at(iL, ip);
    if (!e.error.empty() || !std::isfinite(e.lambda)) continue;
    p.push_back(table.p_grid[ip].value());
    H.push_back(e.lambda);
  }
  if (p.empty()) throw ValidationError(fmt::format("table column L = {} has no valid entries", table.L_grid.at(iL)));
  return HamiltonianInterp(std::move(p), std::move(H));
}

double HamiltonianInterp::operator()(double p) const {
  if (p_.size() == 1) return H_[0];
  std::size_t k;
  if (p <= p_.front()) {
    k = 0;
  } else if (p >= p_.back()) {
    k = p_.size() - 2;
  } else {
    k = static_cast<std::size_t>(std::upper_bound(p_.begin(), p_.end(), p) - p_.begin()) - 1;
  }
  const double s = (H_[k + 1] - H_[k]) / (p_[k + 1] - p_[k]);
  return H_[k] + s * (p - p_[k]);
}

bool HamiltonianInterp::covers(double p_lo, double p_hi) const {
  return p_.size() == 1 || (p_.front() <= p_lo + 1e-12 && p_hi <= p_.back() + 1e-12);
}

// ---------------------------------------------------------------- HJ solver

MacroState solve_hj(const HamiltonianInterp& H, std::vector<double> u, double x_lo, double dx, double T,
                    const HJOptions& opts) {
  if (u.size() < 3) throw ValidationError("HJ grid needs at least three nodes");
  if (!(dx > 0.0) || !(T >= 0.0)) throw ValidationError("need dx > 0 and T >= 0");
  if (opts.record_count < 1) throw ValidationError("record_count must be >= 1");
  if (!(opts.cfl > 0.0 && opts.cfl <= 1.0)) {
    throw ValidationError(fmt::format("CFL number {} must lie in (0, 1] for a monotone scheme", opts.cfl));
  }
  const std::size_t K = u.size();
  MacroState s;
  s.x_lo = x_lo;
  s.dx = dx;
  s.x.resize(K);
  for (std::size_t k = 0; k < K; ++k) s.x[k] = x_lo + static_cast<double>(k) * dx;

  double smin = std::numeric_limits<double>::infinity(), smax = -smin;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    const double sl = (u[k + 1] - u[k]) / dx;
    smin = std::min(smin, sl);
    smax = std::max(smax, sl);
  }
  s.K0 = opts.K0 > 0.0 ? opts.K0 : std::max({1.0, smax, smin > 0.0 ? 1.0 / smin : 1.0});
  if (!(smin > 0.0)) throw ValidationError("initial profile must be increasing");
  s.extrapolated = !H.covers(smin, smax);

  const double lip = H.lip_est();
  s.nu = 0.5 * lip;
  const double dt_max = lip > 0.0 ? opts.cfl * dx / lip : std::max(T, dx);
  const std::size_t R = static_cast<std::size_t>(opts.record_count);
  const std::size_t per =
      T > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / (static_cast<double>(R) * dt_max) - 1e-12)))
              : 0;
  const std::size_t steps = per * R;
  s.dt = steps > 0 ? T / static_cast<double>(steps) : 0.0;

  // Affine extension: ghosts ride the exact solution of the edge-slope line.
  const double s_left = (u[1] - u[0]) / dx, s_right = (u[K - 1] - u[K - 2]) / dx;
  const double gl0 = u[0] - s_left * dx, gr0 = u[K - 1] + s_right * dx;
  const double Hl = H(s_left), Hr = H(s_right);

  s.min_slope = smin;
  s.max_slope = smax;
  s.times.push_back(0.0);
  s.history.push_back(u);
  std::vector<double> next(K);
  const double dt = s.dt, nu = s.nu;
  for (std::size_t st = 1; st <= steps; ++st) {
    const double t_old = static_cast<double>(st - 1) * dt;
    const double gl = gl0 + t_old * Hl, gr = gr0 + t_old * Hr;
    for (std::size_t k = 0; k < K; ++k) {
      const double um = k > 0 ? u[k - 1] : gl;
      const double up = k + 1 < K ? u[k + 1] : gr;
      next[k] = u[k] + dt * (H((up - um) / (2.0 * dx)) + nu * (up - 2.0 * u[k] + um) / dx);
    }
    u.swap(next);
    if (st % per == 0) {
      for (std::size_t k = 0; k + 1 < K; ++k) {
        const double sl = (u[k + 1] - u[k]) / dx;
        s.min_slope = std::min(s.min_slope, sl);
        s.max_slope = std::max(s.max_slope, sl);
      }
      s.times.push_back(static_cast<double>(st) * dt);
      s.history.push_back(u);
    }
    for (double v : u) {
      if (!std::isfinite(v)) throw NumericalError(fmt::format("HJ solution became non-finite at t = {}", t_old + dt));
    }
  }
  if (steps == 0) {
    for (std::size_t r = 1; r <= R; ++r) {
      s.times.push_back(0.0);
      s.history.push_back(u);
    }
  }
  s.t = T;
  s.u = std::move(u);
  const double slack = 2.0 * dx;
  s.slope_exit = s.min_slope < 1.0 / s.K0 - slack || s.max_slope > s.K0 + slack;
  if (!H.covers(s.min_slope, s.max_slope)) s.extrapolated = true;
  return s;
}

MacroState solve_hj(const HamiltonianInterp& H, const Profile& u0, double x_lo, double x_hi, double dx, double T,
                    const HJOptions& opts) {
  if (!(x_hi > x_lo) || !(dx > 0.0)) throw ValidationError("HJ window needs x_lo < x_hi and dx > 0");
  const auto K = static_cast<std::size_t>(std::llround((x_hi - x_lo) / dx)) + 1;
  std::vector<double> u(K);
  for (std::size_t k = 0; k < K; ++k) u[k] = u0(x_lo + static_cast<double>(k) * dx);
  return solve_hj(H, std::move(u), x_lo, dx, T, opts);
}

double macro_value(const MacroState& s, std::size_t r, double x) {
  const auto& u = s.history.at(r);
  const double pos = (x - s.x_lo) / s.dx;
  if (pos < -1e-9 || pos > static_cast<double>(u.size() - 1) + 1e-9) {
    throw ValidationError(fmt::format("x = {} lies outside the HJ grid", x));
  }
  const auto k = std::min<std::size_t>(u.size() - 2, static_cast<std::size_t>(std::max(0.0, std::floor(pos))));
  const double w = pos - static_cast<double>(k);
  return u[k] + w * (u[k + 1] - u[k]);
}

// ---------------------------------------------------------------- microscopic field

bool MicroField::contains(double x) const {
  const std::int64_t y = floor_to_int(x / eps);
  return y >= y_lo && y <= y_hi;
}

double MicroField::eval(std::size_t r, double x, int j) const {
  const std::int64_t y = floor_to_int(x / eps);
  if (y < y_lo || y > y_hi) throw ValidationError(fmt::format("x = {} lies outside the simulated window", x));
  const std::int64_t i = type_of(j, n) + static_cast<std::int64_t>(n) * y;
  return values.at(r).at(static_cast<std::size_t>(i - i_lo));
}

MicroField rescale_micro(const ForceModel& model0, double L, double eps, const Profile& u0, double T, double x_lo,
                         double x_hi, const MicroOptions& opts) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("eps must be positive");
  if (!(T > 0.0)) throw ValidationError("T must be positive");
  if (!(x_hi > x_lo)) throw ValidationError("window needs x_lo < x_hi");
  if (opts.record_count < 1) throw ValidationError("record_count must be >= 1");
  const ForceModel model = model0.shifted(L);
  if (!check_assumptions(model).monotone()) throw ValidationError("model violates the monotonicity assumptions");
  const int n = model.n, m = model.m;

  MicroField f;
  f.eps = eps;
  f.n = n;
  f.y_lo = floor_to_int(x_lo / eps);
  f.y_hi = floor_to_int(x_hi / eps);
  f.i_lo = static_cast<std::int64_t>(n) * f.y_lo;
  const std::int64_t W = static_cast<std::int64_t>(n) * (f.y_hi - f.y_lo + 1);
  if (W < 100) {
    throw ValidationError(fmt::format("window holds {} particles at eps = {}; need at least 100", W, eps));
  }

  const double tau_end = T / eps;
  const double dt0 = cfl_dt(model, opts.dt_safety);
  const auto R = static_cast<std::int64_t>(opts.record_count);
  const auto per = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(tau_end / (static_cast<double>(R) * dt0) - 1e-12)));
  const std::int64_t S = per * R;
  const double dt = tau_end / static_cast<double>(S);
  f.steps = S;
  f.pad = static_cast<std::int64_t>(m) * S;
  if (opts.max_pad && f.pad > *opts.max_pad) {
    throw ValidationError(fmt::format("padding {} particles per side is insufficient: the domain of dependence "
                                      "needs {} (m = {} per step, {} steps)",
                                      *opts.max_pad, f.pad, m, S));
  }
  const std::int64_t total = W + 2 * f.pad;
  if (static_cast<double>(total) * static_cast<double>(S) / 1000.0 > static_cast<double>(opts.max_particles)) {
    throw ValidationError(fmt::format("micro run of {} particles over {} steps exceeds the work limit", total, S));
  }

  const std::int64_t base = f.i_lo - f.pad;
  const Profile& xi0 = opts.xi0 ? *opts.xi0 : u0;
  std::vector<double> U(static_cast<std::size_t>(total)), Xi(U.size());
  for (std::int64_t k = 0; k < total; ++k) {
    const double x = static_cast<double>(base + k) * eps / n;
    U[static_cast<std::size_t>(k)] = u0(x) / eps;
    Xi[static_cast<std::size_t>(k)] = xi0(x) / eps;
  }
  for (std::size_t k = 0; k + 1 < U.size(); ++k) {
    if (!(U[k + 1] > U[k])) throw ValidationError("initial profile is not strictly increasing on the particle lattice");
  }

  auto record = [&](double t) {
    f.times.push_back(t);
    std::vector<double> v(static_cast<std::size_t>(W));
    for (std::int64_t k = 0; k < W; ++k) v[static_cast<std::size_t>(k)] = eps * U[static_cast<std::size_t>(f.pad + k)];
    f.values.push_back(std::move(v));
  };
  record(0.0);
  std::vector<double> F;
  for (std::int64_t s = 0; s < S; ++s) {
    const std::int64_t reach = static_cast<std::int64_t>(m) * (S - s - 1);
    const auto lo = static_cast<std::size_t>(f.pad - reach);
    const auto hi = static_cast<std::size_t>(f.pad + W + reach);  // exclusive
    const std::size_t count = hi - lo;
    F.resize(count);
    const std::span<const double> ext(U.data() + lo - static_cast<std::size_t>(m), count + 2 * static_cast<std::size_t>(m));
    forces_from_extended(model, static_cast<double>(s) * dt, ext, type_of(base + static_cast<std::int64_t>(lo), n), F);
    euler_update(model.alpha0, dt, F, std::span(U).subspan(lo, count), std::span(Xi).subspan(lo, count));
    if ((s + 1) % per == 0) {
      for (std::int64_t k = 0; k < W; ++k) {
        if (!std::isfinite(U[static_cast<std::size_t>(f.pad + k)])) {
          throw NumericalError(fmt::format("micro run became non-finite at tau = {}", static_cast<double>(s + 1) * dt));
        }
      }
      record(static_cast<double>(s + 1) / static_cast<double>(per) * T / static_cast<double>(R));
    }
  }
  return f;
}

double gradient_sandwich_violation(const MicroField& f, double K0, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::int64_t Y = f.y_hi - f.y_lo;
  std::uniform_int_distribution<std::size_t> pick_r(0, f.values.size() - 1);
  std::uniform_int_distribution<std::int64_t> pick_y(0, Y);
  std::uniform_int_distribution<int> pick_j(0, f.n - 1);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const std::size_t r = pick_r(rng);
    const std::int64_t y = pick_y(rng);
    std::uniform_int_distribution<std::int64_t> pick_d(0, Y - y);
    const std::int64_t d = pick_d(rng);
    const int j = pick_j(rng);
    const auto i0 = static_cast<std::size_t>(j + f.n * y);
    const auto i1 = static_cast<std::size_t>(j + f.n * (y + d));
    const double diff = f.values[r][i1] - f.values[r][i0];
    const double dd = static_cast<double>(d);
    const double lo = f.eps * std::floor(dd / K0 - 1e-12);
    const double hi = f.eps * std::ceil(dd * K0 + 1e-12);
    worst = std::max({worst, lo - diff, diff - hi});
  }
  return worst;
}

// ---------------------------------------------------------------- eps-study

ConvergenceReport convergence_study(const ForceModel& model, double L, const Profile& u0,
                                    const std::vector<double>& eps_list, double T, double x_lo, double x_hi,
                                    const HamiltonianInterp& H, const ConvergenceOptions& opts) {
  if (eps_list.empty()) throw ValidationError("eps_list must be nonempty");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) throw ValidationError("eps values must be positive");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) throw ValidationError("eps_list must be strictly decreasing");
  }
  if (opts.record_count < 2) throw ValidationError("record_count must be >= 2");
  ConvergenceReport rep;
  rep.eps = eps_list;
  rep.t_lo = 0.5 * T;
  rep.t_hi = T;
  const double w = x_hi - x_lo;
  rep.x_lo = x_lo + 0.25 * w;
  rep.x_hi = x_hi - 0.25 * w;
  rep.hj_dx = opts.hj_dx > 0.0 ? opts.hj_dx : eps_list.back() / 4.0;

  HJOptions ho;
  ho.record_count = opts.record_count;
  // Pad so that the affine ghosts can not reach the compact set: LF spreads
  // information by one cell per step, i.e. by T lip / cfl in total.
  const double spread = H.lip_est() * T / ho.cfl;
  auto solve_at = [&](double dx) {
    const double pad = dx * std::ceil((spread + 0.25 * w) / dx) + 4.0 * dx;
    const double lo = rep.x_lo - pad;
    const auto K = static_cast<std::size_t>(std::llround((rep.x_hi - rep.x_lo + 2.0 * pad) / dx)) + 1;
    std::vector<double> u(K);
    for (std::size_t k = 0; k < K; ++k) u[k] = u0(lo + static_cast<double>(k) * dx);
    return solve_hj(H, std::move(u), lo, dx, T, ho);
  };
  const MacroState fine = solve_at(rep.hj_dx);
  const MacroState coarse = solve_at(2.0 * rep.hj_dx);

  const auto R = static_cast<std::size_t>(opts.record_count);
  const std::size_t r0 = (R + 1) / 2;  // t = T r / R >= T / 2
  std::vector<double> probe_x;
  for (double x : fine.x) {
    if (x >= rep.x_lo - 1e-12 && x <= rep.x_hi + 1e-12) probe_x.push_back(x);
  }
  for (std::size_t r = r0; r <= R; ++r) {
    for (double x : probe_x) {
      rep.hj_floor = std::max(rep.hj_floor, std::abs(macro_value(fine, r, x) - macro_value(coarse, r, x)));
    }
  }

  rep.errors.assign(eps_list.size(), 0.0);
  MicroOptions mo;
  mo.dt_safety = opts.dt_safety;
  mo.record_count = opts.record_count;
  parallel_for(eps_list.size(), opts.threads, [&](std::size_t k) {
    const MicroField f = rescale_micro(model, L, eps_list[k], u0, T, x_lo, x_hi, mo);
    double err = 0.0;
    for (std::size_t r = r0; r <= R; ++r) {
      for (double x : probe_x) err = std::max(err, std::abs(f.eval(r, x) - macro_value(fine, r, x)));
    }
    rep.errors[k] = err;
  });
  for (std::size_t k = 0; k + 1 < eps_list.size(); ++k) {
    rep.rates.push_back(std::log2(rep.errors[k] / rep.errors[k + 1]) / std::log2(eps_list[k] / eps_list[k + 1]));
  }
  return rep;
}

}  // namespace fkhom
