#include "fkhom/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "fkhom/error.hpp"
#include "fkhom/kernel.hpp"

namespace fkhom {

namespace {

int type_of(std::int64_t i, int n) {
  const auto r = static_cast<int>(i % n);
  return r < 0 ? r + n : r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Fills ext (size N + 2m) with U_{-m}, ..., U_{N-1+m} through the twist.
void extend_twisted(std::span<const double> U, std::int64_t Q, int m, std::vector<double>& ext) {
  const auto N = static_cast<std::int64_t>(U.size());
  ext.resize(U.size() + 2 * static_cast<std::size_t>(m));
  for (std::int64_t k = -m; k < N + m; ++k) {
    const std::int64_t wraps = floor_div(k, N);
    ext[static_cast<std::size_t>(k + m)] = U[static_cast<std::size_t>(k - wraps * N)] + static_cast<double>(wraps * Q);
  }
}

void check_finite(std::span<const double> U, std::span<const double> Xi, double tau) {
  for (std::size_t i = 0; i < U.size(); ++i) {
    if (!std::isfinite(U[i]) || !std::isfinite(Xi[i])) {
      throw NumericalError(fmt::format("non-finite state at particle {} and tau = {} (U = {}, Xi = {})", i, tau, U[i],
                                       Xi[i]));
    }
  }
}

void require_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError(fmt::format("time step {} must be positive", dt));
}

}  // namespace

void forces_from_extended(const ForceModel& model, double tau, std::span<const double> ext, int first_type,
                          std::span<double> out) {
  const int m = model.m;
  const int n = model.n;
  if (ext.size() != out.size() + 2 * static_cast<std::size_t>(m)) {
    throw ValidationError("forces_from_extended: extended array has the wrong size");
  }
  if (const auto* fk = std::get_if<ClassicalFK>(&model.force)) {
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    const auto& th = fk->theta;
    for (std::size_t k = 0; k < out.size(); ++k) {
      const int j = type_of(first_type + static_cast<std::int64_t>(k), n);
      const double left = th[static_cast<std::size_t>(j)];
      const double right = th[static_cast<std::size_t>(j + 1 == n ? 0 : j + 1)];
      const double v0 = ext[k + 1];
      out[k] = right * (ext[k + 2] - v0) - left * (v0 - ext[k]) +
               fk->amplitude * std::sin(kTwoPi * (v0 - std::nearbyint(v0))) + fk->drive;
    }
    return;
  }
  const auto& tab = std::get<TabulatedForce>(model.force);
  const auto w = static_cast<std::size_t>(2 * m + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const int j = type_of(first_type + static_cast<std::int64_t>(k), n);
    out[k] = tab.fn(j, tau, ext.subspan(k, w)) + model.extra_drive;
  }
}

void euler_update(double alpha0, double dt, std::span<const double> F, std::span<double> U, std::span<double> Xi) {
  for (std::size_t i = 0; i < F.size(); ++i) {
    const double gap = Xi[i] - U[i];
    U[i] += dt * (alpha0 * gap);
    Xi[i] += dt * (2.0 * F[i] - alpha0 * gap);
  }
}

// ---------------------------------------------------------------- chain state

TwistedChain::TwistedChain(std::shared_ptr<const ForceModel> model, Slope p, int cells)
    : model_(std::move(model)), p_(p), cells_(cells) {
  if (!model_) throw ValidationError("chain needs a model");
  if (cells < 1) throw ValidationError(fmt::format("cells = {} must be >= 1", cells));
  const std::int64_t N = static_cast<std::int64_t>(model_->n) * p.r() * cells;
  if (N > 50'000'000) throw ValidationError(fmt::format("chain of {} particles is too large", N));
  N_ = static_cast<int>(N);
  Q_ = p.q() * cells;
  U.assign(static_cast<std::size_t>(N_), 0.0);
  Xi.assign(static_cast<std::size_t>(N_), 0.0);
}

double TwistedChain::U_at(std::int64_t i) const {
  const std::int64_t w = floor_div(i, N_);
  return U[static_cast<std::size_t>(i - w * N_)] + static_cast<double>(w * Q_);
}

double TwistedChain::Xi_at(std::int64_t i) const {
  const std::int64_t w = floor_div(i, N_);
  return Xi[static_cast<std::size_t>(i - w * N_)] + static_cast<double>(w * Q_);
}

TwistedChain init_linear(std::shared_ptr<const ForceModel> model, Slope p, int cells,
                         std::optional<std::vector<double>> perturbation) {
  TwistedChain c(std::move(model), p, cells);
  const int n = c.model().n;
  const auto N = static_cast<std::size_t>(c.size());
  if (perturbation && perturbation->size() != N) {
    throw ValidationError(fmt::format("perturbation has {} entries, chain has {}", perturbation->size(), N));
  }
  const double den = static_cast<double>(p.r()) * n;
  for (std::size_t i = 0; i < N; ++i) {
    double v = static_cast<double>(p.q() * static_cast<std::int64_t>(i)) / den;
    if (perturbation) v += (*perturbation)[i];
    c.U[i] = v;
    c.Xi[i] = v;
  }
  if (perturbation) {
    for (std::size_t i = 0; i < N; ++i) {
      const double next = i + 1 < N ? c.U[i + 1] : c.U[0] + static_cast<double>(c.twist());
      if (!std::isfinite(c.U[i]) || !(next > c.U[i])) {
        throw ValidationError(fmt::format("perturbation breaks strict ordering between particles {} and {}", i,
                                          (i + 1) % N));
      }
    }
  }
  return c;
}

double cfl_dt(const ForceModel& model, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw ValidationError("CFL safety factor must lie in (0, 1]");
  return safety / model.alpha0;
}

double cfl_dt_delta(const ForceModel& model, double p, double delta, double a0, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw ValidationError("CFL safety factor must lie in (0, 1]");
  // q^+ <= p + 2 L_F / delta and |a| <= 2 bound the two Xi_i-dependencies of the extra term.
  const double rate = model.alpha0 + 2.0 * model.lip_V + delta * (p + std::abs(a0) + 2.0);
  return safety / rate;
}

// ---------------------------------------------------------------- stepping

void step(TwistedChain& chain, double dt) {
  require_dt(dt);
  const auto& model = chain.model();
  thread_local std::vector<double> ext, F;
  extend_twisted(chain.U, chain.twist(), model.m, ext);
  F.resize(chain.U.size());
  forces_from_extended(model, chain.tau, ext, 0, F);
  euler_update(model.alpha0, dt, F, chain.U, chain.Xi);
  chain.tau += dt;
  check_finite(chain.U, chain.Xi, chain.tau);
}

void step_delta(TwistedChain& chain, double dt, double delta, double a0) {
  if (delta == 0.0) {
    step(chain, dt);
    return;
  }
  require_dt(dt);
  if (!(delta > 0.0 && delta <= 1.0)) throw ValidationError(fmt::format("delta = {} must lie in (0, 1]", delta));
  const auto& model = chain.model();
  const int n = model.n;
  const auto N = static_cast<std::size_t>(chain.size());
  const double p = chain.slope().value();

  thread_local std::vector<double> ext, F, w, extra;
  extend_twisted(chain.U, chain.twist(), model.m, ext);
  F.resize(N);
  forces_from_extended(model, chain.tau, ext, 0, F);

  // w_i = Xi_i - p y_i is N-periodic; a_i = min over type(i) of w minus w_i.
  w.resize(N);
  std::vector<double> wmin(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < N; ++i) {
    w[i] = chain.Xi[i] - p * static_cast<double>(i / static_cast<std::size_t>(n));
    auto& mn = wmin[i % static_cast<std::size_t>(n)];
    mn = std::min(mn, w[i]);
  }
  extra.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double a = wmin[i % static_cast<std::size_t>(n)] - w[i];
    const double speed = delta * (a0 + a);
    const auto ii = static_cast<std::int64_t>(i);
    const double q = speed >= 0.0 ? chain.Xi_at(ii + n) - chain.Xi[i] : chain.Xi[i] - chain.Xi_at(ii - n);
    extra[i] = speed * std::max(q, 0.0);
  }
  const double alpha0 = model.alpha0;
  for (std::size_t i = 0; i < N; ++i) {
    const double gap = chain.Xi[i] - chain.U[i];
    chain.U[i] += dt * (alpha0 * gap);
    chain.Xi[i] += dt * (2.0 * F[i] - alpha0 * gap + extra[i]);
  }
  chain.tau += dt;
  check_finite(chain.U, chain.Xi, chain.tau);
}

// ---------------------------------------------------------------- runs

namespace {

void record(TrajectoryLog& log, const TwistedChain& c, std::size_t snapshot_every) {
  const std::size_t k = log.samples();
  for (int j = 0; j < log.n; ++j) {
    log.U[static_cast<std::size_t>(j)].push_back(c.U[static_cast<std::size_t>(j)]);
    log.Xi[static_cast<std::size_t>(j)].push_back(c.Xi[static_cast<std::size_t>(j)]);
  }
  if (snapshot_every > 0 && k % snapshot_every == 0) log.snapshots.push_back({c.tau, c.U, c.Xi});
}

struct Schedule {
  double h = 0.0;
  std::size_t per_sample = 1;
  std::size_t samples = 0;
};

Schedule make_schedule(double T, const RunOptions& o) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw ValidationError(fmt::format("run length T = {} must be >= 0", T));
  require_dt(o.dt);
  if (!(o.sample_dt > 0.0)) throw ValidationError("sample_dt must be positive");
  if (o.sample_dt + 1e-12 < o.dt) {
    throw ValidationError(fmt::format("sample_dt = {} is smaller than dt = {}", o.sample_dt, o.dt));
  }
  Schedule s;
  s.per_sample = static_cast<std::size_t>(std::ceil(o.sample_dt / o.dt - 1e-9));
  s.h = o.sample_dt / static_cast<double>(s.per_sample);
  s.samples = static_cast<std::size_t>(std::floor(T / o.sample_dt + 1e-9));
  return s;
}

void advance(TwistedChain& c, double h, const RunOptions& o) {
  if (o.delta == 0.0) {
    step(c, h);
  } else {
    step_delta(c, h, o.delta, o.a0);
  }
}

}  // namespace

TrajectoryLog run(TwistedChain& chain, double T, const RunOptions& opts) {
  TrajectoryLog log;
  log.t0 = chain.tau;
  log.sample_dt = opts.sample_dt;
  log.n = chain.model().n;
  log.N = chain.size();
  log.Q = chain.twist();
  log.p = chain.slope();
  log.U.assign(static_cast<std::size_t>(log.n), {});
  log.Xi.assign(static_cast<std::size_t>(log.n), {});
  make_schedule(T, opts);  // validate before recording anything
  record(log, chain, opts.snapshot_every);
  extend(log, chain, T, opts);
  return log;
}

void extend(TrajectoryLog& log, TwistedChain& chain, double T, const RunOptions& opts) {
  const auto s = make_schedule(T, opts);
  if (std::abs(opts.sample_dt - log.sample_dt) > 1e-15 * log.sample_dt) {
    throw ValidationError("extend: sample_dt differs from the log's spacing");
  }
  for (std::size_t k = 0; k < s.samples; ++k) {
    const double target = log.time(log.samples());
    for (std::size_t st = 0; st < s.per_sample; ++st) advance(chain, s.h, opts);
    chain.tau = target;  // keep the clock on the sample grid
    record(log, chain, opts.snapshot_every);
  }
}

TrajectoryLog rk4_oracle(const TwistedChain& chain0, double T, double dt, double sample_dt,
                         std::size_t snapshot_every) {
  RunOptions o;
  o.dt = dt;
  o.sample_dt = sample_dt;
  const auto s = make_schedule(T, o);
  const auto& model = chain0.model();
  const double m0 = model.m0();
  const double alpha0 = model.alpha0;
  const auto N = chain0.U.size();
  const std::int64_t Q = chain0.twist();

  TwistedChain c = chain0;  // reused for logging only
  std::vector<double> U = chain0.U, V(N);
  for (std::size_t i = 0; i < N; ++i) V[i] = (chain0.Xi[i] - chain0.U[i]) * alpha0;  // U' = (Xi - U)/(2 m0)

  std::vector<double> ext, F(N), k1u(N), k1v(N), k2u(N), k2v(N), k3u(N), k3v(N), k4u(N), k4v(N), Ut(N), Vt(N);
  auto rhs = [&](double t, const std::vector<double>& u, const std::vector<double>& v, std::vector<double>& du,
                 std::vector<double>& dv) {
    extend_twisted(u, Q, model.m, ext);
    forces_from_extended(model, t, ext, 0, F);
    for (std::size_t i = 0; i < N; ++i) {
      du[i] = v[i];
      dv[i] = (F[i] - v[i]) / m0;
    }
  };
  auto sync = [&](double t) {
    c.tau = t;
    for (std::size_t i = 0; i < N; ++i) {
      c.U[i] = U[i];
      c.Xi[i] = U[i] + 2.0 * m0 * V[i];
    }
  };

  TrajectoryLog log;
  log.t0 = chain0.tau;
  log.sample_dt = sample_dt;
  log.n = model.n;
  log.N = chain0.size();
  log.Q = Q;
  log.p = chain0.slope();
  log.U.assign(static_cast<std::size_t>(log.n), {});
  log.Xi.assign(static_cast<std::size_t>(log.n), {});
  sync(chain0.tau);
  record(log, c, snapshot_every);

  const double h = s.h;
  double t = chain0.tau;
  for (std::size_t k = 0; k < s.samples; ++k) {
    for (std::size_t st = 0; st < s.per_sample; ++st) {
      rhs(t, U, V, k1u, k1v);
      for (std::size_t i = 0; i < N; ++i) Ut[i] = U[i] + 0.5 * h * k1u[i], Vt[i] = V[i] + 0.5 * h * k1v[i];
      rhs(t + 0.5 * h, Ut, Vt, k2u, k2v);
      for (std::size_t i = 0; i < N; ++i) Ut[i] = U[i] + 0.5 * h * k2u[i], Vt[i] = V[i] + 0.5 * h * k2v[i];
      rhs(t + 0.5 * h, Ut, Vt, k3u, k3v);
      for (std::size_t i = 0; i < N; ++i) Ut[i] = U[i] + h * k3u[i], Vt[i] = V[i] + h * k3v[i];
      rhs(t + h, Ut, Vt, k4u, k4v);
      for (std::size_t i = 0; i < N; ++i) {
        U[i] += h / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
        V[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
      }
      t += h;
    }
    t = log.time(log.samples());
    sync(t);
    check_finite(c.U, c.Xi, t);
    record(log, c, snapshot_every);
  }
  return log;
}

// ---------------------------------------------------------------- invariants

InvariantReport measure_state(std::span<const double> U, std::span<const double> Xi, int n, Slope p,
                              std::int64_t Q, const ConstantsLedger& ledger) {
  InvariantReport r;
  const auto N = U.size();
  const auto nn = static_cast<std::size_t>(n);
  const double pv = p.value();
  const double Qd = static_cast<double>(Q);
  std::vector<double> umin(nn, std::numeric_limits<double>::infinity()), umax(nn, -umin[0]);
  std::vector<double> xmin = umin, xmax = umax;
  for (std::size_t i = 0; i < N; ++i) {
    const bool seam = i + 1 == N;
    const double un = seam ? U[0] + Qd : U[i + 1];
    const double xn = seam ? Xi[0] + Qd : Xi[i + 1];
    r.ordering_violation = std::max({r.ordering_violation, U[i] - un, Xi[i] - xn});
    r.u_xi_gap = std::max(r.u_xi_gap, std::abs(U[i] - Xi[i]));
    const double y = static_cast<double>(i / nn);
    const auto t = i % nn;
    umin[t] = std::min(umin[t], U[i] - pv * y);
    umax[t] = std::max(umax[t], U[i] - pv * y);
    xmin[t] = std::min(xmin[t], Xi[i] - pv * y);
    xmax[t] = std::max(xmax[t], Xi[i] - pv * y);
    const std::size_t ip = i + nn;
    const double xf = ip < N ? Xi[ip] : Xi[ip - N] + Qd;
    r.delta_gradient = std::max(r.delta_gradient, xf - Xi[i]);
  }
  for (std::size_t t = 0; t < nn && t < N; ++t) {
    r.space_osc = std::max({r.space_osc, umax[t] - umin[t], xmax[t] - xmin[t]});
  }
  r.u_xi_bound = ledger.u_xi_bound();
  r.ordering_ok = r.ordering_violation <= 0.0;
  r.u_xi_ok = r.u_xi_gap <= r.u_xi_bound;
  r.space_osc_ok = r.space_osc <= ledger.C0;
  return r;
}

InvariantReport monitor_invariants(const TwistedChain& chain, const ConstantsLedger& ledger) {
  return measure_state(chain.U, chain.Xi, chain.model().n, chain.slope(), chain.twist(), ledger);
}

InvariantReport monitor_invariants(const TrajectoryLog& log, const ConstantsLedger& ledger, double tau_min) {
  InvariantReport worst;
  worst.u_xi_bound = ledger.u_xi_bound();
  for (const auto& s : log.snapshots) {
    if (s.tau < tau_min) continue;
    const auto r = measure_state(s.U, s.Xi, log.n, log.p, log.Q, ledger);
    worst.ordering_violation = std::max(worst.ordering_violation, r.ordering_violation);
    worst.u_xi_gap = std::max(worst.u_xi_gap, r.u_xi_gap);
    worst.space_osc = std::max(worst.space_osc, r.space_osc);
    worst.delta_gradient = std::max(worst.delta_gradient, r.delta_gradient);
    worst.ordering_ok = worst.ordering_ok && r.ordering_ok;
    worst.u_xi_ok = worst.u_xi_ok && r.u_xi_ok;
    worst.space_osc_ok = worst.space_osc_ok && r.space_osc_ok;
  }
  return worst;
}

}  // namespace fkhom
