#include "fkhom/rotation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "fkhom/error.hpp"

namespace fkhom {

namespace {

std::size_t lag_of(double T, double sample_dt) {
  const double k = std::round(T / sample_dt);
  if (k < 1.0 || std::abs(k * sample_dt - T) > 1e-9 * std::max(1.0, T)) {
    throw ValidationError(fmt::format("window T = {} is not a positive multiple of the sample spacing {}", T, sample_dt));
  }
  return static_cast<std::size_t>(k);
}

double snap_up(double t, double step) { return step * std::ceil(t / step - 1e-9); }

}  // namespace

LambdaBracket lambda_pm(const TrajectoryLog& log, double T, double tau_cut, std::optional<int> only_type) {
  const std::size_t k = lag_of(T, log.sample_dt);
  const double rel = (tau_cut - log.t0) / log.sample_dt;
  const std::size_t c = rel <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(rel - 1e-9));
  const std::size_t S = log.samples();
  if (S == 0 || c + 2 * k > S - 1) {
    throw ValidationError(fmt::format("log too short for lambda(T = {}): need {} time after tau_cut = {}, have {}", T,
                                      2.0 * T, tau_cut, std::max(0.0, log.end_time() - tau_cut)));
  }
  if (only_type && (*only_type < 0 || *only_type >= log.n)) throw ValidationError("lambda_pm: particle type out of range");

  LambdaBracket b;
  b.T = static_cast<double>(k) * log.sample_dt;
  b.minus = std::numeric_limits<double>::infinity();
  b.plus = -b.minus;
  double vmax = 0.0;
  auto scan = [&](const std::vector<double>& v) {
    for (std::size_t s = c; s + k < S; ++s) {
      const double d = (v[s + k] - v[s]) / b.T;
      b.minus = std::min(b.minus, d);
      b.plus = std::max(b.plus, d);
    }
    for (std::size_t s = c; s + 1 < S; ++s) vmax = std::max(vmax, std::abs(v[s + 1] - v[s]) / log.sample_dt);
  };
  for (int j = 0; j < log.n; ++j) {
    if (only_type && j != *only_type) continue;
    scan(log.U[static_cast<std::size_t>(j)]);
    scan(log.Xi[static_cast<std::size_t>(j)]);
  }
  b.slack = log.sample_dt * vmax / b.T;
  return b;
}

TwistedChain rotation_initial_chain(std::shared_ptr<const ForceModel> model, Slope p, const RotationOptions& opts) {
  if (opts.perturbation == 0.0) return init_linear(std::move(model), p, opts.cells);
  if (!(std::abs(opts.perturbation) < 0.5)) throw ValidationError("perturbation must be below half a spacing");
  const std::int64_t N = static_cast<std::int64_t>(model->n) * p.r() * opts.cells;
  const double spacing = p.value() / model->n;
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(-std::abs(opts.perturbation), std::abs(opts.perturbation));
  std::vector<double> pert(static_cast<std::size_t>(N));
  for (auto& x : pert) x = spacing * dist(rng);
  return init_linear(std::move(model), p, opts.cells, std::move(pert));
}

RotationEstimate rotation_number(const ForceModel& model0, Slope p, double L_extra, const RotationOptions& opts) {
  if (!(opts.tol > 0.0)) throw ValidationError("tol must be positive");
  if (!(opts.T0 > 0.0) || !(opts.T_cap >= opts.T0)) throw ValidationError("need 0 < T0 <= T_cap");
  auto model = std::make_shared<const ForceModel>(model0.shifted(L_extra));
  const auto report = check_assumptions(*model);
  if (!report.monotone()) {
    throw ValidationError(fmt::format("model violates the monotonicity assumptions (critical mass {:.6g}, m0 = {:.6g})",
                                      report.critical_mass, model->m0()));
  }
  const double pv = p.value();
  RotationEstimate est;
  est.ledger = constants_ledger(*model, pv, opts.K0.value_or(std::max(pv, 1.0 / pv)));
  const double C2 = ledger_C2_upper(est.ledger);

  est.dt = cfl_dt(*model, opts.dt_safety);
  RunOptions ro;
  ro.dt = est.dt;
  ro.sample_dt = opts.sample_dt > 0.0 ? opts.sample_dt : std::max(est.dt, 0.05);
  ro.snapshot_every = opts.snapshot_every;
  est.tau_cut = snap_up(5.0 / model->alpha0, ro.sample_dt);
  const double T_cap = std::max(ro.sample_dt, std::floor(opts.T_cap / ro.sample_dt + 1e-9) * ro.sample_dt);
  double T = std::min(T_cap, std::max(1.0, std::round(opts.T0 / ro.sample_dt)) * ro.sample_dt);

  TwistedChain chain = rotation_initial_chain(model, p, opts);
  const TwistedChain chain0 = chain;
  TrajectoryLog log;
  // The cutoff grows with the window so that relaxation transients leave the
  // bracket; sup/inf over any tail of the trajectory still bracket lambda.
  auto cut_for = [&](double T_stage) { return std::max(est.tau_cut, T_stage); };
  if (opts.integrator == Integrator::euler) log = run(chain, cut_for(T) + 2.0 * T, ro);

  for (;;) {
    const double cut = cut_for(T);
    if (opts.integrator == Integrator::euler) {
      const double have = log.end_time() - log.t0;
      const double need = cut + 2.0 * T;
      if (need > have + 1e-9) extend(log, chain, need - have, ro);
    } else {
      log = rk4_oracle(chain0, cut + 2.0 * T, est.dt, ro.sample_dt, opts.snapshot_every);
    }
    const auto b = lambda_pm(log, T, cut);
    est.history.push_back({b.T, b.minus, b.plus, b.slack, cut});
    const double width = b.plus - b.minus;
    const bool done = std::min(width, C2 / b.T) <= 2.0 * opts.tol;
    if (done || T >= T_cap) {
      est.converged = done;
      break;
    }
    T = std::min(2.0 * T, T_cap);
  }

  const auto& last = est.history.back();
  est.T = last.T;
  est.lambda_minus = last.lambda_minus;
  est.lambda_plus = last.lambda_plus;
  est.lambda_hat = 0.5 * (last.lambda_minus + last.lambda_plus);
  est.empirical_width = last.lambda_plus - last.lambda_minus;
  est.sampling_slack = last.slack;
  est.certified_halfwidth = C2 / last.T;
  est.tau_cut = last.tau_cut;
  est.halfwidth = std::min(0.5 * est.empirical_width + last.slack, est.certified_halfwidth);
  if (opts.keep_log) est.log = std::move(log);
  if (opts.keep_final_chain) {
    if (opts.integrator == Integrator::euler) {
      est.final_chain = std::move(chain);
    } else {
      throw ValidationError("keep_final_chain is only available for the Euler integrator");
    }
  }
  return est;
}

double effective_hamiltonian(const ForceModel& model, Slope p, double L, const RotationOptions& opts) {
  return rotation_number(model, p, L, opts).lambda_hat;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  pool.clear();  // joins
  if (first_error) std::rethrow_exception(first_error);
}

SweepDiagnostics sweep_diagnostics(const EffectiveTable& t) {
  SweepDiagnostics d;
  const std::size_t nL = t.L_grid.size(), np = t.p_grid.size();
  for (std::size_t iL = 0; iL < nL; ++iL) {
    for (std::size_t ip = 0; ip < np; ++ip) {
      if (!t.at(iL, ip).error.empty()) ++d.failures;
    }
  }
  for (std::size_t ip = 0; ip < np; ++ip) {
    for (std::size_t iL = 0; iL + 1 < nL; ++iL) {
      const auto& a = t.at(iL, ip);
      const auto& b = t.at(iL + 1, ip);
      if (!a.error.empty() || !b.error.empty()) continue;
      const double drop = std::max(0.0, a.lambda - b.lambda);
      d.max_downward_jump_L = std::max(d.max_downward_jump_L, drop);
      d.max_excess_jump_L = std::max(d.max_excess_jump_L, drop - 2.0 * (a.halfwidth + b.halfwidth));
    }
  }
  d.monotone_in_L = d.max_excess_jump_L <= 0.0;
  for (std::size_t iL = 0; iL < nL; ++iL) {
    for (std::size_t ip = 0; ip + 1 < np; ++ip) {
      const auto& a = t.at(iL, ip);
      const auto& b = t.at(iL, ip + 1);
      if (!a.error.empty() || !b.error.empty()) continue;
      const double dp = t.p_grid[ip + 1].value() - t.p_grid[ip].value();
      if (dp != 0.0) d.max_p_slope = std::max(d.max_p_slope, std::abs(b.lambda - a.lambda) / std::abs(dp));
    }
  }
  return d;
}

EffectiveTable sweep(const ForceModel& model, const std::vector<Slope>& p_grid, const std::vector<double>& L_grid,
                     const RotationOptions& opts, int threads) {
  if (p_grid.empty() || L_grid.empty()) throw ValidationError("sweep grids must be nonempty");
  for (std::size_t k = 0; k + 1 < p_grid.size(); ++k) {
    if (!(p_grid[k + 1].value() > p_grid[k].value())) throw ValidationError("p_grid must be strictly increasing");
  }
  EffectiveTable t;
  t.p_grid = p_grid;
  t.L_grid = L_grid;
  const std::size_t np = p_grid.size();
  t.entries.assign(L_grid.size(), std::vector<TableEntry>(np));
  parallel_for(L_grid.size() * np, threads, [&](std::size_t idx) {
    const std::size_t iL = idx / np, ip = idx % np;
    auto& e = t.entries[iL][ip];
    RotationOptions o = opts;
    o.seed = opts.seed + idx;
    o.keep_log = false;
    o.keep_final_chain = false;
    try {
      const auto est = rotation_number(model, p_grid[ip], L_grid[iL], o);
      e.lambda = est.lambda_hat;
      e.halfwidth = est.halfwidth;
      e.certified_halfwidth = est.certified_halfwidth;
      e.lambda_minus = est.lambda_minus;
      e.lambda_plus = est.lambda_plus;
      e.C2 = est.ledger.C2;
      e.C4 = est.ledger.C4;
      e.T = est.T;
      e.converged = est.converged;
    } catch (const std::exception& ex) {
      e.error = ex.what();
      e.lambda = std::numeric_limits<double>::quiet_NaN();
    }
  });
  t.diagnostics = sweep_diagnostics(t);
  return t;
}

namespace {

bool is_moving(const RotationEstimate& e, double tol) {
  return e.lambda_hat > std::max(10.0 * tol, e.empirical_width);
}

}  // namespace

DepinningBracket depinning_threshold(const ForceModel& model, Slope p, double L_lo, double L_hi,
                                     const RotationOptions& opts, int iterations) {
  if (!(L_hi > L_lo)) throw ValidationError("depinning bracket needs L_lo < L_hi");
  DepinningBracket b;
  auto moving = [&](double L) {
    ++b.evaluations;
    return is_moving(rotation_number(model, p, L, opts), opts.tol);
  };
  if (moving(L_lo)) throw ValidationError(fmt::format("L_lo = {} is not pinned", L_lo));
  if (!moving(L_hi)) throw ValidationError(fmt::format("L_hi = {} is not moving", L_hi));
  b.pinned_L = L_lo;
  b.moving_L = L_hi;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (b.pinned_L + b.moving_L);
    if (moving(mid)) {
      b.moving_L = mid;
    } else {
      b.pinned_L = mid;
    }
  }
  return b;
}

}  // namespace fkhom
