#include "fkhom/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "fkhom/error.hpp"

namespace fkhom {

namespace {

constexpr double kExactTol = 1e-12;

int mod_type(int j, int n) {
  const int r = j % n;
  return r < 0 ? r + n : r;
}

int div_type(int j, int n) { return (j - mod_type(j, n)) / n; }

struct Node {
  double z;
  double v;
};

// Linear interpolation through sorted nodes, lifted periodically (v(z+1) = v(z)+1).
double interp_lifted(const std::vector<Node>& nodes, double z) {
  const Node first{nodes.front().z + 1.0, nodes.front().v + 1.0};
  const Node last{nodes.back().z - 1.0, nodes.back().v - 1.0};
  const auto it = std::upper_bound(nodes.begin(), nodes.end(), z, [](double x, const Node& nd) { return x < nd.z; });
  const Node& right = it == nodes.end() ? first : *it;
  const Node& left = it == nodes.begin() ? last : *(it - 1);
  const double span = right.z - left.z;
  if (span <= 0.0) return left.v;
  const double w = (z - left.z) / span;
  return left.v + w * (right.v - left.v);
}

}  // namespace

std::vector<double> isotonic_fit(const std::vector<double>& y) {
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      const Block b = blocks.back();
      blocks.pop_back();
      blocks.back().sum += b.sum;
      blocks.back().count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean());
  return out;
}

// ---------------------------------------------------------------- HullFunction

HullFunction::HullFunction(Slope p_, double lambda_, int n, int Z, int tau_bins)
    : p(p_), lambda(lambda_), n_(n), Z_(Z), bins_(tau_bins) {
  if (n < 1 || Z < 2 || tau_bins < 1) throw ValidationError("hull needs n >= 1, Z >= 2 and at least one time bin");
  tau_dependent = tau_bins > 1;
  const auto size = static_cast<std::size_t>(n) * static_cast<std::size_t>(Z) * static_cast<std::size_t>(tau_bins);
  h_.assign(size, 0.0);
  g_.assign(size, 0.0);
}

HullFunction HullFunction::identity(Slope p, double lambda, int n, int Z) {
  HullFunction hf(p, lambda, n, Z);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < Z; ++k) hf.h(j, k) = hf.g(j, k) = hf.z(k);
  }
  return hf;
}

std::size_t HullFunction::index(int j, int k, int bin) const {
  return (static_cast<std::size_t>(bin) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j)) *
             static_cast<std::size_t>(Z_) +
         static_cast<std::size_t>(k);
}

double HullFunction::eval(const std::vector<double>& v, int j, double z, int bin) const {
  const int t = mod_type(j, n_);
  const double zz = z + static_cast<double>(div_type(j, n_)) * p.value();
  const double B = std::floor(zz);
  const double pos = (zz - B) * Z_;
  int k = static_cast<int>(pos);
  if (k >= Z_) k = Z_ - 1;
  const double w = pos - k;
  const double v0 = v[index(t, k, bin)];
  const double v1 = k + 1 < Z_ ? v[index(t, k + 1, bin)] : v[index(t, 0, bin)] + 1.0;
  return B + v0 + w * (v1 - v0);
}

double HullFunction::eval_h(int j, double z, int bin) const { return eval(h_, j, z, bin); }
double HullFunction::eval_g(int j, double z, int bin) const { return eval(g_, j, z, bin); }

int HullFunction::bin_of(double tau) const {
  if (bins_ == 1) return 0;
  const double f = tau - std::floor(tau);
  return std::min(bins_ - 1, static_cast<int>(f * bins_));
}

double HullFunction::cell_value_step() const {
  double step = 0.0;
  for (int b = 0; b < bins_; ++b) {
    for (int j = 0; j < n_; ++j) {
      for (int k = 0; k < Z_; ++k) {
        const double hn = k + 1 < Z_ ? h(j, k + 1, b) : h(j, 0, b) + 1.0;
        const double gn = k + 1 < Z_ ? g(j, k + 1, b) : g(j, 0, b) + 1.0;
        step = std::max({step, hn - h(j, k, b), gn - g(j, k, b)});
      }
    }
  }
  return step;
}

// ---------------------------------------------------------------- extraction

HullFunction extract_hull(const TrajectoryLog& log, double lambda, double halfwidth, Slope p, const ForceModel& model,
                          const HullOptions& opts) {
  if (log.snapshots.empty()) throw ValidationError("hull extraction needs full snapshots in the log");
  if (!(log.p == p)) throw ValidationError("log slope differs from the requested hull slope");
  if (opts.Z < 2) throw ValidationError("hull grid needs Z >= 2");
  const int n = log.n;
  const int bins = opts.tau_bins > 0 ? opts.tau_bins : (model.autonomous() ? 1 : 8);
  const double window = log.snapshots.back().tau - log.snapshots.front().tau;
  if (halfwidth * window > 1.0 / opts.Z) {
    throw ValidationError(fmt::format("rotation number not converged enough: halfwidth {:.3g} over a window of {:.3g} "
                                      "smears the phase by more than one cell 1/{}",
                                      halfwidth, window, opts.Z));
  }

  HullFunction hull(p, lambda, n, opts.Z, bins);
  hull.tau_ref = 0.0;  // absolute time keeps h - id bounded

  struct Sample {
    double z, h, g;
  };
  // [bin][type] -> samples in (snapshot, y) order
  std::vector<std::vector<std::vector<Sample>>> pool(static_cast<std::size_t>(bins),
                                                     std::vector<std::vector<Sample>>(static_cast<std::size_t>(n)));
  const std::int64_t q = p.q(), r = p.r();
  for (const auto& snap : log.snapshots) {
    const int bin = hull.bin_of(snap.tau);
    const double shift = lambda * (snap.tau - hull.tau_ref);
    const auto N = static_cast<std::int64_t>(snap.U.size());
    for (std::int64_t i = 0; i < N; ++i) {
      const std::int64_t y = i / n;
      const auto j = static_cast<std::size_t>(i % n);
      const std::int64_t A = (q * y) / r;  // p y = A + a / r exactly
      const std::int64_t a = (q * y) % r;
      const double s = static_cast<double>(a) / static_cast<double>(r) + shift;
      const double B = std::floor(s);
      const double lift = static_cast<double>(A) + B;
      pool[static_cast<std::size_t>(bin)][j].push_back(
          {s - B, snap.U[static_cast<std::size_t>(i)] - lift, snap.Xi[static_cast<std::size_t>(i)] - lift});
    }
  }

  hull.samples_per_type = std::numeric_limits<std::size_t>::max();
  hull.distinct_phases = std::numeric_limits<std::size_t>::max();
  for (int b = 0; b < bins; ++b) {
    for (int j = 0; j < n; ++j) {
      auto& S = pool[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
      if (S.size() < static_cast<std::size_t>(opts.Z)) {
        throw ValidationError(fmt::format("type {} (time bin {}) has {} phase samples, need at least Z = {}; "
                                          "record about {} snapshots",
                                          j, b, S.size(), opts.Z,
                                          (opts.Z * bins + log.N / n - 1) / std::max(1, log.N / n)));
      }
      // Stable on z only: the order of ties is the same for every type.
      std::stable_sort(S.begin(), S.end(), [](const Sample& x, const Sample& y) { return x.z < y.z; });
      std::vector<double> hv(S.size()), gv(S.size());
      for (std::size_t s = 0; s < S.size(); ++s) hv[s] = S[s].h, gv[s] = S[s].g;
      const auto hf = isotonic_fit(hv);
      const auto gf = isotonic_fit(gv);
      std::vector<Node> hn(S.size()), gn(S.size());
      std::size_t distinct = 0;
      for (std::size_t s = 0; s < S.size(); ++s) {
        hull.isotonic_residual = std::max({hull.isotonic_residual, std::abs(hv[s] - hf[s]), std::abs(gv[s] - gf[s])});
        hn[s] = {S[s].z, hf[s]};
        gn[s] = {S[s].z, gf[s]};
        if (s == 0 || S[s].z - S[s - 1].z > kExactTol) ++distinct;
      }
      hull.samples_per_type = std::min(hull.samples_per_type, S.size());
      hull.distinct_phases = std::min(hull.distinct_phases, distinct);
      for (int k = 0; k < opts.Z; ++k) {
        hull.h(j, k, b) = interp_lifted(hn, hull.z(k));
        hull.g(j, k, b) = interp_lifted(gn, hull.z(k));
      }
    }
  }
  return hull;
}

// ---------------------------------------------------------------- checks

HullResidual hull_residual(const HullFunction& hull, const ForceModel& model) {
  if (hull.tau_dependent) throw ValidationError("hull residuals are defined for stationary hulls only");
  const int n = hull.n(), Z = hull.Z(), m = model.m;
  const double lam = hull.lambda, a0 = model.alpha0;
  std::vector<double> window(static_cast<std::size_t>(2 * m + 1));
  HullResidual r;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < Z; ++k) {
      const double z = hull.z(k);
      double dh, dg;
      if (lam >= 0.0) {
        dh = (hull.h(j, k) - (k > 0 ? hull.h(j, k - 1) : hull.h(j, Z - 1) - 1.0)) * Z;
        dg = (hull.g(j, k) - (k > 0 ? hull.g(j, k - 1) : hull.g(j, Z - 1) - 1.0)) * Z;
      } else {
        dh = ((k + 1 < Z ? hull.h(j, k + 1) : hull.h(j, 0) + 1.0) - hull.h(j, k)) * Z;
        dg = ((k + 1 < Z ? hull.g(j, k + 1) : hull.g(j, 0) + 1.0) - hull.g(j, k)) * Z;
      }
      for (int l = -m; l <= m; ++l) window[static_cast<std::size_t>(l + m)] = hull.eval_h(j + l, z);
      const double F = eval_force(model, j, 0.0, window);
      const double h = hull.h(j, k), g = hull.g(j, k);
      r.r_h = std::max(r.r_h, std::abs(lam * dh - a0 * (g - h)));
      r.r_g = std::max(r.r_g, std::abs(lam * dg - 2.0 * F - a0 * (h - g)));
    }
  }
  return r;
}

HullAxiomReport verify_hull_axioms(const HullFunction& hull, const ConstantsLedger& ledger) {
  HullAxiomReport rep;
  rep.displacement_bound = ledger.hull_bound();
  const int n = hull.n(), Z = hull.Z();
  for (int b = 0; b < hull.tau_bins(); ++b) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < Z; ++k) {
        const double z = hull.z(k);
        const double h = hull.h(j, k, b), g = hull.g(j, k, b);
        rep.wrap_error = std::max({rep.wrap_error, std::abs(hull.eval_h(j, z + 1.0, b) - hull.eval_h(j, z, b) - 1.0),
                                   std::abs(hull.eval_g(j, z + 1.0, b) - hull.eval_g(j, z, b) - 1.0)});
        rep.shift_error = std::max({rep.shift_error,
                                    std::abs(hull.eval_h(j + n, z, b) - hull.eval_h(j, z + hull.p.value(), b)),
                                    std::abs(hull.eval_g(j + n, z, b) - hull.eval_g(j, z + hull.p.value(), b))});
        const double hn = k + 1 < Z ? hull.h(j, k + 1, b) : hull.h(j, 0, b) + 1.0;
        const double gn = k + 1 < Z ? hull.g(j, k + 1, b) : hull.g(j, 0, b) + 1.0;
        const double drop = std::max(h - hn, g - gn);
        if (drop > rep.monotone_violation) {
          rep.monotone_violation = drop;
          rep.monotone_witness = std::pair{j, k};
        }
        rep.ordering_violation = std::max({rep.ordering_violation, hull.eval_h(j, z, b) - hull.eval_h(j + 1, z, b),
                                           hull.eval_g(j, z, b) - hull.eval_g(j + 1, z, b)});
        rep.displacement = std::max({rep.displacement, std::abs(h - z), std::abs(g - z)});
        rep.gap = std::max(rep.gap, std::abs(g - h));
      }
    }
  }
  rep.ok = rep.wrap_error <= 1e-9 && rep.shift_error <= kExactTol && rep.monotone_violation <= kExactTol &&
           rep.ordering_violation <= kExactTol && rep.displacement <= rep.displacement_bound;
  return rep;
}

std::pair<double, double> reconstruct_traveling_wave(const HullFunction& hull, double tau, double y, int j) {
  const double z = hull.p.value() * y + hull.lambda * (tau - hull.tau_ref);
  const int bin = hull.bin_of(tau);
  return {hull.eval_h(j, z, bin), hull.eval_g(j, z, bin)};
}

HullRun hull_from_model(const ForceModel& model, Slope p, double L_extra, const HullRunOptions& opts) {
  RotationOptions ro = opts.rotation;
  ro.keep_final_chain = true;
  ro.keep_log = false;
  ro.snapshot_every = 0;
  auto est = rotation_number(model, p, L_extra, ro);
  TwistedChain chain = std::move(*est.final_chain);
  est.final_chain.reset();

  RunOptions run_opts;
  run_opts.dt = est.dt;
  run_opts.sample_dt = ro.sample_dt > 0.0 ? ro.sample_dt : std::max(est.dt, 0.05);
  run_opts.snapshot_every = std::max<std::size_t>(1, opts.snapshot_every);
  double W = opts.window;
  if (!(W > 0.0)) {
    const double hw = std::max(est.halfwidth, 1e-300);
    W = std::clamp(1.0 / (2.0 * opts.hull.Z * hw), 2.0, 50.0);
  }
  W = run_opts.sample_dt * std::max(1.0, std::floor(W / run_opts.sample_dt));

  HullRun out{std::move(est), {}, {}, chain};
  out.log = run(chain, W, run_opts);
  out.hull = extract_hull(out.log, out.rotation.lambda_hat, out.rotation.halfwidth, p, chain.model(), opts.hull);
  out.chain = std::move(chain);
  return out;
}

}  // namespace fkhom
