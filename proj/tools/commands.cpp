#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "fkhom/error.hpp"
#include "fkhom/io.hpp"

namespace fkhom::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCacheVersion = "fkhom-cache-1";

// The only place that touches the output directory: files, the run log and the cache.
class Writer {
 public:
  Writer(fs::path root, std::ostream& err) : root_(std::move(root)), err_(err) {
    fs::create_directories(root_);
    log_.open(root_ / "fkhom.log", std::ios::app);
  }

  const fs::path& root() const { return root_; }

  void log(const std::string& line) {
    err_ << line << '\n';
    log_ << line << '\n';
    log_.flush();
  }

  fs::path write(const fs::path& rel, const std::string& bytes) {
    const fs::path target = root_ / rel;
    fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw NumericalError(fmt::format("cannot write '{}'", target.string()));
      os << bytes;
    }
    fs::rename(tmp, target);
    written_.push_back(target);
    return target;
  }

  fs::path write_json(const fs::path& rel, const json& j) { return write(rel, j.dump(2) + "\n"); }

  const std::vector<fs::path>& written() const { return written_; }

 private:
  fs::path root_;
  std::ostream& err_;
  std::ofstream log_;
  std::vector<fs::path> written_;
};

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ValidationError(fmt::format("cannot open '{}'", p.string()));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Stage results stored under out/cache/<key>/ with the key a hash of every input.
class Cache {
 public:
  explicit Cache(Writer& w) : w_(w) {}

  static std::string key(const json& inputs) {
    json k = inputs;
    k["version"] = kCacheVersion;
    return hex64(fnv1a64(k.dump()));
  }

  bool has(const std::string& stage, const std::string& key, const std::vector<std::string>& files) const {
    for (const auto& f : files) {
      if (!fs::exists(dir(key) / f)) return false;
    }
    (void)stage;
    return true;
  }

  std::string load(const std::string& key, const std::string& file) const { return read_file(dir(key) / file); }

  void store(const std::string& key, const std::string& file, const std::string& bytes) {
    w_.write(fs::path("cache") / key / file, bytes);
  }

 private:
  fs::path dir(const std::string& key) const { return w_.root() / "cache" / key; }
  Writer& w_;
};

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  int threads = 1;
  std::uint64_t seed = 0;
  std::ostream& out;
  Writer writer;
};

template <class T>
const T& need(const std::optional<T>& block, const char* name) {
  if (!block) throw ValidationError(fmt::format("config.{}: missing (required by this command)", name));
  return *block;
}

double default_K0(const Slope& p) { return std::max(p.value(), 1.0 / p.value()); }

Profile make_profile(const ProfileConfig& c) {
  if (c.kind == "file") {
    std::ifstream is(c.file);
    if (!is) throw ValidationError(fmt::format("u0 file '{}' cannot be opened", c.file.string()));
    try {
      return read_profile_csv(is);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("u0 file '{}': {}", c.file.string(), e.what()));
    }
  }
  const double s = c.slope, a = c.amplitude, k = c.wavenumber;
  if (c.kind == "linear") return Profile::from_function([s](double x) { return s * x; }, "linear");
  return Profile::from_function([s, a, k](double x) { return s * x + a * std::sin(k * x); }, "sine");
}

json profile_json(const ProfileConfig& c) {
  if (c.kind == "file") return {{"kind", "file"}, {"bytes_hash", hex64(fnv1a64(read_file(c.file)))}};
  return {{"kind", c.kind}, {"slope", c.slope}, {"amplitude", c.amplitude}, {"wavenumber", c.wavenumber}};
}

RotationOptions effham_options(const EffhamConfig& c, std::uint64_t seed) {
  RotationOptions o;
  o.tol = c.tol;
  o.T_cap = c.T_cap;
  o.T0 = c.T0;
  o.cells = c.cells;
  o.dt_safety = c.dt_safety;
  o.perturbation = c.perturbation;
  o.seed = seed;
  return o;
}

std::string table_csv(const EffectiveTable& t) {
  std::ostringstream ss;
  write_table_csv(ss, t);
  return ss.str();
}

json table_json(const Context& ctx, const EffectiveTable& t) {
  json j = table_to_json(t);
  j["model"] = ctx.cfg.model_json;
  j["seed"] = ctx.seed;
  return j;
}

void print_table_summary(std::ostream& out, const EffectiveTable& t) {
  const auto& d = t.diagnostics;
  out << fmt::format("effham: {} entries, {} failed\n", t.L_grid.size() * t.p_grid.size(), d.failures);
  out << fmt::format("effham: L-column monotonicity: {} (max downward jump {:.3e}, beyond halfwidths {:.3e})\n",
                     d.monotone_in_L ? "nondecreasing" : "VIOLATED", d.max_downward_jump_L, d.max_excess_jump_L);
  out << fmt::format("effham: max |dlambda/dp| = {:.6g}\n", d.max_p_slope);
}

int table_exit_code(const EffectiveTable& t) {
  const std::size_t total = t.L_grid.size() * t.p_grid.size();
  if (t.diagnostics.failures == 0) return kOk;
  return t.diagnostics.failures == total ? kNumerical : kPartial;
}

json effham_key_inputs(const Context& ctx) {
  return {{"stage", "effham"}, {"model", ctx.cfg.model_json}, {"effham", ctx.cfg.raw.at("effham")}, {"seed", ctx.seed}};
}

// Effective table for homogenize/converge: a CSV file or a (cached) sweep.
struct TableSource {
  EffectiveTable table;
  std::string key;
  bool from_cache = false;
};

TableSource obtain_table(Context& ctx, const std::optional<fs::path>& table_file) {
  TableSource src;
  if (table_file) {
    const std::string bytes = read_file(*table_file);
    std::istringstream is(bytes);
    try {
      src.table = read_table_csv(is);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("table file '{}': {}", table_file->string(), e.what()));
    }
    src.key = Cache::key({{"stage", "table_file"}, {"bytes", hex64(fnv1a64(bytes))}});
    return src;
  }
  const auto& c = need(ctx.cfg.effham, "effham");
  Cache cache(ctx.writer);
  src.key = Cache::key(effham_key_inputs(ctx));
  if (cache.has("effham", src.key, {"effham.csv", "effham.json"})) {
    ctx.writer.log(fmt::format("cache hit: effham {}", src.key));
    std::istringstream is(cache.load(src.key, "effham.csv"));
    src.table = read_table_csv(is);
    src.from_cache = true;
    return src;
  }
  ctx.writer.log(fmt::format("cache miss: effham {}", src.key));
  src.table = sweep(ctx.cfg.model, c.p_grid, c.L_grid, effham_options(c, ctx.seed), ctx.threads);
  cache.store(src.key, "effham.csv", table_csv(src.table));
  cache.store(src.key, "effham.json", table_json(ctx, src.table).dump(2) + "\n");
  return src;
}

std::size_t column_for(const EffectiveTable& t, double L) {
  for (std::size_t iL = 0; iL < t.L_grid.size(); ++iL) {
    if (std::abs(t.L_grid[iL] - L) <= 1e-12) return iL;
  }
  std::string avail;
  for (double v : t.L_grid) avail += (avail.empty() ? "" : ", ") + fmt_double(v);
  throw ValidationError(fmt::format("drive L = {} is not in the table L grid [{}]", L, avail));
}

// ------------------------------------------------------------------ commands

int cmd_check(Context& ctx) {
  const auto rep = check_assumptions(ctx.cfg.model);
  json j{{"assumptions", to_json(rep)}, {"monotone", rep.monotone()}, {"ordering", rep.a6.holds}, {"model", ctx.cfg.model_json}};
  ctx.writer.write_json("check.json", j);
  auto line = [&](const char* name, const AssumptionCheck& a) {
    ctx.out << fmt::format("check: {} {} (margin {:.6g})", name, a.holds ? "holds" : "FAILS", a.margin);
    if (!a.holds && a.witness) {
      ctx.out << " witness [";
      for (std::size_t k = 0; k < a.witness->size(); ++k) ctx.out << (k ? ", " : "") << fmt_double((*a.witness)[k]);
      ctx.out << "]";
    }
    ctx.out << '\n';
  };
  line("a1", rep.a1);
  line("a2", rep.a2);
  line("a3", rep.a3);
  line("a4", rep.a4);
  line("a5", rep.a5);
  line("a6", rep.a6);
  ctx.out << fmt::format("check: critical mass m0^c = {:.6g}, m0 = {:.6g}\n", rep.critical_mass, ctx.cfg.model.m0());
  if (rep.monotone() && !rep.a6.holds) ctx.out << "check: a6 fails (advisory: ordering results do not apply)\n";
  return rep.monotone() ? kOk : kValidation;
}

void require_monotone(const ForceModel& model) {
  const auto rep = check_assumptions(model);
  if (!rep.monotone()) {
    throw ValidationError(fmt::format("model violates the monotonicity assumptions (a3 margin {:.6g}); run 'check'",
                                      rep.a3.margin));
  }
}

int cmd_simulate(Context& ctx) {
  const auto& c = need(ctx.cfg.simulate, "simulate");
  // Non-monotone models still run; nothing is certified for them.
  const bool certified = check_assumptions(ctx.cfg.model).monotone();
  if (!certified) ctx.writer.log("warning: model violates the monotonicity assumptions; invariants are not certified");
  auto model = std::make_shared<const ForceModel>(ctx.cfg.model.shifted(c.L));
  RotationOptions ro;
  ro.cells = c.cells;
  ro.perturbation = c.perturbation;
  ro.seed = ctx.seed;
  TwistedChain chain = rotation_initial_chain(model, c.p, ro);
  RunOptions opts;
  opts.delta = c.delta;
  opts.a0 = c.a0;
  opts.dt = c.dt.value_or(c.delta > 0.0 ? cfl_dt_delta(*model, c.p.value(), c.delta, c.a0, c.dt_safety)
                                        : cfl_dt(*model, c.dt_safety));
  if (c.delta > 0.0 && opts.dt > cfl_dt_delta(*model, c.p.value(), c.delta, c.a0, 1.0) * (1 + 1e-12)) {
    throw ValidationError("config.simulate.dt: exceeds the monotone bound of the perturbed dynamics");
  }
  opts.sample_dt = c.sample_dt;
  opts.snapshot_every = c.snapshot_every;
  const TrajectoryLog log = run(chain, c.T, opts);

  std::ostringstream snap, traj;
  write_snapshot_csv(snap, chain);
  write_trajectory_csv(traj, log);
  ctx.writer.write("snapshot.csv", snap.str());
  ctx.writer.write("trajectory.csv", traj.str());

  const auto ledger = constants_ledger(*model, c.p.value(), default_K0(c.p), 0.0, c.delta, c.a0);
  auto inv_json = [](const InvariantReport& r) {
    return json{{"ordering_violation", r.ordering_violation}, {"u_xi_gap", r.u_xi_gap},
                {"u_xi_bound", r.u_xi_bound},                 {"space_osc", r.space_osc},
                {"delta_gradient", r.delta_gradient},         {"ordering_ok", r.ordering_ok},
                {"u_xi_ok", r.u_xi_ok},                       {"space_osc_ok", r.space_osc_ok}};
  };
  const auto final_rep = monitor_invariants(chain, ledger);
  json j{{"final", inv_json(final_rep)}, {"tau", chain.tau}, {"dt", opts.dt}, {"N", chain.size()},
         {"Q", chain.twist()},         {"ledger", to_json(ledger)}, {"monotone_certified", certified}};
  if (!log.snapshots.empty()) j["snapshots"] = inv_json(monitor_invariants(log, ledger, 5.0 / model->alpha0));
  ctx.writer.write_json("invariants.json", j);
  ctx.out << fmt::format("simulate: N = {}, tau = {:.6g}, ordering violation {:.3e}, |U-Xi| {:.3e} (bound {:.3e})\n",
                         chain.size(), chain.tau, final_rep.ordering_violation, final_rep.u_xi_gap, final_rep.u_xi_bound);
  return final_rep.ordering_ok || !certified ? kOk : kNumerical;
}

int cmd_effham(Context& ctx) {
  const auto& c = need(ctx.cfg.effham, "effham");
  require_monotone(ctx.cfg.model);
  const auto table = sweep(ctx.cfg.model, c.p_grid, c.L_grid, effham_options(c, ctx.seed), ctx.threads);
  ctx.writer.write("effham.csv", table_csv(table));
  ctx.writer.write_json("effham.json", table_json(ctx, table));
  print_table_summary(ctx.out, table);
  return table_exit_code(table);
}

int cmd_hull(Context& ctx) {
  const auto& c = need(ctx.cfg.hull, "hull");
  require_monotone(ctx.cfg.model);
  HullRunOptions o;
  o.rotation.tol = c.tol;
  o.rotation.T_cap = c.T_cap;
  o.rotation.dt_safety = c.dt_safety;
  o.rotation.sample_dt = c.sample_dt;
  o.rotation.cells = c.cells;
  o.rotation.seed = ctx.seed;
  o.hull.Z = c.Z;
  if (c.snapshots > 0) o.window = c.snapshots * c.sample_dt;
  const auto run = hull_from_model(ctx.cfg.model, c.p, c.L, o);
  const auto residual = hull_residual(run.hull, ctx.cfg.model.shifted(c.L));
  const auto axioms = verify_hull_axioms(run.hull, run.rotation.ledger);
  std::ostringstream csv;
  write_hull_csv(csv, run.hull);
  ctx.writer.write("hull.csv", csv.str());
  json j = hull_header_json(run.hull, residual);
  j["axioms"] = {{"wrap_error", axioms.wrap_error},
                 {"shift_error", axioms.shift_error},
                 {"monotone_violation", axioms.monotone_violation},
                 {"ordering_violation", axioms.ordering_violation},
                 {"displacement", axioms.displacement},
                 {"displacement_bound", axioms.displacement_bound},
                 {"ok", axioms.ok}};
  j["rotation"] = rotation_to_json(run.rotation);
  j["L"] = c.L;
  ctx.writer.write_json("hull.json", j);
  ctx.out << fmt::format("hull: lambda = {:.10g}, Z = {}, r_h = {:.3e}, r_g = {:.3e}, axioms {}\n", run.hull.lambda,
                         run.hull.Z(), residual.r_h, residual.r_g, axioms.ok ? "ok" : "VIOLATED");
  return axioms.ok ? kOk : kNumerical;
}

HomogenizeConfig homogenize_or_default(const Context& ctx) {
  if (ctx.cfg.homogenize) return *ctx.cfg.homogenize;
  HomogenizeConfig h;
  if (ctx.cfg.converge) {
    h.L = ctx.cfg.converge->L;
    if (ctx.cfg.converge->u0) h.u0 = *ctx.cfg.converge->u0;
  }
  return h;
}

struct HomogenizeResult {
  std::string macro_csv, u0_csv;
  json summary;
};

HomogenizeResult compute_homogenize(const HomogenizeConfig& c, const EffectiveTable& table) {
  const auto H = HamiltonianInterp::from_table(table, column_for(table, c.L));
  const Profile u0 = make_profile(c.u0);
  HJOptions ho;
  ho.record_count = c.record_count;
  const auto s = solve_hj(H, u0, c.x_lo, c.x_hi, c.dx, c.T, ho);
  HomogenizeResult r;
  std::ostringstream mc, uc;
  write_macro_csv(mc, s);
  std::vector<double> u_init = s.history.front();
  write_profile_csv(uc, s.x, u_init);
  r.macro_csv = mc.str();
  r.u0_csv = uc.str();
  r.summary = {{"T", c.T},           {"dx", s.dx},           {"dt", s.dt},
               {"nu", s.nu},         {"nodes", s.x.size()},  {"min_slope", s.min_slope},
               {"max_slope", s.max_slope}, {"slope_exit", s.slope_exit}, {"extrapolated", s.extrapolated},
               {"L", c.L}};
  return r;
}

void report_homogenize(Context& ctx, const json& summary) {
  ctx.out << fmt::format("homogenize: {} nodes to T = {}, slopes in [{:.6g}, {:.6g}]\n",
                         summary.at("nodes").get<std::size_t>(), summary.at("T").get<double>(),
                         summary.at("min_slope").get<double>(), summary.at("max_slope").get<double>());
  if (summary.at("slope_exit").get<bool>()) ctx.out << "homogenize: FLAG slopes left the initial gradient bounds\n";
  if (summary.at("extrapolated").get<bool>()) ctx.out << "homogenize: FLAG slopes left the table p range\n";
}

int cmd_homogenize(Context& ctx) {
  const auto c = need(ctx.cfg.homogenize, "homogenize");
  const auto src = obtain_table(ctx, c.table_file);
  const auto r = compute_homogenize(c, src.table);
  ctx.writer.write("macro.csv", r.macro_csv);
  ctx.writer.write("u0.csv", r.u0_csv);
  ctx.writer.write_json("homogenize.json", r.summary);
  report_homogenize(ctx, r.summary);
  return kOk;
}

ProfileConfig converge_profile(const Context& ctx) {
  const auto& c = *ctx.cfg.converge;
  if (c.u0) return *c.u0;
  if (ctx.cfg.homogenize) return ctx.cfg.homogenize->u0;
  return {};
}

json compute_converge(Context& ctx, const EffectiveTable& table) {
  const auto& c = *ctx.cfg.converge;
  require_monotone(ctx.cfg.model);
  const auto H = HamiltonianInterp::from_table(table, column_for(table, c.L));
  ConvergenceOptions o;
  o.dt_safety = c.dt_safety;
  o.record_count = c.record_count;
  o.threads = ctx.threads;
  const auto rep = convergence_study(ctx.cfg.model, c.L, make_profile(converge_profile(ctx)), c.eps_list, c.T, c.x_lo,
                                     c.x_hi, H, o);
  json j = convergence_to_json(rep);
  bool decreasing = true;
  for (std::size_t k = 1; k < rep.errors.size(); ++k) decreasing = decreasing && rep.errors[k] < rep.errors[k - 1];
  j["strictly_decreasing"] = decreasing;
  j["L"] = c.L;
  return j;
}

void report_converge(Context& ctx, const json& j) {
  ctx.out << "converge: eps, sup error, rate\n";
  const auto& eps = j.at("eps");
  const auto& err = j.at("error");
  const auto& rate = j.at("rate");
  for (std::size_t k = 0; k < eps.size(); ++k) {
    ctx.out << fmt::format("converge: {:.6g}, {:.6e}, {}\n", eps[k].get<double>(), err[k].get<double>(),
                           k == 0 || rate[k - 1].is_null() ? std::string("-")
                                                           : fmt::format("{:.3f}", rate[k - 1].get<double>()));
  }
  ctx.out << fmt::format("converge: errors {} (HJ floor {:.3e})\n",
                         j.at("strictly_decreasing").get<bool>() ? "strictly decreasing" : "NOT decreasing",
                         j.at("hj_floor").get<double>());
}

int cmd_converge(Context& ctx) {
  need(ctx.cfg.converge, "converge");
  std::optional<fs::path> tf;
  if (ctx.cfg.homogenize) tf = ctx.cfg.homogenize->table_file;
  const auto src = obtain_table(ctx, tf);
  const json j = compute_converge(ctx, src.table);
  ctx.writer.write_json("converge.json", j);
  report_converge(ctx, j);
  return kOk;
}

int cmd_pipeline(Context& ctx) {
  need(ctx.cfg.effham, "effham");
  need(ctx.cfg.converge, "converge");
  Cache cache(ctx.writer);
  json summary{{"stages", json::array()}};
  std::string stage = "check";
  int code = kOk;
  auto record = [&](const std::string& name, const std::string& key, bool hit, std::vector<std::string> files) {
    summary["stages"].push_back({{"stage", name}, {"key", key}, {"cache_hit", hit}, {"artifacts", files}});
  };
  try {
    if (cmd_check(ctx) != kOk) throw ValidationError("assumptions a1-a5 do not hold");
    record("check", "", false, {"check.json"});

    stage = "effham";
    const auto src = obtain_table(ctx, std::nullopt);
    ctx.writer.write("effham.csv", cache.load(src.key, "effham.csv"));
    ctx.writer.write("effham.json", cache.load(src.key, "effham.json"));
    record("effham", src.key, src.from_cache, {"effham.csv", "effham.json"});
    print_table_summary(ctx.out, src.table);
    code = table_exit_code(src.table);
    if (code == kNumerical) throw NumericalError("every table entry failed");

    stage = "homogenize";
    const auto hc = homogenize_or_default(ctx);
    const std::string hkey = Cache::key({{"stage", "homogenize"},
                                         {"table", src.key},
                                         {"u0", profile_json(hc.u0)},
                                         {"T", hc.T},
                                         {"dx", hc.dx},
                                         {"x", {hc.x_lo, hc.x_hi}},
                                         {"L", hc.L},
                                         {"record_count", hc.record_count}});
    const bool hhit = cache.has("homogenize", hkey, {"macro.csv", "u0.csv", "homogenize.json"});
    if (hhit) {
      ctx.writer.log(fmt::format("cache hit: homogenize {}", hkey));
    } else {
      ctx.writer.log(fmt::format("cache miss: homogenize {}", hkey));
      const auto r = compute_homogenize(hc, src.table);
      cache.store(hkey, "macro.csv", r.macro_csv);
      cache.store(hkey, "u0.csv", r.u0_csv);
      cache.store(hkey, "homogenize.json", r.summary.dump(2) + "\n");
    }
    for (const char* f : {"macro.csv", "u0.csv", "homogenize.json"}) ctx.writer.write(f, cache.load(hkey, f));
    report_homogenize(ctx, json::parse(cache.load(hkey, "homogenize.json")));
    record("homogenize", hkey, hhit, {"macro.csv", "u0.csv", "homogenize.json"});

    stage = "converge";
    const std::string ckey = Cache::key({{"stage", "converge"},
                                         {"table", src.key},
                                         {"model", ctx.cfg.model_json},
                                         {"converge", ctx.cfg.raw.at("converge")},
                                         {"u0", profile_json(converge_profile(ctx))}});
    const bool chit = cache.has("converge", ckey, {"converge.json"});
    if (chit) {
      ctx.writer.log(fmt::format("cache hit: converge {}", ckey));
    } else {
      ctx.writer.log(fmt::format("cache miss: converge {}", ckey));
      cache.store(ckey, "converge.json", compute_converge(ctx, src.table).dump(2) + "\n");
    }
    const std::string conv = cache.load(ckey, "converge.json");
    ctx.writer.write("converge.json", conv);
    report_converge(ctx, json::parse(conv));
    record("converge", ckey, chit, {"converge.json"});
  } catch (const std::exception& e) {
    std::string paths;
    for (const auto& p : ctx.writer.written()) paths += "\n  " + p.string();
    ctx.writer.log(fmt::format("pipeline: stage '{}' failed: {}\npipeline: artifacts written:{}", stage, e.what(),
                               paths.empty() ? " none" : paths));
    throw;
  }
  ctx.writer.write_json("pipeline.json", summary);
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Homogenization toolkit for generalized Frenkel-Kontorova chains", "fkhom"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (default: config out_dir or ./fkhom_out)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  app.add_option("--seed", seed, "random seed, overrides the config seed");

  using Handler = int (*)(Context&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands{
      {"check", "verify the structural assumptions", cmd_check},
      {"simulate", "integrate one twisted chain", cmd_simulate},
      {"effham", "tabulate the effective Hamiltonian", cmd_effham},
      {"hull", "extract a hull function", cmd_hull},
      {"homogenize", "solve the homogenized equation", cmd_homogenize},
      {"converge", "micro versus macro convergence study", cmd_converge},
      {"pipeline", "check, effham, homogenize and converge with caching", cmd_pipeline},
  };
  std::map<CLI::App*, Handler> handlers;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    handlers[sub] = fn;
  }

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    RunConfig cfg = load_config(config_path);
    fs::path dir = !out_dir.empty() ? fs::path(out_dir) : cfg.out_dir.value_or("fkhom_out");
    const std::uint64_t s = seed.value_or(cfg.seed);
    Context ctx{std::move(cfg), dir, threads, s, out, Writer(dir, err)};
    for (auto* sub : app.get_subcommands()) return handlers.at(sub)(ctx);
    return kValidation;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace fkhom::cli
