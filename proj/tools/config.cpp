#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "fkhom/error.hpp"

namespace fkhom::cli {

namespace {

// Typed, path-aware access to one JSON object.
class Block {
 public:
  Block(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError(fmt::format("{}{}: {}", path_, key.empty() ? "" : "." + key, what));
  }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) fail(k, "unknown field");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const nlohmann::json& raw(const std::string& key) const { return j_.at(key); }
  std::string sub(const std::string& key) const { return path_ + "." + key; }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(key, "missing");
    }
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    const double d = number(key, fallback);
    if (!(d > 0.0)) fail(key, "must be positive");
    return d;
  }

  std::int64_t integer(const std::string& key, std::int64_t lo, std::int64_t hi,
                       std::optional<std::int64_t> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(key, "missing");
    }
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
      fail(key, fmt::format("must lie in [{}, {}]", lo, hi));
    }
    const auto i = v.get<std::int64_t>();
    if (i < lo || i > hi) fail(key, fmt::format("must lie in [{}, {}]", lo, hi));
    return i;
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(key, "missing");
    }
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  Slope slope_value(const nlohmann::json& v, const std::string& where) const {
    try {
      if (v.is_string()) return Slope::parse(v.get<std::string>(), 1000);
      if (v.is_number()) {
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ValidationError("not finite");
        return Slope::parse(fmt::format("{:.17g}", d), 1000);
      }
    } catch (const ValidationError& e) {
      fail(where, std::string("invalid slope: ") + e.what());
    }
    fail(where, "expected a slope such as \"3/5\" or 0.6");
  }

  Slope slope(const std::string& key, std::optional<Slope> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(key, "missing");
    }
    return slope_value(j_.at(key), key);
  }

  std::vector<double> numbers(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    const auto& v = j_.at(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a nonempty array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number() || !std::isfinite(v[k].get<double>())) fail(fmt::format("{}[{}]", key, k), "expected a number");
      out.push_back(v[k].get<double>());
    }
    return out;
  }

  std::vector<Slope> slopes(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    const auto& v = j_.at(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a nonempty array of slopes");
    std::vector<Slope> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(slope_value(v[k], fmt::format("{}[{}]", key, k)));
    return out;
  }

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& j_;
  std::string path_;
};

void require(bool cond, const Block& b, const std::string& key, const std::string& what) {
  if (!cond) b.fail(key, what);
}

double safety(const Block& b) {
  const double s = b.positive("dt_safety", 0.5);
  require(s <= 1.0, b, "dt_safety", "must lie in (0, 1] for a monotone step");
  return s;
}

ProfileConfig parse_profile(const nlohmann::json& j, const std::string& path, const std::filesystem::path& base) {
  const Block b(j, path);
  b.allow({"kind", "slope", "amplitude", "wavenumber", "file"});
  ProfileConfig p;
  p.kind = b.string("kind", "sine");
  if (p.kind == "file") {
    p.file = b.string("file");
    if (p.file.is_relative()) p.file = base / p.file;
    return p;
  }
  if (p.kind != "linear" && p.kind != "sine") b.fail("kind", "expected \"linear\", \"sine\" or \"file\"");
  p.slope = b.positive("slope", 1.0);
  p.amplitude = p.kind == "sine" ? b.number("amplitude", 0.15) : 0.0;
  p.wavenumber = p.kind == "sine" ? b.positive("wavenumber", 1.0) : 1.0;
  require(p.slope - std::abs(p.amplitude) * p.wavenumber > 0.0, b, "amplitude",
          "profile must be increasing: need slope > |amplitude| * wavenumber");
  return p;
}

SimulateConfig parse_simulate(const Block& b, const ForceModel& model) {
  b.allow({"p", "cells", "T", "dt", "dt_safety", "sample_dt", "L", "delta", "a0", "perturbation", "snapshot_every"});
  SimulateConfig c;
  c.p = b.slope("p", Slope(1, 1));
  c.cells = static_cast<int>(b.integer("cells", 1, 100000, 4));
  require(static_cast<double>(model.n) * static_cast<double>(c.p.r()) * c.cells <= 1e6, b, "cells",
          "chain would exceed 10^6 particles");
  c.T = b.number("T", 50.0);
  require(c.T >= 0.0 && c.T <= 1e6, b, "T", "must lie in [0, 1e6]");
  if (b.has("dt")) {
    c.dt = b.positive("dt");
    require(*c.dt <= 1.0 / model.alpha0 + 1e-15, b, "dt", "exceeds the monotone bound 1/alpha0");
  }
  c.dt_safety = safety(b);
  c.sample_dt = b.positive("sample_dt", 0.05);
  c.L = b.number("L", 0.0);
  c.delta = b.number("delta", 0.0);
  require(c.delta >= 0.0 && c.delta <= 1.0, b, "delta", "must lie in [0, 1]");
  c.a0 = b.number("a0", 0.0);
  c.perturbation = b.number("perturbation", 0.0);
  require(c.perturbation >= 0.0 && c.perturbation < 0.5, b, "perturbation", "must lie in [0, 0.5)");
  c.snapshot_every = static_cast<std::size_t>(b.integer("snapshot_every", 0, 1000000000, 0));
  const double dt = c.dt.value_or(c.dt_safety / model.alpha0);
  require(c.sample_dt + 1e-12 >= dt, b, "sample_dt", "must be at least the integrator step");
  require(c.T / c.sample_dt <= 1e7, b, "sample_dt", "too many samples (T / sample_dt > 1e7)");
  return c;
}

EffhamConfig parse_effham(const Block& b) {
  b.allow({"p_grid", "L_grid", "tol", "T_cap", "T0", "cells", "dt_safety", "perturbation"});
  EffhamConfig c;
  c.p_grid = b.slopes("p_grid");
  for (std::size_t k = 0; k + 1 < c.p_grid.size(); ++k) {
    require(c.p_grid[k + 1].value() > c.p_grid[k].value(), b, "p_grid", "must be strictly increasing");
  }
  c.L_grid = b.numbers("L_grid");
  require(c.p_grid.size() * c.L_grid.size() <= 100000, b, "L_grid", "grid has more than 10^5 entries");
  c.tol = b.positive("tol", 1e-4);
  c.T0 = b.positive("T0", 4.0);
  c.T_cap = b.positive("T_cap", 1000.0);
  require(c.T_cap >= c.T0, b, "T_cap", "must be >= T0");
  require(c.T_cap <= 1e6, b, "T_cap", "must be <= 1e6");
  c.cells = static_cast<int>(b.integer("cells", 1, 10000, 1));
  c.dt_safety = safety(b);
  c.perturbation = b.number("perturbation", 0.0);
  require(c.perturbation >= 0.0 && c.perturbation < 0.5, b, "perturbation", "must lie in [0, 0.5)");
  return c;
}

HullConfig parse_hull(const Block& b) {
  b.allow({"p", "L", "Z", "snapshots", "tol", "T_cap", "dt_safety", "sample_dt", "cells"});
  HullConfig c;
  c.p = b.slope("p", Slope(1, 1));
  c.L = b.number("L", 0.0);
  c.Z = static_cast<int>(b.integer("Z", 2, 1 << 16, 64));
  c.snapshots = static_cast<int>(b.integer("snapshots", 0, 10000000, 0));
  c.tol = b.positive("tol", 1e-5);
  c.T_cap = b.positive("T_cap", 2000.0);
  require(c.T_cap <= 1e6, b, "T_cap", "must be <= 1e6");
  c.dt_safety = safety(b);
  c.sample_dt = b.positive("sample_dt", 0.01);
  c.cells = static_cast<int>(b.integer("cells", 1, 10000, 1));
  return c;
}

HomogenizeConfig parse_homogenize(const Block& b, const std::filesystem::path& base) {
  b.allow({"u0", "u0_file", "T", "dx", "x_lo", "x_hi", "L", "record_count", "table_file"});
  HomogenizeConfig c;
  if (b.has("u0") && b.has("u0_file")) b.fail("u0_file", "give either u0 or u0_file");
  if (b.has("u0_file")) {
    c.u0.kind = "file";
    c.u0.file = b.string("u0_file");
    if (c.u0.file.is_relative()) c.u0.file = base / c.u0.file;
  } else if (b.has("u0")) {
    c.u0 = parse_profile(b.raw("u0"), b.sub("u0"), base);
  }
  c.T = b.positive("T", 1.0);
  c.dx = b.positive("dx", 0.01);
  c.x_lo = b.number("x_lo", -5.0);
  c.x_hi = b.number("x_hi", 5.0);
  require(c.x_hi > c.x_lo, b, "x_hi", "must exceed x_lo");
  require((c.x_hi - c.x_lo) / c.dx <= 1e6, b, "dx", "grid would exceed 10^6 nodes");
  require((c.x_hi - c.x_lo) / c.dx >= 2.0, b, "dx", "grid needs at least three nodes");
  c.L = b.number("L", 0.0);
  c.record_count = static_cast<int>(b.integer("record_count", 1, 10000, 8));
  if (b.has("table_file")) {
    std::filesystem::path p = b.string("table_file");
    c.table_file = p.is_relative() ? base / p : p;
  }
  return c;
}

ConvergeConfig parse_converge(const Block& b, const std::filesystem::path& base) {
  b.allow({"eps_list", "window", "T", "L", "u0", "record_count", "dt_safety"});
  ConvergeConfig c;
  c.eps_list = b.numbers("eps_list");
  for (std::size_t k = 0; k < c.eps_list.size(); ++k) {
    require(c.eps_list[k] > 0.0, b, fmt::format("eps_list[{}]", k), "must be positive");
    if (k > 0) require(c.eps_list[k] < c.eps_list[k - 1], b, "eps_list", "must be strictly decreasing");
  }
  if (b.has("window")) {
    const auto w = b.numbers("window");
    require(w.size() == 2 && w[1] > w[0], b, "window", "expected [x_lo, x_hi] with x_lo < x_hi");
    c.x_lo = w[0];
    c.x_hi = w[1];
  }
  c.T = b.positive("T", 1.0);
  require(c.T <= 1e3, b, "T", "must be <= 1000");
  c.L = b.number("L", 0.0);
  if (b.has("u0")) c.u0 = parse_profile(b.raw("u0"), b.sub("u0"), base);
  c.record_count = static_cast<int>(b.integer("record_count", 2, 10000, 8));
  c.dt_safety = safety(b);
  for (std::size_t k = 0; k < c.eps_list.size(); ++k) {
    require((c.x_hi - c.x_lo) / c.eps_list[k] >= 100.0, b, fmt::format("eps_list[{}]", k),
            "window must hold at least 100 particles");
    require((c.x_hi - c.x_lo) / c.eps_list[k] <= 1e6, b, fmt::format("eps_list[{}]", k), "too small for the window");
  }
  return c;
}

}  // namespace

RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  const Block root(doc, "config");
  root.allow({"model", "seed", "out_dir", "simulate", "effham", "hull", "homogenize", "converge"});
  RunConfig c;
  c.raw = doc;
  if (!root.has("model")) root.fail("model", "missing");
  c.model_json = root.raw("model");
  c.model = model_from_json(c.model_json, "config.model");
  if (root.has("model")) {
    const Block mb(c.model_json, "config.model");
    mb.allow({"n", "m", "m0", "alpha0", "force"});
    const Block fb(c.model_json.at("force"), "config.model.force");
    fb.allow({"kind", "theta", "amplitude", "drive"});
  }
  if (root.has("seed")) c.seed = static_cast<std::uint64_t>(root.integer("seed", 0, std::numeric_limits<std::int64_t>::max()));
  if (root.has("out_dir")) c.out_dir = root.string("out_dir");
  if (root.has("simulate")) c.simulate = parse_simulate(Block(root.raw("simulate"), "config.simulate"), c.model);
  if (root.has("effham")) c.effham = parse_effham(Block(root.raw("effham"), "config.effham"));
  if (root.has("hull")) c.hull = parse_hull(Block(root.raw("hull"), "config.hull"));
  if (root.has("homogenize")) {
    c.homogenize = parse_homogenize(Block(root.raw("homogenize"), "config.homogenize"), base_dir);
  }
  if (root.has("converge")) c.converge = parse_converge(Block(root.raw("converge"), "config.converge"), base_dir);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open config file '{}'", path.string()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(fmt::format("config file '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return parse_config(doc, path.parent_path());
}

}  // namespace fkhom::cli
