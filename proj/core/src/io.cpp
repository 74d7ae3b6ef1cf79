#include "fkhom/io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fkhom/error.hpp"

namespace fkhom {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& s, std::size_t row, const char* col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("row {}: column '{}' is not a number: '{}'", row, col, s));
  }
}

void expect_header(std::istream& is, const std::vector<std::string>& want) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("empty CSV input");
  if (split_csv(line) != want) {
    std::string joined;
    for (const auto& w : want) joined += (joined.empty() ? "" : ",") + w;
    throw ValidationError(fmt::format("CSV header '{}' does not match expected '{}'", line, joined));
  }
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

void write_snapshot_csv(std::ostream& os, const TwistedChain& c) {
  os << "i,U,Xi\n";
  for (std::size_t i = 0; i < c.U.size(); ++i) os << i << ',' << fmt_double(c.U[i]) << ',' << fmt_double(c.Xi[i]) << '\n';
}

void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log) {
  os << "tau,j,U_j,Xi_j\n";
  for (std::size_t k = 0; k < log.samples(); ++k) {
    const std::string t = fmt_double(log.time(k));
    for (int j = 0; j < log.n; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      os << t << ',' << j << ',' << fmt_double(log.U[jj][k]) << ',' << fmt_double(log.Xi[jj][k]) << '\n';
    }
  }
}

void write_table_csv(std::ostream& os, const EffectiveTable& t) {
  os << "L,p,lambda,halfwidth,converged\n";
  for (std::size_t iL = 0; iL < t.L_grid.size(); ++iL) {
    for (std::size_t ip = 0; ip < t.p_grid.size(); ++ip) {
      const auto& e = t.at(iL, ip);
      os << fmt_double(t.L_grid[iL]) << ',' << t.p_grid[ip].str() << ',' << fmt_double(e.lambda) << ','
         << fmt_double(e.halfwidth) << ',' << (e.error.empty() ? (e.converged ? 1 : 0) : -1) << '\n';
    }
  }
}

EffectiveTable read_table_csv(std::istream& is) {
  expect_header(is, {"L", "p", "lambda", "halfwidth", "converged"});
  struct Row {
    double L;
    Slope p;
    TableEntry e;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto c = split_csv(line);
    if (c.size() != 5) throw ValidationError(fmt::format("row {}: expected 5 columns, got {}", row, c.size()));
    Row r{parse_double(c[0], row, "L"), Slope::parse(c[1]), {}};
    r.e.lambda = parse_double(c[2], row, "lambda");
    r.e.halfwidth = parse_double(c[3], row, "halfwidth");
    const double conv = parse_double(c[4], row, "converged");
    r.e.converged = conv > 0.0;
    if (conv < 0.0 || !std::isfinite(r.e.lambda)) r.e.error = "failed entry";
    rows.push_back(r);
  }
  if (rows.empty()) throw ValidationError("effective table has no rows");
  EffectiveTable t;
  std::map<double, std::size_t> Ls;
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> ps;
  auto slope_key = [](const Slope& s) { return std::pair{s.q(), s.r()}; };
  for (const auto& r : rows) {
    Ls.emplace(r.L, 0);
    ps.emplace(slope_key(r.p), 0);
  }
  for (auto& [L, idx] : Ls) {
    idx = t.L_grid.size();
    t.L_grid.push_back(L);
  }
  std::vector<std::pair<double, Slope>> pv;
  for (const auto& r : rows) pv.emplace_back(r.p.value(), r.p);
  std::sort(pv.begin(), pv.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [v, s] : pv) {
    auto& idx = ps[slope_key(s)];
    if (t.p_grid.empty() || !(t.p_grid.back() == s)) {
      idx = t.p_grid.size();
      t.p_grid.push_back(s);
    }
  }
  t.entries.assign(t.L_grid.size(), std::vector<TableEntry>(t.p_grid.size()));
  std::vector<std::vector<bool>> seen(t.L_grid.size(), std::vector<bool>(t.p_grid.size(), false));
  for (const auto& r : rows) {
    const auto iL = Ls.at(r.L), ip = ps.at(slope_key(r.p));
    if (seen[iL][ip]) throw ValidationError(fmt::format("duplicate table entry L={}, p={}", r.L, r.p.str()));
    seen[iL][ip] = true;
    t.entries[iL][ip] = r.e;
  }
  for (std::size_t iL = 0; iL < seen.size(); ++iL) {
    for (std::size_t ip = 0; ip < seen[iL].size(); ++ip) {
      if (!seen[iL][ip]) {
        throw ValidationError(fmt::format("table is missing entry L={}, p={}", t.L_grid[iL], t.p_grid[ip].str()));
      }
    }
  }
  t.diagnostics = sweep_diagnostics(t);
  return t;
}

nlohmann::json table_to_json(const EffectiveTable& t) {
  nlohmann::json j;
  j["L_grid"] = t.L_grid;
  std::vector<std::string> p;
  for (const auto& s : t.p_grid) p.push_back(s.str());
  j["p_grid"] = p;
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t iL = 0; iL < t.L_grid.size(); ++iL) {
    for (std::size_t ip = 0; ip < t.p_grid.size(); ++ip) {
      const auto& e = t.at(iL, ip);
      nlohmann::json row{{"L", t.L_grid[iL]},
                         {"p", t.p_grid[ip].str()},
                         {"lambda", finite_or_null(e.lambda)},
                         {"lambda_minus", e.lambda_minus},
                         {"lambda_plus", e.lambda_plus},
                         {"halfwidth", e.halfwidth},
                         {"certified_halfwidth", e.certified_halfwidth},
                         {"T", e.T},
                         {"converged", e.converged},
                         {"ledger", {{"C2", e.C2}, {"C4", e.C4}}}};
      if (!e.error.empty()) row["error"] = e.error;
      entries.push_back(std::move(row));
    }
  }
  j["entries"] = std::move(entries);
  const auto& d = t.diagnostics;
  j["diagnostics"] = {{"max_downward_jump_L", d.max_downward_jump_L},
                      {"max_excess_jump_L", d.max_excess_jump_L},
                      {"max_p_slope", d.max_p_slope},
                      {"monotone_in_L", d.monotone_in_L},
                      {"failures", d.failures}};
  return j;
}

void write_hull_csv(std::ostream& os, const HullFunction& h) {
  os << "j,z,h,g\n";  // time bins follow one another for tau-dependent hulls
  for (int b = 0; b < h.tau_bins(); ++b) {
    for (int j = 0; j < h.n(); ++j) {
      for (int k = 0; k < h.Z(); ++k) {
        os << j << ',' << fmt_double(h.z(k)) << ',' << fmt_double(h.h(j, k, b)) << ',' << fmt_double(h.g(j, k, b))
           << '\n';
      }
    }
  }
}

nlohmann::json hull_header_json(const HullFunction& h, const HullResidual& r) {
  return {{"p", h.p.str()},
          {"lambda", h.lambda},
          {"Z", h.Z()},
          {"n", h.n()},
          {"tau_bins", h.tau_bins()},
          {"tau_ref", h.tau_ref},
          {"isotonic_residual", h.isotonic_residual},
          {"residuals", {{"r_h", r.r_h}, {"r_g", r.r_g}}}};
}

void write_macro_csv(std::ostream& os, const MacroState& s) {
  os << "t,x,u\n";
  for (std::size_t r = 0; r < s.history.size(); ++r) {
    const std::string t = fmt_double(s.times[r]);
    for (std::size_t k = 0; k < s.x.size(); ++k) os << t << ',' << fmt_double(s.x[k]) << ',' << fmt_double(s.history[r][k]) << '\n';
  }
}

void write_profile_csv(std::ostream& os, const std::vector<double>& x, const std::vector<double>& u) {
  os << "x,u0\n";
  for (std::size_t k = 0; k < x.size(); ++k) os << fmt_double(x[k]) << ',' << fmt_double(u[k]) << '\n';
}

Profile read_profile_csv(std::istream& is) {
  expect_header(is, {"x", "u0"});
  std::vector<double> x, u;
  std::string line;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto c = split_csv(line);
    if (c.size() != 2) throw ValidationError(fmt::format("row {}: expected 2 columns, got {}", row, c.size()));
    x.push_back(parse_double(c[0], row, "x"));
    u.push_back(parse_double(c[1], row, "u0"));
  }
  return Profile::from_samples(std::move(x), std::move(u));
}

nlohmann::json convergence_to_json(const ConvergenceReport& r) {
  return {{"eps", r.eps},
          {"error", r.errors},
          {"rate", r.rates},
          {"compact_set", {{"t", {r.t_lo, r.t_hi}}, {"x", {r.x_lo, r.x_hi}}}},
          {"hj_floor", r.hj_floor},
          {"hj_dx", r.hj_dx}};
}

nlohmann::json rotation_to_json(const RotationEstimate& e) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& s : e.history) {
    hist.push_back({{"T", s.T}, {"lambda_minus", s.lambda_minus}, {"lambda_plus", s.lambda_plus}, {"slack", s.slack}});
  }
  return {{"lambda_minus", e.lambda_minus},
          {"lambda_plus", e.lambda_plus},
          {"lambda_hat", e.lambda_hat},
          {"T", e.T},
          {"certified_halfwidth", e.certified_halfwidth},
          {"empirical_width", e.empirical_width},
          {"sampling_slack", e.sampling_slack},
          {"halfwidth", e.halfwidth},
          {"converged", e.converged},
          {"ledger", to_json(e.ledger)},
          {"history", hist}};
}

}  // namespace fkhom
