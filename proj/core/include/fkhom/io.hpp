#pragma once

// Plain-text formats. Numbers are written with 17 significant digits so that
// files round-trip and identical runs give identical bytes.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "fkhom/chain.hpp"
#include "fkhom/hull.hpp"
#include "fkhom/macro.hpp"
#include "fkhom/rotation.hpp"

namespace fkhom {

std::string fmt_double(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

void write_snapshot_csv(std::ostream& os, const TwistedChain& chain);      // i,U,Xi
void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log);     // tau,j,U_j,Xi_j

void write_table_csv(std::ostream& os, const EffectiveTable& table);       // L,p,lambda,halfwidth,converged
EffectiveTable read_table_csv(std::istream& is);
nlohmann::json table_to_json(const EffectiveTable& table);

void write_hull_csv(std::ostream& os, const HullFunction& hull);           // j,z,h,g
nlohmann::json hull_header_json(const HullFunction& hull, const HullResidual& residual);

void write_macro_csv(std::ostream& os, const MacroState& state);           // t,x,u
void write_profile_csv(std::ostream& os, const std::vector<double>& x, const std::vector<double>& u);  // x,u0
Profile read_profile_csv(std::istream& is);

nlohmann::json convergence_to_json(const ConvergenceReport& report);      // {eps, error, rate, ...}
nlohmann::json rotation_to_json(const RotationEstimate& est);

}  // namespace fkhom
