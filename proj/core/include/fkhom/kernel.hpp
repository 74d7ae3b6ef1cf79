#pragma once

// Low-level force and Euler kernels shared by twisted rings and open
// (ghost-padded) chains.

#include <span>

#include "fkhom/model.hpp"

namespace fkhom {

/// out[k] = F_{first_type + k}(tau, ext[k .. k + 2m]); ext.size() == out.size() + 2m.
void forces_from_extended(const ForceModel& model, double tau, std::span<const double> ext, int first_type,
                          std::span<double> out);

/// U += dt alpha0 (Xi - U), Xi += dt (2F - alpha0 (Xi - U)) over F.size() entries.
void euler_update(double alpha0, double dt, std::span<const double> F, std::span<double> U, std::span<double> Xi);

}  // namespace fkhom
