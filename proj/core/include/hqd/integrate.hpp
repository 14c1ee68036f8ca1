// integrate.hpp — fixed-step RK4 and adaptive RKF45 on flat complex vectors.
// Every propagation module flattens its state into one Vector and uses this.

#pragma once

#include <functional>
#include <vector>

#include "hqd/types.hpp"

namespace hqd {

enum class Method { RK4, RKF45 };

// dy must be preallocated to y.size(); rhs writes the derivative into it.
using Rhs = std::function<void(double t, const Vector& y, Vector& dy)>;

// Called once per grid point, including the initial one.
using Observer = std::function<void(int index, double t, const Vector& y)>;

// Propagates y0 over the grid and invokes the observer at every grid point.
// RK4 takes exactly one step per grid interval. RKF45 substeps adaptively so
// that each local error estimate stays below tol, landing exactly on grid
// nodes. Throws StepUnderflow when the adaptive step collapses below
// 1e-14 * (t1 - t0) and NonFiniteState when NaN/Inf appears.
void integrate_observe(const Rhs& rhs, const Vector& y0, const TimeGrid& grid, Method method,
                       double tol, const Observer& observe);

// Convenience wrapper returning the state at every grid point.
std::vector<Vector> integrate(const Rhs& rhs, const Vector& y0, const TimeGrid& grid,
                              Method method = Method::RK4, double tol = 1e-9);

} // namespace hqd
