#pragma once

#include "srb/system.hpp"

namespace srb {

/// Solid-torus solenoid: doubling (or warped doubling) on the angle crossed
/// with a contracting fiber shifted around the unit circle.
///   f(theta, z) = (g(theta) mod 1, lambda_c z + (cos 2pi theta, sin 2pi theta)/2)
/// with g(theta) = 2 theta for the plain variant and
/// g(theta) = 2 theta + (a / 2pi) sin(2 pi theta) for the warped one.
SystemSpec make_solenoid(double lambda_c = 0.25, double warp = 0.0);

/// Hyperbolic toral automorphism [[2,1],[1,1]] crossed with z -> c z, which
/// turns the torus into an attractor with basin.
SystemSpec make_fat_cat(double c = 0.2);

/// Time-T map of a 16-mode spectral truncation of the scalar reaction-
/// diffusion equation u_t = u_xx + lambda u - u^3 with Dirichlet data on
/// (0, pi), integrated with fixed-step RK4.
SystemSpec make_galerkin_rd(int modes = 16, double lambda = 12.0, double horizon = 0.5,
                            double dt = 1e-3);

/// Splitting field aligned with coordinate axes: first `du` axes unstable,
/// the rest center-stable.  For skew products over an expanding base this is
/// the field whose one-step rates match the diagonal blocks.
SplittingField axis_splitting(int dim, int du);

/// The invariant splitting field of a system that has one registered.
SplittingField analytic_splitting(const SystemSpec& sys);

}  // namespace srb
