#pragma once

// Built-in desk fixtures: the small worked instances exercised by the test
// corpus and the CLI. Each fixture is constructed programmatically so tests,
// the acceptance suite, and the corpus runner share one definition.

#include "vreg/lsv.hpp"
#include "vreg/setmaps.hpp"

namespace vreg::fixtures {

PolyhedralSet halfline_nonneg();  // R_+ in R^1
PolyhedralSet halfline_nonpos();  // R_- in R^1

/// Scalar LSV fixture with a pinned-parameter two-point family: A == (1,0),
/// Gamma(0, {0} x R_-) = {0, -1}, empty elsewhere.
LsvInstance lsv_two_point_family();

/// Zero-matrix fixture with a rotating-ray cone family (cone-valued, outer
/// semicontinuous, no calmness constant).
LsvInstance lsv_rotating_ray_family();

/// Degenerate scalar fixture A(xi) = (xi, xi^2), Gamma(xi, R x {0}) = {-xi}:
/// the parameter stays singular along the whole ray.
LsvInstance lsv_degenerate_scalar_family();

/// S(u) = u^2 as a smooth-plus mapping over the whole line.
StructuredMapping square_mapping();
PolyMap square_f();
StructuredMapping whole_line_indicator(int n = 1);

/// F(u) = u plus the indicator of R_+ (scalar boundary fixture).
StructuredMapping halfline_shift_mapping();
PolyMap identity_f(int n = 1);
StructuredMapping indicator_rplus();

/// Three-variable fixture over the parabola manifold {u : u2 + u3^2 = 0}:
/// F(u) = (u1^2 + u2 + u3^2, u1), C0 = h^{-1}(0).
PolyMap curved_f();
ClosedSet curved_manifold();
StructuredMapping curved_mapping();  // F + indicator of the manifold
/// The on-graph curve t -> (u(t), F(u(t))) with u(t) = (0, -t^2, t).
std::function<std::pair<Vec, Vec>(double)> curved_mapping_curve();

/// The lifted variant: G(u) = (-u, F(u)) plus the constant set
/// gph Delta_{C0} = C0 x {0,0} (a manifold in R^5).
PolyMap lifted_g();
ClosedSet lifted_constant_set();
StructuredMapping lifted_mapping();

StructuredMapping identity_mapping(int n = 1);

}  // namespace vreg::fixtures

#include "vreg/systems.hpp"

namespace vreg::fixtures {

/// Complementarity stationarity system with strict complementarity at the
/// origin: f(x) = x, g(x) = x, M = 1, C0 = R_+, solution (0, 0, 0).
VariationalSystem kkt_strict();
/// Degenerate variant with f == 0: every nonnegative multiplier direction
/// solves the criterion.
VariationalSystem kkt_degenerate();

/// One-dimensional coupled constraint system Phi(x, sigma) = x - sigma,
/// Omega = R, T the shifted normal-cone mapping of R_+ at the origin.
ConstraintSystem cs_scalar_fixture();

}  // namespace vreg::fixtures
