#pragma once

// Generalized differentiation for structured mappings: graphical derivatives
// (tangent cones to graphs) and coderivatives (limiting normal cones with the
// sign flip), made computable through the structural sum/product/indicator/
// constant rules. When both a structural rule and the graph route apply, the
// structural rule is authoritative and the graph route serves as a test
// oracle.

#include "vreg/setmaps.hpp"

namespace vreg {

/// DS(u|y): argument w in input space, values in output space.
HomogeneousPiecewiseMap graphical_derivative(const StructuredMapping& s, const Vec& u,
                                             const Vec& y, const Tols& tols = default_tols());

/// D*S(u|y): argument z in output space, values in input space.
HomogeneousPiecewiseMap coderivative(const StructuredMapping& s, const Vec& u, const Vec& y,
                                     const Tols& tols = default_tols());

/// Graph-route references; require a polyhedral graph.
HomogeneousPiecewiseMap graphical_derivative_via_graph(const StructuredMapping& s, const Vec& u,
                                                       const Vec& y,
                                                       const Tols& tols = default_tols());
HomogeneousPiecewiseMap coderivative_via_graph(const StructuredMapping& s, const Vec& u,
                                               const Vec& y, const Tols& tols = default_tols());

/// {z : 0 in K(z)} for a coderivative (or any homogeneous piecewise map).
PolyhedralCone coderivative_kernel(const HomogeneousPiecewiseMap& k);

/// Coderivative graph from a normal cone to a mapping graph: (v,-z) in N.
HomogeneousPiecewiseMap coderivative_from_normal_cone(const PolyhedralCone& normal_cone, int n,
                                                      int m);

}  // namespace vreg
