#pragma once

// Set-valued mappings as structural combinators: graph-polyhedral, indicator,
// constant, product, smooth-plus, and normal-cone mappings, plus the
// positively homogeneous piecewise maps their derivatives live in.
//
// Sets carried by indicator/constant nodes are either polyhedral or
// polynomial-equation manifolds {x : h(x) = 0}. Manifold-backed mappings have
// no global polyhedral graph; all their analysis routes through pointwise
// cone data, which stays polyhedral.

#include "vreg/polyhedra.hpp"
#include "vreg/smoothmaps.hpp"

#include <functional>
#include <memory>
#include <variant>

namespace vreg {

struct ManifoldSet {
    PolyMap h;  // defining equations, full-rank Jacobian where queried
};

class ClosedSet {
  public:
    static ClosedSet polyhedral(PolyhedralSet s);
    static ClosedSet manifold(PolyMap h);

    int dim() const { return dim_; }
    bool is_polyhedral() const { return std::holds_alternative<PolyhedralSet>(v_); }
    const PolyhedralSet& poly() const;
    const ManifoldSet& mani() const;

    bool contains(const Vec& x, double tol = default_tols().membership) const;
    /// Bouligand tangent cone; manifold route requires full-rank h'(x).
    PolyhedralCone tangent_cone_at(const Vec& x, const Tols& tols = default_tols()) const;
    /// Limiting normal cone; manifold route gives rge nabla h(x).
    PolyhedralCone normal_cone_at(const Vec& x, const Tols& tols = default_tols()) const;
    /// Nearest point (exact for polyhedral, Gauss-Newton for manifolds).
    std::optional<Vec> project(const Vec& x) const;

  private:
    int dim_ = 0;
    std::variant<PolyhedralSet, ManifoldSet> v_;
};

// ---------------------------------------------------------------------------
// structured mappings
// ---------------------------------------------------------------------------

class StructuredMapping;
using SMPtr = std::shared_ptr<const StructuredMapping>;

struct SmGraph {
    PolyhedralSet graph;  // over (u, y)
};
struct SmIndicator {
    ClosedSet domain;
};
struct SmConstant {
    ClosedSet value;
};
struct SmProduct {
    SMPtr r, t;
};
struct SmSmoothPlus {
    PolyMap f;
    SMPtr c;
};
struct SmNormalConeMap {
    PolyhedralSet domain_set;  // convex polyhedral C0 (one piece)
    PolyhedralSet graph;       // face-enumerated gph N_{C0}
};

class StructuredMapping {
  public:
    using Node = std::variant<SmGraph, SmIndicator, SmConstant, SmProduct, SmSmoothPlus,
                              SmNormalConeMap>;

    /// Default: the empty mapping R^1 => R^1 (placeholder for containers).
    StructuredMapping() : StructuredMapping(1, 1, SmGraph{PolyhedralSet(2)}) {}

    static StructuredMapping graph_polyhedral(int in_dim, int out_dim, PolyhedralSet graph);
    /// Delta_Omega: {0} on Omega, empty outside.
    static StructuredMapping indicator(ClosedSet omega, int out_dim);
    static StructuredMapping constant(int in_dim, ClosedSet value);
    static StructuredMapping product(StructuredMapping r, StructuredMapping t);
    static StructuredMapping smooth_plus(PolyMap f, StructuredMapping c);
    /// x -> N_{C0}(x) for convex polyhedral C0; graph built by face enumeration.
    static StructuredMapping normal_cone_map(const PolyhedralSet& c0,
                                             const Tols& tols = default_tols());

    int in_dim() const { return in_; }
    int out_dim() const { return out_; }
    const Node& node() const { return *node_; }

    /// Affine smooth parts and polyhedral sets all the way down?
    bool has_polyhedral_graph() const;
    PolyhedralSet graph() const;  // throws NotPolyhedral
    bool on_graph(const Vec& u, const Vec& y, double tol = default_tols().membership) const;
    /// The (always polyhedral) value S(x).
    PolyhedralSet value_at(const Vec& x) const;
    /// Nearest graph point, used by numeric samplers; exact on polyhedral
    /// graphs, local descent otherwise (hint = starting guess).
    std::optional<Vec> project_graph(const Vec& point, const Vec& hint) const;

  private:
    StructuredMapping(int in, int out, Node n);
    int in_ = 0, out_ = 0;
    std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// positively homogeneous piecewise maps
// ---------------------------------------------------------------------------

struct HomogeneousPiecewiseMap {
    int arg_dim = 0, val_dim = 0;
    PolyhedralSet graph;  // over (z, eta); every piece a cone

    HomogeneousPiecewiseMap() = default;
    HomogeneousPiecewiseMap(int arg, int val, PolyhedralSet g);

    PolyhedralSet value_at(const Vec& z) const;
    double dist_to_value(const Vec& z, const Vec& target) const;
    PolyhedralCone domain() const;
    PolyhedralCone kernel() const;  // {z : 0 in K(z)}
    HomogeneousPiecewiseMap inverse() const;

    struct RangeResult {
        PolyhedralCone range;
        bool kernel_trivial;  // inverse-kernel condition that grants closedness structurally
    };
    RangeResult range() const;
};

/// Graph slice {eta : (z, eta) in graph} for a general (z, eta) set.
PolyhedralSet graph_slice(const PolyhedralSet& graph, const Vec& z, int val_dim);

// ---------------------------------------------------------------------------
// outer semicontinuity probe (evidence only, never a certificate)
// ---------------------------------------------------------------------------

struct OscProbeResult {
    bool counterexample_found = false;
    Vec xi, z, eta_limit;
    double violation = 0.0;  // distance of the limit from the limiting value
};

/// Samples sequences (xi_k, z_k, eta_k) with eta_k in K_{xi_k}(z_k) along
/// shrinking xi-perturbations and checks limit membership in K_{xi_bar}.
OscProbeResult outer_semicontinuity_probe(
    const std::function<PolyhedralSet(const Vec&)>& family_graph, const Vec& xi_bar, int val_dim,
    int num_directions = 64, const std::vector<double>& taus = {1e-1, 1e-2, 1e-3, 1e-4},
    unsigned seed = 20240501u, double probe_tol = 1e-4);

}  // namespace vreg
