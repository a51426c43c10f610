#pragma once

// Exact finite-dimensional polyhedral geometry: convex polyhedra in
// H-representation, finite unions, cones, tangent/normal/limiting normal
// cones, polars, Fourier-Motzkin images and projections, and the LP/QP
// decision kernels behind them.

#include "vreg/common.hpp"
#include "vreg/lp.hpp"

namespace vreg {

/// One linear condition a.x <= b (inequality rows) or a.x == b (equality rows).
struct LinCon {
    Vec a;
    double b = 0.0;
};

struct ConvexPolyhedron {
    int dim = 0;
    std::vector<LinCon> ineqs;
    std::vector<LinCon> eqs;

    ConvexPolyhedron() = default;
    explicit ConvexPolyhedron(int d) : dim(d) {}

    static ConvexPolyhedron whole_space(int d) { return ConvexPolyhedron(d); }
    static ConvexPolyhedron single_point(const Vec& x);

    void add_ineq(const Vec& a, double b);
    void add_eq(const Vec& a, double b);

    bool contains(const Vec& x, double tol = default_tols().membership) const;
    bool is_empty(double tol = default_tols().lp) const;
    /// Indices of inequality rows active at x: |a.x - b| <= tol*(1+|b|).
    std::vector<int> active_ineqs(const Vec& x, double tol = default_tols().membership) const;

    Mat ineq_matrix() const;
    Vec ineq_rhs() const;
    Mat eq_matrix() const;
    Vec eq_rhs() const;

    bool is_cone(double tol = default_tols().membership) const;  // all offsets ~ 0

  private:
    mutable int empty_cache_ = -1;
};

struct PolyhedralSet {
    int dim = 0;
    std::vector<ConvexPolyhedron> pieces;

    PolyhedralSet() = default;
    explicit PolyhedralSet(int d) : dim(d) {}
    PolyhedralSet(int d, std::vector<ConvexPolyhedron> ps) : dim(d), pieces(std::move(ps)) {}

    static PolyhedralSet empty_set(int d) { return PolyhedralSet(d); }
    static PolyhedralSet whole_space(int d) {
        return PolyhedralSet(d, {ConvexPolyhedron::whole_space(d)});
    }

    bool contains(const Vec& x, double tol = default_tols().membership) const;
    bool is_empty(double tol = default_tols().lp) const;
    void append(ConvexPolyhedron p);
    /// Drop empty pieces and pieces contained in another piece.
    PolyhedralSet pruned(double tol = default_tols().lp) const;
};

/// A PolyhedralSet whose every piece is a cone (zero offsets). Nonzero offsets
/// on construction are an error, not a warning.
struct PolyhedralCone {
    PolyhedralSet set;

    PolyhedralCone() = default;
    explicit PolyhedralCone(PolyhedralSet s, double tol = default_tols().membership);

    static PolyhedralCone trivial(int d);
    static PolyhedralCone whole_space(int d);
    static PolyhedralCone from_piece(ConvexPolyhedron p);
    /// {R lambda + L mu : lambda >= 0}; H-representation via elimination.
    static PolyhedralCone from_generators(int d, const std::vector<Vec>& rays,
                                          const std::vector<Vec>& lines);
    /// Column space of M as an H-representation subspace.
    static PolyhedralCone subspace_spanned_by(const Mat& M, double tol = 1e-10);
    /// {x : M x = 0}.
    static PolyhedralCone kernel_of(const Mat& M);

    int dim() const { return set.dim; }
    bool contains(const Vec& x, double tol = default_tols().membership) const {
        return set.contains(x, tol);
    }
};

// ---------------------------------------------------------------------------
// piece-level tools
// ---------------------------------------------------------------------------

/// Drop redundant rows (zero rows, duplicates, LP-redundant inequalities,
/// dependent equalities). Returns a single empty-marked piece when infeasible.
ConvexPolyhedron remove_redundancy(const ConvexPolyhedron& p, double tol = default_tols().lp);

/// Substitute x = T y + t into the constraints of p; result lives in y-space.
ConvexPolyhedron substitute_affine(const ConvexPolyhedron& p, const Mat& T, const Vec& t);

/// Fourier-Motzkin projection of p onto the listed coordinates (kept in order).
ConvexPolyhedron project_piece(const ConvexPolyhedron& p, const std::vector<int>& keep,
                               double tol = default_tols().lp);

/// Affine dimension of a nonempty piece (-1 when empty).
int affine_dimension(const ConvexPolyhedron& p, double tol = default_tols().lp);

/// A point with all non-implicit inequality rows strictly slack (relative
/// interior point); nullopt when empty.
std::optional<Vec> relative_interior_point(const ConvexPolyhedron& p,
                                           double tol = default_tols().lp);

struct Generators {
    std::vector<Vec> vertices;
    std::vector<Vec> rays;
    std::vector<Vec> lines;
};

/// Vertex/ray/line enumeration by basis subsets; desk-scale dimensions only.
Generators enumerate_generators(const ConvexPolyhedron& p, double tol = default_tols().lp);

/// Exact Euclidean projection of x onto p via KKT active-set enumeration.
std::optional<Vec> project_onto_piece(const Vec& x, const ConvexPolyhedron& p,
                                      double tol = default_tols().lp);

// ---------------------------------------------------------------------------
// set-level operations
// ---------------------------------------------------------------------------

double distance_to_set(const Vec& x, const PolyhedralSet& s);
std::optional<Vec> project_onto_set(const Vec& x, const PolyhedralSet& s);

PolyhedralSet linear_image(const PolyhedralSet& s, const Mat& M);
PolyhedralSet linear_preimage(const PolyhedralSet& s, const Mat& M);
PolyhedralSet minkowski_sum(const PolyhedralSet& a, const PolyhedralSet& b);
PolyhedralSet intersect(const PolyhedralSet& a, const PolyhedralSet& b);
PolyhedralSet project_set(const PolyhedralSet& s, const std::vector<int>& keep);
PolyhedralSet product_set(const PolyhedralSet& a, const PolyhedralSet& b);
PolyhedralSet negate_set(const PolyhedralSet& s);
PolyhedralSet scale_set(const PolyhedralSet& s, double gamma);
PolyhedralSet translate_set(const PolyhedralSet& s, const Vec& t);

PolyhedralCone linear_image(const PolyhedralCone& c, const Mat& M);
PolyhedralCone linear_preimage(const PolyhedralCone& c, const Mat& M);
PolyhedralCone minkowski_sum(const PolyhedralCone& a, const PolyhedralCone& b);
PolyhedralCone intersect(const PolyhedralCone& a, const PolyhedralCone& b);
PolyhedralCone project_cone(const PolyhedralCone& c, const std::vector<int>& keep);
PolyhedralCone product_cone(const PolyhedralCone& a, const PolyhedralCone& b);
PolyhedralCone negate_cone(const PolyhedralCone& c);

/// Is the union of pieces a subset of {0}? Per piece, per coordinate, per sign:
/// LP-decide feasibility of {x in piece : s*x_j = 1}.
bool cone_is_trivial(const PolyhedralCone& c, double tol = default_tols().lp);
/// Witness for non-triviality (a nonzero member), if any.
std::optional<Vec> cone_nonzero_point(const PolyhedralCone& c, double tol = default_tols().lp);
/// General sets: coordinate max/min probes (tolerance semantics).
std::optional<Vec> set_nonzero_point(const PolyhedralSet& s, double tol = default_tols().lp);

/// B subset of A (union-in-union). Exact recursive region subtraction with a
/// sampling fallback; *exact reports which route decided.
bool subset_of(const PolyhedralSet& inner, const PolyhedralSet& outer,
               double tol = default_tols().set_eq, bool* exact = nullptr);
bool sets_equal(const PolyhedralSet& a, const PolyhedralSet& b,
                double tol = default_tols().set_eq, bool* exact = nullptr);

/// Closed conic hull of a polyhedral set (generator route).
PolyhedralCone closed_conic_hull(const PolyhedralSet& s, double tol = default_tols().lp);

// ---------------------------------------------------------------------------
// cones of sets
// ---------------------------------------------------------------------------

PolyhedralCone tangent_cone(const PolyhedralSet& s, const Vec& x,
                            const Tols& tols = default_tols());
PolyhedralCone normal_cone_convex(const ConvexPolyhedron& p, const Vec& x,
                                  const Tols& tols = default_tols());
PolyhedralCone polar(const PolyhedralCone& c, double tol = default_tols().lp);

/// Tangent cones at x of the pieces containing x (the local conic model of s-x).
std::vector<ConvexPolyhedron> local_cone_pieces(const PolyhedralSet& s, const Vec& x,
                                                const Tols& tols = default_tols());

/// One realizable activity pattern of a union of cones: the (relatively open)
/// cell it describes, a strict realizer, and the polar of the union's tangent
/// cone at that realizer.
struct LocalCell {
    ConvexPolyhedron closure;
    Vec sample;
    PolyhedralCone tangent_polar;
};

/// Enumerate all realizable activity patterns of a union of cones containing 0.
/// Explored-pattern count above max_patterns raises PatternOverflow.
std::vector<LocalCell> enumerate_local_cells(const std::vector<ConvexPolyhedron>& cones,
                                             const Tols& tols = default_tols());

PolyhedralCone limiting_normal_cone_of_union(const std::vector<ConvexPolyhedron>& cones,
                                             const Vec& x, const Tols& tols = default_tols());
PolyhedralCone limiting_normal_cone(const PolyhedralSet& s, const Vec& x,
                                    const Tols& tols = default_tols());

}  // namespace vreg
