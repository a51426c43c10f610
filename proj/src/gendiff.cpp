#include "vreg/gendiff.hpp"

namespace vreg {
namespace {

void require_on_graph(const StructuredMapping& s, const Vec& u, const Vec& y, double tol) {
    if (!s.on_graph(u, y, std::max(tol, 1e-7)))
        throw BasepointOffGraph("derivative query basepoint");
}

// shear the value slot: (z, v) -> (z, M z + v)
PolyhedralSet shear_value(const PolyhedralSet& g, int arg, int val, const Mat& M) {
    Mat T = Mat::Identity(arg + val, arg + val);
    T.block(arg, 0, val, arg) = -M;
    PolyhedralSet out(arg + val);
    for (const auto& p : g.pieces) out.append(substitute_affine(p, T, Vec::Zero(arg + val)));
    return out;
}

PolyhedralSet permute_product_blocks(const PolyhedralSet& prod, int a1, int b1, int a2, int b2) {
    // input coordinates (x1, y1, x2, y2) with sizes (a1, b1, a2, b2);
    // output (x1, x2, y1, y2)
    std::vector<int> perm(static_cast<size_t>(a1 + b1 + a2 + b2));
    for (int i = 0; i < a1; ++i) perm[static_cast<size_t>(i)] = i;
    for (int i = 0; i < b1; ++i) perm[static_cast<size_t>(a1 + i)] = a1 + a2 + i;
    for (int i = 0; i < a2; ++i) perm[static_cast<size_t>(a1 + b1 + i)] = a1 + i;
    for (int i = 0; i < b2; ++i) perm[static_cast<size_t>(a1 + b1 + a2 + i)] = a1 + a2 + b1 + i;
    Mat P = Mat::Zero(prod.dim, prod.dim);
    for (int i = 0; i < prod.dim; ++i) P(i, perm[static_cast<size_t>(i)]) = 1.0;
    PolyhedralSet out(prod.dim);
    for (const auto& p : prod.pieces) out.append(substitute_affine(p, P, Vec::Zero(prod.dim)));
    return out;
}

}  // namespace

HomogeneousPiecewiseMap coderivative_from_normal_cone(const PolyhedralCone& normal_cone, int n,
                                                      int m) {
    // N lives over (p, q) in R^{n+m}; gph D* = {(z, v) : (v, -z) in N}
    PolyhedralSet g(m + n);
    for (const auto& piece : normal_cone.set.pieces) {
        ConvexPolyhedron q(m + n);
        for (const auto& c : piece.ineqs) {
            Vec a = Vec::Zero(m + n);
            a.head(m) = -c.a.tail(m);
            a.tail(n) = c.a.head(n);
            q.add_ineq(a, c.b);
        }
        for (const auto& c : piece.eqs) {
            Vec a = Vec::Zero(m + n);
            a.head(m) = -c.a.tail(m);
            a.tail(n) = c.a.head(n);
            q.add_eq(a, c.b);
        }
        g.append(std::move(q));
    }
    return HomogeneousPiecewiseMap(m, n, g.pruned());
}

HomogeneousPiecewiseMap graphical_derivative_via_graph(const StructuredMapping& s, const Vec& u,
                                                       const Vec& y, const Tols& tols) {
    require_on_graph(s, u, y, tols.membership);
    Vec uy(u.size() + y.size());
    uy << u, y;
    PolyhedralCone t = tangent_cone(s.graph(), uy, tols);
    return HomogeneousPiecewiseMap(s.in_dim(), s.out_dim(), t.set);
}

HomogeneousPiecewiseMap coderivative_via_graph(const StructuredMapping& s, const Vec& u,
                                               const Vec& y, const Tols& tols) {
    require_on_graph(s, u, y, tols.membership);
    Vec uy(u.size() + y.size());
    uy << u, y;
    PolyhedralCone nc = limiting_normal_cone(s.graph(), uy, tols);
    return coderivative_from_normal_cone(nc, s.in_dim(), s.out_dim());
}

HomogeneousPiecewiseMap graphical_derivative(const StructuredMapping& s, const Vec& u,
                                             const Vec& y, const Tols& tols) {
    require_on_graph(s, u, y, tols.membership);
    const int n = s.in_dim(), m = s.out_dim();
    return std::visit(
        [&](const auto& nd) -> HomogeneousPiecewiseMap {
            using T = std::decay_t<decltype(nd)>;
            if constexpr (std::is_same_v<T, SmGraph> || std::is_same_v<T, SmNormalConeMap>) {
                return graphical_derivative_via_graph(s, u, y, tols);
            } else if constexpr (std::is_same_v<T, SmIndicator>) {
                PolyhedralCone t = nd.domain.tangent_cone_at(u, tols);
                PolyhedralSet zero(m, {ConvexPolyhedron::single_point(Vec::Zero(m))});
                return HomogeneousPiecewiseMap(n, m, product_set(t.set, zero));
            } else if constexpr (std::is_same_v<T, SmConstant>) {
                PolyhedralCone t = nd.value.tangent_cone_at(y, tols);
                return HomogeneousPiecewiseMap(n, m,
                                               product_set(PolyhedralSet::whole_space(n), t.set));
            } else if constexpr (std::is_same_v<T, SmProduct>) {
                int k = nd.r->in_dim(), p = nd.r->out_dim();
                HomogeneousPiecewiseMap dr =
                    graphical_derivative(*nd.r, u.head(k), y.head(p), tols);
                HomogeneousPiecewiseMap dt = graphical_derivative(
                    *nd.t, u.tail(u.size() - k), y.tail(y.size() - p), tols);
                PolyhedralSet prod = product_set(dr.graph, dt.graph);
                return HomogeneousPiecewiseMap(
                    n, m, permute_product_blocks(prod, k, p, nd.t->in_dim(), nd.t->out_dim()));
            } else {
                static_assert(std::is_same_v<T, SmSmoothPlus>);
                Vec yc = y - nd.f.eval(u);
                HomogeneousPiecewiseMap dc = graphical_derivative(*nd.c, u, yc, tols);
                return HomogeneousPiecewiseMap(n, m, shear_value(dc.graph, n, m, nd.f.jac(u)));
            }
        },
        s.node());
}

HomogeneousPiecewiseMap coderivative(const StructuredMapping& s, const Vec& u, const Vec& y,
                                     const Tols& tols) {
    require_on_graph(s, u, y, tols.membership);
    const int n = s.in_dim(), m = s.out_dim();
    return std::visit(
        [&](const auto& nd) -> HomogeneousPiecewiseMap {
            using T = std::decay_t<decltype(nd)>;
            if constexpr (std::is_same_v<T, SmGraph> || std::is_same_v<T, SmNormalConeMap>) {
                return coderivative_via_graph(s, u, y, tols);
            } else if constexpr (std::is_same_v<T, SmIndicator>) {
                // D*Delta_Omega(u|0)(z) = N_Omega(u) for every z
                PolyhedralCone nc = nd.domain.normal_cone_at(u, tols);
                return HomogeneousPiecewiseMap(m, n,
                                               product_set(PolyhedralSet::whole_space(m), nc.set));
            } else if constexpr (std::is_same_v<T, SmConstant>) {
                // D*M(u|y)(z) = {0} gated by -z in N_{C1}(y)
                PolyhedralCone nc = nd.value.normal_cone_at(y, tols);
                PolyhedralSet gate = negate_set(nc.set);
                PolyhedralSet zero(n, {ConvexPolyhedron::single_point(Vec::Zero(n))});
                return HomogeneousPiecewiseMap(m, n, product_set(gate, zero));
            } else if constexpr (std::is_same_v<T, SmProduct>) {
                int k = nd.r->in_dim(), p = nd.r->out_dim();
                HomogeneousPiecewiseMap cr = coderivative(*nd.r, u.head(k), y.head(p), tols);
                HomogeneousPiecewiseMap ct =
                    coderivative(*nd.t, u.tail(u.size() - k), y.tail(y.size() - p), tols);
                PolyhedralSet prod = product_set(cr.graph, ct.graph);
                return HomogeneousPiecewiseMap(
                    m, n, permute_product_blocks(prod, p, k, nd.t->out_dim(), nd.t->in_dim()));
            } else {
                static_assert(std::is_same_v<T, SmSmoothPlus>);
                Vec yc = y - nd.f.eval(u);
                HomogeneousPiecewiseMap cc = coderivative(*nd.c, u, yc, tols);
                return HomogeneousPiecewiseMap(m, n, shear_value(cc.graph, m, n, nd.f.nabla(u)));
            }
        },
        s.node());
}

PolyhedralCone coderivative_kernel(const HomogeneousPiecewiseMap& k) { return k.kernel(); }

}  // namespace vreg
