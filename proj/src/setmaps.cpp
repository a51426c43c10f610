#include "vreg/setmaps.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace vreg {

// ---------------------------------------------------------------------------
// ClosedSet
// ---------------------------------------------------------------------------

ClosedSet ClosedSet::polyhedral(PolyhedralSet s) {
    ClosedSet c;
    c.dim_ = s.dim;
    c.v_ = std::move(s);
    return c;
}

ClosedSet ClosedSet::manifold(PolyMap h) {
    ClosedSet c;
    c.dim_ = h.in_dim;
    c.v_ = ManifoldSet{std::move(h)};
    return c;
}

const PolyhedralSet& ClosedSet::poly() const {
    if (!is_polyhedral()) throw NotPolyhedral("ClosedSet::poly");
    return std::get<PolyhedralSet>(v_);
}

const ManifoldSet& ClosedSet::mani() const {
    if (is_polyhedral()) throw Error("ClosedSet::mani on polyhedral set");
    return std::get<ManifoldSet>(v_);
}

bool ClosedSet::contains(const Vec& x, double tol) const {
    if (is_polyhedral()) return poly().contains(x, tol);
    Vec hv = mani().h.eval(x);
    return hv.lpNorm<Eigen::Infinity>() <= tol * (1.0 + x.norm());
}

PolyhedralCone ClosedSet::tangent_cone_at(const Vec& x, const Tols& tols) const {
    if (is_polyhedral()) return tangent_cone(poly(), x, tols);
    if (!contains(x, 1e-7)) throw PointNotInSet("manifold tangent cone");
    Mat J = mani().h.jac(x);
    Eigen::FullPivLU<Mat> lu(J);
    lu.setThreshold(1e-9);
    if (static_cast<int>(lu.rank()) < mani().h.out_dim)
        throw NormalConeUnavailable("manifold Jacobian rank-deficient");
    return PolyhedralCone::kernel_of(J);
}

PolyhedralCone ClosedSet::normal_cone_at(const Vec& x, const Tols& tols) const {
    if (is_polyhedral()) return limiting_normal_cone(poly(), x, tols);
    if (!contains(x, 1e-7)) throw PointNotInSet("manifold normal cone");
    Mat N = mani().h.nabla(x);  // columns span the normal space under full rank
    Mat J = mani().h.jac(x);
    Eigen::FullPivLU<Mat> lu(J);
    lu.setThreshold(1e-9);
    if (static_cast<int>(lu.rank()) < mani().h.out_dim)
        throw NormalConeUnavailable("manifold Jacobian rank-deficient");
    return PolyhedralCone::subspace_spanned_by(N);
}

std::optional<Vec> ClosedSet::project(const Vec& x) const {
    if (is_polyhedral()) return project_onto_set(x, poly());
    // Gauss-Newton steps toward h = 0
    Vec u = x;
    for (int it = 0; it < 60; ++it) {
        Vec hv = mani().h.eval(u);
        if (hv.lpNorm<Eigen::Infinity>() < 1e-13) break;
        Mat J = mani().h.jac(u);
        Vec step = J.completeOrthogonalDecomposition().solve(hv);
        u -= step;
    }
    if (!contains(u, 1e-6)) return std::nullopt;
    return u;
}

// ---------------------------------------------------------------------------
// StructuredMapping
// ---------------------------------------------------------------------------

StructuredMapping::StructuredMapping(int in, int out, Node n)
    : in_(in), out_(out), node_(std::make_shared<Node>(std::move(n))) {}

StructuredMapping StructuredMapping::graph_polyhedral(int in_dim, int out_dim,
                                                      PolyhedralSet graph) {
    if (graph.dim != in_dim + out_dim) throw DimensionMismatch("graph_polyhedral");
    return StructuredMapping(in_dim, out_dim, SmGraph{std::move(graph)});
}

StructuredMapping StructuredMapping::indicator(ClosedSet omega, int out_dim) {
    int in = omega.dim();
    return StructuredMapping(in, out_dim, SmIndicator{std::move(omega)});
}

StructuredMapping StructuredMapping::constant(int in_dim, ClosedSet value) {
    int out = value.dim();
    return StructuredMapping(in_dim, out, SmConstant{std::move(value)});
}

StructuredMapping StructuredMapping::product(StructuredMapping r, StructuredMapping t) {
    int in = r.in_dim() + t.in_dim();
    int out = r.out_dim() + t.out_dim();
    return StructuredMapping(in, out,
                             SmProduct{std::make_shared<const StructuredMapping>(std::move(r)),
                                       std::make_shared<const StructuredMapping>(std::move(t))});
}

StructuredMapping StructuredMapping::smooth_plus(PolyMap f, StructuredMapping c) {
    if (f.in_dim != c.in_dim() || f.out_dim != c.out_dim())
        throw DimensionMismatch("smooth_plus");
    return StructuredMapping(f.in_dim, f.out_dim,
                             SmSmoothPlus{std::move(f),
                                          std::make_shared<const StructuredMapping>(std::move(c))});
}

StructuredMapping StructuredMapping::normal_cone_map(const PolyhedralSet& c0, const Tols& tols) {
    if (c0.pieces.size() != 1)
        throw NotPolyhedral("normal_cone_map requires a convex polyhedral set");
    ConvexPolyhedron base = remove_redundancy(c0.pieces[0], tols.lp);
    if (base.is_empty(tols.lp)) throw Error("normal_cone_map of empty set");
    const int d = c0.dim;
    if (base.ineqs.size() > 14) throw PatternOverflow("normal_cone_map face enumeration");
    PolyhedralSet graph(2 * d);
    const int m = static_cast<int>(base.ineqs.size());
    std::vector<int> subset;
    std::function<void(int)> rec = [&](int start) {
        {
            ConvexPolyhedron face = base;
            for (int r : subset) face.add_eq(base.ineqs[static_cast<size_t>(r)].a,
                                             base.ineqs[static_cast<size_t>(r)].b);
            if (!face.is_empty(tols.lp)) {
                std::vector<Vec> rays, lines;
                for (int r : subset) rays.push_back(base.ineqs[static_cast<size_t>(r)].a);
                for (const auto& e : base.eqs) lines.push_back(e.a);
                PolyhedralCone nc = PolyhedralCone::from_generators(d, rays, lines);
                ConvexPolyhedron piece(2 * d);
                for (const auto& c : face.ineqs) {
                    Vec a = Vec::Zero(2 * d);
                    a.head(d) = c.a;
                    piece.add_ineq(a, c.b);
                }
                for (const auto& c : face.eqs) {
                    Vec a = Vec::Zero(2 * d);
                    a.head(d) = c.a;
                    piece.add_eq(a, c.b);
                }
                for (const auto& c : nc.set.pieces[0].ineqs) {
                    Vec a = Vec::Zero(2 * d);
                    a.tail(d) = c.a;
                    piece.add_ineq(a, 0.0);
                }
                for (const auto& c : nc.set.pieces[0].eqs) {
                    Vec a = Vec::Zero(2 * d);
                    a.tail(d) = c.a;
                    piece.add_eq(a, 0.0);
                }
                graph.append(remove_redundancy(piece, tols.lp));
            }
        }
        for (int r = start; r < m; ++r) {
            subset.push_back(r);
            rec(r + 1);
            subset.pop_back();
        }
    };
    rec(0);
    return StructuredMapping(d, d, SmNormalConeMap{c0, graph.pruned(tols.lp)});
}

namespace {

// permutation piece transform: out-constraints over w given constraints over
// z with z[i] = w[perm[i]]
ConvexPolyhedron permute_coords(const ConvexPolyhedron& p, const std::vector<int>& perm) {
    Mat P = Mat::Zero(p.dim, p.dim);
    for (int i = 0; i < p.dim; ++i) P(i, perm[static_cast<size_t>(i)]) = 1.0;
    return substitute_affine(p, P, Vec::Zero(p.dim));
}

}  // namespace

bool StructuredMapping::has_polyhedral_graph() const {
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, SmGraph>) return true;
            if constexpr (std::is_same_v<T, SmIndicator>) return n.domain.is_polyhedral();
            if constexpr (std::is_same_v<T, SmConstant>) return n.value.is_polyhedral();
            if constexpr (std::is_same_v<T, SmProduct>)
                return n.r->has_polyhedral_graph() && n.t->has_polyhedral_graph();
            if constexpr (std::is_same_v<T, SmSmoothPlus>)
                return n.f.is_affine() && n.c->has_polyhedral_graph();
            if constexpr (std::is_same_v<T, SmNormalConeMap>) return true;
            return false;
        },
        node());
}

PolyhedralSet StructuredMapping::graph() const {
    const int n = in_dim(), m = out_dim();
    return std::visit(
        [&](const auto& nd) -> PolyhedralSet {
            using T = std::decay_t<decltype(nd)>;
            if constexpr (std::is_same_v<T, SmGraph>) {
                return nd.graph;
            } else if constexpr (std::is_same_v<T, SmIndicator>) {
                if (!nd.domain.is_polyhedral()) throw NotPolyhedral("indicator over manifold");
                PolyhedralSet zero(m, {ConvexPolyhedron::single_point(Vec::Zero(m))});
                return product_set(nd.domain.poly(), zero);
            } else if constexpr (std::is_same_v<T, SmConstant>) {
                if (!nd.value.is_polyhedral()) throw NotPolyhedral("constant manifold value");
                return product_set(PolyhedralSet::whole_space(n), nd.value.poly());
            } else if constexpr (std::is_same_v<T, SmProduct>) {
                PolyhedralSet gr = nd.r->graph();
                PolyhedralSet gt = nd.t->graph();
                PolyhedralSet prod = product_set(gr, gt);  // (x_r, y_r, x_t, y_t)
                int k = nd.r->in_dim(), p = nd.r->out_dim();
                int l = nd.t->in_dim(), q = nd.t->out_dim();
                // z(old) index -> w(new) index with w = (x_r, x_t, y_r, y_t)
                std::vector<int> perm(static_cast<size_t>(k + p + l + q));
                for (int i = 0; i < k; ++i) perm[static_cast<size_t>(i)] = i;
                for (int i = 0; i < p; ++i) perm[static_cast<size_t>(k + i)] = k + l + i;
                for (int i = 0; i < l; ++i) perm[static_cast<size_t>(k + p + i)] = k + i;
                for (int i = 0; i < q; ++i) perm[static_cast<size_t>(k + p + l + i)] = k + l + p + i;
                PolyhedralSet out(k + l + p + q);
                for (const auto& piece : prod.pieces) out.append(permute_coords(piece, perm));
                return out;
            } else if constexpr (std::is_same_v<T, SmSmoothPlus>) {
                if (!nd.f.is_affine()) throw NotPolyhedral("smooth part is not affine");
                auto [L, c0] = nd.f.affine_parts();
                PolyhedralSet gc = nd.c->graph();
                // (u, y') with y' = F(u) + y: substitute y = y' - L u - c0
                Mat T2 = Mat::Identity(n + m, n + m);
                T2.block(n, 0, m, n) = -L;
                Vec t = Vec::Zero(n + m);
                t.tail(m) = -c0;
                PolyhedralSet out(n + m);
                for (const auto& piece : gc.pieces) out.append(substitute_affine(piece, T2, t));
                return out;
            } else {
                static_assert(std::is_same_v<T, SmNormalConeMap>);
                return nd.graph;
            }
        },
        node());
}

bool StructuredMapping::on_graph(const Vec& u, const Vec& y, double tol) const {
    if (u.size() != in_dim() || y.size() != out_dim()) throw DimensionMismatch("on_graph");
    return std::visit(
        [&](const auto& nd) -> bool {
            using T = std::decay_t<decltype(nd)>;
            if constexpr (std::is_same_v<T, SmGraph> || std::is_same_v<T, SmNormalConeMap>) {
                Vec uy(u.size() + y.size());
                uy << u, y;
                return nd.graph.contains(uy, tol);
            } else if constexpr (std::is_same_v<T, SmIndicator>) {
                return nd.domain.contains(u, tol) && y.lpNorm<Eigen::Infinity>() <= tol;
            } else if constexpr (std::is_same_v<T, SmConstant>) {
                return nd.value.contains(y, tol);
            } else if constexpr (std::is_same_v<T, SmProduct>) {
                int k = nd.r->in_dim(), p = nd.r->out_dim();
                return nd.r->on_graph(u.head(k), y.head(p), tol) &&
                       nd.t->on_graph(u.tail(u.size() - k), y.tail(y.size() - p), tol);
            } else {
                static_assert(std::is_same_v<T, SmSmoothPlus>);
                return nd.c->on_graph(u, y - nd.f.eval(u), tol);
            }
        },
        node());
}

PolyhedralSet StructuredMapping::value_at(const Vec& x) const {
    if (x.size() != in_dim()) throw DimensionMismatch("value_at");
    const int m = out_dim();
    return std::visit(
        [&](const auto& nd) -> PolyhedralSet {
            using T = std::decay_t<decltype(nd)>;
            if constexpr (std::is_same_v<T, SmGraph>) {
                return graph_slice(nd.graph, x, m).pruned();
            } else if constexpr (std::is_same_v<T, SmIndicator>) {
                if (nd.domain.contains(x))
                    return PolyhedralSet(m, {ConvexPolyhedron::single_point(Vec::Zero(m))});
                return PolyhedralSet::empty_set(m);
            } else if constexpr (std::is_same_v<T, SmConstant>) {
                if (!nd.value.is_polyhedral()) throw NotPolyhedral("constant manifold value_at");
                return nd.value.poly();
            } else if constexpr (std::is_same_v<T, SmProduct>) {
                int k = nd.r->in_dim();
                return product_set(nd.r->value_at(x.head(k)), nd.t->value_at(x.tail(x.size() - k)));
            } else if constexpr (std::is_same_v<T, SmSmoothPlus>) {
                return translate_set(nd.c->value_at(x), nd.f.eval(x));
            } else {
                static_assert(std::is_same_v<T, SmNormalConeMap>);
                return graph_slice(nd.graph, x, m).pruned();
            }
        },
        node());
}

namespace {

// nearest point on gph C for the combinator variants that admit one directly
std::optional<Vec> graph_project_structural(const StructuredMapping& c, const Vec& w) {
    const int n = c.in_dim(), m = c.out_dim();
    Vec u = w.head(n), y = w.tail(m);
    if (c.has_polyhedral_graph()) return project_onto_set(w, c.graph());
    return std::visit(
        [&](const auto& nd) -> std::optional<Vec> {
            using T = std::decay_t<decltype(nd)>;
            if constexpr (std::is_same_v<T, SmIndicator>) {
                auto pu = nd.domain.project(u);
                if (!pu) return std::nullopt;
                Vec out(n + m);
                out << *pu, Vec::Zero(m);
                return out;
            } else if constexpr (std::is_same_v<T, SmConstant>) {
                auto py = nd.value.project(y);
                if (!py) return std::nullopt;
                Vec out(n + m);
                out << u, *py;
                return out;
            } else if constexpr (std::is_same_v<T, SmProduct>) {
                int k = nd.r->in_dim(), p = nd.r->out_dim();
                Vec wr(k + p), wt(n + m - k - p);
                wr << u.head(k), y.head(p);
                wt << u.tail(n - k), y.tail(m - p);
                auto pr = graph_project_structural(*nd.r, wr);
                auto pt = graph_project_structural(*nd.t, wt);
                if (!pr || !pt) return std::nullopt;
                Vec out(n + m);
                out << pr->head(k), pt->head(n - k), pr->tail(p), pt->tail(m - p);
                return out;
            } else {
                return std::nullopt;
            }
        },
        c.node());
}

}  // namespace

std::optional<Vec> StructuredMapping::project_graph(const Vec& point, const Vec& hint) const {
    const int n = in_dim(), m = out_dim();
    if (point.size() != n + m) throw DimensionMismatch("project_graph");
    if (has_polyhedral_graph()) return project_onto_set(point, graph());
    if (const auto* sp = std::get_if<SmSmoothPlus>(&node())) {
        // descend on phi(u,y) = |u - p_u|^2 + |F(u) + y - p_y|^2 over gph C
        const StructuredMapping& C = *sp->c;
        Vec w = hint.size() == n + m ? hint : point;
        Vec cw(n + m);
        cw << w.head(n), w.tail(m) - sp->f.eval(w.head(n));
        auto proj0 = graph_project_structural(C, cw);
        if (!proj0) return std::nullopt;
        Vec uy = *proj0;  // lives on gph C
        double step = 0.5;
        auto phi = [&](const Vec& v) {
            Vec uu = v.head(n), yy = v.tail(m);
            return (uu - point.head(n)).squaredNorm() +
                   (sp->f.eval(uu) + yy - point.tail(m)).squaredNorm();
        };
        double cur = phi(uy);
        for (int it = 0; it < 400; ++it) {
            Vec uu = uy.head(n), yy = uy.tail(m);
            Vec res = sp->f.eval(uu) + yy - point.tail(m);
            Vec gu = 2.0 * (uu - point.head(n)) + 2.0 * sp->f.jac(uu).transpose() * res;
            Vec gy = 2.0 * res;
            Vec g(n + m);
            g << gu, gy;
            if (g.norm() < 1e-13) break;
            auto cand = graph_project_structural(C, uy - step * g);
            if (!cand) break;
            double val = phi(*cand);
            if (val < cur - 1e-15) {
                uy = *cand;
                cur = val;
                step = std::min(step * 1.3, 4.0);
            } else {
                step *= 0.5;
                if (step < 1e-12) break;
            }
        }
        Vec out(n + m);
        out << uy.head(n), sp->f.eval(uy.head(n)) + uy.tail(m);
        return out;
    }
    return graph_project_structural(*this, point);
}

// ---------------------------------------------------------------------------
// HomogeneousPiecewiseMap
// ---------------------------------------------------------------------------

HomogeneousPiecewiseMap::HomogeneousPiecewiseMap(int arg, int val, PolyhedralSet g)
    : arg_dim(arg), val_dim(val), graph(std::move(g)) {
    if (graph.dim != arg + val) throw DimensionMismatch("HomogeneousPiecewiseMap");
    for (const auto& p : graph.pieces)
        if (!p.is_cone(1e-7)) throw Error("homogeneous map graph piece has nonzero offset");
}

PolyhedralSet graph_slice(const PolyhedralSet& graph, const Vec& z, int val_dim) {
    int arg = graph.dim - val_dim;
    if (z.size() != arg) throw DimensionMismatch("graph_slice");
    PolyhedralSet out(val_dim);
    for (const auto& p : graph.pieces) {
        ConvexPolyhedron q(val_dim);
        for (const auto& c : p.ineqs) q.add_ineq(c.a.tail(val_dim), c.b - c.a.head(arg).dot(z));
        for (const auto& c : p.eqs) q.add_eq(c.a.tail(val_dim), c.b - c.a.head(arg).dot(z));
        out.append(std::move(q));
    }
    return out;
}

PolyhedralSet HomogeneousPiecewiseMap::value_at(const Vec& z) const {
    return graph_slice(graph, z, val_dim);
}

double HomogeneousPiecewiseMap::dist_to_value(const Vec& z, const Vec& target) const {
    return distance_to_set(target, value_at(z));
}

PolyhedralCone HomogeneousPiecewiseMap::domain() const {
    std::vector<int> keep(static_cast<size_t>(arg_dim));
    for (int j = 0; j < arg_dim; ++j) keep[static_cast<size_t>(j)] = j;
    return PolyhedralCone(project_set(graph, keep));
}

PolyhedralCone HomogeneousPiecewiseMap::kernel() const {
    // substitute eta = 0: a_z.z + a_eta.0 <= b
    PolyhedralSet fixed(arg_dim);
    for (const auto& p : graph.pieces) {
        ConvexPolyhedron q(arg_dim);
        for (const auto& c : p.ineqs) q.add_ineq(c.a.head(arg_dim), c.b);
        for (const auto& c : p.eqs) q.add_eq(c.a.head(arg_dim), c.b);
        fixed.append(std::move(q));
    }
    return PolyhedralCone(fixed.pruned());
}

HomogeneousPiecewiseMap::RangeResult HomogeneousPiecewiseMap::range() const {
    std::vector<int> keep(static_cast<size_t>(val_dim));
    for (int j = 0; j < val_dim; ++j) keep[static_cast<size_t>(j)] = arg_dim + j;
    PolyhedralCone rge = PolyhedralCone(project_set(graph, keep));
    bool ker_trivial = cone_is_trivial(kernel());
    return {rge, ker_trivial};
}

HomogeneousPiecewiseMap HomogeneousPiecewiseMap::inverse() const {
    std::vector<int> perm(static_cast<size_t>(arg_dim + val_dim));
    // w = (eta, z), old coords z(old)[i] = w[perm[i]]
    for (int i = 0; i < arg_dim; ++i) perm[static_cast<size_t>(i)] = val_dim + i;
    for (int i = 0; i < val_dim; ++i) perm[static_cast<size_t>(arg_dim + i)] = i;
    PolyhedralSet g(arg_dim + val_dim);
    for (const auto& p : graph.pieces) g.append(permute_coords(p, perm));
    return HomogeneousPiecewiseMap(val_dim, arg_dim, std::move(g));
}

// ---------------------------------------------------------------------------
// outer semicontinuity probe
// ---------------------------------------------------------------------------

OscProbeResult outer_semicontinuity_probe(
    const std::function<PolyhedralSet(const Vec&)>& family_graph, const Vec& xi_bar, int val_dim,
    int num_directions, const std::vector<double>& taus, unsigned seed, double probe_tol) {
    OscProbeResult res;
    const PolyhedralSet base = family_graph(xi_bar);
    const int arg_dim = base.dim - val_dim;
    const int xi_dim = static_cast<int>(xi_bar.size());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    auto rand_unit = [&](int d) {
        Vec v(d);
        for (int j = 0; j < d; ++j) v[j] = nd(rng);
        double n = v.norm();
        return n > 1e-12 ? Vec(v / n) : unit_vec(d, 0);
    };

    std::vector<Vec> dirs;
    for (int k = 0; k < num_directions; ++k) dirs.push_back(rand_unit(xi_dim));
    std::vector<Vec> support_dirs;
    for (int k = 0; k < 4; ++k) support_dirs.push_back(rand_unit(val_dim));

    std::vector<double> ts = taus;
    std::sort(ts.begin(), ts.end(), std::greater<double>());

    for (const Vec& d : dirs) {
        // key: z signature and candidate index -> eta trajectory
        std::map<std::pair<std::string, int>, std::vector<std::pair<double, Vec>>> traj;
        std::map<std::string, Vec> z_of;
        for (double tau : ts) {
            Vec xi = xi_bar + tau * d;
            PolyhedralSet g = family_graph(xi);
            if (g.is_empty()) continue;
            // z candidates: generators of the domain pieces
            std::vector<int> keep(static_cast<size_t>(arg_dim));
            for (int j = 0; j < arg_dim; ++j) keep[static_cast<size_t>(j)] = j;
            PolyhedralSet dom = project_set(g, keep);
            std::vector<Vec> zs;
            for (const auto& p : dom.pieces) {
                Generators gen = enumerate_generators(p);
                for (const auto& r : gen.rays) zs.push_back(r);
                for (const auto& l : gen.lines) {
                    zs.push_back(l);
                    zs.push_back(-l);
                }
                auto ri = relative_interior_point(p);
                if (ri && ri->norm() > 1e-9) zs.push_back(*ri / ri->norm());
            }
            for (const Vec& z : zs) {
                char buf[64];
                std::string sig;
                for (int j = 0; j < arg_dim; ++j) {
                    std::snprintf(buf, sizeof buf, "%.2f,", z[j]);
                    sig += buf;
                }
                z_of[sig] = z;
                PolyhedralSet val = graph_slice(g, z, val_dim).pruned();
                if (val.is_empty()) continue;
                int ci = 0;
                auto push = [&](const Vec& eta) { traj[{sig, ci++}].push_back({tau, eta}); };
                auto mn = project_onto_set(Vec::Zero(val_dim), val);
                if (mn) push(*mn);
                for (const Vec& r : support_dirs) {
                    // support point within a box to keep the LP bounded
                    double best = -kInf;
                    Vec arg;
                    for (const auto& p : val.pieces) {
                        ConvexPolyhedron boxed = p;
                        for (int j = 0; j < val_dim; ++j) {
                            boxed.add_ineq(unit_vec(val_dim, j), 10.0);
                            boxed.add_ineq(unit_vec(val_dim, j, -1.0), 10.0);
                        }
                        LpResult lr = solve_lp_max(r, boxed.ineq_matrix(), boxed.ineq_rhs(),
                                                   boxed.eq_matrix(), boxed.eq_rhs());
                        if (lr.status == LpStatus::Optimal && lr.value > best) {
                            best = lr.value;
                            arg = lr.x;
                        }
                    }
                    if (arg.size()) push(arg);
                }
            }
        }
        for (const auto& [key, series] : traj) {
            if (series.size() < 2) continue;
            const Vec& eta_last = series.back().second;
            const Vec& eta_prev = series[series.size() - 2].second;
            if ((eta_last - eta_prev).norm() > 0.25 * (1.0 + eta_last.norm())) continue;  // not settling
            const Vec& z = z_of[key.first];
            PolyhedralSet limit_val = graph_slice(base, z, val_dim).pruned();
            if (limit_val.is_empty()) continue;  // z leaves the limiting domain; not a probe target
            double dist = distance_to_set(eta_last, limit_val);
            if (dist > probe_tol * (1.0 + eta_last.norm())) {
                res.counterexample_found = true;
                res.xi = xi_bar + ts.back() * d;
                res.z = z;
                res.eta_limit = eta_last;
                res.violation = dist;
                return res;
            }
        }
    }
    return res;
}

}  // namespace vreg
