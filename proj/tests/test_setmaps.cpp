#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vreg/setmaps.hpp"

using namespace vreg;

namespace {

PolyhedralSet rplus_set() {
    ConvexPolyhedron p(1);
    p.add_ineq(make_vec({-1.0}), 0.0);
    return PolyhedralSet(1, {p});
}

}  // namespace

TEST_CASE("indicator graph") {
    StructuredMapping d = StructuredMapping::indicator(ClosedSet::polyhedral(rplus_set()), 1);
    PolyhedralSet g = d.graph();
    CHECK(g.contains(make_vec({2.0, 0.0})));
    CHECK(!g.contains(make_vec({2.0, 0.5})));
    CHECK(!g.contains(make_vec({-1.0, 0.0})));
    CHECK(d.on_graph(make_vec({2.0}), make_vec({0.0})));
    CHECK(!d.on_graph(make_vec({-2.0}), make_vec({0.0})));
}

TEST_CASE("normal cone map graph") {
    StructuredMapping nmap = StructuredMapping::normal_cone_map(rplus_set());
    PolyhedralSet g = nmap.graph();
    // (R+ x {0}) u ({0} x R-)
    CHECK(g.contains(make_vec({3.0, 0.0})));
    CHECK(g.contains(make_vec({0.0, -4.0})));
    CHECK(g.contains(make_vec({0.0, 0.0})));
    CHECK(!g.contains(make_vec({1.0, -1.0})));
    CHECK(!g.contains(make_vec({0.0, 1.0})));
    CHECK(!g.contains(make_vec({-1.0, 0.0})));

    // value consistency: y in S(x) iff (x,y) in gph S
    for (double x : {0.0, 0.3}) {
        for (double y : {0.0, -0.7, 0.4}) {
            bool via_graph = g.contains(make_vec({x, y}));
            bool via_value = nmap.value_at(make_vec({x})).contains(make_vec({y}));
            CHECK(via_graph == via_value);
        }
    }
}

TEST_CASE("affine shear graph") {
    // S(u) = u + Delta_{R+}(u): gph = {(u,y): u >= 0, y = u}
    PolyMap f = PolyMap::identity(1);
    StructuredMapping d = StructuredMapping::indicator(ClosedSet::polyhedral(rplus_set()), 1);
    StructuredMapping s = StructuredMapping::smooth_plus(f, d);
    REQUIRE(s.has_polyhedral_graph());
    PolyhedralSet g = s.graph();
    CHECK(g.contains(make_vec({2.0, 2.0})));
    CHECK(!g.contains(make_vec({2.0, 1.0})));
    CHECK(!g.contains(make_vec({-1.0, -1.0})));

    // nonlinear smooth part has no global polyhedral graph
    StructuredMapping sq = StructuredMapping::smooth_plus(
        PolyMap::from_strings(1, {"x1^2"}),
        StructuredMapping::indicator(ClosedSet::polyhedral(PolyhedralSet::whole_space(1)), 1));
    CHECK(!sq.has_polyhedral_graph());
    CHECK_THROWS_AS(sq.graph(), NotPolyhedral);
    CHECK(sq.on_graph(make_vec({2.0}), make_vec({4.0})));
    CHECK(!sq.on_graph(make_vec({2.0}), make_vec({5.0})));
}

TEST_CASE("product mapping") {
    StructuredMapping r = StructuredMapping::indicator(ClosedSet::polyhedral(rplus_set()), 1);
    StructuredMapping t = StructuredMapping::normal_cone_map(rplus_set());
    StructuredMapping prod = StructuredMapping::product(r, t);
    CHECK(prod.in_dim() == 2);
    CHECK(prod.out_dim() == 2);
    // value consistency on samples
    for (double x : {0.0, 1.0}) {
        for (double u : {0.0, 2.0}) {
            PolyhedralSet v = prod.value_at(make_vec({x, u}));
            PolyhedralSet vr = r.value_at(make_vec({x}));
            PolyhedralSet vt = t.value_at(make_vec({u}));
            for (double a : {0.0, -0.5}) {
                for (double b : {0.0, -1.0}) {
                    bool lhs = v.contains(make_vec({a, b}));
                    bool rhs = vr.contains(make_vec({a})) && vt.contains(make_vec({b}));
                    CHECK(lhs == rhs);
                }
            }
            CHECK(prod.graph().contains(make_vec({x, u, 0.0, u > 0 ? 0.0 : -1.0})) ==
                  prod.on_graph(make_vec({x, u}), make_vec({0.0, u > 0 ? 0.0 : -1.0})));
        }
    }
}

TEST_CASE("manifold closed set") {
    // C0 = {u : u2 + u3^2 = 0} via h(u) = (u2 + u3^2)/2
    PolyMap h = PolyMap::from_strings(3, {"0.5*x2 + 0.5*x3^2"});
    ClosedSet c0 = ClosedSet::manifold(h);
    CHECK(c0.contains(make_vec({1.0, -4.0, 2.0})));
    CHECK(!c0.contains(make_vec({0.0, 1.0, 0.0})));

    Vec u = make_vec({0.0, -1.0, 1.0});
    PolyhedralCone tan = c0.tangent_cone_at(u);
    // T = {w : w2/2 + u3 w3 = 0}
    CHECK(tan.contains(make_vec({1.0, 0.0, 0.0})));
    CHECK(tan.contains(make_vec({0.0, -2.0, 1.0})));
    CHECK(!tan.contains(make_vec({0.0, 1.0, 0.0})));

    PolyhedralCone nor = c0.normal_cone_at(u);
    // N = span{(0, 1/2, u3)}
    CHECK(nor.contains(make_vec({0.0, 0.5, 1.0})));
    CHECK(nor.contains(make_vec({0.0, -0.5, -1.0})));
    CHECK(!nor.contains(make_vec({1.0, 0.0, 0.0})));

    auto proj = c0.project(make_vec({0.2, 0.3, 0.5}));
    REQUIRE(proj.has_value());
    CHECK(std::abs((*proj)[1] + (*proj)[2] * (*proj)[2]) < 1e-9);
}

TEST_CASE("homogeneous piecewise map") {
    // K = D*Delta_{R+}(0|0): K(z) = R_- for all z: graph {(z, eta): eta <= 0}
    ConvexPolyhedron p(2);
    p.add_ineq(make_vec({0.0, 1.0}), 0.0);
    HomogeneousPiecewiseMap k(1, 1, PolyhedralSet(2, {p}));
    PolyhedralCone dom = k.domain();
    CHECK(dom.contains(make_vec({5.0})));
    CHECK(dom.contains(make_vec({-5.0})));
    auto rr = k.range();
    CHECK(rr.range.contains(make_vec({-2.0})));
    CHECK(!rr.range.contains(make_vec({1.0})));
    CHECK(!rr.kernel_trivial);  // 0 in K(z) for every z
    CHECK(!cone_is_trivial(k.kernel()));

    // gph K = {0}: dom = {0}, rge = {0}
    HomogeneousPiecewiseMap k0(1, 1,
                               PolyhedralSet(2, {ConvexPolyhedron::single_point(make_vec({0.0, 0.0}))}));
    CHECK(cone_is_trivial(k0.domain()));
    CHECK(cone_is_trivial(k0.range().range));

    // positive homogeneity on sampled graph points
    ConvexPolyhedron q(2);
    q.add_ineq(make_vec({1.0, -1.0}), 0.0);  // eta >= z
    q.add_ineq(make_vec({-2.0, 1.0}), 0.0);  // eta <= 2z
    HomogeneousPiecewiseMap k2(1, 1, PolyhedralSet(2, {q}));
    for (double z : {0.5, 1.0, 3.0}) {
        for (double gamma : {0.5, 2.0, 10.0}) {
            PolyhedralSet v = k2.value_at(make_vec({z}));
            PolyhedralSet vg = k2.value_at(make_vec({gamma * z}));
            for (double eta : {0.6, 1.5, 2.5}) {
                bool a = v.contains(make_vec({eta * z}));
                bool b = vg.contains(make_vec({gamma * eta * z}));
                CHECK(a == b);
            }
        }
    }

    // inverse swaps the roles
    HomogeneousPiecewiseMap inv = k2.inverse();
    CHECK(inv.value_at(make_vec({2.0})).contains(make_vec({1.5})));
    CHECK(!inv.value_at(make_vec({2.0})).contains(make_vec({3.0})));
}

TEST_CASE("kernel-trivial implies closed domain samples") {
    // K(z) = {z} (identity): K(0) = {0}; domain closed (trivially, polyhedral)
    ConvexPolyhedron p(2);
    p.add_eq(make_vec({1.0, -1.0}), 0.0);
    HomogeneousPiecewiseMap k(1, 1, PolyhedralSet(2, {p}));
    PolyhedralCone dom = k.domain();
    for (double z : {1.0, 0.25, 1e-3, 0.0}) CHECK(dom.contains(make_vec({z})));
}

TEST_CASE("outer semicontinuity probe") {
    // constant family: no counterexample
    ConvexPolyhedron p(2);
    p.add_ineq(make_vec({0.0, 1.0}), 0.0);
    PolyhedralSet constant_graph(2, {p});
    auto fam_const = [&](const Vec&) { return constant_graph; };
    OscProbeResult r1 = outer_semicontinuity_probe(fam_const, make_vec({0.0}), 1, 16);
    CHECK(!r1.counterexample_found);

    // cone family of the degenerate scalar fixture: K(xi, z) = cone({-xi}) on
    // z in R x {0}; at xi = 0 the value collapses to {0} and osc fails
    auto fam = [&](const Vec& xi) {
        double t = xi[0];
        ConvexPolyhedron piece(3);  // (z1, z2, eta)
        piece.add_eq(make_vec({0.0, 1.0, 0.0}), 0.0);
        if (t > 0)
            piece.add_ineq(make_vec({0.0, 0.0, 1.0}), 0.0);  // eta <= 0
        else if (t < 0)
            piece.add_ineq(make_vec({0.0, 0.0, -1.0}), 0.0);
        else
            piece.add_eq(make_vec({0.0, 0.0, 1.0}), 0.0);
        return PolyhedralSet(3, {piece});
    };
    OscProbeResult r2 = outer_semicontinuity_probe(fam, make_vec({0.0}), 1, 16);
    CHECK(r2.counterexample_found);
    CHECK(r2.violation > 0.1);

    // polyhedral family constant in xi (the two-point-value fixture): no counterexample
    auto fam3 = [&](const Vec& xi) {
        double t = xi[0];
        PolyhedralSet g(3);
        if (std::abs(t) < 1e-12) {
            ConvexPolyhedron a(3);
            a.add_eq(make_vec({1.0, 0.0, 0.0}), 0.0);
            a.add_ineq(make_vec({0.0, 1.0, 0.0}), 0.0);
            a.add_eq(make_vec({0.0, 0.0, 1.0}), 0.0);
            ConvexPolyhedron b = a;
            b.eqs.back() = {make_vec({0.0, 0.0, 1.0}), -1.0};
            g.pieces = {a, b};
        }
        return g;
    };
    OscProbeResult r3 = outer_semicontinuity_probe(fam3, make_vec({0.0}), 1, 16);
    CHECK(!r3.counterexample_found);
}
