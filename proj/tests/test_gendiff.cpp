#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "vreg/gendiff.hpp"

using namespace vreg;

namespace {

PolyhedralSet rplus_set() {
    ConvexPolyhedron p(1);
    p.add_ineq(make_vec({-1.0}), 0.0);
    return PolyhedralSet(1, {p});
}

StructuredMapping indicator_rplus() {
    return StructuredMapping::indicator(ClosedSet::polyhedral(rplus_set()), 1);
}

StructuredMapping square_map() {  // S(u) = u^2 as F + Delta_R
    return StructuredMapping::smooth_plus(
        PolyMap::from_strings(1, {"x1^2"}),
        StructuredMapping::indicator(ClosedSet::polyhedral(PolyhedralSet::whole_space(1)), 1));
}

}  // namespace

TEST_CASE("graphical derivative examples") {
    // Delta_{R+} at (0,0): DS(w) = {0} for w >= 0, empty for w < 0
    HomogeneousPiecewiseMap d = graphical_derivative(indicator_rplus(), make_vec({0.0}), make_vec({0.0}));
    CHECK(d.value_at(make_vec({1.0})).contains(make_vec({0.0})));
    CHECK(!d.value_at(make_vec({1.0})).contains(make_vec({0.5})));
    CHECK(d.value_at(make_vec({-1.0})).pruned().is_empty());

    // S(u) = u^2 at (0,0): DS(w) = {0} for all w
    HomogeneousPiecewiseMap d2 = graphical_derivative(square_map(), make_vec({0.0}), make_vec({0.0}));
    for (double w : {-2.0, -1.0, 1.0, 2.0}) {
        PolyhedralSet v = d2.value_at(make_vec({w})).pruned();
        CHECK(v.contains(make_vec({0.0})));
        CHECK(!v.contains(make_vec({0.3})));
    }

    // product rule equals the graph route on a polyhedral instance
    StructuredMapping prod =
        StructuredMapping::product(indicator_rplus(), StructuredMapping::normal_cone_map(rplus_set()));
    Vec u = make_vec({0.0, 0.0});
    Vec y = make_vec({0.0, 0.0});
    HomogeneousPiecewiseMap dp = graphical_derivative(prod, u, y);
    HomogeneousPiecewiseMap dg = graphical_derivative_via_graph(prod, u, y);
    CHECK(sets_equal(dp.graph, dg.graph));

    CHECK_THROWS_AS(graphical_derivative(indicator_rplus(), make_vec({-1.0}), make_vec({0.0})),
                    BasepointOffGraph);
}

TEST_CASE("coderivative examples") {
    // Delta_{R+} at (0,0): D*(z) = R_- for every z
    HomogeneousPiecewiseMap c = coderivative(indicator_rplus(), make_vec({0.0}), make_vec({0.0}));
    for (double z : {-3.0, 0.0, 2.0}) {
        PolyhedralSet v = c.value_at(make_vec({z}));
        CHECK(v.contains(make_vec({-1.0})));
        CHECK(v.contains(make_vec({0.0})));
        CHECK(!v.contains(make_vec({0.5})));
    }

    // S(u) = u^2 at (u, u^2): D*(z) = {2 u z}
    for (double u0 : {0.5, -1.0}) {
        HomogeneousPiecewiseMap c2 =
            coderivative(square_map(), make_vec({u0}), make_vec({u0 * u0}));
        for (double z : {1.0, -2.0}) {
            PolyhedralSet v = c2.value_at(make_vec({z}));
            CHECK(v.contains(make_vec({2 * u0 * z})));
            CHECK(!v.contains(make_vec({2 * u0 * z + 0.1})));
        }
    }

    // normal-cone mapping of R+ at (0,0), via the three-piece limiting normal
    // cone of the complementarity graph: D*(1) = {0}, D*(-1) = R_-
    StructuredMapping nmap = StructuredMapping::normal_cone_map(rplus_set());
    HomogeneousPiecewiseMap c3 = coderivative(nmap, make_vec({0.0}), make_vec({0.0}));
    PolyhedralSet vpos = c3.value_at(make_vec({1.0})).pruned();
    CHECK(vpos.contains(make_vec({0.0})));
    CHECK(!vpos.contains(make_vec({-1.0})));
    CHECK(!vpos.contains(make_vec({1.0})));
    PolyhedralSet vneg = c3.value_at(make_vec({-1.0})).pruned();
    CHECK(vneg.contains(make_vec({0.0})));
    CHECK(vneg.contains(make_vec({-2.0})));
    CHECK(!vneg.contains(make_vec({0.5})));
}

TEST_CASE("coderivative kernel") {
    // identity map: kernel {0}
    StructuredMapping ident = StructuredMapping::smooth_plus(
        PolyMap::identity(1),
        StructuredMapping::indicator(ClosedSet::polyhedral(PolyhedralSet::whole_space(1)), 1));
    HomogeneousPiecewiseMap ci = coderivative(ident, make_vec({0.0}), make_vec({0.0}));
    CHECK(cone_is_trivial(coderivative_kernel(ci)));

    // D*Delta_{R+}(0|0): kernel = R
    HomogeneousPiecewiseMap cd = coderivative(indicator_rplus(), make_vec({0.0}), make_vec({0.0}));
    PolyhedralCone ker = coderivative_kernel(cd);
    CHECK(ker.contains(make_vec({5.0})));
    CHECK(ker.contains(make_vec({-5.0})));

    // F(u) = u plus Delta_{R+} at (0,0): kernel of z -> z + N_{R+}(0) is R_+
    StructuredMapping m59 = StructuredMapping::smooth_plus(PolyMap::identity(1), indicator_rplus());
    HomogeneousPiecewiseMap c59 = coderivative(m59, make_vec({0.0}), make_vec({0.0}));
    PolyhedralCone k59 = coderivative_kernel(c59);
    CHECK(k59.contains(make_vec({1.0})));
    CHECK(k59.contains(make_vec({0.0})));
    CHECK(!k59.contains(make_vec({-1.0})));
}

TEST_CASE("sum rule equals sheared-graph route for affine smooth parts") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int inst = 0; inst < 12; ++inst) {
        int n = 1 + static_cast<int>(rng() % 2);
        Mat L(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) L(i, j) = std::round(nd(rng) * 2);
        Vec c0 = Vec::Zero(n);
        PolyMap f = PolyMap::affine(L, c0);
        // C = Delta over the nonnegative orthant
        ConvexPolyhedron orth(n);
        for (int j = 0; j < n; ++j) orth.add_ineq(unit_vec(n, j, -1.0), 0.0);
        StructuredMapping cmap =
            StructuredMapping::indicator(ClosedSet::polyhedral(PolyhedralSet(n, {orth})), n);
        StructuredMapping s = StructuredMapping::smooth_plus(f, cmap);
        Vec u = Vec::Zero(n);
        Vec y = f.eval(u);
        HomogeneousPiecewiseMap via_rule = coderivative(s, u, y);
        HomogeneousPiecewiseMap via_graph = coderivative_via_graph(s, u, y);
        CHECK(sets_equal(via_rule.graph, via_graph.graph));
    }
}

TEST_CASE("graphical derivative of indicator equals tangent times zero") {
    StructuredMapping d = indicator_rplus();
    HomogeneousPiecewiseMap dd = graphical_derivative(d, make_vec({0.0}), make_vec({0.0}));
    PolyhedralSet expected = product_set(
        tangent_cone(rplus_set(), make_vec({0.0})).set,
        PolyhedralSet(1, {ConvexPolyhedron::single_point(make_vec({0.0}))}));
    CHECK(sets_equal(dd.graph, expected));
}

TEST_CASE("coderivative outer semicontinuity along graph points") {
    // sampled-sequence probe on S = normal cone map of R+: coderivatives at
    // (t, 0) converge into the coderivative at (0,0)
    StructuredMapping nmap = StructuredMapping::normal_cone_map(rplus_set());
    HomogeneousPiecewiseMap at0 = coderivative(nmap, make_vec({0.0}), make_vec({0.0}));
    for (double t : {1e-1, 1e-2, 1e-3}) {
        HomogeneousPiecewiseMap atk = coderivative(nmap, make_vec({t}), make_vec({0.0}));
        for (const auto& piece : atk.graph.pieces) {
            auto ri = relative_interior_point(piece);
            if (!ri) continue;
            CHECK(at0.graph.contains(*ri, 1e-6));
        }
    }
}
