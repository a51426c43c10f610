#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vreg/smoothmaps.hpp"

using namespace vreg;

namespace {

// F of the three-variable fixture: F(u) = (u1^2 + u2 + u3^2, u1)
PolyMap fixture_map_3to2() {
    return PolyMap::from_strings(3, {"x1^2 + x2 + x3^2", "x1"});
}

}  // namespace

TEST_CASE("parser and printer round-trip") {
    PolyExpr p = poly_parse("2*x1^2*x2 - x3 + 0.5", 3);
    CHECK(p.eval(make_vec({1.0, 2.0, 3.0})) == doctest::Approx(2.0 * 2.0 - 3.0 + 0.5));
    PolyExpr q = poly_parse(poly_print(p), 3);
    for (const Vec& x : {make_vec({0.3, -1.2, 2.0}), make_vec({1.0, 1.0, 1.0})})
        CHECK(p.eval(x) == doctest::Approx(q.eval(x)));

    CHECK(poly_parse("0", 2).eval(make_vec({5.0, 6.0})) == doctest::Approx(0.0));
    CHECK(poly_parse("-x2", 2).eval(make_vec({5.0, 6.0})) == doctest::Approx(-6.0));
    CHECK(poly_parse("3x1", 1).eval(make_vec({2.0})) == doctest::Approx(6.0));
    CHECK_THROWS_AS(poly_parse("x5", 2), Error);
    CHECK_THROWS_AS(poly_parse("2**", 2), Error);
}

TEST_CASE("jacobian examples") {
    // F(u) = u^2 at u = 3: nabla F = 6
    PolyMap sq = PolyMap::from_strings(1, {"x1^2"});
    CHECK(sq.nabla(make_vec({3.0}))(0, 0) == doctest::Approx(6.0));

    // three-variable fixture: nabla F(u) = [[2u1,1],[1,0],[2u3,0]]
    PolyMap F = fixture_map_3to2();
    Vec u = make_vec({0.7, -0.3, 1.1});
    Mat N = F.nabla(u);
    REQUIRE(N.rows() == 3);
    REQUIRE(N.cols() == 2);
    CHECK(N(0, 0) == doctest::Approx(2 * 0.7));
    CHECK(N(0, 1) == doctest::Approx(1.0));
    CHECK(N(1, 0) == doctest::Approx(1.0));
    CHECK(N(1, 1) == doctest::Approx(0.0));
    CHECK(N(2, 0) == doctest::Approx(2 * 1.1));
    CHECK(N(2, 1) == doctest::Approx(0.0));

    // zero polynomial -> zero matrix
    CHECK(PolyMap::zero(2, 3).nabla(make_vec({1.0, 2.0})).norm() == doctest::Approx(0.0));

    // finite-difference agreement at random points
    Vec x0 = make_vec({0.4, 0.2, -0.9});
    Mat J = F.jac(x0);
    double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
        Vec xp = x0, xm = x0;
        xp[j] += h;
        xm[j] -= h;
        Vec col = (F.eval(xp) - F.eval(xm)) / (2 * h);
        CHECK((J.col(j) - col).norm() < 1e-6);
    }
}

TEST_CASE("jacobian semiderivative") {
    PolyMap F = fixture_map_3to2();
    // at the origin along w = (0,0,1): [[0,0],[0,0],[2,0]]
    Mat D = F.nabla_semiderivative(make_vec({0.0, 0.0, 0.0}), make_vec({0.0, 0.0, 1.0}));
    Mat expected = Mat::Zero(3, 2);
    expected(2, 0) = 2.0;
    CHECK((D - expected).norm() == doctest::Approx(0.0));

    // affine map -> zero
    Mat L(2, 2);
    L << 1, 2, 3, 4;
    PolyMap A = PolyMap::affine(L, make_vec({0.5, -0.5}));
    CHECK(A.nabla_semiderivative(make_vec({1.0, 1.0}), make_vec({1.0, -1.0})).norm() ==
          doctest::Approx(0.0));

    // matrix family (x, x^2) has semiderivative (1, 0) at 0 along 1
    MatrixPolyMap Amap(1, 1, 2);
    Amap.at(0, 0) = PolyExpr::variable(1, 0);
    Amap.at(0, 1) = PolyExpr::variable(1, 0) * PolyExpr::variable(1, 0);
    Mat S = Amap.semiderivative(make_vec({0.0}), make_vec({1.0}));
    CHECK(S(0, 0) == doctest::Approx(1.0));
    CHECK(S(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("semiderivative homogeneity and expansion check") {
    PolyMap F = fixture_map_3to2();
    Vec x = make_vec({0.2, -0.1, 0.5});
    Vec w = make_vec({1.0, 2.0, -1.0});
    for (double r : {0.5, 2.0, 10.0}) {
        Mat a = F.nabla_semiderivative(x, r * w);
        Mat b = r * F.nabla_semiderivative(x, w);
        CHECK((a - b).norm() < 1e-12);
    }
    // || nabla(x + tau w) - nabla(x) - tau * D ||
    Mat D = F.nabla_semiderivative(x, w);
    double prev = kInf;
    for (double tau : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        double r = (F.nabla(x + tau * w) - F.nabla(x) - tau * D).norm() / tau;
        CHECK(r <= prev + 1e-9);
        prev = r;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("numeric semiderivative") {
    PolyMap F = fixture_map_3to2();
    BlackBoxMap bb{3, 2, [&](const Vec& x) { return F.eval(x); }};
    Vec x = make_vec({0.3, 0.1, -0.2});
    Vec w = make_vec({1.0, -1.0, 0.5});
    NumericDerivative nd = numeric_semiderivative(bb, x, w);
    Vec exact = F.jac(x) * w;
    CHECK((nd.value - exact).norm() < 1e-5);

    BlackBoxMap cmap{2, 1, [](const Vec&) { return make_vec({3.0}); }};
    NumericDerivative cd = numeric_semiderivative(cmap, make_vec({0.0, 0.0}), make_vec({1.0, 1.0}));
    CHECK(cd.value.norm() == doctest::Approx(0.0));
    CHECK(cd.dispersion == doctest::Approx(0.0));

    // |x| at 0 along 1 has one-sided limit 1
    BlackBoxMap absmap{1, 1, [](const Vec& x) { return make_vec({std::abs(x[0])}); }};
    NumericDerivative ad = numeric_semiderivative(absmap, make_vec({0.0}), make_vec({1.0}));
    CHECK(ad.value[0] == doctest::Approx(1.0));

    // a map without a semiderivative makes the quotients oscillate
    BlackBoxMap wild{1, 1, [](const Vec& x) {
                         double v = x[0] == 0.0 ? 0.0 : x[0] * std::sin(1.0 / x[0]);
                         return make_vec({v});
                     }};
    CHECK_THROWS_AS(numeric_semiderivative(wild, make_vec({0.0}), make_vec({1.0})), NonConvergent);
}

TEST_CASE("polynomial algebra for compilation") {
    // M(x) * lambda style product: entries of M lifted into (x, lambda) space
    PolyExpr mx = poly_parse("x1^2", 1);
    PolyMap lifted = PolyMap{};
    PolyMap m1(1, 1);
    m1.comps[0] = mx;
    PolyMap big = m1.lift_inputs(3, 0);  // vars (x1, l1, l2)
    PolyExpr prod = big.comps[0] * PolyExpr::variable(3, 1);
    CHECK(prod.eval(make_vec({2.0, 5.0, 0.0})) == doctest::Approx(20.0));

    PolyMap a = PolyMap::from_strings(2, {"x1"});
    PolyMap b = PolyMap::from_strings(2, {"x2"});
    PolyMap cat = concat_outputs(a, b);
    CHECK(cat.out_dim == 2);
    CHECK((cat.eval(make_vec({1.0, 2.0})) - make_vec({1.0, 2.0})).norm() == doctest::Approx(0.0));

    auto [L, c] = PolyMap::from_strings(2, {"2*x1 - x2 + 1", "x2"}).affine_parts();
    CHECK(L(0, 0) == doctest::Approx(2.0));
    CHECK(L(0, 1) == doctest::Approx(-1.0));
    CHECK(c[0] == doctest::Approx(1.0));
    CHECK(!PolyMap::from_strings(1, {"x1^2"}).is_affine());
}
