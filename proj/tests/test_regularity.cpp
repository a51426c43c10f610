#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vreg/fixtures.hpp"
#include "vreg/regularity.hpp"

using namespace vreg;
namespace fx = vreg::fixtures;

TEST_CASE("metric regularity checks") {
    // identity map is metrically regular with modulus 1
    RegularityVerdict v1 =
        check_metric_regularity(fx::identity_mapping(1), make_vec({0.0}), make_vec({0.0}));
    CHECK(v1.status == VerdictStatus::CertifiedYes);
    CHECK(*v1.modulus == doctest::Approx(1.0));

    // S(u) = u^2 fails at the origin, with a kernel witness
    RegularityVerdict v2 =
        check_metric_regularity(fx::square_mapping(), make_vec({0.0}), make_vec({0.0}));
    CHECK(v2.status == VerdictStatus::CertifiedNo);
    REQUIRE(v2.witness.has_value());

    // ... but holds away from it
    RegularityVerdict v3 =
        check_metric_regularity(fx::square_mapping(), make_vec({0.5}), make_vec({0.25}));
    CHECK(v3.status == VerdictStatus::CertifiedYes);
    CHECK(*v3.modulus == doctest::Approx(1.0));

    CHECK_THROWS_AS(
        check_metric_regularity(fx::square_mapping(), make_vec({1.0}), make_vec({5.0})),
        BasepointOffGraph);
}

TEST_CASE("metric regularity agrees with brute-force kernel search") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> nd;
    int checked = 0;
    for (int inst = 0; inst < 30; ++inst) {
        // random polyhedral graph in R^{1+1} or R^{1+2}: union of linear
        // graphs over cones through the origin
        int n = 1, m = 1 + static_cast<int>(rng() % 2);
        PolyhedralSet g(n + m);
        int pieces = 1 + static_cast<int>(rng() % 2);
        for (int p = 0; p < pieces; ++p) {
            Mat M(m, n);
            for (int i = 0; i < m; ++i) M(i, 0) = std::round(2 * nd(rng));
            ConvexPolyhedron piece(n + m);
            for (int i = 0; i < m; ++i) {
                Vec a = Vec::Zero(n + m);
                a[n + i] = 1.0;
                a.head(n) = -M.row(i);
                piece.add_eq(a, 0.0);
            }
            if (rng() % 2) piece.add_ineq(make_vec({rng() % 2 ? 1.0 : -1.0, 0.0, 0.0}).head(n + m), 0.0);
            g.append(std::move(piece));
        }
        StructuredMapping s = StructuredMapping::graph_polyhedral(n, m, g);
        if (!s.on_graph(Vec::Zero(n), Vec::Zero(m), 1e-9)) continue;
        ++checked;
        RegularityVerdict v = check_metric_regularity(s, Vec::Zero(n), Vec::Zero(m));
        // brute force: grid search for kernel vectors of D*S with refinement
        HomogeneousPiecewiseMap k = coderivative(s, Vec::Zero(n), Vec::Zero(m));
        double best = kInf;
        int grid = static_cast<int>(std::ceil(2 * M_PI * 64));
        if (m == 1) {
            for (double z : {1.0, -1.0}) best = std::min(best, k.dist_to_value(make_vec({z}), Vec::Zero(n)));
        } else {
            double th_best = 0.0;
            for (int i = 0; i < grid; ++i) {
                double th = 2 * M_PI * i / grid;
                double d = k.dist_to_value(make_vec({std::cos(th), std::sin(th)}), Vec::Zero(n));
                if (d < best) {
                    best = d;
                    th_best = th;
                }
            }
            double half = 2 * M_PI / grid;
            for (int round = 0; round < 10; ++round) {
                for (int i = -8; i <= 8; ++i) {
                    double th = th_best + half * i / 8.0;
                    double d = k.dist_to_value(make_vec({std::cos(th), std::sin(th)}), Vec::Zero(n));
                    if (d < best) {
                        best = d;
                        th_best = th;
                    }
                }
                half /= 8.0;
            }
        }
        bool grid_singular = best <= 1e-9;
        CHECK((v.status == VerdictStatus::CertifiedNo) == grid_singular);
    }
    CHECK(checked >= 20);
}

TEST_CASE("reg chain") {
    // degenerate whole-space fixture: all four values vanish
    RegChain rc0 = reg_chain(PolyMap::zero(1, 1), fx::whole_line_indicator(1), make_vec({0.0}),
                             make_vec({0.0}));
    CHECK(rc0.ordering_ok);
    CHECK(rc0.r_sigma == doctest::Approx(0.0));
    CHECK(rc0.r_script_q == doctest::Approx(0.0));

    // random affine + polyhedral instances keep the chain ordering, with the
    // sum form cross-checked against the smooth-plus coderivative route
    std::mt19937_64 rng(31);
    std::normal_distribution<double> nd;
    for (int inst = 0; inst < 20; ++inst) {
        int n = 1 + static_cast<int>(rng() % 2);
        Mat L(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) L(i, j) = std::round(2 * nd(rng));
        PolyMap f = PolyMap::affine(L, Vec::Zero(n));
        ConvexPolyhedron orth(n);
        for (int j = 0; j < n; ++j) orth.add_ineq(unit_vec(n, j, -1.0), 0.0);
        StructuredMapping c =
            StructuredMapping::indicator(ClosedSet::polyhedral(PolyhedralSet(n, {orth})), n);
        RegChain rc = reg_chain(f, c, Vec::Zero(n), Vec::Zero(n));
        CHECK(rc.ordering_ok);
        if (rc.r_script_q <= 1e-9) {
            CHECK(rc.r_sigma <= 1e-6);
            CHECK(rc.r_script_c <= 1e-6);
            CHECK(rc.r_q <= 1e-6);
        }
        double direct =
            reg_value(StructuredMapping::smooth_plus(f, c), Vec::Zero(n), Vec::Zero(n));
        CHECK(rc.r_sigma == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("metric 2-regularity of the square map") {
    for (double w : {1.0, -1.0}) {
        RegularityVerdict v = check_metric_2_regularity(fx::square_mapping(), make_vec({0.0}),
                                                        make_vec({0.0}), make_vec({w}));
        CHECK(v.affirmative());
        REQUIRE(v.modulus.has_value());
        CHECK(*v.modulus == doctest::Approx(0.5).epsilon(2e-3));
    }
}

TEST_CASE("metric 2-regularity at the boundary fixture") {
    // certified yes via the polyhedral cell route, despite Reg(0,0) = 0
    RegularityVerdict v = check_metric_2_regularity(fx::halfline_shift_mapping(), make_vec({0.0}),
                                                    make_vec({0.0}), make_vec({1.0}));
    CHECK(v.status == VerdictStatus::CertifiedYes);

    // the indicator alone is not metrically 2-regular toward the interior
    RegularityVerdict v2 = check_metric_2_regularity(fx::indicator_rplus(), make_vec({0.0}),
                                                     make_vec({0.0}), make_vec({1.0}));
    CHECK(v2.status == VerdictStatus::CertifiedNo);

    // direction outside the domain of the graphical derivative
    CHECK_THROWS_AS(check_metric_2_regularity(fx::indicator_rplus(), make_vec({0.0}),
                                              make_vec({0.0}), make_vec({-1.0})),
                    EmptyGraphicalDerivative);
}

TEST_CASE("metric 2-regularity fails along the curved fixture") {
    StructuredMapping s = fx::curved_mapping();
    Vec u = make_vec({0.0, 0.0, 0.0});
    Vec y = make_vec({0.0, 0.0});
    Vec w = make_vec({0.0, 0.0, 1.0});
    RegularityVerdict v = check_metric_2_regularity(s, u, y, w);
    CHECK(v.status == VerdictStatus::NumericEvidenceAgainst);
}

TEST_CASE("sufficient condition: constant polyhedral form") {
    // invertible nabla F: kernel trivial, condition holds vacuously
    RegularityVerdict v1 = m2r_sufficient_constant_polyhedral(
        PolyMap::identity(1), ClosedSet::polyhedral(fx::halfline_nonpos()), make_vec({0.0}),
        make_vec({0.0}), make_vec({1.0}));
    CHECK(v1.status == VerdictStatus::SufficientConditionHolds);

    // F == 0, C0 = R_-, ybar = 0: z = 1 is admissible, condition fails
    RegularityVerdict v2 = m2r_sufficient_constant_polyhedral(
        PolyMap::zero(1, 1), ClosedSet::polyhedral(fx::halfline_nonpos()), make_vec({0.0}),
        make_vec({0.0}), make_vec({1.0}));
    CHECK(v2.status == VerdictStatus::SufficientConditionFails);
    REQUIRE(v2.witness.has_value());

    // lifted curved fixture: the condition holds on the manifold input, but
    // carries no assertion there
    RegularityVerdict v3 = m2r_sufficient_constant_polyhedral(
        fx::lifted_g(), fx::lifted_constant_set(), make_vec({0.0, 0.0, 0.0}),
        Vec::Zero(5), make_vec({0.0, 0.0, 1.0}));
    CHECK(v3.status == VerdictStatus::SufficientConditionHolds);
    CHECK(!v3.notes.empty());
}

TEST_CASE("sufficient condition: polyhedral mapping form") {
    // metrically regular instance: holds vacuously
    RegularityVerdict v1 = m2r_sufficient_polyhedral_mapping(
        PolyMap::identity(1), fx::whole_line_indicator(1), make_vec({0.0}), make_vec({0.0}),
        make_vec({1.0}));
    CHECK(v1.status == VerdictStatus::SufficientConditionHolds);

    // boundary fixture: the condition fails although the map is 2-regular
    RegularityVerdict v2 = m2r_sufficient_polyhedral_mapping(
        fx::identity_f(1), fx::indicator_rplus(), make_vec({0.0}), make_vec({0.0}),
        make_vec({1.0}));
    CHECK(v2.status == VerdictStatus::SufficientConditionFails);
    RegularityVerdict direct = check_metric_2_regularity(
        fx::halfline_shift_mapping(), make_vec({0.0}), make_vec({0.0}), make_vec({1.0}));
    CHECK(direct.status == VerdictStatus::CertifiedYes);  // non-necessity
}

TEST_CASE("sufficient condition: indicator polyhedral form") {
    // boundary fixture: condition fails (z = -1 admissible)
    RegularityVerdict v1 = m2r_sufficient_indicator_polyhedral(
        fx::identity_f(1), ClosedSet::polyhedral(fx::halfline_nonneg()), make_vec({0.0}),
        make_vec({1.0}));
    CHECK(v1.status == VerdictStatus::SufficientConditionFails);

    // invertible nabla F at an interior point: holds
    ConvexPolyhedron box(1);
    box.add_ineq(make_vec({1.0}), 1.0);
    box.add_ineq(make_vec({-1.0}), 1.0);
    RegularityVerdict v2 = m2r_sufficient_indicator_polyhedral(
        fx::identity_f(1), ClosedSet::polyhedral(PolyhedralSet(1, {box})), make_vec({0.0}),
        make_vec({1.0}));
    CHECK(v2.status == VerdictStatus::SufficientConditionHolds);

    // curved fixture: the kernel condition holds on the manifold
    RegularityVerdict v3 = m2r_sufficient_indicator_polyhedral(
        fx::curved_f(), fx::curved_manifold(), make_vec({0.0, 0.0, 0.0}),
        make_vec({0.0, 0.0, 1.0}));
    CHECK(v3.status == VerdictStatus::SufficientConditionHolds);

    CHECK_THROWS_AS(m2r_sufficient_indicator_polyhedral(
                        fx::identity_f(1), ClosedSet::polyhedral(fx::halfline_nonneg()),
                        make_vec({0.0}), make_vec({-1.0})),
                    DirectionNotTangent);
}

TEST_CASE("sufficient condition: nonpolyhedral forms") {
    // lifted curved fixture: Eq(5.8)-style condition fails
    RegularityVerdict v1 = m2r_sufficient_constant_closed(
        fx::lifted_g(), fx::lifted_constant_set(), make_vec({0.0, 0.0, 0.0}), Vec::Zero(5),
        make_vec({0.0, 0.0, 1.0}));
    CHECK(v1.status == VerdictStatus::SufficientConditionFails);
    REQUIRE(v1.witness.has_value());

    // trivial kernel: holds vacuously
    RegularityVerdict v2 = m2r_sufficient_constant_closed(
        PolyMap::identity(1), ClosedSet::polyhedral(fx::halfline_nonpos()), make_vec({0.0}),
        make_vec({0.0}), make_vec({1.0}));
    CHECK(v2.status == VerdictStatus::SufficientConditionHolds);

    // curved fixture through the separation-first route: refusal citing the
    // separation
    RegularityVerdict v3 = m2r_sufficient_indicator_closed(
        fx::curved_f(), fx::curved_manifold(), make_vec({0.0, 0.0, 0.0}),
        make_vec({0.0, 0.0, 1.0}));
    CHECK(v3.status == VerdictStatus::SufficientConditionFails);
    CHECK(v3.trace == "Eq(5.6)");

    // polyhedral set with separation holding and injective nabla F: holds
    RegularityVerdict v4 = m2r_sufficient_indicator_closed(
        PolyMap::from_strings(1, {"x1"}), ClosedSet::polyhedral(PolyhedralSet::whole_space(1)),
        make_vec({0.0}), make_vec({1.0}));
    CHECK(v4.status == VerdictStatus::SufficientConditionHolds);

    // manifold instance with separation holding but the kernel condition
    // failing: F maps into the normal direction of a flat manifold
    {
        // C0 = {u in R^2 : u2 = 0}, F(u) = (u2, 0): rge nabla F = span{e1}?
        // build so that rge nabla F /\ N = {0} while Eq(5.5) admits z != 0
        PolyMap f = PolyMap::from_strings(2, {"x1", "x1"});
        ClosedSet c0 = ClosedSet::manifold(PolyMap::from_strings(2, {"x2"}));
        RegularityVerdict v5 = m2r_sufficient_indicator_closed(f, c0, make_vec({0.0, 0.0}),
                                                               make_vec({1.0, 0.0}));
        CHECK(v5.status == VerdictStatus::SufficientConditionFails);
        CHECK(v5.trace != "Eq(5.6)");
        REQUIRE(v5.witness.has_value());
    }
}

TEST_CASE("sufficient condition: product-sum form") {
    // R == {0}, T = identity graph: reduces to an unconstrained check
    StructuredMapping r0 = StructuredMapping::constant(
        1, ClosedSet::polyhedral(PolyhedralSet(1, {ConvexPolyhedron::single_point(make_vec({0.0}))})));
    StructuredMapping t_id = fx::identity_mapping(1);
    Mat L(2, 2);
    L << 1, 0, 0, 0;  // G depends on x only, so rge(nabla_sigma G) = {0}
    PolyMap g = PolyMap::affine(L, Vec::Zero(2));
    RegularityVerdict v = m2r_sufficient_product_sum(
        g, r0, t_id, make_vec({0.0}), make_vec({0.0}), make_vec({0.0}), make_vec({0.0}),
        make_vec({1.0}), make_vec({0.0}));
    CHECK(v.status == VerdictStatus::SufficientConditionHolds);

    // violating rge D*R = {0}: R the indicator of R_+ at the boundary
    CHECK_THROWS_AS(m2r_sufficient_product_sum(g, fx::indicator_rplus(), t_id, make_vec({0.0}),
                                               make_vec({0.0}), make_vec({0.0}), make_vec({0.0}),
                                               make_vec({1.0}), make_vec({0.0})),
                    ConditionFailed);
}

TEST_CASE("gfrerer regularity") {
    // direction off the tangent cone: trivially regular
    RegularityVerdict v1 = check_gfrerer(fx::square_mapping(), make_vec({0.0}), make_vec({0.0}),
                                         make_vec({1.0}), make_vec({1.0}));
    CHECK(v1.status == VerdictStatus::CertifiedYes);

    // tangent direction of the square map: modulus 1/2
    RegularityVerdict v2 = check_gfrerer(fx::square_mapping(), make_vec({0.0}), make_vec({0.0}),
                                         make_vec({1.0}), make_vec({0.0}));
    CHECK(v2.affirmative());
    REQUIRE(v2.modulus.has_value());
    CHECK(*v2.modulus == doctest::Approx(0.5).epsilon(2e-3));

    // curved fixture along the tangent pair: evidence against
    StructuredMapping s = fx::curved_mapping();
    RegularityVerdict v3 =
        check_gfrerer(s, make_vec({0.0, 0.0, 0.0}), make_vec({0.0, 0.0}),
                      make_vec({0.0, 0.0, 1.0}), make_vec({0.0, 0.0}));
    CHECK(v3.status == VerdictStatus::NumericEvidenceAgainst);
}

TEST_CASE("m2r and gfrerer verdicts agree across eta samples") {
    for (const auto& [map, u, y, w] :
         {std::make_tuple(fx::square_mapping(), make_vec({0.0}), make_vec({0.0}), make_vec({1.0})),
          std::make_tuple(fx::halfline_shift_mapping(), make_vec({0.0}), make_vec({0.0}),
                          make_vec({1.0})),
          std::make_tuple(fx::identity_mapping(1), make_vec({0.0}), make_vec({0.0}),
                          make_vec({1.0}))}) {
        M2rGfrererReport rep = m2r_gfrerer_consistency(map, u, y, w);
        CHECK(rep.consistent);
    }
}

TEST_CASE("scale invariance of the 2-regularity verdict") {
    for (double r : {0.5, 2.0, 10.0}) {
        RegularityVerdict a = check_metric_2_regularity(fx::square_mapping(), make_vec({0.0}),
                                                        make_vec({0.0}), make_vec({1.0}));
        RegularityVerdict b = check_metric_2_regularity(fx::square_mapping(), make_vec({0.0}),
                                                        make_vec({0.0}), make_vec({r}));
        CHECK(a.status == b.status);
    }
}

TEST_CASE("classic 2-regularity") {
    // F(u) = u^2 at 0 along 1: 2-regular by the rank route
    Classic2RegReport r1 = classic_2_regularity(fx::square_f(), make_vec({0.0}), make_vec({1.0}));
    CHECK(r1.verdict.status == VerdictStatus::CertifiedYes);
    CHECK(r1.rank_route);

    // invertible Jacobian: trivially 2-regular
    Classic2RegReport r2 =
        classic_2_regularity(PolyMap::identity(2), make_vec({0.0, 0.0}), make_vec({1.0, 0.0}));
    CHECK(r2.verdict.status == VerdictStatus::CertifiedYes);

    // degenerate map with no second-order help: F(u) = (u1^2, 0)
    Classic2RegReport r3 = classic_2_regularity(PolyMap::from_strings(1, {"x1^2", "0"}),
                                                make_vec({0.0}), make_vec({1.0}));
    CHECK(r3.verdict.status == VerdictStatus::CertifiedNo);

    // boundary fixture comparison: the linear-hull condition holds while the
    // indicator kernel condition fails
    Classic2RegReport r4 = classic_2_regularity(fx::identity_f(1), make_vec({0.0}),
                                                make_vec({1.0}), fx::halfline_nonneg());
    REQUIRE(r4.span_condition.has_value());
    CHECK(*r4.span_condition);
    RegularityVerdict kern = m2r_sufficient_indicator_polyhedral(
        fx::identity_f(1), ClosedSet::polyhedral(fx::halfline_nonneg()), make_vec({0.0}),
        make_vec({1.0}));
    CHECK(kern.status == VerdictStatus::SufficientConditionFails);
}

TEST_CASE("curve falsifier") {
    // curved fixture: evidence against along u(t) = (0, -t^2, t)
    StructuredMapping s = fx::curved_mapping();
    CurveFalsifierRecord rec = curve_falsifier(s, make_vec({0.0, 0.0, 0.0}), make_vec({0.0, 0.0}),
                                               fx::curved_mapping_curve());
    CHECK(rec.evidence_against);

    // parabola curve of the square map: Reg = 2t, no evidence against
    auto curve = [](double t) {
        return std::make_pair(make_vec({t}), make_vec({t * t}));
    };
    CurveFalsifierRecord rec2 =
        curve_falsifier(fx::square_mapping(), make_vec({0.0}), make_vec({0.0}), curve);
    CHECK(!rec2.evidence_against);

    // constant curve rejected
    auto cc = [](double) { return std::make_pair(make_vec({0.0}), make_vec({0.0})); };
    CHECK_THROWS(curve_falsifier(fx::square_mapping(), make_vec({0.0}), make_vec({0.0}), cc));
}

TEST_CASE("directional neighborhood") {
    DirectionalNeighborhood k{make_vec({0.0, 0.0}), make_vec({1.0, 0.0}), 1.0, 0.5};
    CHECK(k.contains(make_vec({0.5, 0.1})));
    CHECK(!k.contains(make_vec({0.5, 0.5})));
    CHECK(!k.contains(make_vec({2.0, 0.0})));
    CHECK(k.contains(make_vec({0.0, 0.0})));
    // zero direction degenerates to the ball
    DirectionalNeighborhood ball{make_vec({0.0, 0.0}), make_vec({0.0, 0.0}), 1.0, 0.5};
    CHECK(ball.contains(make_vec({-0.5, 0.5})));
    CHECK(!ball.contains(make_vec({-1.5, 0.0})));
}
