// Acceptance suite: the twelve exit criteria, each printed as one pass/fail
// line with its pinned tolerance. Returns 0 when everything passes, 2 when
// an equivalence invariant is violated, 1 otherwise.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "vreg/fixtures.hpp"
#include "vreg/io.hpp"

using namespace vreg;
namespace fx = vreg::fixtures;

namespace {

int g_failures = 0;
bool g_equivalence_failure = false;

void report(int idx, const char* label, bool pass, const std::string& detail = "") {
    std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", idx, label,
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!pass) ++g_failures;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool approx(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// --------------------------------------------------------------------------

void criterion_1() {
    double t0 = now_seconds();
    bool ok = true;
    std::string detail;
    StructuredMapping s = fx::halfline_shift_mapping();
    for (double u : {0.1, 0.5, 1.0}) {
        double r = reg_value(s, make_vec({u}), make_vec({u}));
        if (!approx(r, 1.0, 1e-9)) {
            ok = false;
            detail = "Reg(" + std::to_string(u) + ") = " + std::to_string(r);
        }
    }
    RegularityVerdict kern = m2r_sufficient_indicator_polyhedral(
        fx::identity_f(1), ClosedSet::polyhedral(fx::halfline_nonneg()), make_vec({0.0}),
        make_vec({1.0}));
    if (kern.status != VerdictStatus::SufficientConditionFails) {
        ok = false;
        detail = "kernel condition did not fail";
    }
    Classic2RegReport cls = classic_2_regularity(fx::identity_f(1), make_vec({0.0}),
                                                 make_vec({1.0}), fx::halfline_nonneg());
    if (!cls.span_condition || !*cls.span_condition) {
        ok = false;
        detail = "linear-hull condition did not hold";
    }
    RegularityVerdict m2r =
        check_metric_2_regularity(s, make_vec({0.0}), make_vec({0.0}), make_vec({1.0}));
    if (!m2r.affirmative()) {
        ok = false;
        detail = "2-regularity not affirmed";
    }
    double dt = now_seconds() - t0;
    if (dt >= 1.0) {
        ok = false;
        detail = "runtime " + std::to_string(dt) + "s";
    }
    report(1, "boundary fixture: unit Reg values, kernel/hull verdicts, 2-regularity, <1s", ok,
           detail);
}

void criterion_2() {
    double t0 = now_seconds();
    bool ok = true;
    std::string detail;
    StructuredMapping s = fx::curved_mapping();
    auto curve = fx::curved_mapping_curve();
    for (double t : {1e-1, 1e-2, 1e-3}) {
        auto [u, y] = curve(t);
        double r = reg_value(s, u, y);
        if (r > 1e-8) {
            ok = false;
            detail = "Reg along curve = " + std::to_string(r);
        }
    }
    RegularityVerdict kern = m2r_sufficient_indicator_polyhedral(
        fx::curved_f(), fx::curved_manifold(), make_vec({0.0, 0.0, 0.0}),
        make_vec({0.0, 0.0, 1.0}));
    if (kern.status != VerdictStatus::SufficientConditionHolds) {
        ok = false;
        detail = "kernel condition did not hold";
    }
    RegularityVerdict sep = m2r_sufficient_indicator_closed(
        fx::curved_f(), fx::curved_manifold(), make_vec({0.0, 0.0, 0.0}),
        make_vec({0.0, 0.0, 1.0}));
    if (sep.status != VerdictStatus::SufficientConditionFails || sep.trace != "Eq(5.6)") {
        ok = false;
        detail = "separation did not fail";
    }
    CurveFalsifierRecord rec = curve_falsifier(s, make_vec({0.0, 0.0, 0.0}),
                                               make_vec({0.0, 0.0}), curve);
    if (!rec.evidence_against) {
        ok = false;
        detail = "falsifier found no evidence";
    }
    double dt = now_seconds() - t0;
    if (dt >= 5.0) {
        ok = false;
        detail = "runtime " + std::to_string(dt) + "s";
    }
    report(2, "curved fixture: vanishing Reg, kernel holds, separation fails, falsifier, <5s", ok,
           detail);
}

void criterion_3() {
    bool ok = true;
    std::string detail;
    RegularityVerdict c53 = m2r_sufficient_constant_polyhedral(
        fx::lifted_g(), fx::lifted_constant_set(), make_vec({0.0, 0.0, 0.0}), Vec::Zero(5),
        make_vec({0.0, 0.0, 1.0}));
    if (c53.status != VerdictStatus::SufficientConditionHolds) {
        ok = false;
        detail = "kernel-image condition failed";
    }
    RegularityVerdict c58 = m2r_sufficient_constant_closed(
        fx::lifted_g(), fx::lifted_constant_set(), make_vec({0.0, 0.0, 0.0}), Vec::Zero(5),
        make_vec({0.0, 0.0, 1.0}));
    if (c58.status != VerdictStatus::SufficientConditionFails) {
        ok = false;
        detail = "range condition unexpectedly held";
    }
    auto curve = fx::curved_mapping_curve();
    StructuredMapping cmap = StructuredMapping::constant(3, fx::lifted_constant_set());
    for (double t : {1e-1, 1e-2, 1e-3}) {
        auto [u, y] = curve(t);
        (void)y;
        RegChain rc = reg_chain(fx::lifted_g(), cmap, u, make_vec({u[0], u[1], u[2], 0.0, 0.0}));
        bool squeeze = rc.r_sigma <= 1e-8 && rc.r_script_c <= 1e-8 &&
                       rc.r_sigma >= rc.r_script_c - 1e-8 && rc.r_script_c >= -1e-8;
        if (!squeeze) {
            ok = false;
            detail = "squeeze violated at t = " + std::to_string(t);
        }
    }
    report(3, "lifted fixture: kernel-image holds, range fails, chain squeeze within 1e-8", ok,
           detail);
}

void criterion_4() {
    bool ok = true;
    std::string detail;
    LsvInstance inst = fx::lsv_degenerate_scalar_family();
    SingularityReport rep = singularity_report(inst, make_vec({0.0}));
    bool pair = rep.z0_finite && rep.z0_points.size() == 2;
    if (pair) {
        bool plus = false, minus = false;
        for (const auto& z : rep.z0_points) {
            if ((z - make_vec({1.0, 0.0})).norm() <= 1e-9) plus = true;
            if ((z - make_vec({-1.0, 0.0})).norm() <= 1e-9) minus = true;
        }
        pair = plus && minus;
    }
    if (!pair) {
        ok = false;
        detail = "unit solution pair not exact";
    }
    SubderivativeEstimate est = lsv_subderivative(inst, make_vec({0.0}), make_vec({1.0}));
    if (!(est.value >= -1e-6 && est.value <= 1e-6)) {
        ok = false;
        detail = "subderivative estimate " + std::to_string(est.value);
    }
    BoundResult b = subderivative_bound_range(inst, make_vec({0.0}), make_vec({1.0}));
    if (b.produced || b.refused_condition != "(iv')") {
        ok = false;
        detail = "range route did not refuse with (iv')";
    }
    report(4, "degenerate scalar family: exact unit pair, zero subderivative, (iv') refusal", ok,
           detail);
}

void criterion_5() {
    bool ok = true;
    std::string detail;
    LsvInstance pinned = fx::lsv_two_point_family();
    LsvInstance rotating = fx::lsv_rotating_ray_family();
    BoundResult a = subderivative_bound_calmness(pinned, make_vec({0.0}), make_vec({1.0}));
    BoundResult b = subderivative_bound_calmness(rotating, make_vec({0.0}), make_vec({1.0}));
    BoundResult c = subderivative_bound_range(rotating, make_vec({0.0}), make_vec({1.0}));
    BoundResult d = subderivative_bound_range(pinned, make_vec({0.0}), make_vec({1.0}));
    if (!a.produced) {
        ok = false;
        detail = "calmness route failed on the pinned family";
    }
    if (b.produced || b.refused_condition != "(v)") {
        ok = false;
        detail = "calmness route did not refuse (v) on the rotating family";
    }
    if (!c.produced) {
        ok = false;
        detail = "range route failed on the rotating family";
    }
    if (d.produced || d.refused_condition != "(v')") {
        ok = false;
        detail = "range route did not refuse (v') on the pinned family";
    }
    report(5, "cross-applicability of the two bound routes, exact refusal conditions", ok, detail);
}

void criterion_6() {
    bool ok = true;
    std::string detail;
    std::mt19937_64 rng(606);
    std::normal_distribution<double> nd;
    int regular_done = 0;
    while (regular_done < 50) {
        int zd = 1 + static_cast<int>(rng() % 2);
        PolyhedralSet g(2 * zd);
        int pieces = 1 + static_cast<int>(rng() % 2);
        for (int p = 0; p < pieces; ++p) {
            Mat M(zd, zd);
            for (int i = 0; i < zd; ++i)
                for (int j = 0; j < zd; ++j) M(i, j) = nd(rng);
            Eigen::JacobiSVD<Mat> svd(M);
            if (svd.singularValues().minCoeff() < 0.3) {
                --p;
                continue;
            }
            ConvexPolyhedron piece(2 * zd);
            for (int r = 0; r < zd; ++r) {
                Vec rowv = Vec::Zero(2 * zd);
                rowv[zd + r] = 1.0;
                rowv.head(zd) = -M.row(r);
                piece.add_eq(rowv, 0.0);
            }
            if (rng() % 2) {
                Vec rowv = Vec::Zero(2 * zd);
                for (int j = 0; j < zd; ++j) rowv[j] = nd(rng);
                piece.add_ineq(rowv, 0.0);
            }
            g.append(std::move(piece));
        }
        HomogeneousPiecewiseMap k(zd, zd, g);
        double l = lsv_of_graph(g, zd, zd).value;
        if (!std::isfinite(l) || l <= 1e-9) continue;  // degenerate draw, redo
        double on = outer_norm(k);
        ++regular_done;
        if (std::abs(on * l - 1.0) > 1e-6) {
            ok = false;
            detail = "reciprocal identity off by " + std::to_string(std::abs(on * l - 1.0));
        }
    }
    for (int inst = 0; inst < 10; ++inst) {
        int zd = 1 + static_cast<int>(rng() % 2);
        PolyhedralSet g(2 * zd);
        ConvexPolyhedron piece(2 * zd);  // kernel ray: (z, 0) along a direction
        Vec dir(zd);
        for (int j = 0; j < zd; ++j) dir[j] = nd(rng);
        dir.normalize();
        for (int r = 0; r < zd; ++r) piece.add_eq(unit_vec(2 * zd, zd + r), 0.0);
        if (zd == 2) {
            Vec rowv = Vec::Zero(2 * zd);
            rowv[0] = -dir[1];
            rowv[1] = dir[0];
            piece.add_eq(rowv, 0.0);
        }
        g.append(std::move(piece));
        HomogeneousPiecewiseMap k(zd, zd, g);
        if (outer_norm(k) != kInf) {
            ok = false;
            detail = "singular instance with finite outer norm";
        }
    }
    report(6, "reciprocal identity on 50 regular maps (1e-6) and 10 singular maps", ok, detail);
}

void criterion_7() {
    bool ok = true;
    std::string detail;
    std::mt19937_64 rng(707);
    std::normal_distribution<double> nd;
    int disagreements = 0, done = 0;
    while (done < 100) {
        int n = 1, m = 1 + static_cast<int>(rng() % 2);
        PolyhedralSet g(n + m);
        int pieces = 1 + static_cast<int>(rng() % 2);
        for (int p = 0; p < pieces; ++p) {
            Mat M(m, n);
            for (int i = 0; i < m; ++i) M(i, 0) = std::round(2 * nd(rng));
            ConvexPolyhedron piece(n + m);
            for (int i = 0; i < m; ++i) {
                Vec rowv = Vec::Zero(n + m);
                rowv[n + i] = 1.0;
                rowv.head(n) = -M.row(i);
                piece.add_eq(rowv, 0.0);
            }
            if (rng() % 2) piece.add_ineq(unit_vec(n + m, 0, rng() % 2 ? 1.0 : -1.0), 0.0);
            g.append(std::move(piece));
        }
        StructuredMapping s = StructuredMapping::graph_polyhedral(n, m, g);
        if (!s.on_graph(Vec::Zero(n), Vec::Zero(m), 1e-9)) continue;
        ++done;
        RegularityVerdict v = check_metric_regularity(s, Vec::Zero(n), Vec::Zero(m));
        HomogeneousPiecewiseMap k = coderivative(s, Vec::Zero(n), Vec::Zero(m));
        // grid search for kernel vectors, pitch 1/64, plus local refinement;
        // independent of the LP kernel route
        double best = kInf;
        if (m == 1) {
            for (double z : {1.0, -1.0})
                best = std::min(best, k.dist_to_value(make_vec({z}), Vec::Zero(n)));
        } else {
            int grid = static_cast<int>(std::ceil(2 * M_PI * 64));
            double th_best = 0.0;
            for (int i = 0; i < grid; ++i) {
                double th = 2 * M_PI * i / grid;
                double dval = k.dist_to_value(make_vec({std::cos(th), std::sin(th)}), Vec::Zero(n));
                if (dval < best) {
                    best = dval;
                    th_best = th;
                }
            }
            double half = 2 * M_PI / grid;
            for (int round = 0; round < 12; ++round) {
                for (int i = -8; i <= 8; ++i) {
                    double th = th_best + half * i / 8.0;
                    double dval =
                        k.dist_to_value(make_vec({std::cos(th), std::sin(th)}), Vec::Zero(n));
                    if (dval < best) {
                        best = dval;
                        th_best = th;
                    }
                }
                half /= 8.0;
            }
        }
        bool grid_singular = best <= 1e-9;
        if ((v.status == VerdictStatus::CertifiedNo) != grid_singular) ++disagreements;
    }
    if (disagreements != 0) {
        ok = false;
        detail = std::to_string(disagreements) + " disagreements";
    }
    report(7, "regularity criterion equals brute-force kernel search on 100 graphs", ok, detail);
}

void criterion_8() {
    bool ok = true;
    std::string detail;
    std::mt19937_64 rng(808);
    std::normal_distribution<double> nd;
    for (int inst = 0; inst < 100; ++inst) {
        int n = 1 + static_cast<int>(rng() % 2);
        Mat L(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) L(i, j) = std::round(2 * nd(rng));
        PolyMap f = PolyMap::affine(L, Vec::Zero(n));
        StructuredMapping c;
        if (n == 1 && rng() % 2) {
            c = StructuredMapping::normal_cone_map(fx::halfline_nonneg());
        } else {
            ConvexPolyhedron orth(n);
            for (int j = 0; j < n; ++j)
                if (rng() % 2) orth.add_ineq(unit_vec(n, j, rng() % 2 ? -1.0 : 1.0), 0.0);
            c = StructuredMapping::indicator(ClosedSet::polyhedral(PolyhedralSet(n, {orth})), n);
        }
        RegChain rc = reg_chain(f, c, Vec::Zero(n), Vec::Zero(n));
        double mx = std::max(rc.r_script_c, rc.r_q);
        if (!(rc.r_sigma >= mx - 1e-7 && mx >= rc.r_script_q - 1e-7 && rc.r_script_q >= -1e-12)) {
            ok = false;
            detail = "ordering violated on instance " + std::to_string(inst);
        }
        if (rc.r_script_q <= 1e-9 &&
            !(rc.r_sigma <= 1e-6 && rc.r_script_c <= 1e-6 && rc.r_q <= 1e-6)) {
            ok = false;
            detail = "zero forcing violated on instance " + std::to_string(inst);
        }
    }
    report(8, "chain ordering within 1e-7 and zero forcing on 100 random instances", ok, detail);
}

void criterion_9() {
    bool ok = true;
    std::string detail;
    StructuredMapping s = fx::square_mapping();
    for (double u : {0.25, -0.25, 1.0, -1.0}) {
        double r = reg_value(s, make_vec({u}), make_vec({u * u}));
        if (!approx(r, 2 * std::abs(u), 1e-9)) {
            ok = false;
            detail = "Reg(" + std::to_string(u) + ") = " + std::to_string(r);
        }
    }
    for (double w : {1.0, -1.0}) {
        RegularityVerdict m2r =
            check_metric_2_regularity(s, make_vec({0.0}), make_vec({0.0}), make_vec({w}));
        if (!m2r.affirmative() || !m2r.modulus || !approx(*m2r.modulus, 0.5, 1e-3)) {
            ok = false;
            detail = "2-regularity modulus off 1/2";
            continue;
        }
        RegularityVerdict gf =
            check_gfrerer(s, make_vec({0.0}), make_vec({0.0}), make_vec({w}), make_vec({0.0}));
        if (!gf.affirmative() || !gf.modulus || !approx(*gf.modulus, *m2r.modulus, 1e-3)) {
            ok = false;
            detail = "directional modulus disagrees";
        }
    }
    report(9, "square map: Reg = 2|u| within 1e-9, moduli 0.5 within 1e-3, directional agreement",
           ok, detail);
}

void criterion_10() {
    bool ok = true;
    std::string detail;
    RegularityVerdict strict = vs_metric_regularity(fx::kkt_strict(), make_vec({0.0}),
                                                    make_vec({0.0}), make_vec({0.0}));
    if (strict.status != VerdictStatus::CertifiedYes) {
        ok = false;
        detail = "strict instance not certified";
    }
    RegularityVerdict degen = vs_metric_regularity(fx::kkt_degenerate(), make_vec({0.0}),
                                                   make_vec({0.0}), make_vec({0.0}));
    if (degen.status != VerdictStatus::CertifiedNo || !degen.witness) {
        ok = false;
        detail = "degenerate instance not refuted";
    } else {
        StructuredMapping ncm = StructuredMapping::normal_cone_map(fx::kkt_degenerate().c0);
        HomogeneousPiecewiseMap codn = coderivative(ncm, make_vec({0.0}), make_vec({0.0}));
        if (codn.dist_to_value(*degen.witness, Vec::Zero(1)) > 1e-9) {
            ok = false;
            detail = "witness fails substitution";
        }
    }
    for (bool d : {false, true}) {
        ConstraintSystem cs =
            compile_variational_system(d ? fx::kkt_degenerate() : fx::kkt_strict());
        RegularityVerdict t =
            check_metric_regularity(cs.t_map, make_vec({0.0, 0.0}), make_vec({0.0}));
        if (t.status != VerdictStatus::CertifiedYes) {
            ok = false;
            detail = "shifted mapping not regular";
        }
    }
    report(10, "stationarity fixtures: strict certified, degenerate refuted with witness", ok,
           detail);
}

void criterion_11() {
    bool ok = true;
    std::string detail;
    std::mt19937_64 rng(1111);
    std::normal_distribution<double> nd;
    int done = 0;
    while (done < 30) {
        int n = 1 + static_cast<int>(rng() % 2);
        StructuredMapping c;
        int variant = static_cast<int>(rng() % 4);
        if (variant == 0) {
            ConvexPolyhedron cone(n);
            for (int j = 0; j < n; ++j)
                if (rng() % 2) cone.add_ineq(unit_vec(n, j, rng() % 2 ? -1.0 : 1.0), 0.0);
            c = StructuredMapping::indicator(ClosedSet::polyhedral(PolyhedralSet(n, {cone})), n);
        } else if (variant == 1) {
            c = StructuredMapping::normal_cone_map(fx::halfline_nonneg());
            n = 1;
        } else if (variant == 2) {
            ConvexPolyhedron cone(n);
            cone.add_ineq(unit_vec(n, 0), 0.0);
            c = StructuredMapping::constant(n, ClosedSet::polyhedral(PolyhedralSet(n, {cone})));
        } else {
            c = StructuredMapping::product(fx::indicator_rplus(),
                                           StructuredMapping::normal_cone_map(fx::halfline_nonneg()));
            n = 2;
        }
        Mat L(c.out_dim(), c.in_dim());
        for (int i = 0; i < L.rows(); ++i)
            for (int j = 0; j < L.cols(); ++j) L(i, j) = std::round(2 * nd(rng));
        PolyMap f = PolyMap::affine(L, Vec::Zero(c.out_dim()));
        StructuredMapping s = StructuredMapping::smooth_plus(f, c);
        Vec u = Vec::Zero(s.in_dim());
        Vec y = f.eval(u);
        if (!s.on_graph(u, y, 1e-9)) continue;
        ++done;
        HomogeneousPiecewiseMap rules = coderivative(s, u, y);
        HomogeneousPiecewiseMap graph = coderivative_via_graph(s, u, y);
        if (!sets_equal(rules.graph, graph.graph, 1e-7)) {
            ok = false;
            detail = "rule/graph mismatch on instance " + std::to_string(done);
        }
    }
    report(11, "structural coderivative rules equal the graph route on 30 affine fixtures", ok,
           detail);
}

void criterion_12() {
    bool ok = true;
    std::string detail;
    std::mt19937_64 rng(1212);
    std::normal_distribution<double> nd;
    int mr_done = 0, m2r_done = 0;
    while (mr_done < 30 || m2r_done < 30) {
        ConstraintSystem cs;
        double a = std::round(2 * nd(rng)), b = std::round(2 * nd(rng));
        cs.phi = PolyMap::affine((Mat(1, 2) << a, b).finished(), Vec::Zero(1));
        cs.omega = (rng() % 2) ? PolyhedralSet::whole_space(1) : fx::halfline_nonneg();
        if (rng() % 2) {
            cs.t_map = fx::cs_scalar_fixture().t_map;
        } else {
            double cc = std::round(2 * nd(rng));
            ConvexPolyhedron p(2);
            p.add_eq(make_vec({cc, -1.0}), 0.0);
            cs.t_map = StructuredMapping::graph_polyhedral(1, 1, PolyhedralSet(2, {p}));
        }
        try {
            cs.validate_solution(make_vec({0.0}), make_vec({0.0}));
        } catch (const NotASolution&) {
            continue;
        }
        if (mr_done < 30) {
            CsRegularityReport rep = cs_metric_regularity(cs, make_vec({0.0}), make_vec({0.0}));
            ++mr_done;
            if (!rep.equivalent) {
                ok = false;
                detail = "first-order criteria disagree";
            }
        }
        if (m2r_done < 30) {
            try {
                CsM2rReport rep = cs_m2r_polyhedral(cs, make_vec({0.0}), make_vec({0.0}),
                                                    make_vec({1.0}), make_vec({1.0}));
                ++m2r_done;
                if (!rep.equivalent) {
                    ok = false;
                    detail = "directional criteria disagree";
                }
            } catch (const Error&) {
                // direction outside the derivative domain: draw again
            }
        }
    }
    if (!ok) g_equivalence_failure = true;
    report(12, "criterion equivalences hold on 30+ random systems each", ok, detail);
}

}  // namespace

int main() {
    std::printf("acceptance suite (tool %s)\n", kToolVersion);
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    std::printf("%d of 12 criteria passed\n", 12 - g_failures);
    if (g_equivalence_failure) return 2;
    return g_failures == 0 ? 0 : 1;
}
