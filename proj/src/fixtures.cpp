#include "vreg/fixtures.hpp"

#include <cmath>

namespace vreg::fixtures {

PolyhedralSet halfline_nonneg() {
    ConvexPolyhedron p(1);
    p.add_ineq(make_vec({-1.0}), 0.0);
    return PolyhedralSet(1, {p});
}

PolyhedralSet halfline_nonpos() {
    ConvexPolyhedron p(1);
    p.add_ineq(make_vec({1.0}), 0.0);
    return PolyhedralSet(1, {p});
}

LsvInstance lsv_two_point_family() {
    LsvInstance inst{LsvDomain::whole_space(1), std::nullopt, GammaFamily{}};
    inst.gamma.z_dim = 2;
    inst.gamma.eta_dim = 1;
    // joint graph over (xi, z1, z2, eta): xi = 0, z1 = 0, z2 <= 0, eta in {0, -1}
    PolyhedralSet joint(4);
    for (double eta : {0.0, -1.0}) {
        ConvexPolyhedron p(4);
        p.add_eq(make_vec({1.0, 0.0, 0.0, 0.0}), 0.0);
        p.add_eq(make_vec({0.0, 1.0, 0.0, 0.0}), 0.0);
        p.add_ineq(make_vec({0.0, 0.0, 1.0, 0.0}), 0.0);
        p.add_eq(make_vec({0.0, 0.0, 0.0, 1.0}), eta);
        joint.append(std::move(p));
    }
    inst.gamma.joint_graph = joint;
    PolyhedralSet jcopy = joint;
    inst.gamma.graph_at = [jcopy](const Vec& xi) {
        PolyhedralSet out(3);
        for (const auto& p : jcopy.pieces) {
            ConvexPolyhedron q(3);
            for (const auto& c : p.ineqs) q.add_ineq(c.a.tail(3), c.b - c.a[0] * xi[0]);
            for (const auto& c : p.eqs) q.add_eq(c.a.tail(3), c.b - c.a[0] * xi[0]);
            out.append(std::move(q));
        }
        return out;
    };
    Mat A(1, 2);
    A << 1.0, 0.0;
    inst.A = MatrixPolyMap::constant(1, A);
    return inst;
}

LsvInstance lsv_rotating_ray_family() {
    LsvInstance inst{LsvDomain::whole_space(1), std::nullopt, GammaFamily{}};
    inst.gamma.z_dim = 1;
    inst.gamma.eta_dim = 2;
    inst.gamma.cone_valued = true;
    inst.gamma.osc_asserted = true;  // theta is continuous in the parameter
    inst.gamma.graph_at = [](const Vec& xi) {
        double th = std::sqrt(std::abs(xi[0]));
        double c = std::cos(th), s = std::sin(th);
        ConvexPolyhedron p(3);  // (z, eta1, eta2)
        p.add_eq(make_vec({0.0, s, -c}), 0.0);
        p.add_ineq(make_vec({0.0, -c, -s}), 0.0);
        return PolyhedralSet(3, {p});
    };
    inst.A = MatrixPolyMap::constant(1, Mat::Zero(2, 1));
    return inst;
}

LsvInstance lsv_degenerate_scalar_family() {
    LsvInstance inst{LsvDomain::whole_space(1), std::nullopt, GammaFamily{}};
    inst.gamma.z_dim = 2;
    inst.gamma.eta_dim = 1;
    // joint graph over (xi, z1, z2, eta): z2 = 0, eta = -xi
    PolyhedralSet joint(4);
    {
        ConvexPolyhedron p(4);
        p.add_eq(make_vec({0.0, 0.0, 1.0, 0.0}), 0.0);
        p.add_eq(make_vec({1.0, 0.0, 0.0, 1.0}), 0.0);
        joint.append(std::move(p));
    }
    inst.gamma.joint_graph = joint;
    inst.gamma.graph_at = [](const Vec& xi) {
        ConvexPolyhedron p(3);
        p.add_eq(make_vec({0.0, 1.0, 0.0}), 0.0);
        p.add_eq(make_vec({0.0, 0.0, 1.0}), -xi[0]);
        return PolyhedralSet(3, {p});
    };
    MatrixPolyMap A(1, 1, 2);
    A.at(0, 0) = PolyExpr::variable(1, 0);
    A.at(0, 1) = PolyExpr::variable(1, 0) * PolyExpr::variable(1, 0);
    inst.A = A;
    return inst;
}

PolyMap square_f() { return PolyMap::from_strings(1, {"x1^2"}); }

StructuredMapping whole_line_indicator(int n) {
    return StructuredMapping::indicator(ClosedSet::polyhedral(PolyhedralSet::whole_space(n)), n);
}

StructuredMapping square_mapping() {
    return StructuredMapping::smooth_plus(square_f(), whole_line_indicator(1));
}

PolyMap identity_f(int n) { return PolyMap::identity(n); }

StructuredMapping indicator_rplus() {
    return StructuredMapping::indicator(ClosedSet::polyhedral(halfline_nonneg()), 1);
}

StructuredMapping halfline_shift_mapping() {
    return StructuredMapping::smooth_plus(identity_f(1), indicator_rplus());
}

PolyMap curved_f() { return PolyMap::from_strings(3, {"x1^2 + x2 + x3^2", "x1"}); }

ClosedSet curved_manifold() {
    return ClosedSet::manifold(PolyMap::from_strings(3, {"0.5*x2 + 0.5*x3^2"}));
}

StructuredMapping curved_mapping() {
    return StructuredMapping::smooth_plus(curved_f(),
                                          StructuredMapping::indicator(curved_manifold(), 2));
}

std::function<std::pair<Vec, Vec>(double)> curved_mapping_curve() {
    PolyMap f = curved_f();
    return [f](double t) {
        Vec u = make_vec({0.0, -t * t, t});
        return std::make_pair(u, f.eval(u));
    };
}

PolyMap lifted_g() {
    return PolyMap::from_strings(3, {"-x1", "-x2", "-x3", "x1^2 + x2 + x3^2", "x1"});
}

ClosedSet lifted_constant_set() {
    // gph Delta_{C0} = {(u, y) in R^5 : h(u) = 0, y = 0} as a manifold
    return ClosedSet::manifold(
        PolyMap::from_strings(5, {"0.5*x2 + 0.5*x3^2", "x4", "x5"}));
}

StructuredMapping lifted_mapping() {
    return StructuredMapping::smooth_plus(
        lifted_g(), StructuredMapping::constant(3, lifted_constant_set()));
}

StructuredMapping identity_mapping(int n) {
    return StructuredMapping::smooth_plus(identity_f(n), whole_line_indicator(n));
}

VariationalSystem kkt_strict() {
    VariationalSystem vs;
    vs.f = PolyMap::identity(1);
    vs.g = PolyMap::identity(1);
    vs.m = MatrixPolyMap::constant(1, Mat::Identity(1, 1));
    vs.c0 = halfline_nonneg();
    return vs;
}

VariationalSystem kkt_degenerate() {
    VariationalSystem vs = kkt_strict();
    vs.f = PolyMap::zero(1, 1);
    return vs;
}

ConstraintSystem cs_scalar_fixture() {
    ConstraintSystem cs;
    cs.phi = PolyMap::from_strings(2, {"x1 - x2"});
    cs.omega = PolyhedralSet::whole_space(1);
    // T(sigma) = -sigma + N_{R+}(sigma) restricted to a 1-D parameter: use the
    // graph of the shifted normal-cone mapping directly
    StructuredMapping ncm = StructuredMapping::normal_cone_map(halfline_nonneg());
    PolyhedralSet ngraph = ncm.graph();
    PolyhedralSet tgraph(2);
    for (const auto& piece : ngraph.pieces) {
        ConvexPolyhedron out(2);
        // rows over (sigma, eta) with eta = y + sigma
        for (const auto& c : piece.ineqs)
            out.add_ineq(make_vec({c.a[0] + c.a[1], c.a[1]}), c.b);
        for (const auto& c : piece.eqs)
            out.add_eq(make_vec({c.a[0] + c.a[1], c.a[1]}), c.b);
        tgraph.append(std::move(out));
    }
    cs.t_map = StructuredMapping::graph_polyhedral(1, 1, tgraph);
    return cs;
}

}  // namespace vreg::fixtures
