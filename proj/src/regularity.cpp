#include "vreg/regularity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace vreg {

const char* to_string(RegProperty p) {
    switch (p) {
        case RegProperty::MetricRegular: return "metric_regularity";
        case RegProperty::Metric2Regular: return "metric_2_regularity";
        case RegProperty::GfrererRegular: return "gfrerer_regularity";
        default: return "classic_2_regularity";
    }
}

const char* to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::CertifiedYes: return "certified_yes";
        case VerdictStatus::CertifiedNo: return "certified_no";
        case VerdictStatus::SufficientConditionHolds: return "sufficient_condition_holds";
        case VerdictStatus::SufficientConditionFails: return "sufficient_condition_fails";
        case VerdictStatus::NumericEvidenceFor: return "numeric_evidence_for";
        default: return "numeric_evidence_against";
    }
}

bool DirectionalNeighborhood::contains(const Vec& u) const {
    Vec d = u - center;
    if (d.norm() > eps + 1e-12) return false;
    if (d.norm() < 1e-14) return true;
    if (w.norm() < 1e-14) return true;  // cone(delta B) is the whole space
    // exists gamma >= 0 with |d - gamma w| <= gamma delta
    double a = w.squaredNorm() - delta * delta;
    double b = -2.0 * d.dot(w);
    double c = d.squaredNorm();
    if (std::abs(a) < 1e-14) return b < 0 || c < 1e-14;
    if (a < 0) return true;  // wide cone swallows every direction
    double disc = b * b - 4 * a * c;
    if (disc < 0) return false;
    double root = (-b + std::sqrt(disc)) / (2 * a);
    return root >= -1e-12;
}

namespace {

std::vector<int> iota_vec(int from, int count) {
    std::vector<int> v(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<size_t>(i)] = from + i;
    return v;
}

// normal cone to gph S at (u, y), any variant, via the coderivative flip
PolyhedralCone graph_normal_cone(const StructuredMapping& s, const Vec& u, const Vec& y,
                                 const Tols& tols) {
    HomogeneousPiecewiseMap k = coderivative(s, u, y, tols);
    const int n = s.in_dim(), m = s.out_dim();
    PolyhedralSet out(n + m);
    for (const auto& piece : k.graph.pieces) {
        // (z, v) rows become rows over (p, q) with v = p, z = -q
        ConvexPolyhedron q(n + m);
        for (const auto& c : piece.ineqs) {
            Vec a = Vec::Zero(n + m);
            a.head(n) = c.a.tail(n);
            a.tail(m) = -c.a.head(m);
            q.add_ineq(a, c.b);
        }
        for (const auto& c : piece.eqs) {
            Vec a = Vec::Zero(n + m);
            a.head(n) = c.a.tail(n);
            a.tail(m) = -c.a.head(m);
            q.add_eq(a, c.b);
        }
        out.append(std::move(q));
    }
    return PolyhedralCone(out.pruned(tols.lp));
}

// homogeneous linear system with cone memberships; projection of the
// solution cone onto a coordinate block
class ConicSystem {
  public:
    explicit ConicSystem(int nvars) : nvars_(nvars) {}

    void add_eq_rows(const Mat& rows) {
        for (Eigen::Index r = 0; r < rows.rows(); ++r) eqs_.push_back(rows.row(r));
    }
    void add_membership(const Mat& sel, PolyhedralSet set) {
        if (sel.rows() != set.dim || sel.cols() != nvars_) throw DimensionMismatch("ConicSystem");
        members_.push_back({sel, std::move(set)});
    }

    PolyhedralCone project_to(const std::vector<int>& keep, const Tols& tols) const {
        PolyhedralSet acc(static_cast<int>(keep.size()));
        std::vector<size_t> choice(members_.size(), 0);
        std::function<void(size_t)> rec = [&](size_t idx) {
            if (idx == members_.size()) {
                ConvexPolyhedron piece(nvars_);
                for (const auto& e : eqs_) piece.add_eq(e, 0.0);
                for (size_t mi = 0; mi < members_.size(); ++mi) {
                    const auto& [sel, set] = members_[mi];
                    const auto& sp = set.pieces[choice[mi]];
                    for (const auto& c : sp.ineqs) piece.add_ineq(sel.transpose() * c.a, c.b);
                    for (const auto& c : sp.eqs) piece.add_eq(sel.transpose() * c.a, c.b);
                }
                if (!piece.is_empty(tols.lp)) acc.append(project_piece(piece, keep, tols.lp));
                return;
            }
            for (size_t p = 0; p < members_[idx].second.pieces.size(); ++p) {
                choice[idx] = p;
                rec(idx + 1);
            }
        };
        rec(0);
        return PolyhedralCone(acc.pruned(tols.lp));
    }

  private:
    int nvars_;
    std::vector<Vec> eqs_;
    std::vector<std::pair<Mat, PolyhedralSet>> members_;
};

struct GraphCell {
    ConvexPolyhedron closure;  // conic cell of the localized graph
    double reg = kInf;         // Reg on the cell's relative interior
};

std::vector<GraphCell> analyze_graph_cells(const StructuredMapping& s, const Vec& u, const Vec& y,
                                           const LsvParams& params) {
    Vec x(u.size() + y.size());
    x << u, y;
    PolyhedralSet graph = s.graph();
    auto cones = local_cone_pieces(graph, x, params.tols);
    std::vector<LocalCell> cells = enumerate_local_cells(cones, params.tols);
    std::vector<GraphCell> out;
    for (const auto& cell : cells) {
        if (cone_is_trivial(PolyhedralCone::from_piece(cell.closure), params.tols.lp)) continue;
        PolyhedralCone nc = limiting_normal_cone_of_union(cones, cell.sample, params.tols);
        HomogeneousPiecewiseMap k = coderivative_from_normal_cone(nc, s.in_dim(), s.out_dim());
        double reg = lsv_of_graph(k.graph, k.arg_dim, k.val_dim, params).value;
        out.push_back({cell.closure, reg});
    }
    return out;
}

// does the closed cell contain a point with fixed u-part w?
std::optional<Vec> eta_in_cell(const ConvexPolyhedron& cell, const Vec& w, int m) {
    const int n = static_cast<int>(w.size());
    ConvexPolyhedron slice(m);
    for (const auto& c : cell.ineqs) slice.add_ineq(c.a.tail(m), c.b - c.a.head(n).dot(w));
    for (const auto& c : cell.eqs) slice.add_eq(c.a.tail(m), c.b - c.a.head(n).dot(w));
    return lp_feasible_point(slice.ineq_matrix(), slice.ineq_rhs(), slice.eq_matrix(),
                             slice.eq_rhs());
}

std::vector<Vec> eta_samples(const HomogeneousPiecewiseMap& ds, const Vec& w, int m,
                             unsigned seed) {
    std::vector<Vec> etas;
    PolyhedralSet val = ds.value_at(w).pruned();
    for (const auto& p : val.pieces) {
        auto ri = relative_interior_point(p);
        if (ri) etas.push_back(*ri);
        Generators g = enumerate_generators(p);
        for (const auto& v : g.vertices) etas.push_back(v);
        for (const auto& r : g.rays)
            if (!etas.empty()) etas.push_back(etas.front() + r);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 16; ++k) {
        Vec e(m);
        for (int j = 0; j < m; ++j) e[j] = nd(rng);
        if (e.norm() > 1e-12) etas.push_back(e / e.norm());
    }
    // dedupe
    std::vector<Vec> out;
    for (const auto& e : etas) {
        bool dup = false;
        for (const auto& o : out)
            if ((e - o).norm() < 1e-9) dup = true;
        if (!dup) out.push_back(e);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// metric regularity
// ---------------------------------------------------------------------------

RegularityVerdict check_metric_regularity(const StructuredMapping& s, const Vec& u, const Vec& y,
                                          const LsvParams& params) {
    if (!s.on_graph(u, y, 1e-7)) throw BasepointOffGraph("check_metric_regularity");
    RegularityVerdict v;
    v.property = RegProperty::MetricRegular;
    v.trace = "coderivative kernel criterion";
    HomogeneousPiecewiseMap k = coderivative(s, u, y, params.tols);
    PolyhedralCone ker = coderivative_kernel(k);
    auto witness = cone_nonzero_point(ker, params.tols.lp);
    if (!witness) {
        v.status = VerdictStatus::CertifiedYes;
        double reg = lsv_of_graph(k.graph, k.arg_dim, k.val_dim, params).value;
        if (reg > 0 && std::isfinite(reg)) v.modulus = 1.0 / reg;
        return v;
    }
    Vec z = *witness / witness->norm();
    v.status = VerdictStatus::CertifiedNo;
    v.witness = z;
    // verify the witness by substitution
    double d = k.dist_to_value(z, Vec::Zero(k.val_dim));
    if (d > 1e-6) v.notes.push_back("witness residual " + std::to_string(d));
    return v;
}

RegChain reg_chain(const PolyMap& f, const StructuredMapping& c, const Vec& u, const Vec& y,
                   const LsvParams& params) {
    if (!c.on_graph(u, y, 1e-7)) throw BasepointOffGraph("reg_chain");
    const int n = c.in_dim(), m = c.out_dim();
    if (f.in_dim != n || f.out_dim != m) throw DimensionMismatch("reg_chain");
    Mat nab = f.nabla(u);  // n x m
    PolyhedralCone nc = graph_normal_cone(c, u, y, params.tols);

    RegChain out;
    // sum form: z -> nabla F z + D*C(z)
    {
        PolyhedralSet g(m + n);
        for (const auto& p : nc.set.pieces) {
            ConvexPolyhedron q(m + n);
            auto convert = [&](const LinCon& cc, bool eq) {
                Vec a = Vec::Zero(m + n);
                a.tail(n) = cc.a.head(n);
                a.head(m) = -(nab.transpose() * cc.a.head(n)) - cc.a.tail(m);
                if (eq)
                    q.add_eq(a, cc.b);
                else
                    q.add_ineq(a, cc.b);
            };
            for (const auto& cc : p.ineqs) convert(cc, false);
            for (const auto& cc : p.eqs) convert(cc, true);
            g.append(std::move(q));
        }
        out.r_sigma = lsv_of_graph(g, m, n, params).value;
    }
    // graph-shift form: (v, z) -> -v + nabla F z on the cone -(v,z) in N
    {
        PolyhedralSet g(n + m + n);
        for (const auto& p : nc.set.pieces) {
            ConvexPolyhedron q(n + m + n);
            for (const auto& cc : p.ineqs) {
                Vec a = Vec::Zero(n + m + n);
                a.head(n) = -cc.a.head(n);
                a.segment(n, m) = -cc.a.tail(m);
                q.add_ineq(a, cc.b);
            }
            for (const auto& cc : p.eqs) {
                Vec a = Vec::Zero(n + m + n);
                a.head(n) = -cc.a.head(n);
                a.segment(n, m) = -cc.a.tail(m);
                q.add_eq(a, cc.b);
            }
            for (int r = 0; r < n; ++r) {
                Vec a = Vec::Zero(n + m + n);
                a[n + m + r] = 1.0;  // w
                a[r] = 1.0;          // +v
                a.segment(n, m) = -nab.row(r);
                q.add_eq(a, 0.0);
            }
            g.append(std::move(q));
        }
        out.r_script_c = lsv_of_graph(g, n + m, n, params).value;
    }
    // gated-sum form: z -> (nabla F z, z) + N
    {
        PolyhedralSet g(m + n + m);
        for (const auto& p : nc.set.pieces) {
            ConvexPolyhedron q(m + n + m);
            auto convert = [&](const LinCon& cc, bool eq) {
                Vec a = Vec::Zero(m + n + m);
                a.tail(n + m) = cc.a;
                a.head(m) = -(nab.transpose() * cc.a.head(n)) - cc.a.tail(m);
                if (eq)
                    q.add_eq(a, cc.b);
                else
                    q.add_ineq(a, cc.b);
            };
            for (const auto& cc : p.ineqs) convert(cc, false);
            for (const auto& cc : p.eqs) convert(cc, true);
            g.append(std::move(q));
        }
        out.r_q = lsv_of_graph(g, m, n + m, params).value;
    }
    // doubled form: (v, z) -> (-v + nabla F z, v, z) + {0} x N
    {
        const int zd = n + m, wd = n + n + m;
        PolyhedralSet g(zd + wd);
        for (const auto& p : nc.set.pieces) {
            ConvexPolyhedron q(zd + wd);
            for (int r = 0; r < n; ++r) {
                Vec a = Vec::Zero(zd + wd);
                a[zd + r] = 1.0;
                a[r] = 1.0;
                a.segment(n, m) = -nab.row(r);
                q.add_eq(a, 0.0);
            }
            auto convert = [&](const LinCon& cc, bool eq) {
                Vec a = Vec::Zero(zd + wd);
                // rows of N act on (w2, w3) - (v, z)
                a.segment(zd + n, n + m) = cc.a;
                a.head(n + m) = -cc.a;
                if (eq)
                    q.add_eq(a, cc.b);
                else
                    q.add_ineq(a, cc.b);
            };
            for (const auto& cc : p.ineqs) convert(cc, false);
            for (const auto& cc : p.eqs) convert(cc, true);
            g.append(std::move(q));
        }
        out.r_script_q = lsv_of_graph(g, zd, wd, params).value;
    }
    double tol = 1e-7;
    out.ordering_ok = out.r_sigma >= std::max(out.r_script_c, out.r_q) - tol &&
                      std::max(out.r_script_c, out.r_q) >= out.r_script_q - tol &&
                      out.r_script_q >= -tol;
    return out;
}

// ---------------------------------------------------------------------------
// metric 2-regularity
// ---------------------------------------------------------------------------

namespace {

RegularityVerdict m2r_exact_polyhedral(const StructuredMapping& s, const Vec& u, const Vec& y,
                                       const Vec& w, const LsvParams& params) {
    RegularityVerdict v;
    v.property = RegProperty::Metric2Regular;
    v.trace = "cell-wise singular-direction search on the polyhedral graph";
    auto cells = analyze_graph_cells(s, u, y, params);
    for (const auto& cell : cells) {
        if (cell.reg > params.tols.lsv) continue;
        auto eta = eta_in_cell(cell.closure, w, s.out_dim());
        if (eta) {
            v.status = params.numeric_only ? VerdictStatus::NumericEvidenceAgainst
                                           : VerdictStatus::CertifiedNo;
            Vec wit(w.size() + eta->size());
            wit << w, *eta;
            v.witness = wit;
            v.notes.push_back("singular cell reachable along the direction");
            return v;
        }
    }
    v.status = params.numeric_only ? VerdictStatus::NumericEvidenceFor
                                   : VerdictStatus::CertifiedYes;
    v.modulus = 0.0;  // Reg stays bounded below on every reachable cell
    return v;
}

}  // namespace

RegularityVerdict check_metric_2_regularity(const StructuredMapping& s, const Vec& u, const Vec& y,
                                            const Vec& w_in, const LsvParams& params) {
    if (!s.on_graph(u, y, 1e-7)) throw BasepointOffGraph("check_metric_2_regularity");
    if (w_in.norm() < 1e-14) throw Error("metric 2-regularity needs a nonzero direction");
    Vec w = w_in / w_in.norm();

    HomogeneousPiecewiseMap ds = graphical_derivative(s, u, y, params.tols);
    if (ds.value_at(w).pruned(params.tols.lp).is_empty())
        throw EmptyGraphicalDerivative("check_metric_2_regularity");

    RegularityVerdict mr = check_metric_regularity(s, u, y, params);
    if (mr.status == VerdictStatus::CertifiedYes) {
        RegularityVerdict v;
        v.property = RegProperty::Metric2Regular;
        v.status = VerdictStatus::CertifiedYes;
        v.trace = "metric regularity propagates to every admissible direction";
        v.modulus = mr.modulus;
        return v;
    }

    if (s.has_polyhedral_graph()) {
        try {
            return m2r_exact_polyhedral(s, u, y, w, params);
        } catch (const PatternOverflow&) {
            // fall through to the numeric pipeline
        }
    }

    RegularityVerdict v;
    v.property = RegProperty::Metric2Regular;

    // sum-form route when the mapping is F + C
    if (const auto* sp = std::get_if<SmSmoothPlus>(&s.node())) {
        const StructuredMapping& c = *sp->c;
        Vec yc = y - sp->f.eval(u);
        HomogeneousPiecewiseMap dc = graphical_derivative(c, u, yc, params.tols);
        PolyhedralSet eta_set = dc.value_at(w).pruned(params.tols.lp);
        if (eta_set.is_empty()) throw EmptyGraphicalDerivative("sum-form direction set");
        bool singleton =
            eta_set.pieces.size() == 1 && affine_dimension(eta_set.pieces[0], params.tols.lp) == 0;
        LsvInstance inst = sum_form_instance(sp->f, c);
        Vec xi(u.size() + yc.size());
        xi << u, yc;

        std::vector<Vec> etas;
        if (singleton) {
            auto pt = relative_interior_point(eta_set.pieces[0], params.tols.lp);
            etas.push_back(pt ? *pt : Vec(Vec::Zero(s.out_dim())));
        } else {
            etas = eta_samples(dc, w, s.out_dim(), params.seed);
        }

        double best_bound = -kInf;
        bool bound_certified = false;
        {
            Vec omega(xi.size());
            omega << w, etas.front();
            BoundResult b32 = subderivative_bound_calmness(inst, xi, omega, std::nullopt, params);
            BoundResult b35 = subderivative_bound_range(inst, xi, omega, params);
            for (const BoundResult* b : {&b32, &b35}) {
                if (b->produced && b->bound > best_bound) {
                    best_bound = b->bound;
                    bound_certified = b->certified;
                }
            }
        }

        double est_inf = kInf;
        Vec eta_min;
        for (const Vec& eta : etas) {
            Vec omega(xi.size());
            omega << w, eta;
            try {
                SubderivativeEstimate est = lsv_subderivative(inst, xi, omega, params);
                double val = est.diverging ? kInf : est.value;
                if (val < est_inf) {
                    est_inf = val;
                    eta_min = eta;
                }
            } catch (const NonConvergent&) {
            }
        }

        if (singleton && bound_certified && best_bound > params.tols.lsv) {
            v.status = VerdictStatus::CertifiedYes;
            v.trace = "sum-form subderivative bound";
            double denom = std::isfinite(est_inf) && est_inf > 0 ? est_inf : best_bound;
            v.modulus = 1.0 / denom;
            v.notes.push_back("certified lower bound " + std::to_string(best_bound));
            return v;
        }
        if (est_inf <= 1e-5) {
            v.status = VerdictStatus::NumericEvidenceAgainst;
            v.trace = "sum-form subderivative estimate";
            if (eta_min.size()) {
                Vec wit(w.size() + eta_min.size());
                wit << w, eta_min;
                v.witness = wit;
            }
            return v;
        }
        v.status = VerdictStatus::NumericEvidenceFor;
        v.trace = "sum-form subderivative estimate";
        if (std::isfinite(est_inf) && est_inf > 0) v.modulus = 1.0 / est_inf;
        else v.modulus = 0.0;
        if (best_bound > params.tols.lsv)
            v.notes.push_back("lower bound " + std::to_string(best_bound) +
                              " (evidence-grade side conditions)");
        return v;
    }

    // direct route: numeric subderivative of Reg on the graph
    LsvInstance inst = reg_instance(s);
    Vec xi(u.size() + y.size());
    xi << u, y;
    double est_inf = kInf;
    Vec eta_min;
    for (const Vec& eta : eta_samples(ds, w, s.out_dim(), params.seed)) {
        Vec omega(xi.size());
        omega << w, eta;
        try {
            SubderivativeEstimate est = lsv_subderivative(inst, xi, omega, params);
            double val = est.diverging ? kInf : est.value;
            if (val < est_inf) {
                est_inf = val;
                eta_min = eta;
            }
        } catch (const NonConvergent&) {
        }
    }
    if (est_inf <= 1e-5) {
        v.status = VerdictStatus::NumericEvidenceAgainst;
        v.trace = "direct subderivative estimate";
        if (eta_min.size()) {
            Vec wit(w.size() + eta_min.size());
            wit << w, eta_min;
            v.witness = wit;
        }
        return v;
    }
    v.status = VerdictStatus::NumericEvidenceFor;
    v.trace = "direct subderivative estimate";
    if (std::isfinite(est_inf) && est_inf > 0) v.modulus = 1.0 / est_inf;
    return v;
}

// ---------------------------------------------------------------------------
// sufficient conditions
// ---------------------------------------------------------------------------

RegularityVerdict m2r_sufficient_constant_polyhedral(const PolyMap& f, const ClosedSet& c0,
                                                     const Vec& u, const Vec& y, const Vec& w,
                                                     const LsvParams& params) {
    const int n = f.in_dim, m = f.out_dim;
    if (c0.dim() != m) throw DimensionMismatch("m2r_sufficient_constant_polyhedral");
    RegularityVerdict v;
    v.property = RegProperty::Metric2Regular;
    v.trace = "Eq(5.3)";
    PolyhedralCone nc = c0.normal_cone_at(y, params.tols);
    Mat nab = f.nabla(u);                      // n x m
    Mat nabp = f.nabla_semiderivative(u, w);   // n x m

    ConicSystem sys(2 * m);
    Mat sel1 = Mat::Zero(m, 2 * m);
    sel1.leftCols(m) = -Mat::Identity(m, m);
    sys.add_membership(sel1, nc.set);
    Mat sel2 = Mat::Zero(m, 2 * m);
    sel2.rightCols(m) = Mat::Identity(m, m);
    sys.add_membership(sel2, nc.set);
    Mat eqs(2 * n, 2 * m);
    eqs.setZero();
    eqs.topLeftCorner(n, m) = nab;
    eqs.bottomLeftCorner(n, m) = nabp;
    eqs.bottomRightCorner(n, m) = -nab;
    sys.add_eq_rows(eqs);
    PolyhedralCone prem = sys.project_to(iota_vec(0, m), params.tols);
    auto wit = cone_nonzero_point(prem, params.tols.lp);
    if (wit) {
        v.status = VerdictStatus::SufficientConditionFails;
        v.witness = *wit / wit->norm();
    } else {
        v.status = VerdictStatus::SufficientConditionHolds;
        if (!c0.is_polyhedral())
            v.notes.push_back(
                "condition evaluated outside its polyhedral scope; no 2-regularity assertion");
    }
    return v;
}

RegularityVerdict m2r_sufficient_polyhedral_mapping(const PolyMap& f, const StructuredMapping& c,
                                                    const Vec& u, const Vec& y, const Vec& w,
                                                    const LsvParams& params) {
    const int n = f.in_dim, m = f.out_dim;
    if (!c.has_polyhedral_graph()) throw NotPolyhedral("m2r_sufficient_polyhedral_mapping");
    HomogeneousPiecewiseMap dc = graphical_derivative(c, u, y, params.tols);
    if (dc.value_at(w).pruned(params.tols.lp).is_empty())
        throw DirectionNotInDomain("m2r_sufficient_polyhedral_mapping");
    HomogeneousPiecewiseMap cod = coderivative(c, u, y, params.tols);
    Mat nab = f.nabla(u), nabp = f.nabla_semiderivative(u, w);

    RegularityVerdict v;
    v.property = RegProperty::Metric2Regular;
    v.trace = "Eq(5.4)";
    ConicSystem sys(2 * m);
    {
        Mat sel = Mat::Zero(m + n, 2 * m);
        sel.topLeftCorner(m, m) = Mat::Identity(m, m);
        sel.bottomLeftCorner(n, m) = -nab;
        sys.add_membership(sel, cod.graph);
    }
    {
        Mat sel = Mat::Zero(m + n, 2 * m);
        sel.topRightCorner(m, m) = Mat::Identity(m, m);
        sel.bottomLeftCorner(n, m) = -nabp;
        sel.bottomRightCorner(n, m) = -nab;
        sys.add_membership(sel, cod.graph);
    }
    PolyhedralCone prem = sys.project_to(iota_vec(0, m), params.tols);
    auto wit = cone_nonzero_point(prem, params.tols.lp);
    if (wit) {
        v.status = VerdictStatus::SufficientConditionFails;
        v.witness = *wit / wit->norm();
    } else {
        v.status = VerdictStatus::SufficientConditionHolds;
    }
    return v;
}

RegularityVerdict m2r_sufficient_indicator_polyhedral(const PolyMap& f, const ClosedSet& c0,
                                                      const Vec& u, const Vec& w,
                                                      const LsvParams& params) {
    const int n = f.in_dim, m = f.out_dim;
    if (c0.dim() != n) throw DimensionMismatch("m2r_sufficient_indicator_polyhedral");
    PolyhedralCone tc = c0.tangent_cone_at(u, params.tols);
    if (!tc.contains(w, 1e-7)) throw DirectionNotTangent("m2r_sufficient_indicator_polyhedral");
    PolyhedralCone nc = c0.normal_cone_at(u, params.tols);
    Mat nab = f.nabla(u), nabp = f.nabla_semiderivative(u, w);

    RegularityVerdict v;
    v.property = RegProperty::Metric2Regular;
    v.trace = "Eq(5.5)";
    // vars (z in R^m, r in R^m, s in R^n)
    const int nv = 2 * m + n;
    ConicSystem sys(nv);
    {
        Mat sel = Mat::Zero(n, nv);
        sel.leftCols(m) = nab;
        sys.add_membership(sel, nc.set);
    }
    {
        Mat sel = Mat::Zero(n, nv);
        sel.rightCols(n) = Mat::Identity(n, n);
        sys.add_membership(sel, nc.set);
    }
    {
        Mat eqs = Mat::Zero(n, nv);
        eqs.leftCols(m) = nabp;
        eqs.middleCols(m, m) = -nab;
        eqs.rightCols(n) = -Mat::Identity(n, n);
        sys.add_eq_rows(eqs);
    }
    PolyhedralCone prem = sys.project_to(iota_vec(0, m), params.tols);
    auto wit = cone_nonzero_point(prem, params.tols.lp);
    if (wit) {
        v.status = VerdictStatus::SufficientConditionFails;
        v.witness = *wit / wit->norm();
    } else {
        v.status = VerdictStatus::SufficientConditionHolds;
        if (!c0.is_polyhedral())
            v.notes.push_back("polyhedral-scope condition held over a nonpolyhedral set; pair "
                              "with the separation check before asserting");
    }
    return v;
}

RegularityVerdict m2r_sufficient_constant_closed(const PolyMap& f, const ClosedSet& c0,
                                                 const Vec& u, const Vec& y, const Vec& w,
                                                 const LsvParams& params) {
    const int n = f.in_dim, m = f.out_dim;
    if (c0.dim() != m) throw DimensionMismatch("m2r_sufficient_constant_closed");
    PolyhedralCone nc = c0.normal_cone_at(y, params.tols);  // NormalConeUnavailable may throw
    Mat nab = f.nabla(u), nabp = f.nabla_semiderivative(u, w);
    RegularityVerdict v;
    v.property = RegProperty::Metric2Regular;
    v.trace = "Eq(5.8)";
    // vars (z in R^m, r in R^m)
    ConicSystem sys(2 * m);
    {
        Mat sel = Mat::Zero(m, 2 * m);
        sel.leftCols(m) = -Mat::Identity(m, m);
        sys.add_membership(sel, nc.set);
    }
    {
        Mat eqs = Mat::Zero(2 * n, 2 * m);
        eqs.topLeftCorner(n, m) = nab;
        eqs.bottomLeftCorner(n, m) = nabp;
        eqs.bottomRightCorner(n, m) = -nab;
        sys.add_eq_rows(eqs);
    }
    PolyhedralCone prem = sys.project_to(iota_vec(0, m), params.tols);
    auto wit = cone_nonzero_point(prem, params.tols.lp);
    if (wit) {
        v.status = VerdictStatus::SufficientConditionFails;
        v.witness = *wit / wit->norm();
    } else {
        v.status = VerdictStatus::SufficientConditionHolds;
    }
    return v;
}

RegularityVerdict m2r_sufficient_indicator_closed(const PolyMap& f, const ClosedSet& c0,
                                                  const Vec& u, const Vec& w,
                                                  const LsvParams& params) {
    const int n = f.in_dim;
    if (c0.dim() != n) throw DimensionMismatch("m2r_sufficient_indicator_closed");
    PolyhedralCone nc = c0.normal_cone_at(u, params.tols);
    PolyhedralCone rge = PolyhedralCone::subspace_spanned_by(f.nabla(u));
    RegularityVerdict v;
    v.property = RegProperty::Metric2Regular;
    PolyhedralCone clash = intersect(rge, nc);
    auto overlap = cone_nonzero_point(clash, params.tols.lp);
    if (overlap) {
        v.status = VerdictStatus::SufficientConditionFails;
        v.trace = "Eq(5.6)";
        v.witness = *overlap / overlap->norm();
        v.notes.push_back("range/normal-cone separation failed; the kernel condition alone "
                          "cannot assert 2-regularity here");
        return v;
    }
    RegularityVerdict inner = m2r_sufficient_indicator_polyhedral(f, c0, u, w, params);
    inner.trace = "Eq(5.6)+Eq(5.5)";
    inner.notes.clear();
    if (inner.status == VerdictStatus::SufficientConditionHolds)
        inner.notes.push_back("separation and kernel condition both hold; 2-regularity asserted");
    return inner;
}

RegularityVerdict m2r_sufficient_product_sum(const PolyMap& g, const StructuredMapping& r,
                                             const StructuredMapping& t, const Vec& x,
                                             const Vec& sigma, const Vec& yr, const Vec& nut,
                                             const Vec& w, const Vec& mu,
                                             const LsvParams& params) {
    const int k = r.in_dim(), l = t.in_dim();
    const int p = r.out_dim(), q = t.out_dim();
    if (g.in_dim != k + l || g.out_dim != p + q) throw DimensionMismatch("m2r_sufficient_product_sum");
    Vec xs(k + l);
    xs << x, sigma;
    // (a) holds for polynomial data
    HomogeneousPiecewiseMap dr = graphical_derivative(r, x, yr, params.tols);
    HomogeneousPiecewiseMap dt = graphical_derivative(t, sigma, nut, params.tols);
    if (dr.value_at(w).pruned(params.tols.lp).is_empty() ||
        dt.value_at(mu).pruned(params.tols.lp).is_empty())
        throw DirectionNotInDomain("m2r_sufficient_product_sum");
    HomogeneousPiecewiseMap codt = coderivative(t, sigma, nut, params.tols);
    if (set_nonzero_point(codt.value_at(Vec::Zero(q)).pruned(params.tols.lp)))
        throw ConditionFailed("(b)", "T is not Lipschitz-like at the basepoint");
    if (!cone_is_trivial(codt.kernel(), params.tols.lp))
        throw ConditionFailed("(c)", "T is not metrically regular at the basepoint");
    HomogeneousPiecewiseMap codr = coderivative(r, x, yr, params.tols);
    if (!cone_is_trivial(codr.range().range, params.tols.lp))
        throw ConditionFailed("(d)", "rge D*R is nontrivial");
    Mat nabg = g.nabla(xs);              // (k+l) x (p+q)
    Mat nab_x = nabg.topRows(k);         // k x (p+q)
    Mat nab_s = nabg.bottomRows(l);      // l x (p+q)
    PolyhedralCone rge_t = codt.range().range;
    PolyhedralCone rge_gs = PolyhedralCone::subspace_spanned_by(nab_s);
    if (cone_nonzero_point(intersect(rge_gs, rge_t), params.tols.lp))
        throw ConditionFailed("(d)", "rge(nabla_sigma G) meets rge D*T");

    Vec wm(k + l);
    wm << w, mu;
    Mat nabpg = g.nabla_semiderivative(xs, wm);
    Mat nabp_x = nabpg.topRows(k), nabp_s = nabpg.bottomRows(l);

    // (e): vars (z in R^{p+q}, beta in R^{p+q})
    const int zd = p + q;
    ConicSystem sys(2 * zd);
    {
        Mat eqs = Mat::Zero(2 * k, 2 * zd);
        eqs.topLeftCorner(k, zd) = nab_x;
        eqs.bottomLeftCorner(k, zd) = nabp_x;
        eqs.bottomRightCorner(k, zd) = nab_x;
        sys.add_eq_rows(eqs);
    }
    {
        // (zeta, -nabla_sigma G z) in gph D*T
        Mat sel = Mat::Zero(q + l, 2 * zd);
        sel.block(0, p, q, q) = Mat::Identity(q, q);
        sel.block(q, 0, l, zd) = -nab_s;
        sys.add_membership(sel, codt.graph);
    }
    {
        // -(nabla_sigma G)' z - nabla_sigma G beta in rge D*T
        Mat sel = Mat::Zero(l, 2 * zd);
        sel.leftCols(zd) = -nabp_s;
        sel.rightCols(zd) = -nab_s;
        sys.add_membership(sel, rge_t.set);
    }
    PolyhedralCone prem = sys.project_to(iota_vec(0, zd), params.tols);
    RegularityVerdict v;
    v.property = RegProperty::Metric2Regular;
    v.trace = "Thm(5.14)(e)";
    auto wit = cone_nonzero_point(prem, params.tols.lp);
    if (wit) {
        v.status = VerdictStatus::SufficientConditionFails;
        v.witness = *wit / wit->norm();
    } else {
        v.status = VerdictStatus::SufficientConditionHolds;
    }
    return v;
}

// ---------------------------------------------------------------------------
// Gfrerer regularity
// ---------------------------------------------------------------------------

RegularityVerdict check_gfrerer(const StructuredMapping& s, const Vec& u, const Vec& y,
                                const Vec& w, const Vec& eta, const LsvParams& params) {
    if (!s.on_graph(u, y, 1e-7)) throw BasepointOffGraph("check_gfrerer");
    RegularityVerdict v;
    v.property = RegProperty::GfrererRegular;

    HomogeneousPiecewiseMap ds = graphical_derivative(s, u, y, params.tols);
    Vec weta(w.size() + eta.size());
    weta << w, eta;
    if (!ds.graph.contains(weta, 1e-7)) {
        v.status = VerdictStatus::CertifiedYes;
        v.trace = "direction leaves the graph tangent cone";
        return v;
    }

    RegularityVerdict mr = check_metric_regularity(s, u, y, params);
    if (mr.status == VerdictStatus::CertifiedYes) {
        v.status = VerdictStatus::CertifiedYes;
        v.trace = "metric regularity propagates";
        v.modulus = mr.modulus;
        return v;
    }

    if (s.has_polyhedral_graph()) {
        try {
            v.trace = "cell-wise singular-direction membership";
            auto cells = analyze_graph_cells(s, u, y, params);
            for (const auto& cell : cells) {
                if (cell.reg > params.tols.lsv) continue;
                if (cell.closure.contains(weta, 1e-9)) {
                    v.status = params.numeric_only ? VerdictStatus::NumericEvidenceAgainst
                                                   : VerdictStatus::CertifiedNo;
                    v.witness = weta;
                    return v;
                }
            }
            v.status = params.numeric_only ? VerdictStatus::NumericEvidenceFor
                                           : VerdictStatus::CertifiedYes;
            v.modulus = 0.0;
            return v;
        } catch (const PatternOverflow&) {
        }
    }

    LsvInstance inst = reg_instance(s);
    Vec xi(u.size() + y.size());
    xi << u, y;
    try {
        SubderivativeEstimate est = lsv_subderivative(inst, xi, weta, params);
        double val = est.diverging ? kInf : est.value;
        if (val <= 1e-5) {
            v.status = VerdictStatus::NumericEvidenceAgainst;
            v.trace = "direct subderivative estimate";
            v.witness = weta;
        } else {
            v.status = VerdictStatus::NumericEvidenceFor;
            v.trace = "direct subderivative estimate";
            if (std::isfinite(val) && val > 0) v.modulus = 1.0 / val;
            else v.modulus = 0.0;
        }
    } catch (const NonConvergent&) {
        v.status = VerdictStatus::NumericEvidenceAgainst;
        v.trace = "nonconvergent subderivative estimate";
    }
    return v;
}

M2rGfrererReport m2r_gfrerer_consistency(const StructuredMapping& s, const Vec& u, const Vec& y,
                                         const Vec& w, const LsvParams& params) {
    M2rGfrererReport rep;
    rep.m2r = check_metric_2_regularity(s, u, y, w, params);
    HomogeneousPiecewiseMap ds = graphical_derivative(s, u, y, params.tols);
    bool all_yes = true;
    for (const Vec& eta : eta_samples(ds, w / w.norm(), s.out_dim(), params.seed + 1)) {
        RegularityVerdict g = check_gfrerer(s, u, y, w / w.norm(), eta, params);
        all_yes = all_yes && g.affirmative();
        rep.per_eta.push_back({eta, g});
    }
    rep.consistent = rep.m2r.affirmative() == all_yes;
    return rep;
}

// ---------------------------------------------------------------------------
// classic 2-regularity
// ---------------------------------------------------------------------------

Classic2RegReport classic_2_regularity(const PolyMap& f, const Vec& u, const Vec& w,
                                       const std::optional<PolyhedralSet>& input_set,
                                       const std::optional<std::pair<PolyhedralSet, Vec>>& output_set,
                                       const LsvParams& params) {
    const int n = f.in_dim, m = f.out_dim;
    Mat nab = f.nabla(u);                     // n x m
    Mat nabp = f.nabla_semiderivative(u, w);  // n x m
    Mat J = nab.transpose();                  // m x n
    Mat Jp = nabp.transpose();                // m x n

    Classic2RegReport rep;
    rep.verdict.property = RegProperty::Classic2Regular;
    rep.verdict.trace = "kernel/semiderivative implication";

    // kernel route: [z in ker nabla F, nabla' z in rge nabla F] => z = 0
    Eigen::FullPivLU<Mat> lu(nab);
    lu.setThreshold(1e-10);
    bool kernel_route;
    Vec witness;
    if (static_cast<int>(lu.rank()) == m) {
        kernel_route = true;  // trivial kernel
    } else {
        Mat K = lu.kernel();  // m x kdim
        // rge nabla F = col(nab); complement projector
        Eigen::FullPivLU<Mat> lun(nab.transpose());
        lun.setThreshold(1e-10);
        Mat Kn = lun.kernel();  // columns orthogonal to col(nab), n x cdim
        Mat T = Kn.transpose() * (nabp * K);
        Eigen::FullPivLU<Mat> lut(T);
        lut.setThreshold(1e-10);
        kernel_route = static_cast<int>(lut.rank()) == static_cast<int>(K.cols());
        if (!kernel_route) {
            Mat KT = lut.kernel();
            witness = K * KT.col(0);
            witness.normalize();
        }
    }

    // rank route: rge F'(u) + F''(u; w) ker F'(u) = R^m
    bool rank_route;
    {
        Eigen::FullPivLU<Mat> luj(J);
        luj.setThreshold(1e-10);
        Mat Kj = (static_cast<int>(luj.rank()) < n) ? Mat(luj.kernel()) : Mat(n, 0);
        Mat stack(m, n + Kj.cols());
        stack.leftCols(n) = J;
        if (Kj.cols() > 0) stack.rightCols(Kj.cols()) = Jp * Kj;
        Eigen::FullPivLU<Mat> lus(stack);
        lus.setThreshold(1e-10);
        rank_route = static_cast<int>(lus.rank()) == m;
    }
    if (kernel_route != rank_route)
        throw Error("classic 2-regularity internal routes disagree");
    rep.rank_route = rank_route;
    rep.verdict.status = kernel_route ? VerdictStatus::CertifiedYes : VerdictStatus::CertifiedNo;
    if (!kernel_route && witness.size()) rep.verdict.witness = witness;

    // literature condition over an input-space polyhedral set: the linear
    // hull route F'(u) L + F''(u;w)[ker F'(u) /\ T_{C0}(u)] = R^m
    if (input_set) {
        std::vector<Vec> span_dirs;
        for (const auto& piece : input_set->pieces) {
            Generators g = enumerate_generators(piece, params.tols.lp);
            for (const auto& vv : g.vertices) span_dirs.push_back(vv);
            for (const auto& rr : g.rays) span_dirs.push_back(rr);
            for (const auto& ll : g.lines) span_dirs.push_back(ll);
        }
        // linear hull spans differences and directions
        Mat L(n, static_cast<Eigen::Index>(span_dirs.size()));
        for (size_t i = 0; i < span_dirs.size(); ++i) L.col(static_cast<Eigen::Index>(i)) = span_dirs[i];
        PolyhedralCone hull = PolyhedralCone::subspace_spanned_by(L.cols() ? L : Mat::Zero(n, 1));
        PolyhedralCone tc = tangent_cone(*input_set, u, params.tols);
        Eigen::FullPivLU<Mat> luj(J);
        luj.setThreshold(1e-10);
        Mat Kj = (static_cast<int>(luj.rank()) < n) ? Mat(luj.kernel()) : Mat(n, 0);
        PolyhedralCone kerj = Kj.cols() ? PolyhedralCone::kernel_of(J) : PolyhedralCone::trivial(n);
        PolyhedralCone inter = intersect(kerj, tc);
        PolyhedralCone img = linear_image(inter, Jp);
        PolyhedralCone lhs = minkowski_sum(linear_image(hull, J), img);
        rep.span_condition = cone_is_trivial(polar(lhs), params.tols.lp);
    }

    // literature condition over an output-space set at y = F(u) in C0
    if (output_set) {
        const auto& [set, ybar] = *output_set;
        PolyhedralCone tcy = tangent_cone(set, ybar, params.tols);
        PolyhedralCone pre = linear_preimage(tcy, J);
        PolyhedralCone img = linear_image(pre, Jp);
        PolyhedralCone rgeJ = PolyhedralCone::subspace_spanned_by(J);
        PolyhedralCone lhs = minkowski_sum(minkowski_sum(rgeJ, img), negate_cone(tcy));
        rep.set_condition = cone_is_trivial(polar(lhs), params.tols.lp);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// curve falsifier
// ---------------------------------------------------------------------------

CurveFalsifierRecord curve_falsifier(const StructuredMapping& s, const Vec& u, const Vec& y,
                                     const std::function<std::pair<Vec, Vec>(double)>& curve,
                                     const std::vector<double>& schedule,
                                     const LsvParams& params) {
    auto [u0, y0] = curve(0.0);
    if ((u0 - u).norm() > 1e-9 || (y0 - y).norm() > 1e-9)
        throw CurveOffGraph("curve does not start at the basepoint");
    CurveFalsifierRecord rec;
    std::vector<double> ts = schedule;
    std::sort(ts.begin(), ts.end(), std::greater<double>());
    double first_norm = 0.0;
    for (double t : ts) {
        auto [ut, yt] = curve(t);
        if (!s.on_graph(ut, yt, 1e-6)) throw CurveOffGraph("curve point leaves the graph");
        double dn = (ut - u).norm();
        if (dn < 1e-12 * std::max(1.0, t)) throw Error("curve is constant at this scale");
        if (first_norm == 0.0) first_norm = dn;
        rec.ts.push_back(t);
        rec.reg_values.push_back(reg_value(s, ut, yt, params));
    }
    auto [umin, ymin] = curve(ts.back());
    (void)ymin;
    rec.initial_direction = (umin - u) / std::max(1e-300, (umin - u).norm());
    // evidence against: Reg <= tol * |u(t) - u| at the three smallest points
    int hits = 0;
    size_t npts = rec.ts.size();
    for (size_t i = npts >= 3 ? npts - 3 : 0; i < npts; ++i) {
        auto [ut, yt] = curve(rec.ts[i]);
        (void)yt;
        if (rec.reg_values[i] <= params.tols.lsv * std::max(1.0, (ut - u).norm())) ++hits;
    }
    rec.evidence_against = hits >= std::min<int>(3, static_cast<int>(npts));
    return rec;
}

}  // namespace vreg
