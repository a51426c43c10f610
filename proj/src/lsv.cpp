#include "vreg/lsv.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace vreg {
namespace {

constexpr double kEigTol = 1e-10;

// (z, eta') with eta = eta' - M z: shears a (z,eta) graph into z -> Mz + value
PolyhedralSet shear_by_matrix(const PolyhedralSet& g, int z_dim, int eta_dim, const Mat& M) {
    Mat T = Mat::Identity(z_dim + eta_dim, z_dim + eta_dim);
    T.block(z_dim, 0, eta_dim, z_dim) = -M;
    PolyhedralSet out(z_dim + eta_dim);
    for (const auto& p : g.pieces) out.append(substitute_affine(p, T, Vec::Zero(z_dim + eta_dim)));
    return out;
}

struct RatioScan {
    double best = kInf;          // minimal feasible stationary ratio
    double best_max = -kInf;     // maximal feasible stationary ratio
    bool any = false;
};

// stationary values of |num(x)|^2 / |den(x)|^2 over a conic piece, collected
// over all active subsets; feasibility of an eigenspace is decided by LP on
// piece /\ span with a nonzero denominator block
RatioScan conic_ratio_scan(const ConvexPolyhedron& piece_in, const std::vector<int>& num_idx,
                           const std::vector<int>& den_idx, const Tols& tols) {
    RatioScan out;
    ConvexPolyhedron piece = remove_redundancy(piece_in, tols.lp);
    if (piece.is_empty(tols.lp)) return out;
    const int d = piece.dim;
    const int mi = static_cast<int>(piece.ineqs.size());
    if (mi > 16) throw PatternOverflow("conic ratio scan row cap");
    Mat E = piece.eq_matrix();
    const int re = static_cast<int>(E.rows());

    auto consider_subspace = [&](const Mat& span_cols, double rho) {
        // piece /\ span(span_cols) must contain a point with nonzero den part
        if (span_cols.cols() == 0) return;
        Eigen::FullPivLU<Mat> lu(span_cols.transpose());
        lu.setThreshold(kEigTol);
        Mat K = lu.kernel();  // complement basis; x in span <=> K^T x = 0
        ConvexPolyhedron c = piece;
        if (static_cast<int>(lu.rank()) < d) {
            for (Eigen::Index cidx = 0; cidx < K.cols(); ++cidx) {
                Vec k = K.col(cidx);
                if (k.norm() > 1e-12) c.add_eq(k / k.norm(), 0.0);
            }
        }
        for (int j : den_idx) {
            for (double sg : {1.0, -1.0}) {
                ConvexPolyhedron q = c;
                q.add_eq(unit_vec(d, j, sg), 1.0);
                if (lp_feasible_point(q.ineq_matrix(), q.ineq_rhs(), q.eq_matrix(), q.eq_rhs(),
                                      tols.lp)) {
                    out.any = true;
                    out.best = std::min(out.best, rho);
                    out.best_max = std::max(out.best_max, rho);
                    return;
                }
            }
        }
    };

    std::vector<int> subset;
    std::function<void(int)> rec = [&](int start) {
        {
            const int k = static_cast<int>(subset.size());
            Mat Act(k + re, d);
            for (int i = 0; i < k; ++i) Act.row(i) = piece.ineqs[static_cast<size_t>(subset[static_cast<size_t>(i)])].a;
            for (int i = 0; i < re; ++i) Act.row(k + i) = E.row(i);
            Mat V;
            if (Act.rows() == 0) {
                V = Mat::Identity(d, d);
            } else {
                Eigen::FullPivLU<Mat> lu(Act);
                lu.setThreshold(kEigTol);
                V = (static_cast<int>(lu.rank()) < d) ? Mat(lu.kernel()) : Mat(d, 0);
            }
            if (V.cols() > 0) {
                const int dl = static_cast<int>(V.cols());
                Mat Vn(static_cast<int>(num_idx.size()), dl), Vd(static_cast<int>(den_idx.size()), dl);
                for (size_t i = 0; i < num_idx.size(); ++i) Vn.row(static_cast<Eigen::Index>(i)) = V.row(num_idx[i]);
                for (size_t i = 0; i < den_idx.size(); ++i) Vd.row(static_cast<Eigen::Index>(i)) = V.row(den_idx[i]);
                Mat Qn = Vn.transpose() * Vn;
                Mat Qd = Vd.transpose() * Vd;
                Eigen::SelfAdjointEigenSolver<Mat> ed(Qd);
                double dmax = std::max(1.0, ed.eigenvalues().maxCoeff());
                std::vector<int> pos, nul;
                for (int i = 0; i < dl; ++i)
                    (ed.eigenvalues()[i] > kEigTol * dmax ? pos : nul).push_back(i);
                if (!pos.empty()) {
                    const int kp = static_cast<int>(pos.size());
                    const int kb = static_cast<int>(nul.size());
                    Mat B(dl, dl);
                    for (int i = 0; i < kp; ++i)
                        B.col(i) = ed.eigenvectors().col(pos[static_cast<size_t>(i)]) /
                                   std::sqrt(ed.eigenvalues()[pos[static_cast<size_t>(i)]]);
                    for (int i = 0; i < kb; ++i)
                        B.col(kp + i) = ed.eigenvectors().col(nul[static_cast<size_t>(i)]);
                    Mat M = B.transpose() * Qn * B;
                    Mat Maa = M.topLeftCorner(kp, kp);
                    Mat S = Maa;
                    Mat MbbPinvMba;
                    Mat NullB(kb, 0);
                    if (kb > 0) {
                        Mat Mab = M.topRightCorner(kp, kb);
                        Mat Mbb = M.bottomRightCorner(kb, kb);
                        Eigen::SelfAdjointEigenSolver<Mat> eb(Mbb);
                        double bmax = std::max(1.0, eb.eigenvalues().maxCoeff());
                        Mat pinv = Mat::Zero(kb, kb);
                        std::vector<int> bnull;
                        for (int i = 0; i < kb; ++i) {
                            if (eb.eigenvalues()[i] > kEigTol * bmax)
                                pinv += eb.eigenvectors().col(i) * eb.eigenvectors().col(i).transpose() /
                                        eb.eigenvalues()[i];
                            else
                                bnull.push_back(i);
                        }
                        MbbPinvMba = pinv * Mab.transpose();
                        S = Maa - Mab * MbbPinvMba;
                        NullB.resize(kb, static_cast<int>(bnull.size()));
                        for (size_t i = 0; i < bnull.size(); ++i)
                            NullB.col(static_cast<Eigen::Index>(i)) = eb.eigenvectors().col(bnull[i]);
                    }
                    Eigen::SelfAdjointEigenSolver<Mat> es(S);
                    Vec evs = es.eigenvalues();
                    // eigenvalues below the pencil's numerical precision are zero
                    double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
                    int i = 0;
                    while (i < kp) {
                        int j = i;
                        while (j + 1 < kp && std::abs(evs[j + 1] - evs[i]) <= 1e-8 * (1.0 + std::abs(evs[i])))
                            ++j;
                        double rho = std::max(0.0, evs[i]);
                        if (rho <= 1e-13 * scale) rho = 0.0;
                        // eigenspace columns in full coordinates
                        int corner = j - i + 1;
                        Mat span_cols(d, corner + NullB.cols());
                        for (int t = 0; t < corner; ++t) {
                            Vec a = es.eigenvectors().col(i + t);
                            Vec c(dl);
                            c.head(kp) = a;
                            if (kb > 0) c.tail(kb) = -MbbPinvMba * a;
                            span_cols.col(t) = V * (B * c);
                        }
                        for (int t = 0; t < NullB.cols(); ++t) {
                            Vec c = Vec::Zero(dl);
                            c.tail(kb) = NullB.col(t);
                            span_cols.col(corner + t) = V * (B * c);
                        }
                        consider_subspace(span_cols, rho);
                        i = j + 1;
                    }
                }
            }
        }
        for (int r = start; r < mi; ++r) {
            subset.push_back(r);
            rec(r + 1);
            subset.pop_back();
        }
    };
    rec(0);
    return out;
}

std::vector<int> range_ints(int from, int count) {
    std::vector<int> v(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<size_t>(i)] = from + i;
    return v;
}

bool all_pieces_conic(const PolyhedralSet& g) {
    for (const auto& p : g.pieces)
        if (!p.is_cone(1e-9)) return false;
    return true;
}

std::vector<Vec> sphere_candidates(const PolyhedralSet& graph, int z_dim, int grid_points) {
    std::vector<Vec> zs;
    if (z_dim == 1) {
        zs.push_back(make_vec({1.0}));
        zs.push_back(make_vec({-1.0}));
    } else if (z_dim == 2) {
        for (int k = 0; k < grid_points; ++k) {
            double th = 2.0 * M_PI * k / grid_points;
            zs.push_back(make_vec({std::cos(th), std::sin(th)}));
        }
    } else if (z_dim == 3) {
        int na = std::min(grid_points, 144), nb = std::max(8, na / 2);
        for (int a = 0; a < na; ++a) {
            double th = 2.0 * M_PI * a / na;
            for (int b = 1; b < nb; ++b) {
                double ph = M_PI * b / nb;
                Vec z(3);
                z << std::sin(ph) * std::cos(th), std::sin(ph) * std::sin(th), std::cos(ph);
                zs.push_back(z);
            }
        }
        zs.push_back(make_vec({0.0, 0.0, 1.0}));
        zs.push_back(make_vec({0.0, 0.0, -1.0}));
    }
    // domain generators make low-dimensional domains exact
    std::vector<int> keep = range_ints(0, z_dim);
    PolyhedralSet dom = project_set(graph, keep);
    for (const auto& p : dom.pieces) {
        Generators g = enumerate_generators(p);
        for (const auto& r : g.rays) zs.push_back(r);
        for (const auto& l : g.lines) {
            zs.push_back(l);
            zs.push_back(-l);
        }
        auto ri = relative_interior_point(p);
        if (ri && ri->norm() > 1e-10) zs.push_back(*ri / ri->norm());
    }
    return zs;
}

}  // namespace

LsvValue exact_conic_lsv(const PolyhedralSet& graph, int z_dim, int eta_dim, const Tols& tols) {
    LsvValue out;
    out.exact = true;
    std::vector<int> num = range_ints(z_dim, eta_dim);
    std::vector<int> den = range_ints(0, z_dim);
    for (const auto& p : graph.pieces) {
        RatioScan scan = conic_ratio_scan(p, num, den, tols);
        if (scan.any) out.value = std::min(out.value, std::sqrt(std::max(0.0, scan.best)));
    }
    return out;
}

double exact_conic_sup_ratio(const PolyhedralSet& graph, int z_dim, int eta_dim,
                             const Tols& tols) {
    // sup |z| / |eta| over the graph; +inf when some (z,0), z != 0 exists
    std::vector<int> num = range_ints(0, z_dim);
    std::vector<int> den = range_ints(z_dim, eta_dim);
    // kernel check
    PolyhedralSet ker(z_dim);
    for (const auto& p : graph.pieces) {
        ConvexPolyhedron q(z_dim);
        for (const auto& c : p.ineqs) q.add_ineq(c.a.head(z_dim), c.b);
        for (const auto& c : p.eqs) q.add_eq(c.a.head(z_dim), c.b);
        // force eta = 0 by substitution: rows already evaluated at eta = 0
        ker.append(std::move(q));
    }
    if (set_nonzero_point(ker.pruned())) return kInf;
    double best = 0.0;
    for (const auto& p : graph.pieces) {
        RatioScan scan = conic_ratio_scan(p, num, den, tols);
        if (scan.any) best = std::max(best, std::sqrt(std::max(0.0, scan.best_max)));
    }
    return best;
}

LsvValue grid_lsv(const PolyhedralSet& graph, int z_dim, int eta_dim, const LsvParams& params) {
    LsvValue out;
    out.exact = false;
    if (z_dim > 3) {
        // multistart projected local search on the sphere
        std::mt19937_64 rng(params.seed);
        std::normal_distribution<double> nd;
        auto eval = [&](const Vec& z) {
            return distance_to_set(Vec::Zero(eta_dim), graph_slice(graph, z, eta_dim));
        };
        double best = kInf;
        for (int s = 0; s < params.multistart; ++s) {
            Vec z(z_dim);
            for (int j = 0; j < z_dim; ++j) z[j] = nd(rng);
            z.normalize();
            double cur = eval(z);
            double step = 0.5;
            for (int it = 0; it < 200 && step > 1e-9; ++it) {
                bool improved = false;
                for (int j = 0; j < z_dim; ++j) {
                    for (double sg : {1.0, -1.0}) {
                        Vec zc = z + sg * step * unit_vec(z_dim, j);
                        zc.normalize();
                        double v = eval(zc);
                        if (v < cur - 1e-15) {
                            cur = v;
                            z = zc;
                            improved = true;
                        }
                    }
                }
                if (!improved) step *= 0.5;
            }
            best = std::min(best, cur);
        }
        out.value = best;
        return out;
    }
    auto eval = [&](const Vec& z) {
        return distance_to_set(Vec::Zero(eta_dim), graph_slice(graph, z, eta_dim));
    };
    std::vector<Vec> zs = sphere_candidates(graph, z_dim, params.grid_points);
    double best = kInf;
    Vec zbest;
    for (const Vec& z : zs) {
        double v = eval(z);
        if (v < best) {
            best = v;
            zbest = z;
        }
    }
    if (z_dim == 2 && zbest.size()) {
        // local refinement around the best angle
        double th = std::atan2(zbest[1], zbest[0]);
        double half = 2.0 * M_PI / params.grid_points;
        for (int round = 0; round < 8; ++round) {
            for (int k = -10; k <= 10; ++k) {
                double t = th + half * k / 10.0;
                double v = eval(make_vec({std::cos(t), std::sin(t)}));
                if (v < best) {
                    best = v;
                    th = t;
                }
            }
            half /= 8.0;
        }
    }
    out.value = best;
    return out;
}

LsvValue lsv_of_graph(const PolyhedralSet& graph, int z_dim, int eta_dim,
                      const LsvParams& params) {
    PolyhedralSet g = graph.pruned(params.tols.lp);
    if (g.is_empty()) return {kInf, true};
    if (!params.numeric_only && all_pieces_conic(g)) {
        bool small_rows = true;
        for (const auto& p : g.pieces) small_rows = small_rows && p.ineqs.size() <= 16;
        if (small_rows) return exact_conic_lsv(g, z_dim, eta_dim, params.tols);
    }
    return grid_lsv(g, z_dim, eta_dim, params);
}

// ---------------------------------------------------------------------------
// LsvDomain / LsvInstance
// ---------------------------------------------------------------------------

LsvDomain LsvDomain::polyhedral(PolyhedralSet s) {
    LsvDomain d;
    d.dim_ = s.dim;
    d.v_ = std::move(s);
    return d;
}

LsvDomain LsvDomain::mapping_graph(StructuredMapping s) {
    LsvDomain d;
    d.dim_ = s.in_dim() + s.out_dim();
    d.v_ = std::move(s);
    return d;
}

bool LsvDomain::contains(const Vec& xi, double tol) const {
    if (is_polyhedral()) return poly().contains(xi, tol);
    const auto& s = std::get<StructuredMapping>(v_);
    return s.on_graph(xi.head(s.in_dim()), xi.tail(s.out_dim()), std::max(tol, 1e-7));
}

std::optional<Vec> LsvDomain::project(const Vec& xi, const Vec& hint) const {
    if (is_polyhedral()) return project_onto_set(xi, poly());
    return std::get<StructuredMapping>(v_).project_graph(xi, hint);
}

PolyhedralSet LsvInstance::xi_graph_at(const Vec& xi) const {
    PolyhedralSet g = gamma.graph_at(xi);
    if (!A) return g;
    return shear_by_matrix(g, gamma.z_dim, gamma.eta_dim, A->eval(xi));
}

Mat LsvInstance::A_at(const Vec& xi) const {
    if (!A) return Mat::Zero(gamma.eta_dim, gamma.z_dim);
    return A->eval(xi);
}

Mat LsvInstance::A_semiderivative(const Vec& xi, const Vec& omega) const {
    if (!A) return Mat::Zero(gamma.eta_dim, gamma.z_dim);
    return A->semiderivative(xi, omega);
}

LsvInstance reg_instance(const StructuredMapping& s) {
    LsvInstance inst{LsvDomain::mapping_graph(s), std::nullopt, GammaFamily{}};
    const int n = s.in_dim(), m = s.out_dim();
    inst.gamma.z_dim = m;
    inst.gamma.eta_dim = n;
    StructuredMapping copy = s;
    inst.gamma.graph_at = [copy, n, m](const Vec& xi) {
        return coderivative(copy, xi.head(n), xi.tail(m)).graph;
    };
    inst.gamma.osc_exact = true;  // coderivatives of closed-graph mappings
    inst.gamma.calmness_zero = s.has_polyhedral_graph();
    return inst;
}

LsvInstance sum_form_instance(const PolyMap& f, const StructuredMapping& c) {
    if (f.in_dim != c.in_dim() || f.out_dim != c.out_dim())
        throw DimensionMismatch("sum_form_instance");
    const int n = f.in_dim, m = f.out_dim;
    LsvInstance inst{LsvDomain::mapping_graph(c), std::nullopt, GammaFamily{}};
    inst.gamma.z_dim = m;
    inst.gamma.eta_dim = n;
    StructuredMapping copy = c;
    inst.gamma.graph_at = [copy, n, m](const Vec& xi) {
        return coderivative(copy, xi.head(n), xi.tail(m)).graph;
    };
    inst.gamma.osc_exact = true;
    inst.gamma.calmness_zero = c.has_polyhedral_graph();
    inst.gamma.cone_valued = std::holds_alternative<SmIndicator>(c.node());
    // A(u, y) = nabla F(u), entries polynomial in u lifted to (u, y)
    MatrixPolyMap A(n + m, n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            A.at(i, j) = f.comps[static_cast<size_t>(j)].derivative(i).normalized();
    for (auto& e : A.entries) {
        PolyExpr lifted = PolyExpr::zero(n + m);
        for (const auto& t : e.terms) {
            Monomial nm;
            nm.coeff = t.coeff;
            nm.expo.assign(static_cast<size_t>(n + m), 0);
            for (int j = 0; j < n; ++j) nm.expo[static_cast<size_t>(j)] = t.expo[static_cast<size_t>(j)];
            lifted.terms.push_back(std::move(nm));
        }
        e = lifted.normalized();
    }
    inst.A = A;
    return inst;
}

double lsv_value(const LsvInstance& inst, const Vec& xi, const LsvParams& params) {
    if (!inst.domain.contains(xi)) return kInf;
    return lsv_of_graph(inst.xi_graph_at(xi), inst.z_dim(), inst.val_dim(), params).value;
}

double reg_value(const StructuredMapping& s, const Vec& u, const Vec& y,
                 const LsvParams& params) {
    if (!s.on_graph(u, y, 1e-7)) return kInf;
    HomogeneousPiecewiseMap k = coderivative(s, u, y, params.tols);
    return lsv_of_graph(k.graph, k.arg_dim, k.val_dim, params).value;
}

double outer_norm(const HomogeneousPiecewiseMap& k, const LsvParams& params) {
    double l = lsv_of_graph(k.graph, k.arg_dim, k.val_dim, params).value;
    if (l <= params.tols.lsv) return kInf;
    return 1.0 / l;
}

SingularityReport singularity_report(const LsvInstance& inst, const Vec& xi,
                                     const LsvParams& params) {
    SingularityReport rep;
    PolyhedralSet g = inst.xi_graph_at(xi).pruned(params.tols.lp);
    // solution set {z : (z, 0) in graph}
    const int zd = inst.z_dim(), ed = inst.val_dim();
    PolyhedralSet sol(zd);
    for (const auto& p : g.pieces) {
        ConvexPolyhedron q(zd);
        for (const auto& c : p.ineqs) q.add_ineq(c.a.head(zd), c.b);
        for (const auto& c : p.eqs) q.add_eq(c.a.head(zd), c.b);
        (void)ed;
        sol.append(std::move(q));
    }
    rep.solution_set = sol.pruned(params.tols.lp);
    rep.is_singular = set_nonzero_point(rep.solution_set).has_value();
    rep.lsv = lsv_of_graph(g, zd, ed, params).value;
    // finite-ray representation when every piece is a ray or a line
    rep.z0_finite = true;
    for (const auto& p : rep.solution_set.pieces) {
        int ad = affine_dimension(p, params.tols.lp);
        if (ad <= 0) continue;
        if (ad > 1 || !p.is_cone(1e-9)) {
            rep.z0_finite = false;
            break;
        }
        // direction of the 1-dimensional cone
        Mat rows(static_cast<Eigen::Index>(p.eqs.size()), zd);
        for (size_t r = 0; r < p.eqs.size(); ++r) rows.row(static_cast<Eigen::Index>(r)) = p.eqs[r].a;
        std::vector<Vec> dirs;
        Generators gen = enumerate_generators(p, params.tols.lp);
        for (const auto& r : gen.rays) dirs.push_back(r);
        for (const auto& l : gen.lines) {
            dirs.push_back(l);
            dirs.push_back(-l);
        }
        for (const auto& d0 : dirs) {
            Vec u = d0 / d0.norm();
            if (!p.contains(u, 1e-8)) continue;
            bool dup = false;
            for (const auto& v : rep.z0_points)
                if ((u - v).norm() < 1e-8) dup = true;
            if (!dup) rep.z0_points.push_back(u);
        }
    }
    if (!rep.z0_finite) rep.z0_points.clear();
    return rep;
}

// ---------------------------------------------------------------------------
// numeric subderivative
// ---------------------------------------------------------------------------

SubderivativeEstimate subderivative_estimate(
    const std::function<double(const Vec&)>& phi,
    const std::function<std::optional<Vec>(const Vec&)>& project_domain, const Vec& xi_bar,
    const Vec& omega, const std::vector<double>& schedule, unsigned seed, int samples_per_level,
    double tol_semi) {
    const int d = static_cast<int>(xi_bar.size());
    const double wnorm = omega.norm();
    if (wnorm < 1e-15) throw Error("subderivative_estimate: zero direction");
    double phi0 = phi(xi_bar);
    if (!std::isfinite(phi0)) throw Error("subderivative_estimate: phi(xi_bar) not finite");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> taus = schedule;
    std::sort(taus.begin(), taus.end(), std::greater<double>());

    SubderivativeEstimate est;
    for (double tau : taus) {
        double delta = 0.5 * wnorm * std::sqrt(tau);
        std::vector<Vec> candidates;
        candidates.push_back(xi_bar + tau * omega);
        if (project_domain) {
            auto p = project_domain(xi_bar + tau * omega);
            if (p) candidates.push_back(*p);
        }
        for (int k = 0; k < samples_per_level; ++k) {
            Vec u(d);
            for (int j = 0; j < d; ++j) u[j] = nd(rng);
            if (u.norm() < 1e-12) continue;
            u *= delta / u.norm();
            Vec x = xi_bar + tau * (omega + u);
            candidates.push_back(x);
            if (project_domain) {
                auto p = project_domain(x);
                if (p) candidates.push_back(*p);
            }
        }
        double level = kInf;
        for (const Vec& x : candidates) {
            Vec r = x - xi_bar;
            double rn = r.norm();
            if (rn < 1e-14) continue;
            double tau_x = rn / wnorm;
            if ((r / tau_x - omega).norm() > 3.0 * delta + 1e-9) continue;
            double v = phi(x);
            if (!std::isfinite(v)) continue;
            level = std::min(level, (v - phi0) / tau_x);
        }
        if (std::isfinite(level)) est.level_values.push_back(level);
    }
    if (est.level_values.empty()) {
        // no admissible sequences: the subderivative along omega is +inf
        est.value = kInf;
        est.diverging = true;
        return est;
    }
    const size_t n = est.level_values.size();
    est.value = est.level_values.back();
    if (n >= 3) {
        double a = est.level_values[n - 3], b = est.level_values[n - 2], c = est.level_values[n - 1];
        if (a > 1e-6 && b >= 3.0 * a && c >= 3.0 * b) {
            est.diverging = true;
            est.value = kInf;
        }
    }
    for (size_t i = n >= 3 ? n - 3 : 0; i + 1 < n; ++i)
        est.dispersion = std::max(est.dispersion, std::abs(est.level_values[i] - est.level_values.back()));
    if (!est.diverging && est.dispersion > 50.0 * tol_semi * (1.0 + std::abs(est.value)))
        throw NonConvergent("subderivative estimate dispersion " + std::to_string(est.dispersion));
    return est;
}

SubderivativeEstimate lsv_subderivative(const LsvInstance& inst, const Vec& xi_bar,
                                        const Vec& omega, const LsvParams& params) {
    auto phi = [&](const Vec& xi) { return lsv_value(inst, xi, params); };
    std::function<std::optional<Vec>(const Vec&)> proj = [&](const Vec& xi) {
        return inst.domain.project(xi, xi_bar);
    };
    return subderivative_estimate(phi, proj, xi_bar, omega);
}

// ---------------------------------------------------------------------------
// Theta and the certified bounds
// ---------------------------------------------------------------------------

namespace {

bool piece_has_nonzero_block(const ConvexPolyhedron& p, int from, int count, double tol) {
    for (int j = from; j < from + count; ++j) {
        for (double sg : {1.0, -1.0}) {
            ConvexPolyhedron q = p;
            q.add_eq(unit_vec(p.dim, j, sg), 1.0);
            if (lp_feasible_point(q.ineq_matrix(), q.ineq_rhs(), q.eq_matrix(), q.eq_rhs(), tol))
                return true;
        }
    }
    return false;
}

}  // namespace

PolyhedralCone theta_cone(const PolyhedralSet& h_graph, int z_dim, int eta_dim, const Tols& tols) {
    PolyhedralSet acc(eta_dim);
    std::vector<int> eta_keep = range_ints(z_dim, eta_dim);
    for (const auto& p : h_graph.pieces) {
        if (p.is_empty(tols.lp)) continue;
        if (p.is_cone(1e-9)) {
            if (!piece_has_nonzero_block(p, 0, z_dim, tols.lp)) continue;  // lives in {z = 0}
            acc.append(project_piece(p, eta_keep));
            continue;
        }
        // non-conic piece: require separable rows (z-only and eta-only)
        ConvexPolyhedron zpart(z_dim), epart(eta_dim);
        bool separable = true;
        auto route = [&](const LinCon& c, bool eq) {
            bool has_z = c.a.head(z_dim).lpNorm<Eigen::Infinity>() > 1e-11;
            bool has_e = c.a.tail(eta_dim).lpNorm<Eigen::Infinity>() > 1e-11;
            if (has_z && has_e) {
                separable = false;
                return;
            }
            if (has_z) {
                if (eq)
                    zpart.add_eq(c.a.head(z_dim), c.b);
                else
                    zpart.add_ineq(c.a.head(z_dim), c.b);
            } else if (has_e) {
                if (eq)
                    epart.add_eq(c.a.tail(eta_dim), c.b);
                else
                    epart.add_ineq(c.a.tail(eta_dim), c.b);
            }
        };
        for (const auto& c : p.ineqs) route(c, false);
        for (const auto& c : p.eqs) route(c, true);
        if (!separable) throw NotPolyhedral("theta cone of a non-separable non-conic piece");
        // does the z-part meet the unit sphere?
        if (zpart.is_empty(tols.lp)) continue;
        double zmin = 0.0;
        auto proj = project_onto_piece(Vec::Zero(z_dim), zpart, tols.lp);
        if (proj) zmin = proj->norm();
        Generators g = enumerate_generators(zpart, tols.lp);
        double zmax = g.rays.empty() && g.lines.empty() ? 0.0 : kInf;
        for (const auto& v : g.vertices) zmax = std::max(zmax, v.norm());
        if (zmin > 1.0 + 1e-9 || zmax < 1.0 - 1e-9) continue;
        PolyhedralCone hull = closed_conic_hull(PolyhedralSet(eta_dim, {epart}), tols.lp);
        for (const auto& hp : hull.set.pieces) acc.append(hp);
    }
    return PolyhedralCone(acc.pruned(tols.lp));
}

namespace {

// Hoffman-type upper bound for the calmness constant of a jointly polyhedral
// family; zero-detection fast paths first.
double derive_calmness(const PolyhedralSet& joint, int xi_dim, int z_dim, int eta_dim,
                       const Vec& xi_bar, const Tols& tols) {
    (void)z_dim;
    bool xi_free = true;
    for (const auto& p : joint.pieces) {
        for (const auto& c : p.ineqs)
            if (c.a.head(xi_dim).lpNorm<Eigen::Infinity>() > 1e-11) xi_free = false;
        for (const auto& c : p.eqs)
            if (c.a.head(xi_dim).lpNorm<Eigen::Infinity>() > 1e-11) xi_free = false;
    }
    if (xi_free) return 0.0;

    // xi pinned near xi_bar?
    bool pinned = true;
    for (const auto& p : joint.pieces) {
        ConvexPolyhedron box = p;
        for (int j = 0; j < xi_dim; ++j) {
            box.add_ineq(unit_vec(p.dim, j), xi_bar[j] + 0.1);
            box.add_ineq(unit_vec(p.dim, j, -1.0), -xi_bar[j] + 0.1);
        }
        if (box.is_empty(tols.lp)) continue;
        Mat A = box.ineq_matrix();
        Vec b = box.ineq_rhs();
        Mat E = box.eq_matrix();
        Vec f = box.eq_rhs();
        for (int j = 0; j < xi_dim && pinned; ++j) {
            LpResult hi = solve_lp_max(unit_vec(p.dim, j), A, b, E, f);
            LpResult lo = solve_lp(unit_vec(p.dim, j), A, b, E, f);
            if (hi.status != LpStatus::Optimal || lo.status != LpStatus::Optimal ||
                hi.value > xi_bar[j] + 1e-9 || lo.value < xi_bar[j] - 1e-9)
                pinned = false;
        }
        if (!pinned) break;
    }
    if (pinned) return 0.0;

    double c = 0.0;
    for (const auto& p : joint.pieces) {
        // rows split (xi | z | eta); equality rows act as two inequalities
        std::vector<Vec> eta_rows;
        double anorm = 0.0;
        auto scan = [&](const LinCon& row) {
            Vec ae = row.a.tail(eta_dim);
            if (ae.lpNorm<Eigen::Infinity>() > 1e-11) eta_rows.push_back(ae);
            anorm = std::max(anorm, row.a.head(xi_dim).norm());
        };
        for (const auto& r : p.ineqs) scan(r);
        for (const auto& r : p.eqs) scan(r);
        if (eta_rows.empty() || anorm == 0.0) continue;
        if (eta_rows.size() > 12) throw PatternOverflow("calmness derivation row cap");
        // Hoffman constant estimate: max over full-row-rank subsets of
        // 1/sigma_min
        double hoffman = 0.0;
        int m = static_cast<int>(eta_rows.size());
        std::vector<int> idx;
        std::function<void(int)> rec = [&](int start) {
            if (!idx.empty() && static_cast<int>(idx.size()) <= eta_dim) {
                Mat M(static_cast<int>(idx.size()), eta_dim);
                for (size_t i = 0; i < idx.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = eta_rows[static_cast<size_t>(idx[i])];
                Eigen::JacobiSVD<Mat> svd(M);
                double smin = svd.singularValues().minCoeff();
                if (smin > 1e-9) hoffman = std::max(hoffman, 1.0 / smin);
            }
            for (int r = start; r < m; ++r) {
                if (static_cast<int>(idx.size()) >= eta_dim) break;
                idx.push_back(r);
                rec(r + 1);
                idx.pop_back();
            }
        };
        rec(0);
        c = std::max(c, hoffman * anorm);
    }
    return c;
}

// evidence probe for outer semicontinuity of the cone-of-values family
bool cone_family_probe_finds_violation(const GammaFamily& gamma, const Vec& xi_bar,
                                       const Tols& tols) {
    std::mt19937_64 rng(777);
    std::normal_distribution<double> nd;
    const int xd = static_cast<int>(xi_bar.size());
    const int zd = gamma.z_dim, ed = gamma.eta_dim;
    PolyhedralSet base = gamma.graph_at(xi_bar);
    for (int dir = 0; dir < 24; ++dir) {
        Vec d(xd);
        for (int j = 0; j < xd; ++j) d[j] = nd(rng);
        if (d.norm() < 1e-12) continue;
        d.normalize();
        // unit cone directions of the values at the two smallest taus
        auto collect = [&](double tau) {
            std::vector<std::pair<Vec, Vec>> out;
            Vec xi = xi_bar + tau * d;
            PolyhedralSet g = gamma.graph_at(xi);
            if (g.is_empty()) return out;
            std::vector<int> keep = range_ints(0, zd);
            PolyhedralSet dom = project_set(g, keep);
            for (const auto& p : dom.pieces) {
                Generators gen = enumerate_generators(p);
                std::vector<Vec> zs;
                for (const auto& r : gen.rays) zs.push_back(r);
                for (const auto& l : gen.lines) {
                    zs.push_back(l);
                    zs.push_back(-l);
                }
                for (const Vec& z : zs) {
                    PolyhedralSet val = graph_slice(g, z, ed).pruned();
                    if (val.is_empty()) continue;
                    PolyhedralCone kc = closed_conic_hull(val, tols.lp);
                    for (const auto& cp : kc.set.pieces) {
                        Generators cg = enumerate_generators(cp);
                        for (const auto& r : cg.rays) out.push_back({z, r});
                        for (const auto& l : cg.lines) {
                            out.push_back({z, l});
                            out.push_back({z, -l});
                        }
                    }
                }
            }
            return out;
        };
        std::vector<std::pair<Vec, Vec>> prev = collect(1e-3);
        std::vector<std::pair<Vec, Vec>> last = collect(1e-4);
        for (const auto& [z, eta] : last) {
            PolyhedralSet val0 = graph_slice(base, z, ed).pruned();
            if (val0.is_empty()) continue;  // z leaves the limiting domain
            PolyhedralCone k0 = closed_conic_hull(val0, tols.lp);
            if (k0.set.is_empty()) continue;
            double dist = distance_to_set(eta, k0.set);
            if (dist <= 1e-3 * (1.0 + eta.norm())) continue;
            // only a settled sequence witnesses a violation
            double settle = kInf;
            for (const auto& [zp, ep] : prev) {
                if ((zp - z).norm() > 1e-6) continue;
                settle = std::min(settle, (ep - eta).norm());
            }
            if (settle <= 0.05 * dist) return true;
        }
    }
    return false;
}

struct CommonBoundData {
    SingularityReport sing;
    PolyhedralSet h_graph;  // Gamma slice at xi_bar
    PolyhedralCone theta;
    PolyhedralSet dom_h;
};

CommonBoundData collect_bound_data(const LsvInstance& inst, const Vec& xi_bar,
                                   const LsvParams& params) {
    CommonBoundData d;
    d.sing = singularity_report(inst, xi_bar, params);
    d.h_graph = inst.gamma.graph_at(xi_bar).pruned(params.tols.lp);
    d.theta = theta_cone(d.h_graph, inst.z_dim(), inst.val_dim(), params.tols);
    d.dom_h = project_set(d.h_graph, range_ints(0, inst.z_dim()));
    return d;
}

LsvValue bound_from_distance_instance(const PolyhedralSet& zsol, const Mat& Aprime,
                                      const PolyhedralSet& cone_part, int z_dim, int val_dim,
                                      const LsvParams& params) {
    // lsv of z -> Aprime z + cone_part restricted to unit z in zsol
    PolyhedralSet graph(z_dim + val_dim);
    for (const auto& zp : zsol.pieces) {
        if (zp.is_empty(params.tols.lp)) continue;
        for (const auto& cp : cone_part.pieces) {
            if (cp.is_empty(params.tols.lp)) continue;
            ConvexPolyhedron piece(z_dim + val_dim);
            for (const auto& c : zp.ineqs) {
                Vec a = Vec::Zero(z_dim + val_dim);
                a.head(z_dim) = c.a;
                piece.add_ineq(a, c.b);
            }
            for (const auto& c : zp.eqs) {
                Vec a = Vec::Zero(z_dim + val_dim);
                a.head(z_dim) = c.a;
                piece.add_eq(a, c.b);
            }
            for (const auto& c : cp.ineqs) {
                Vec a = Vec::Zero(z_dim + val_dim);
                a.tail(val_dim) = c.a;
                a.head(z_dim) = -Aprime.transpose() * c.a;
                piece.add_ineq(a, c.b);
            }
            for (const auto& c : cp.eqs) {
                Vec a = Vec::Zero(z_dim + val_dim);
                a.tail(val_dim) = c.a;
                a.head(z_dim) = -Aprime.transpose() * c.a;
                piece.add_eq(a, c.b);
            }
            graph.append(std::move(piece));
        }
    }
    return lsv_of_graph(graph, z_dim, val_dim, params);
}

}  // namespace

const char* to_string(CondStatus s) {
    switch (s) {
        case CondStatus::ExactHold: return "holds";
        case CondStatus::ExactFail: return "fails";
        case CondStatus::EvidenceHold: return "holds (evidence)";
        case CondStatus::EvidenceFail: return "fails (evidence)";
        default: return "undecided";
    }
}

BoundResult subderivative_bound_calmness(const LsvInstance& inst, const Vec& xi_bar,
                                         const Vec& omega, std::optional<double> user_c,
                                         const LsvParams& params) {
    BoundResult res;
    CommonBoundData data = collect_bound_data(inst, xi_bar, params);
    auto push = [&](const std::string& id, CondStatus st, const std::string& note) {
        res.conditions.push_back({id, st, note});
        if ((st == CondStatus::ExactFail || st == CondStatus::EvidenceFail ||
             st == CondStatus::Unknown) &&
            res.refused_condition.empty())
            res.refused_condition = id;
    };

    push("(i)", data.sing.is_singular ? CondStatus::ExactHold : CondStatus::ExactFail,
         "singularity at the base parameter");
    if (inst.gamma.joint_graph || inst.gamma.osc_exact)
        push("(ii)", CondStatus::ExactHold, "polyhedral/structural outer semicontinuity");
    else if (inst.gamma.osc_asserted)
        push("(ii)", CondStatus::EvidenceHold, "outer semicontinuity asserted");
    else
        push("(ii)", CondStatus::Unknown, "outer semicontinuity unavailable");
    push("(iii)", CondStatus::ExactHold, "polynomial matrix family is semidifferentiable");
    push("(iv)", CondStatus::ExactHold, "polyhedral image is closed");

    double c = 0.0;
    if (inst.gamma.calmness_zero) {
        push("(v)", CondStatus::ExactHold, "calmness with c = 0 (values embed near the base)");
    } else if (inst.gamma.joint_graph) {
        c = derive_calmness(*inst.gamma.joint_graph, static_cast<int>(xi_bar.size()), inst.z_dim(),
                            inst.val_dim(), xi_bar, params.tols);
        push("(v)", CondStatus::ExactHold, "derived calmness upper bound c = " + std::to_string(c));
    } else if (user_c) {
        c = *user_c;
        push("(v)", CondStatus::EvidenceHold, "asserted calmness c = " + std::to_string(c));
    } else if (inst.gamma.calmness_asserted) {
        c = *inst.gamma.calmness_asserted;
        push("(v)", CondStatus::EvidenceHold, "asserted calmness c = " + std::to_string(c));
    } else {
        push("(v)", CondStatus::Unknown, "no calmness constant available");
    }

    PolyhedralSet image = linear_image(data.dom_h, inst.A_at(xi_bar));
    PolyhedralCone image_cone = PolyhedralCone(image.pruned(params.tols.lp));
    PolyhedralCone clash = intersect(image_cone, negate_cone(data.theta));
    bool sep = cone_is_trivial(clash, params.tols.lp);
    push("(vi)", sep ? CondStatus::ExactHold : CondStatus::ExactFail,
         "image/Theta separation");
    // relaxed sufficient condition, informational; rge H is a plain set when
    // the slice is not homogeneous
    {
        PolyhedralSet rge_h = project_set(data.h_graph, range_ints(inst.z_dim(), inst.val_dim()))
                                  .pruned(params.tols.lp);
        bool suff = !set_nonzero_point(intersect(image_cone.set, rge_h), params.tols.lp).has_value();
        res.conditions.push_back({"Eq(3.4)",
                                  suff ? CondStatus::ExactHold : CondStatus::ExactFail,
                                  "image/range sufficient condition (informational)"});
    }

    if (!res.refused_condition.empty()) return res;
    res.produced = true;
    res.calmness_c = c;
    res.certified = true;
    for (const auto& rec : res.conditions)
        if (rec.id != "Eq(3.4)" && rec.status != CondStatus::ExactHold) res.certified = false;
    PolyhedralSet cone_part = minkowski_sum(data.theta.set, image);
    LsvValue dist = bound_from_distance_instance(data.sing.solution_set,
                                                 inst.A_semiderivative(xi_bar, omega), cone_part,
                                                 inst.z_dim(), inst.val_dim(), params);
    res.bound = dist.value - c * omega.norm();
    res.certified = res.certified && dist.exact;
    return res;
}

BoundResult subderivative_bound_range(const LsvInstance& inst, const Vec& xi_bar, const Vec& omega,
                                      const LsvParams& params) {
    BoundResult res;
    CommonBoundData data = collect_bound_data(inst, xi_bar, params);
    auto push = [&](const std::string& id, CondStatus st, const std::string& note) {
        res.conditions.push_back({id, st, note});
        if ((st == CondStatus::ExactFail || st == CondStatus::EvidenceFail ||
             st == CondStatus::Unknown) &&
            res.refused_condition.empty())
            res.refused_condition = id;
    };

    push("(i)", data.sing.is_singular ? CondStatus::ExactHold : CondStatus::ExactFail,
         "singularity at the base parameter");
    if (inst.gamma.joint_graph || inst.gamma.osc_exact)
        push("(ii)", CondStatus::ExactHold, "polyhedral/structural outer semicontinuity");
    else if (inst.gamma.osc_asserted)
        push("(ii)", CondStatus::EvidenceHold, "outer semicontinuity asserted");
    else
        push("(ii)", CondStatus::Unknown, "outer semicontinuity unavailable");
    push("(iii)", CondStatus::ExactHold, "polynomial matrix family is semidifferentiable");

    // (iv'): cone-of-values outer semicontinuity
    bool iv_exact = false;
    if (inst.gamma.cone_valued && (inst.gamma.osc_exact || inst.gamma.joint_graph)) {
        push("(iv')", CondStatus::ExactHold, "cone-valued outer semicontinuous family");
        iv_exact = true;
    } else if (inst.gamma.cone_valued && inst.gamma.osc_asserted) {
        push("(iv')", CondStatus::EvidenceHold, "cone-valued family with asserted outer semicontinuity");
    } else {
        // value-at-zero and kernel triviality grant the condition, but only
        // for genuinely homogeneous slices (conic graph pieces)
        bool structural = false;
        {
            const int zd = inst.z_dim(), ed = inst.val_dim();
            bool conic = true;
            for (const auto& p : data.h_graph.pieces) conic = conic && p.is_cone(1e-9);
            PolyhedralSet h0 = graph_slice(data.h_graph, Vec::Zero(zd), ed).pruned(params.tols.lp);
            bool h0_trivial = !set_nonzero_point(h0).has_value();
            PolyhedralSet ker(zd);
            for (const auto& p : data.h_graph.pieces) {
                ConvexPolyhedron q(zd);
                for (const auto& cc : p.ineqs) q.add_ineq(cc.a.head(zd), cc.b);
                for (const auto& cc : p.eqs) q.add_eq(cc.a.head(zd), cc.b);
                ker.append(std::move(q));
            }
            bool ker_trivial = !set_nonzero_point(ker.pruned(params.tols.lp)).has_value();
            structural = conic && h0_trivial && ker_trivial;
        }
        if (structural) {
            push("(iv')", CondStatus::ExactHold, "kernel/value-at-zero structure");
            iv_exact = true;
        } else if (cone_family_probe_finds_violation(inst.gamma, xi_bar, params.tols)) {
            push("(iv')", CondStatus::EvidenceFail, "sampling probe found a violation");
        } else {
            push("(iv')", CondStatus::EvidenceHold, "sampling probe found no violation");
        }
    }
    (void)iv_exact;

    PolyhedralCone rge_a = PolyhedralCone::subspace_spanned_by(inst.A_at(xi_bar));
    bool sep = cone_is_trivial(intersect(rge_a, data.theta), params.tols.lp);
    push("(v')", sep ? CondStatus::ExactHold : CondStatus::ExactFail, "range/Theta separation");

    if (!res.refused_condition.empty()) return res;
    res.produced = true;
    res.certified = true;
    for (const auto& rec : res.conditions)
        if (rec.status != CondStatus::ExactHold) res.certified = false;
    PolyhedralSet cone_part = minkowski_sum(data.theta.set, rge_a.set);
    LsvValue dist = bound_from_distance_instance(data.sing.solution_set,
                                                 inst.A_semiderivative(xi_bar, omega), cone_part,
                                                 inst.z_dim(), inst.val_dim(), params);
    res.bound = dist.value;
    res.certified = res.certified && dist.exact;
    return res;
}

}  // namespace vreg
