#include "vreg/polyhedra.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>

namespace vreg {
namespace {

bool near_zero_vec(const Vec& a, double tol = 1e-12) { return a.lpNorm<Eigen::Infinity>() <= tol; }

Mat stack_rows(const std::vector<LinCon>& rows, int dim) {
    Mat M(static_cast<Eigen::Index>(rows.size()), dim);
    for (size_t i = 0; i < rows.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = rows[i].a;
    return M;
}

Vec stack_rhs(const std::vector<LinCon>& rows) {
    Vec v(static_cast<Eigen::Index>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) v[static_cast<Eigen::Index>(i)] = rows[i].b;
    return v;
}

ConvexPolyhedron infeasible_piece(int dim) {
    ConvexPolyhedron p(dim);
    p.add_ineq(Vec::Zero(dim), -1.0);
    return p;
}

// Gaussian elimination on the equality rows; drops dependent rows, detects
// inconsistency (returns false).
bool reduce_equalities(std::vector<LinCon>& eqs, int dim, double tol) {
    std::vector<LinCon> out;
    std::vector<LinCon> work = eqs;
    std::vector<bool> used(work.size(), false);
    for (int col = 0; col < dim; ++col) {
        int piv = -1;
        double best = tol;
        for (size_t r = 0; r < work.size(); ++r) {
            if (used[r]) continue;
            if (std::abs(work[r].a[col]) > best) {
                best = std::abs(work[r].a[col]);
                piv = static_cast<int>(r);
            }
        }
        if (piv < 0) continue;
        used[piv] = true;
        LinCon prow = work[piv];
        prow.b /= prow.a[col];
        prow.a /= prow.a[col];
        for (size_t r = 0; r < work.size(); ++r) {
            if (used[r]) continue;
            double f = work[r].a[col];
            if (std::abs(f) > 0) {
                work[r].a -= f * prow.a;
                work[r].b -= f * prow.b;
            }
        }
        out.push_back(prow);
    }
    for (size_t r = 0; r < work.size(); ++r) {
        if (!used[r] && near_zero_vec(work[r].a, tol) && std::abs(work[r].b) > 1e-7) return false;
    }
    eqs = std::move(out);
    return true;
}

void normalize_row(LinCon& c) {
    double n = c.a.norm();
    if (n > 1e-13) {
        c.a /= n;
        c.b /= n;
    }
}

std::string row_signature(const LinCon& c) {
    std::string s;
    char buf[32];
    for (Eigen::Index i = 0; i < c.a.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9f,", c.a[i] + 0.0);
        s += buf;
    }
    std::snprintf(buf, sizeof buf, "|%.9f", c.b + 0.0);
    s += buf;
    return s;
}

// all k-subsets of {0..n-1}
void for_each_subset_up_to(int n, int maxk, const std::function<bool(const std::vector<int>&)>& fn) {
    std::vector<int> idx;
    std::function<bool(int, int)> rec = [&](int start, int k) -> bool {
        if (k == 0) return fn(idx);
        for (int i = start; i <= n - k; ++i) {
            idx.push_back(i);
            if (!rec(i + 1, k - 1)) return false;
            idx.pop_back();
        }
        return true;
    };
    for (int k = 0; k <= std::min(n, maxk); ++k) {
        if (!rec(0, k)) return;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// ConvexPolyhedron
// ---------------------------------------------------------------------------

ConvexPolyhedron ConvexPolyhedron::single_point(const Vec& x) {
    ConvexPolyhedron p(static_cast<int>(x.size()));
    for (int j = 0; j < p.dim; ++j) p.add_eq(unit_vec(p.dim, j), x[j]);
    return p;
}

void ConvexPolyhedron::add_ineq(const Vec& a, double b) {
    if (a.size() != dim) throw DimensionMismatch("add_ineq");
    ineqs.push_back({a, b});
    empty_cache_ = -1;
}

void ConvexPolyhedron::add_eq(const Vec& a, double b) {
    if (a.size() != dim) throw DimensionMismatch("add_eq");
    eqs.push_back({a, b});
    empty_cache_ = -1;
}

bool ConvexPolyhedron::contains(const Vec& x, double tol) const {
    if (x.size() != dim) throw DimensionMismatch("contains");
    for (const auto& c : ineqs)
        if (c.a.dot(x) > c.b + tol * (1.0 + std::abs(c.b))) return false;
    for (const auto& c : eqs)
        if (std::abs(c.a.dot(x) - c.b) > tol * (1.0 + std::abs(c.b))) return false;
    return true;
}

bool ConvexPolyhedron::is_empty(double tol) const {
    if (empty_cache_ >= 0) return empty_cache_ == 1;
    bool empty = !lp_feasible_point(ineq_matrix(), ineq_rhs(), eq_matrix(), eq_rhs(), tol).has_value();
    empty_cache_ = empty ? 1 : 0;
    return empty;
}

std::vector<int> ConvexPolyhedron::active_ineqs(const Vec& x, double tol) const {
    std::vector<int> act;
    for (size_t i = 0; i < ineqs.size(); ++i) {
        double v = ineqs[i].a.dot(x) - ineqs[i].b;
        if (std::abs(v) <= tol * (1.0 + std::abs(ineqs[i].b))) act.push_back(static_cast<int>(i));
    }
    return act;
}

Mat ConvexPolyhedron::ineq_matrix() const { return stack_rows(ineqs, dim); }
Vec ConvexPolyhedron::ineq_rhs() const { return stack_rhs(ineqs); }
Mat ConvexPolyhedron::eq_matrix() const { return stack_rows(eqs, dim); }
Vec ConvexPolyhedron::eq_rhs() const { return stack_rhs(eqs); }

bool ConvexPolyhedron::is_cone(double tol) const {
    for (const auto& c : ineqs)
        if (std::abs(c.b) > tol * (1.0 + c.a.norm())) return false;
    for (const auto& c : eqs)
        if (std::abs(c.b) > tol * (1.0 + c.a.norm())) return false;
    return true;
}

// ---------------------------------------------------------------------------
// PolyhedralSet
// ---------------------------------------------------------------------------

bool PolyhedralSet::contains(const Vec& x, double tol) const {
    for (const auto& p : pieces)
        if (p.contains(x, tol)) return true;
    return false;
}

bool PolyhedralSet::is_empty(double tol) const {
    for (const auto& p : pieces)
        if (!p.is_empty(tol)) return false;
    return true;
}

void PolyhedralSet::append(ConvexPolyhedron p) {
    if (p.dim != dim) throw DimensionMismatch("PolyhedralSet::append");
    pieces.push_back(std::move(p));
}

namespace {
bool piece_subset_of_piece(const ConvexPolyhedron& p, const ConvexPolyhedron& q, double tol) {
    if (p.is_empty()) return true;
    if (q.is_empty()) return false;
    Mat A = p.ineq_matrix();
    Vec b = p.ineq_rhs();
    Mat E = p.eq_matrix();
    Vec f = p.eq_rhs();
    for (const auto& c : q.ineqs) {
        LpResult r = solve_lp_max(c.a, A, b, E, f);
        if (r.status == LpStatus::Unbounded) return false;
        if (r.status != LpStatus::Optimal) return true;  // p empty raced
        if (r.value > c.b + tol * (1.0 + std::abs(c.b))) return false;
    }
    for (const auto& c : q.eqs) {
        LpResult hi = solve_lp_max(c.a, A, b, E, f);
        if (hi.status == LpStatus::Unbounded || (hi.status == LpStatus::Optimal && hi.value > c.b + tol)) return false;
        LpResult lo = solve_lp(c.a, A, b, E, f);
        if (lo.status == LpStatus::Unbounded || (lo.status == LpStatus::Optimal && lo.value < c.b - tol)) return false;
    }
    return true;
}
}  // namespace

PolyhedralSet PolyhedralSet::pruned(double tol) const {
    PolyhedralSet out(dim);
    std::vector<ConvexPolyhedron> live;
    for (const auto& p : pieces)
        if (!p.is_empty(tol)) live.push_back(remove_redundancy(p, tol));
    std::vector<bool> dropped(live.size(), false);
    for (size_t i = 0; i < live.size(); ++i) {
        if (dropped[i]) continue;
        for (size_t j = 0; j < live.size(); ++j) {
            if (i == j || dropped[j]) continue;
            if (piece_subset_of_piece(live[i], live[j], default_tols().set_eq)) {
                dropped[i] = true;
                break;
            }
        }
    }
    for (size_t i = 0; i < live.size(); ++i)
        if (!dropped[i]) out.pieces.push_back(live[i]);
    return out;
}

// ---------------------------------------------------------------------------
// PolyhedralCone
// ---------------------------------------------------------------------------

PolyhedralCone::PolyhedralCone(PolyhedralSet s, double tol) : set(std::move(s)) {
    for (const auto& p : set.pieces)
        if (!p.is_cone(tol)) throw Error("cone constructor received nonzero offset");
}

PolyhedralCone PolyhedralCone::trivial(int d) {
    ConvexPolyhedron p(d);
    for (int j = 0; j < d; ++j) p.add_eq(unit_vec(d, j), 0.0);
    return PolyhedralCone(PolyhedralSet(d, {p}));
}

PolyhedralCone PolyhedralCone::whole_space(int d) {
    return PolyhedralCone(PolyhedralSet::whole_space(d));
}

PolyhedralCone PolyhedralCone::from_piece(ConvexPolyhedron p) {
    int d = p.dim;
    return PolyhedralCone(PolyhedralSet(d, {std::move(p)}));
}

PolyhedralCone PolyhedralCone::from_generators(int d, const std::vector<Vec>& rays,
                                               const std::vector<Vec>& lines) {
    std::vector<Vec> r_eff;
    for (const auto& r : rays)
        if (!near_zero_vec(r)) r_eff.push_back(r / r.norm());
    std::vector<Vec> l_eff;
    for (const auto& l : lines)
        if (!near_zero_vec(l)) l_eff.push_back(l / l.norm());
    if (r_eff.empty() && l_eff.empty()) return trivial(d);

    int nr = static_cast<int>(r_eff.size());
    int nl = static_cast<int>(l_eff.size());
    int total = d + nr + nl;
    ConvexPolyhedron lifted(total);
    for (int row = 0; row < d; ++row) {
        Vec a = Vec::Zero(total);
        a[row] = 1.0;
        for (int k = 0; k < nr; ++k) a[d + k] = -r_eff[k][row];
        for (int k = 0; k < nl; ++k) a[d + nr + k] = -l_eff[k][row];
        lifted.add_eq(a, 0.0);
    }
    for (int k = 0; k < nr; ++k) lifted.add_ineq(-unit_vec(total, d + k), 0.0);
    std::vector<int> keep(d);
    for (int j = 0; j < d; ++j) keep[j] = j;
    ConvexPolyhedron proj = project_piece(lifted, keep);
    return from_piece(std::move(proj));
}

PolyhedralCone PolyhedralCone::subspace_spanned_by(const Mat& M, double tol) {
    int d = static_cast<int>(M.rows());
    Eigen::FullPivLU<Mat> lu(M.transpose());
    lu.setThreshold(tol);
    Mat K = lu.kernel();  // columns orthogonal to col(M)
    ConvexPolyhedron p(d);
    if (lu.rank() < d) {
        for (Eigen::Index c = 0; c < K.cols(); ++c) {
            Vec k = K.col(c);
            if (!near_zero_vec(k)) p.add_eq(k / k.norm(), 0.0);
        }
    }
    return from_piece(std::move(p));
}

PolyhedralCone PolyhedralCone::kernel_of(const Mat& M) {
    int d = static_cast<int>(M.cols());
    ConvexPolyhedron p(d);
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        Vec a = M.row(r);
        if (!near_zero_vec(a)) p.add_eq(a, 0.0);
    }
    return from_piece(std::move(p));
}

// ---------------------------------------------------------------------------
// redundancy removal / substitution / projection
// ---------------------------------------------------------------------------

ConvexPolyhedron remove_redundancy(const ConvexPolyhedron& p_in, double tol) {
    ConvexPolyhedron p = p_in;
    // zero rows
    std::vector<LinCon> kept;
    for (auto& c : p.ineqs) {
        if (near_zero_vec(c.a)) {
            if (c.b < -1e-9) return infeasible_piece(p.dim);
            continue;
        }
        normalize_row(c);
        kept.push_back(c);
    }
    p.ineqs = std::move(kept);
    std::vector<LinCon> keq;
    for (auto& c : p.eqs) {
        if (near_zero_vec(c.a)) {
            if (std::abs(c.b) > 1e-9) return infeasible_piece(p.dim);
            continue;
        }
        normalize_row(c);
        keq.push_back(c);
    }
    p.eqs = std::move(keq);
    if (!reduce_equalities(p.eqs, p.dim, 1e-11)) return infeasible_piece(p.dim);

    // duplicate inequality rows
    std::set<std::string> seen;
    kept.clear();
    for (const auto& c : p.ineqs) {
        auto sig = row_signature(c);
        if (seen.insert(sig).second) kept.push_back(c);
    }
    p.ineqs = std::move(kept);

    // opposite pairs -> equality
    for (size_t i = 0; i < p.ineqs.size(); ++i) {
        for (size_t j = i + 1; j < p.ineqs.size(); ++j) {
            if ((p.ineqs[i].a + p.ineqs[j].a).lpNorm<Eigen::Infinity>() < 1e-10 &&
                std::abs(p.ineqs[i].b + p.ineqs[j].b) < 1e-10) {
                p.eqs.push_back(p.ineqs[i]);
                p.ineqs.erase(p.ineqs.begin() + static_cast<long>(j));
                p.ineqs.erase(p.ineqs.begin() + static_cast<long>(i));
                --i;
                break;
            }
        }
    }
    if (!reduce_equalities(p.eqs, p.dim, 1e-11)) return infeasible_piece(p.dim);

    if (p.is_empty(tol)) return infeasible_piece(p.dim);

    // LP-redundant inequalities
    for (size_t i = 0; i < p.ineqs.size();) {
        ConvexPolyhedron rest(p.dim);
        rest.eqs = p.eqs;
        for (size_t j = 0; j < p.ineqs.size(); ++j)
            if (j != i) rest.ineqs.push_back(p.ineqs[j]);
        LpResult r = solve_lp_max(p.ineqs[i].a, rest.ineq_matrix(), rest.ineq_rhs(),
                                  rest.eq_matrix(), rest.eq_rhs());
        bool redundant = r.status == LpStatus::Optimal && r.value <= p.ineqs[i].b + tol;
        if (redundant)
            p.ineqs.erase(p.ineqs.begin() + static_cast<long>(i));
        else
            ++i;
    }
    return p;
}

ConvexPolyhedron substitute_affine(const ConvexPolyhedron& p, const Mat& T, const Vec& t) {
    if (T.rows() != p.dim || t.size() != p.dim) throw DimensionMismatch("substitute_affine");
    ConvexPolyhedron out(static_cast<int>(T.cols()));
    for (const auto& c : p.ineqs) out.add_ineq(T.transpose() * c.a, c.b - c.a.dot(t));
    for (const auto& c : p.eqs) out.add_eq(T.transpose() * c.a, c.b - c.a.dot(t));
    return out;
}

namespace {

// one Fourier-Motzkin step eliminating the given column
ConvexPolyhedron eliminate_one(const ConvexPolyhedron& p, int col, double tol) {
    const int d = p.dim;
    auto strip = [&](const Vec& a) {
        Vec out(d - 1);
        int k = 0;
        for (int j = 0; j < d; ++j)
            if (j != col) out[k++] = a[j];
        return out;
    };
    ConvexPolyhedron out(d - 1);

    // pivot on an equality if one mentions the column
    int piv = -1;
    double best = 1e-11;
    for (size_t r = 0; r < p.eqs.size(); ++r)
        if (std::abs(p.eqs[r].a[col]) > best) {
            best = std::abs(p.eqs[r].a[col]);
            piv = static_cast<int>(r);
        }
    if (piv >= 0) {
        const LinCon& e = p.eqs[piv];
        double ec = e.a[col];
        for (size_t r = 0; r < p.eqs.size(); ++r) {
            if (static_cast<int>(r) == piv) continue;
            double f = p.eqs[r].a[col] / ec;
            LinCon nc{p.eqs[r].a - f * e.a, p.eqs[r].b - f * e.b};
            out.add_eq(strip(nc.a), nc.b);
        }
        for (const auto& c : p.ineqs) {
            double f = c.a[col] / ec;
            LinCon nc{c.a - f * e.a, c.b - f * e.b};
            out.add_ineq(strip(nc.a), nc.b);
        }
        return out;
    }

    for (const auto& c : p.eqs) out.add_eq(strip(c.a), c.b);  // no column involvement
    std::vector<const LinCon*> pos, neg, zero;
    for (const auto& c : p.ineqs) {
        if (c.a[col] > tol)
            pos.push_back(&c);
        else if (c.a[col] < -tol)
            neg.push_back(&c);
        else
            zero.push_back(&c);
    }
    for (const auto* c : zero) out.add_ineq(strip(c->a), c->b);
    for (const auto* cp : pos) {
        for (const auto* cn : neg) {
            double wp = -cn->a[col];
            double wn = cp->a[col];
            LinCon nc{wp * cp->a + wn * cn->a, wp * cp->b + wn * cn->b};
            out.add_ineq(strip(nc.a), nc.b);
        }
    }
    return out;
}

ConvexPolyhedron light_cleanup(const ConvexPolyhedron& p_in, double tol, bool full_lp) {
    if (full_lp) return remove_redundancy(p_in, tol);
    ConvexPolyhedron p = p_in;
    std::vector<LinCon> kept;
    for (auto& c : p.ineqs) {
        if (near_zero_vec(c.a)) {
            if (c.b < -1e-9) return infeasible_piece(p.dim);
            continue;
        }
        normalize_row(c);
        kept.push_back(c);
    }
    std::set<std::string> seen;
    p.ineqs.clear();
    for (auto& c : kept)
        if (seen.insert(row_signature(c)).second) p.ineqs.push_back(c);
    std::vector<LinCon> keq;
    for (auto& c : p.eqs) {
        if (near_zero_vec(c.a)) {
            if (std::abs(c.b) > 1e-9) return infeasible_piece(p.dim);
            continue;
        }
        normalize_row(c);
        keq.push_back(c);
    }
    p.eqs = std::move(keq);
    if (!reduce_equalities(p.eqs, p.dim, 1e-11)) return infeasible_piece(p.dim);
    return p;
}

}  // namespace

ConvexPolyhedron project_piece(const ConvexPolyhedron& p_in, const std::vector<int>& keep,
                               double tol) {
    ConvexPolyhedron p = light_cleanup(p_in, tol, false);
    // iterate: eliminate the dropped column with the fewest pos*neg products
    std::vector<int> cur(p.dim);
    for (int j = 0; j < p.dim; ++j) cur[j] = j;
    auto is_kept = [&](int orig) {
        return std::find(keep.begin(), keep.end(), orig) != keep.end();
    };
    while (true) {
        int drop_local = -1;
        long best_cost = -1;
        for (size_t loc = 0; loc < cur.size(); ++loc) {
            if (is_kept(cur[loc])) continue;
            bool in_eq = false;
            for (const auto& e : p.eqs)
                if (std::abs(e.a[static_cast<int>(loc)]) > 1e-11) { in_eq = true; break; }
            long cost;
            if (in_eq) {
                cost = 0;  // equality pivots are free
            } else {
                long np = 0, nn = 0;
                for (const auto& c : p.ineqs) {
                    if (c.a[static_cast<int>(loc)] > tol) ++np;
                    else if (c.a[static_cast<int>(loc)] < -tol) ++nn;
                }
                cost = np * nn + 1;
            }
            if (drop_local < 0 || cost < best_cost) {
                drop_local = static_cast<int>(loc);
                best_cost = cost;
            }
        }
        if (drop_local < 0) break;
        p = eliminate_one(p, drop_local, tol);
        cur.erase(cur.begin() + drop_local);
        bool full = p.ineqs.size() > static_cast<size_t>(2 * p.dim + 8);
        p = light_cleanup(p, tol, full);
        if (p.ineqs.size() == 1 && near_zero_vec(p.ineqs[0].a)) return infeasible_piece(static_cast<int>(keep.size()));
    }
    // reorder columns to match keep order
    Mat P = Mat::Zero(static_cast<int>(cur.size()), static_cast<int>(keep.size()));
    for (size_t t = 0; t < keep.size(); ++t) {
        auto it = std::find(cur.begin(), cur.end(), keep[t]);
        if (it == cur.end()) throw Error("project_piece: bookkeeping");
        P(static_cast<Eigen::Index>(it - cur.begin()), static_cast<Eigen::Index>(t)) = 1.0;
    }
    ConvexPolyhedron out = substitute_affine(p, P, Vec::Zero(static_cast<int>(cur.size())));
    return remove_redundancy(out, tol);
}

int affine_dimension(const ConvexPolyhedron& p_in, double tol) {
    ConvexPolyhedron p = remove_redundancy(p_in, tol);
    if (p.is_empty(tol)) return -1;
    Mat A = p.ineq_matrix();
    Vec b = p.ineq_rhs();
    Mat E = p.eq_matrix();
    Vec f = p.eq_rhs();
    std::vector<Vec> eq_rows;
    for (Eigen::Index r = 0; r < E.rows(); ++r) eq_rows.push_back(E.row(r));
    for (const auto& c : p.ineqs) {
        LpResult lo = solve_lp(c.a, A, b, E, f);
        if (lo.status == LpStatus::Optimal && lo.value >= c.b - tol) eq_rows.push_back(c.a);
    }
    if (eq_rows.empty()) return p.dim;
    Mat S(static_cast<Eigen::Index>(eq_rows.size()), p.dim);
    for (size_t r = 0; r < eq_rows.size(); ++r) S.row(static_cast<Eigen::Index>(r)) = eq_rows[r];
    Eigen::FullPivLU<Mat> lu(S);
    lu.setThreshold(1e-9);
    return p.dim - static_cast<int>(lu.rank());
}

std::optional<Vec> relative_interior_point(const ConvexPolyhedron& p_in, double tol) {
    ConvexPolyhedron p = remove_redundancy(p_in, tol);
    if (p.is_empty(tol)) return std::nullopt;
    // identify implicit equalities
    Mat A = p.ineq_matrix();
    Vec b = p.ineq_rhs();
    Mat E = p.eq_matrix();
    Vec f = p.eq_rhs();
    std::vector<bool> implicit(p.ineqs.size(), false);
    for (size_t i = 0; i < p.ineqs.size(); ++i) {
        LpResult lo = solve_lp(p.ineqs[i].a, A, b, E, f);
        if (lo.status == LpStatus::Optimal && lo.value >= p.ineqs[i].b - tol) implicit[i] = true;
    }
    // max t with strict slack on non-implicit rows
    int d = p.dim;
    int nv = d + 1;
    std::vector<LinCon> iq, eq;
    for (size_t i = 0; i < p.ineqs.size(); ++i) {
        Vec a = Vec::Zero(nv);
        a.head(d) = p.ineqs[i].a;
        if (!implicit[i]) a[d] = 1.0;
        iq.push_back({a, p.ineqs[i].b});
        if (implicit[i]) {
            Vec am = Vec::Zero(nv);
            am.head(d) = -p.ineqs[i].a;
            iq.push_back({am, -p.ineqs[i].b});
        }
    }
    {
        Vec a = Vec::Zero(nv);
        a[d] = 1.0;
        iq.push_back({a, 1.0});
        iq.push_back({-a, 0.0});
    }
    for (const auto& c : p.eqs) {
        Vec a = Vec::Zero(nv);
        a.head(d) = c.a;
        eq.push_back({a, c.b});
    }
    Vec cobj = Vec::Zero(nv);
    cobj[d] = 1.0;
    LpResult r = solve_lp_max(cobj, stack_rows(iq, nv), stack_rhs(iq), stack_rows(eq, nv), stack_rhs(eq));
    if (r.status != LpStatus::Optimal) return std::nullopt;
    return Vec(r.x.head(d));
}

Generators enumerate_generators(const ConvexPolyhedron& p_in, double tol) {
    ConvexPolyhedron p = remove_redundancy(p_in, tol);
    Generators g;
    if (p.is_empty(tol)) return g;
    const int d = p.dim;
    Mat E = p.eq_matrix();
    const int re = static_cast<int>(E.rows());
    const int mi = static_cast<int>(p.ineqs.size());

    // lineality space: kernel of all rows
    Mat All(mi + re, d);
    for (int i = 0; i < mi; ++i) All.row(i) = p.ineqs[i].a;
    for (int i = 0; i < re; ++i) All.row(mi + i) = E.row(i);
    if (mi + re == 0) {
        for (int j = 0; j < d; ++j) g.lines.push_back(unit_vec(d, j));
        g.vertices.push_back(Vec::Zero(d));
        return g;
    }
    Eigen::FullPivLU<Mat> lu_all(All);
    lu_all.setThreshold(1e-9);
    Mat L = lu_all.kernel();
    if (lu_all.rank() < d) {
        for (Eigen::Index c = 0; c < L.cols(); ++c)
            if (!near_zero_vec(Vec(L.col(c)))) g.lines.push_back(L.col(c).normalized());
    }

    // vertices: choose d - re inequality rows active
    int need = d - re;
    if (need >= 0) {
        for_each_subset_up_to(mi, need, [&](const std::vector<int>& S) {
            if (static_cast<int>(S.size()) != need) return true;
            Mat M(re + need, d);
            Vec rhs(re + need);
            for (int i = 0; i < re; ++i) {
                M.row(i) = E.row(i);
                rhs[i] = p.eqs[i].b;
            }
            for (int k = 0; k < need; ++k) {
                M.row(re + k) = p.ineqs[S[k]].a;
                rhs[re + k] = p.ineqs[S[k]].b;
            }
            Eigen::FullPivLU<Mat> lu(M);
            lu.setThreshold(1e-9);
            if (lu.rank() < d) return true;
            Vec x = lu.solve(rhs);
            if ((M * x - rhs).lpNorm<Eigen::Infinity>() > 1e-7) return true;
            if (p.contains(x, 1e-7)) g.vertices.push_back(x);
            return true;
        });
    }
    // extreme rays of the recession cone
    int needr = d - re - 1 - static_cast<int>(g.lines.size());
    if (needr >= 0) {
        for_each_subset_up_to(mi, needr, [&](const std::vector<int>& S) {
            if (static_cast<int>(S.size()) != needr) return true;
            Mat M(re + needr, d);
            for (int i = 0; i < re; ++i) M.row(i) = E.row(i);
            for (int k = 0; k < needr; ++k) M.row(re + k) = p.ineqs[S[k]].a;
            Mat Mfull(M.rows() + static_cast<Eigen::Index>(g.lines.size()), d);
            Mfull.topRows(M.rows()) = M;
            for (size_t li = 0; li < g.lines.size(); ++li)
                Mfull.row(M.rows() + static_cast<Eigen::Index>(li)) = g.lines[li].transpose();
            Eigen::FullPivLU<Mat> lu(Mfull);
            lu.setThreshold(1e-9);
            if (d - static_cast<int>(lu.rank()) != 1) return true;
            Mat K = lu.kernel();
            Vec n = K.col(0).normalized();
            auto in_rec = [&](const Vec& v) {
                for (const auto& c : p.ineqs)
                    if (c.a.dot(v) > 1e-9) return false;
                for (Eigen::Index r = 0; r < E.rows(); ++r)
                    if (std::abs(E.row(r).dot(v)) > 1e-9) return false;
                return true;
            };
            if (in_rec(n)) g.rays.push_back(n);
            if (in_rec(-n)) g.rays.push_back(-n);
            return true;
        });
    }
    // dedupe rays/vertices
    auto dedupe = [](std::vector<Vec>& vs) {
        std::vector<Vec> out;
        for (const auto& v : vs) {
            bool dup = false;
            for (const auto& w : out)
                if ((v - w).lpNorm<Eigen::Infinity>() < 1e-8) { dup = true; break; }
            if (!dup) out.push_back(v);
        }
        vs = std::move(out);
    };
    dedupe(g.vertices);
    dedupe(g.rays);
    dedupe(g.lines);
    return g;
}

// ---------------------------------------------------------------------------
// exact projection QP
// ---------------------------------------------------------------------------

std::optional<Vec> project_onto_piece(const Vec& x, const ConvexPolyhedron& p_in, double tol) {
    ConvexPolyhedron p = remove_redundancy(p_in, tol);
    if (p.is_empty(tol)) return std::nullopt;
    const int d = p.dim;
    if (x.size() != d) throw DimensionMismatch("project_onto_piece");
    Mat E = p.eq_matrix();
    Vec f = p.eq_rhs();
    const int re = static_cast<int>(E.rows());
    const int mi = static_cast<int>(p.ineqs.size());

    double best = kInf;
    Vec best_x;
    auto try_active = [&](const std::vector<int>& W) {
        int k = static_cast<int>(W.size());
        int n = d + k + re;
        Mat K = Mat::Zero(n, n);
        Vec rhs = Vec::Zero(n);
        K.topLeftCorner(d, d).setIdentity();
        rhs.head(d) = x;
        for (int i = 0; i < k; ++i) {
            const Vec& a = p.ineqs[W[i]].a;
            K.block(0, d + i, d, 1) = a;
            K.block(d + i, 0, 1, d) = a.transpose();
            rhs[d + i] = p.ineqs[W[i]].b;
        }
        for (int i = 0; i < re; ++i) {
            K.block(0, d + k + i, d, 1) = E.row(i).transpose();
            K.block(d + k + i, 0, 1, d) = E.row(i);
            rhs[d + k + i] = f[i];
        }
        Eigen::FullPivLU<Mat> lu(K);
        lu.setThreshold(1e-12);
        if (lu.rank() < n) return;
        Vec sol = lu.solve(rhs);
        Vec xc = sol.head(d);
        for (int i = 0; i < k; ++i)
            if (sol[d + i] < -1e-8) return;  // dual infeasible
        if (!p.contains(xc, 1e-8)) return;
        double dist = (xc - x).norm();
        if (dist < best) {
            best = dist;
            best_x = xc;
        }
    };
    for_each_subset_up_to(mi, std::min(mi, d), [&](const std::vector<int>& W) {
        try_active(W);
        return true;
    });
    if (!best_x.size()) {
        // degenerate KKT systems everywhere; fall back on any feasible point
        auto fp = lp_feasible_point(p.ineq_matrix(), p.ineq_rhs(), E, f);
        if (!fp) return std::nullopt;
        return fp;
    }
    return best_x;
}

double distance_to_set(const Vec& x, const PolyhedralSet& s) {
    double best = kInf;
    for (const auto& p : s.pieces) {
        auto proj = project_onto_piece(x, p);
        if (proj) best = std::min(best, (*proj - x).norm());
    }
    return best;
}

std::optional<Vec> project_onto_set(const Vec& x, const PolyhedralSet& s) {
    double best = kInf;
    std::optional<Vec> best_x;
    for (const auto& p : s.pieces) {
        auto proj = project_onto_piece(x, p);
        if (proj && (*proj - x).norm() < best) {
            best = (*proj - x).norm();
            best_x = proj;
        }
    }
    return best_x;
}

// ---------------------------------------------------------------------------
// set algebra
// ---------------------------------------------------------------------------

PolyhedralSet linear_image(const PolyhedralSet& s, const Mat& M) {
    if (M.cols() != s.dim) throw DimensionMismatch("linear_image");
    int dy = static_cast<int>(M.rows());
    PolyhedralSet out(dy);
    for (const auto& p : s.pieces) {
        if (p.is_empty()) continue;
        int total = dy + s.dim;
        ConvexPolyhedron lifted(total);
        for (int r = 0; r < dy; ++r) {
            Vec a = Vec::Zero(total);
            a[r] = 1.0;
            a.tail(s.dim) = -M.row(r);
            lifted.add_eq(a, 0.0);
        }
        for (const auto& c : p.ineqs) {
            Vec a = Vec::Zero(total);
            a.tail(s.dim) = c.a;
            lifted.add_ineq(a, c.b);
        }
        for (const auto& c : p.eqs) {
            Vec a = Vec::Zero(total);
            a.tail(s.dim) = c.a;
            lifted.add_eq(a, c.b);
        }
        std::vector<int> keep(dy);
        for (int j = 0; j < dy; ++j) keep[j] = j;
        out.append(project_piece(lifted, keep));
    }
    return out.pruned();
}

PolyhedralSet linear_preimage(const PolyhedralSet& s, const Mat& M) {
    if (M.rows() != s.dim) throw DimensionMismatch("linear_preimage");
    int dx = static_cast<int>(M.cols());
    PolyhedralSet out(dx);
    for (const auto& p : s.pieces) {
        ConvexPolyhedron q(dx);
        for (const auto& c : p.ineqs) q.add_ineq(M.transpose() * c.a, c.b);
        for (const auto& c : p.eqs) q.add_eq(M.transpose() * c.a, c.b);
        out.append(std::move(q));
    }
    return out.pruned();
}

PolyhedralSet minkowski_sum(const PolyhedralSet& a, const PolyhedralSet& b) {
    if (a.dim != b.dim) throw DimensionMismatch("minkowski_sum");
    int d = a.dim;
    PolyhedralSet out(d);
    for (const auto& pa : a.pieces) {
        for (const auto& pb : b.pieces) {
            if (pa.is_empty() || pb.is_empty()) continue;
            int total = 2 * d;  // (s, x) with x in pa, s - x in pb
            ConvexPolyhedron lifted(total);
            for (const auto& c : pa.ineqs) {
                Vec v = Vec::Zero(total);
                v.tail(d) = c.a;
                lifted.add_ineq(v, c.b);
            }
            for (const auto& c : pa.eqs) {
                Vec v = Vec::Zero(total);
                v.tail(d) = c.a;
                lifted.add_eq(v, c.b);
            }
            for (const auto& c : pb.ineqs) {
                Vec v = Vec::Zero(total);
                v.head(d) = c.a;
                v.tail(d) = -c.a;
                lifted.add_ineq(v, c.b);
            }
            for (const auto& c : pb.eqs) {
                Vec v = Vec::Zero(total);
                v.head(d) = c.a;
                v.tail(d) = -c.a;
                lifted.add_eq(v, c.b);
            }
            std::vector<int> keep(d);
            for (int j = 0; j < d; ++j) keep[j] = j;
            out.append(project_piece(lifted, keep));
        }
    }
    return out.pruned();
}

PolyhedralSet intersect(const PolyhedralSet& a, const PolyhedralSet& b) {
    if (a.dim != b.dim) throw DimensionMismatch("intersect");
    PolyhedralSet out(a.dim);
    for (const auto& pa : a.pieces) {
        for (const auto& pb : b.pieces) {
            ConvexPolyhedron q = pa;
            for (const auto& c : pb.ineqs) q.add_ineq(c.a, c.b);
            for (const auto& c : pb.eqs) q.add_eq(c.a, c.b);
            out.append(std::move(q));
        }
    }
    return out.pruned();
}

PolyhedralSet project_set(const PolyhedralSet& s, const std::vector<int>& keep) {
    PolyhedralSet out(static_cast<int>(keep.size()));
    for (const auto& p : s.pieces) {
        if (p.is_empty()) continue;
        out.append(project_piece(p, keep));
    }
    return out.pruned();
}

PolyhedralSet product_set(const PolyhedralSet& a, const PolyhedralSet& b) {
    int d = a.dim + b.dim;
    PolyhedralSet out(d);
    for (const auto& pa : a.pieces) {
        for (const auto& pb : b.pieces) {
            ConvexPolyhedron q(d);
            for (const auto& c : pa.ineqs) {
                Vec v = Vec::Zero(d);
                v.head(a.dim) = c.a;
                q.add_ineq(v, c.b);
            }
            for (const auto& c : pa.eqs) {
                Vec v = Vec::Zero(d);
                v.head(a.dim) = c.a;
                q.add_eq(v, c.b);
            }
            for (const auto& c : pb.ineqs) {
                Vec v = Vec::Zero(d);
                v.tail(b.dim) = c.a;
                q.add_ineq(v, c.b);
            }
            for (const auto& c : pb.eqs) {
                Vec v = Vec::Zero(d);
                v.tail(b.dim) = c.a;
                q.add_eq(v, c.b);
            }
            out.append(std::move(q));
        }
    }
    return out;
}

PolyhedralSet negate_set(const PolyhedralSet& s) { return scale_set(s, -1.0); }

PolyhedralSet scale_set(const PolyhedralSet& s, double gamma) {
    PolyhedralSet out(s.dim);
    if (gamma == 0.0) throw Error("scale_set: zero scale");
    for (const auto& p : s.pieces) {
        ConvexPolyhedron q(s.dim);
        for (const auto& c : p.ineqs) {
            if (gamma > 0)
                q.add_ineq(c.a, gamma * c.b);
            else
                q.add_ineq(-c.a, -gamma * c.b);  // x/gamma in piece flips the row
        }
        for (const auto& c : p.eqs) q.add_eq(c.a, gamma * c.b);
        out.append(std::move(q));
    }
    return out;
}

PolyhedralSet translate_set(const PolyhedralSet& s, const Vec& t) {
    PolyhedralSet out(s.dim);
    for (const auto& p : s.pieces) {
        ConvexPolyhedron q(s.dim);
        for (const auto& c : p.ineqs) q.add_ineq(c.a, c.b + c.a.dot(t));
        for (const auto& c : p.eqs) q.add_eq(c.a, c.b + c.a.dot(t));
        out.append(std::move(q));
    }
    return out;
}

PolyhedralCone linear_image(const PolyhedralCone& c, const Mat& M) {
    return PolyhedralCone(linear_image(c.set, M));
}
PolyhedralCone linear_preimage(const PolyhedralCone& c, const Mat& M) {
    return PolyhedralCone(linear_preimage(c.set, M));
}
PolyhedralCone minkowski_sum(const PolyhedralCone& a, const PolyhedralCone& b) {
    return PolyhedralCone(minkowski_sum(a.set, b.set));
}
PolyhedralCone intersect(const PolyhedralCone& a, const PolyhedralCone& b) {
    return PolyhedralCone(intersect(a.set, b.set));
}
PolyhedralCone project_cone(const PolyhedralCone& c, const std::vector<int>& keep) {
    return PolyhedralCone(project_set(c.set, keep));
}
PolyhedralCone product_cone(const PolyhedralCone& a, const PolyhedralCone& b) {
    return PolyhedralCone(product_set(a.set, b.set));
}
PolyhedralCone negate_cone(const PolyhedralCone& c) { return PolyhedralCone(negate_set(c.set)); }

// ---------------------------------------------------------------------------
// triviality / containment
// ---------------------------------------------------------------------------

std::optional<Vec> cone_nonzero_point(const PolyhedralCone& c, double tol) {
    for (const auto& p : c.set.pieces) {
        if (p.is_empty(tol)) continue;
        for (int j = 0; j < p.dim; ++j) {
            for (double s : {1.0, -1.0}) {
                ConvexPolyhedron q = p;
                q.add_eq(unit_vec(p.dim, j, s), 1.0);
                auto fp = lp_feasible_point(q.ineq_matrix(), q.ineq_rhs(), q.eq_matrix(), q.eq_rhs(), tol);
                if (fp) return fp;
            }
        }
    }
    return std::nullopt;
}

bool cone_is_trivial(const PolyhedralCone& c, double tol) {
    return !cone_nonzero_point(c, tol).has_value();
}

std::optional<Vec> set_nonzero_point(const PolyhedralSet& s, double tol) {
    for (const auto& p : s.pieces) {
        if (p.is_empty(tol)) continue;
        Mat A = p.ineq_matrix();
        Vec b = p.ineq_rhs();
        Mat E = p.eq_matrix();
        Vec f = p.eq_rhs();
        for (int j = 0; j < p.dim; ++j) {
            for (double sg : {1.0, -1.0}) {
                LpResult r = solve_lp_max(unit_vec(p.dim, j, sg), A, b, E, f);
                if (r.status == LpStatus::Unbounded) {
                    // walk out along an improving direction found via a bounded probe
                    ConvexPolyhedron q = p;
                    q.add_eq(unit_vec(p.dim, j, sg), 1.0);
                    auto fp = lp_feasible_point(q.ineq_matrix(), q.ineq_rhs(), q.eq_matrix(), q.eq_rhs(), tol);
                    if (fp) return fp;
                    continue;
                }
                if (r.status == LpStatus::Optimal && r.value > tol * 10) return r.x;
            }
        }
    }
    return std::nullopt;
}

namespace {

bool piece_in_union_rec(const ConvexPolyhedron& p, const std::vector<ConvexPolyhedron>& qs,
                        double tol, int& budget) {
    if (budget-- <= 0) throw Error("piece_in_union budget");
    if (p.is_empty()) return true;
    for (const auto& q : qs)
        if (piece_subset_of_piece(p, q, tol)) return true;
    // find a piece properly intersecting p and subtract it
    for (const auto& q : qs) {
        ConvexPolyhedron cap = p;
        for (const auto& c : q.ineqs) cap.add_ineq(c.a, c.b);
        for (const auto& c : q.eqs) cap.add_eq(c.a, c.b);
        if (cap.is_empty()) continue;
        // require the subtraction to make progress: cap must not equal p
        if (piece_subset_of_piece(p, cap, tol)) continue;
        // region subtraction: remainder cells of p \ q
        std::vector<LinCon> cuts;
        for (const auto& c : q.ineqs) cuts.push_back(c);
        for (const auto& c : q.eqs) {
            cuts.push_back(c);
            cuts.push_back({-c.a, -c.b});
        }
        std::vector<ConvexPolyhedron> cells;
        ConvexPolyhedron prefix = p;
        for (const auto& cut : cuts) {
            ConvexPolyhedron cell = prefix;
            cell.add_ineq(-cut.a, -cut.b);  // violate this cut
            if (!cell.is_empty()) cells.push_back(remove_redundancy(cell, tol));
            prefix.add_ineq(cut.a, cut.b);
        }
        bool all = true;
        for (const auto& cell : cells) {
            if (!piece_in_union_rec(cell, qs, tol, budget)) {
                all = false;
                break;
            }
        }
        if (all) return true;
        return false;
    }
    return false;  // no piece even touches p
}

std::vector<Vec> sample_points(const ConvexPolyhedron& p, int count, unsigned seed) {
    std::vector<Vec> pts;
    auto ri = relative_interior_point(p);
    if (ri) pts.push_back(*ri);
    Generators g = enumerate_generators(p);
    for (const auto& v : g.vertices) pts.push_back(v);
    if (ri) {
        for (const auto& r : g.rays) pts.push_back(*ri + r);
        for (const auto& l : g.lines) {
            pts.push_back(*ri + l);
            pts.push_back(*ri - l);
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Mat A = p.ineq_matrix();
    Vec b = p.ineq_rhs();
    Mat E = p.eq_matrix();
    Vec f = p.eq_rhs();
    for (int k = 0; k < count; ++k) {
        Vec c(p.dim);
        for (int j = 0; j < p.dim; ++j) c[j] = nd(rng);
        LpResult r = solve_lp(c, A, b, E, f);
        if (r.status == LpStatus::Optimal) pts.push_back(r.x);
    }
    return pts;
}

}  // namespace

bool subset_of(const PolyhedralSet& inner, const PolyhedralSet& outer, double tol, bool* exact) {
    if (exact) *exact = true;
    std::vector<ConvexPolyhedron> qs;
    for (const auto& q : outer.pieces)
        if (!q.is_empty()) qs.push_back(q);
    for (const auto& p : inner.pieces) {
        if (p.is_empty()) continue;
        int budget = 4000;
        bool ok;
        try {
            ok = piece_in_union_rec(remove_redundancy(p, default_tols().lp), qs, tol, budget);
        } catch (const Error&) {
            ok = false;
        }
        if (!ok) {
            // sampled fallback
            if (exact) *exact = false;
            for (const Vec& x : sample_points(p, 24, 1234567u)) {
                bool in = false;
                for (const auto& q : qs)
                    if (q.contains(x, tol)) { in = true; break; }
                if (!in) return false;
            }
        }
    }
    return true;
}

bool sets_equal(const PolyhedralSet& a, const PolyhedralSet& b, double tol, bool* exact) {
    bool e1 = true, e2 = true;
    bool r = subset_of(a, b, tol, &e1) && subset_of(b, a, tol, &e2);
    if (exact) *exact = e1 && e2;
    return r;
}

PolyhedralCone closed_conic_hull(const PolyhedralSet& s, double tol) {
    std::vector<Vec> rays, lines;
    bool nonempty = false;
    for (const auto& p : s.pieces) {
        if (p.is_empty(tol)) continue;
        nonempty = true;
        Generators g = enumerate_generators(p, tol);
        for (const auto& v : g.vertices)
            if (!near_zero_vec(v, 1e-10)) rays.push_back(v);
        for (const auto& r : g.rays) rays.push_back(r);
        for (const auto& l : g.lines) lines.push_back(l);
    }
    if (!nonempty) return PolyhedralCone(PolyhedralSet::empty_set(s.dim));
    return PolyhedralCone::from_generators(s.dim, rays, lines);
}

// ---------------------------------------------------------------------------
// tangent / normal cones
// ---------------------------------------------------------------------------

PolyhedralCone tangent_cone(const PolyhedralSet& s, const Vec& x, const Tols& tols) {
    if (x.size() != s.dim) throw DimensionMismatch("tangent_cone");
    PolyhedralSet out(s.dim);
    bool found = false;
    for (const auto& p : s.pieces) {
        if (p.is_empty(tols.lp) || !p.contains(x, tols.membership)) continue;
        found = true;
        ConvexPolyhedron t(s.dim);
        for (int i : p.active_ineqs(x, tols.membership)) t.add_ineq(p.ineqs[i].a, 0.0);
        for (const auto& c : p.eqs) t.add_eq(c.a, 0.0);
        out.append(remove_redundancy(t, tols.lp));
    }
    if (!found) throw PointNotInSet("tangent_cone");
    return PolyhedralCone(out.pruned(tols.lp));
}

PolyhedralCone normal_cone_convex(const ConvexPolyhedron& p, const Vec& x, const Tols& tols) {
    if (!p.contains(x, tols.membership)) throw PointNotInSet("normal_cone_convex");
    std::vector<Vec> rays, lines;
    for (int i : p.active_ineqs(x, tols.membership)) rays.push_back(p.ineqs[i].a);
    for (const auto& c : p.eqs) lines.push_back(c.a);
    return PolyhedralCone::from_generators(p.dim, rays, lines);
}

PolyhedralCone polar(const PolyhedralCone& c, double tol) {
    int d = c.dim();
    std::vector<ConvexPolyhedron> live;
    for (const auto& p : c.set.pieces)
        if (!p.is_empty(tol)) live.push_back(p);
    if (live.empty()) return PolyhedralCone::whole_space(d);
    ConvexPolyhedron acc = ConvexPolyhedron::whole_space(d);
    for (const auto& p : live) {
        std::vector<Vec> rays, lines;
        for (const auto& cn : p.ineqs) rays.push_back(cn.a);
        for (const auto& cn : p.eqs) lines.push_back(cn.a);
        PolyhedralCone pc = PolyhedralCone::from_generators(d, rays, lines);
        for (const auto& cn : pc.set.pieces[0].ineqs) acc.add_ineq(cn.a, 0.0);
        for (const auto& cn : pc.set.pieces[0].eqs) acc.add_eq(cn.a, 0.0);
    }
    return PolyhedralCone::from_piece(remove_redundancy(acc, tol));
}

std::vector<ConvexPolyhedron> local_cone_pieces(const PolyhedralSet& s, const Vec& x,
                                                const Tols& tols) {
    std::vector<ConvexPolyhedron> cones;
    for (const auto& p : s.pieces) {
        if (p.is_empty(tols.lp) || !p.contains(x, tols.membership)) continue;
        ConvexPolyhedron t(s.dim);
        for (int i : p.active_ineqs(x, tols.membership)) t.add_ineq(p.ineqs[i].a, 0.0);
        for (const auto& c : p.eqs) t.add_eq(c.a, 0.0);
        cones.push_back(remove_redundancy(t, tols.lp));
    }
    if (cones.empty()) throw PointNotInSet("local_cone_pieces");
    return cones;
}

// ---------------------------------------------------------------------------
// activity-pattern enumeration over a union of cones
// ---------------------------------------------------------------------------

namespace {

struct PatternState {
    // accumulated constraints on (d, t)
    std::vector<LinCon> eq_rows;      // a.d = 0
    std::vector<LinCon> strict_rows;  // a.d <= -t  (strictly negative)
    std::vector<LinCon> pos_rows;     // a.d >= t   (strictly positive)
};

std::optional<Vec> strict_realizer(const PatternState& st, int d, double strict_tol) {
    int nv = d + 1;
    std::vector<LinCon> iq, eq;
    for (const auto& r : st.strict_rows) {
        Vec a = Vec::Zero(nv);
        a.head(d) = r.a;
        a[d] = 1.0;
        iq.push_back({a, 0.0});
    }
    for (const auto& r : st.pos_rows) {
        Vec a = Vec::Zero(nv);
        a.head(d) = -r.a;
        a[d] = 1.0;
        iq.push_back({a, 0.0});
    }
    {
        Vec a = Vec::Zero(nv);
        a[d] = 1.0;
        iq.push_back({a, 1.0});
        iq.push_back({-a, 0.0});
    }
    // bound the realizer box so the LP stays bounded
    for (int j = 0; j < d; ++j) {
        iq.push_back({unit_vec(nv, j), 1.0});
        iq.push_back({unit_vec(nv, j, -1.0), 1.0});
    }
    for (const auto& r : st.eq_rows) {
        Vec a = Vec::Zero(nv);
        a.head(d) = r.a;
        eq.push_back({a, 0.0});
    }
    Vec cobj = Vec::Zero(nv);
    cobj[d] = 1.0;
    Mat A(static_cast<Eigen::Index>(iq.size()), nv);
    Vec b(static_cast<Eigen::Index>(iq.size()));
    for (size_t i = 0; i < iq.size(); ++i) {
        A.row(static_cast<Eigen::Index>(i)) = iq[i].a;
        b[static_cast<Eigen::Index>(i)] = iq[i].b;
    }
    Mat Em(static_cast<Eigen::Index>(eq.size()), nv);
    Vec fv(static_cast<Eigen::Index>(eq.size()));
    for (size_t i = 0; i < eq.size(); ++i) {
        Em.row(static_cast<Eigen::Index>(i)) = eq[i].a;
        fv[static_cast<Eigen::Index>(i)] = eq[i].b;
    }
    LpResult r = solve_lp_max(cobj, A, b, Em, fv);
    if (r.status != LpStatus::Optimal || r.value <= strict_tol) return std::nullopt;
    return Vec(r.x.head(d));
}

}  // namespace

std::vector<LocalCell> enumerate_local_cells(const std::vector<ConvexPolyhedron>& cones,
                                             const Tols& tols) {
    const double strict_tol = 1e-7;
    if (cones.empty()) return {};
    const int d = cones.front().dim;
    for (const auto& k : cones) {
        if (k.dim != d) throw DimensionMismatch("enumerate_local_cells");
        if (k.ineqs.size() > 14) throw PatternOverflow("piece with too many rows");
    }

    std::vector<LocalCell> cells;
    std::set<std::string> cell_sigs;
    int explored = 0;

    struct Choice {
        bool in = false;
        std::vector<int> active;  // when in
        int out_row = -1;         // when out via an inequality row
        int out_eq = -1;          // when out via an equality row
        double out_eq_sign = 1.0;
    };
    std::vector<Choice> choices(cones.size());

    std::function<void(size_t, PatternState&)> rec = [&](size_t idx, PatternState& st) {
        if (idx == cones.size()) {
            if (++explored > tols.max_patterns) throw PatternOverflow("configuration cap exceeded");
            bool any_in = false;
            for (const auto& ch : choices) any_in = any_in || ch.in;
            if (!any_in) return;
            auto real = strict_realizer(st, d, strict_tol);
            if (!real) return;
            // polar of the union tangent at the realizer: intersection of the
            // per-piece active-normal cones over the IN pieces
            ConvexPolyhedron acc = ConvexPolyhedron::whole_space(d);
            for (size_t i = 0; i < cones.size(); ++i) {
                if (!choices[i].in) continue;
                std::vector<Vec> rays, lines;
                for (int r : choices[i].active) rays.push_back(cones[i].ineqs[r].a);
                for (const auto& c : cones[i].eqs) lines.push_back(c.a);
                PolyhedralCone pc = PolyhedralCone::from_generators(d, rays, lines);
                for (const auto& cn : pc.set.pieces[0].ineqs) acc.add_ineq(cn.a, 0.0);
                for (const auto& cn : pc.set.pieces[0].eqs) acc.add_eq(cn.a, 0.0);
            }
            acc = remove_redundancy(acc, tols.lp);
            // cell closure
            ConvexPolyhedron closure(d);
            for (size_t i = 0; i < cones.size(); ++i) {
                if (choices[i].in) {
                    for (size_t r = 0; r < cones[i].ineqs.size(); ++r) {
                        bool act = std::find(choices[i].active.begin(), choices[i].active.end(),
                                             static_cast<int>(r)) != choices[i].active.end();
                        if (act)
                            closure.add_eq(cones[i].ineqs[r].a, 0.0);
                        else
                            closure.add_ineq(cones[i].ineqs[r].a, 0.0);
                    }
                    for (const auto& c : cones[i].eqs) closure.add_eq(c.a, 0.0);
                } else if (choices[i].out_row >= 0) {
                    closure.add_ineq(-cones[i].ineqs[choices[i].out_row].a, 0.0);
                } else {
                    closure.add_ineq(-choices[i].out_eq_sign * cones[i].eqs[choices[i].out_eq].a,
                                     0.0);
                }
            }
            closure = remove_redundancy(closure, tols.lp);
            std::string sig;
            for (const auto& c : closure.ineqs) sig += row_signature(c) + ";";
            sig += "|";
            for (const auto& c : closure.eqs) sig += row_signature(c) + ";";
            sig += "#";
            for (const auto& c : acc.ineqs) sig += row_signature(c) + ";";
            sig += "|";
            for (const auto& c : acc.eqs) sig += row_signature(c) + ";";
            if (!cell_sigs.insert(sig).second) return;
            LocalCell cell;
            cell.closure = closure;
            cell.sample = *real;
            cell.tangent_polar = PolyhedralCone::from_piece(acc);
            cells.push_back(std::move(cell));
            return;
        }
        const auto& K = cones[idx];
        const int m = static_cast<int>(K.ineqs.size());
        // IN with a chosen active subset
        std::vector<int> subset;
        std::function<void(int)> subsets = [&](int start) {
            {
                PatternState st2 = st;
                for (const auto& c : K.eqs) st2.eq_rows.push_back({c.a, 0.0});
                for (int r = 0; r < m; ++r) {
                    bool act = std::find(subset.begin(), subset.end(), r) != subset.end();
                    if (act)
                        st2.eq_rows.push_back({K.ineqs[r].a, 0.0});
                    else
                        st2.strict_rows.push_back({K.ineqs[r].a, 0.0});
                }
                if (strict_realizer(st2, d, strict_tol)) {
                    choices[idx] = {true, subset, -1};
                    rec(idx + 1, st2);
                }
            }
            for (int r = start; r < m; ++r) {
                subset.push_back(r);
                subsets(r + 1);
                subset.pop_back();
            }
        };
        subsets(0);
        // OUT with a witness inequality row
        for (int r = 0; r < m; ++r) {
            PatternState st2 = st;
            st2.pos_rows.push_back({K.ineqs[r].a, 0.0});
            if (!strict_realizer(st2, d, strict_tol)) continue;
            choices[idx] = {false, {}, r, -1, 1.0};
            rec(idx + 1, st2);
        }
        // OUT with a violated equality row (either side)
        for (size_t e = 0; e < K.eqs.size(); ++e) {
            for (double sg : {1.0, -1.0}) {
                PatternState st2 = st;
                st2.pos_rows.push_back({sg * K.eqs[e].a, 0.0});
                if (!strict_realizer(st2, d, strict_tol)) continue;
                choices[idx] = {false, {}, -1, static_cast<int>(e), sg};
                rec(idx + 1, st2);
            }
        }
    };

    PatternState st0;
    rec(0, st0);
    return cells;
}

PolyhedralCone limiting_normal_cone_of_union(const std::vector<ConvexPolyhedron>& pieces,
                                             const Vec& x, const Tols& tols) {
    if (pieces.empty()) throw PointNotInSet("limiting_normal_cone_of_union");
    const int d = pieces.front().dim;
    // localize at x: tangent cones of the pieces containing x
    std::vector<ConvexPolyhedron> cones;
    for (const auto& p : pieces) {
        if (p.is_empty(tols.lp) || !p.contains(x, tols.membership)) continue;
        ConvexPolyhedron t(d);
        for (int i : p.active_ineqs(x, tols.membership)) t.add_ineq(p.ineqs[i].a, 0.0);
        for (const auto& c : p.eqs) t.add_eq(c.a, 0.0);
        cones.push_back(remove_redundancy(t, tols.lp));
    }
    if (cones.empty()) throw PointNotInSet("limiting_normal_cone_of_union");
    std::vector<LocalCell> cells = enumerate_local_cells(cones, tols);
    PolyhedralSet out(d);
    for (const auto& cell : cells)
        for (const auto& p : cell.tangent_polar.set.pieces) out.append(p);
    return PolyhedralCone(out.pruned(tols.lp));
}

PolyhedralCone limiting_normal_cone(const PolyhedralSet& s, const Vec& x, const Tols& tols) {
    if (!s.contains(x, tols.membership)) throw PointNotInSet("limiting_normal_cone");
    auto cones = local_cone_pieces(s, x, tols);
    return limiting_normal_cone_of_union(cones, Vec::Zero(s.dim), tols);
}

}  // namespace vreg
