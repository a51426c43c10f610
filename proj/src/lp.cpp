#include "vreg/lp.hpp"

#include <cmath>

namespace vreg {
namespace {

constexpr double kPivotEps = 1e-11;
constexpr int kMaxIters = 50000;

// Dense tableau simplex on  min c.y  s.t.  M y = d,  y >= 0, d >= 0.
// Returns false on infeasible phase-1 / true otherwise; unbounded flagged separately.
struct Tableau {
    Mat t;                   // rows x (cols+1); last column is RHS
    std::vector<int> basis;  // basic column per row
    int rows, cols;

    Tableau(const Mat& M, const Vec& d) {
        rows = static_cast<int>(M.rows());
        cols = static_cast<int>(M.cols());
        t.setZero(rows, cols + 1);
        t.leftCols(cols) = M;
        t.col(cols) = d;
        basis.assign(rows, -1);
    }

    // price out: compute reduced costs for objective c over current basis
    // returns (reduced costs row, objective value)
    std::pair<Vec, double> reduced_costs(const Vec& c) const {
        Vec red = c;
        double obj = 0.0;
        for (int r = 0; r < rows; ++r) {
            int bc = basis[r];
            if (bc < 0) continue;
            double cb = c[bc];
            if (cb == 0.0) continue;
            red -= cb * t.row(r).head(cols).transpose();
            obj += cb * t(r, cols);
        }
        return {red, obj};
    }

    void pivot(int pr, int pc) {
        t.row(pr) /= t(pr, pc);
        for (int r = 0; r < rows; ++r) {
            if (r == pr) continue;
            double f = t(r, pc);
            if (std::abs(f) > 0.0) t.row(r) -= f * t.row(pr);
        }
        basis[pr] = pc;
    }

    // Bland's rule simplex; allowed[] masks columns eligible to enter.
    // Returns LpStatus::Optimal or Unbounded.
    LpStatus run(const Vec& c, const std::vector<bool>& allowed) {
        for (int iter = 0; iter < kMaxIters; ++iter) {
            auto [red, obj] = reduced_costs(c);
            (void)obj;
            int enter = -1;
            for (int j = 0; j < cols; ++j) {
                if (!allowed[j]) continue;
                if (red[j] < -kPivotEps) { enter = j; break; }
            }
            if (enter < 0) return LpStatus::Optimal;
            int leave = -1;
            double best_ratio = 0.0;
            for (int r = 0; r < rows; ++r) {
                double a = t(r, enter);
                if (a > kPivotEps) {
                    double ratio = t(r, cols) / a;
                    if (leave < 0 || ratio < best_ratio - kPivotEps ||
                        (ratio < best_ratio + kPivotEps && basis[r] < basis[leave])) {
                        leave = r;
                        best_ratio = ratio;
                    }
                }
            }
            if (leave < 0) return LpStatus::Unbounded;
            pivot(leave, enter);
        }
        throw SolverFailure("simplex iteration cap exceeded");
    }
};

}  // namespace

LpResult solve_lp(const Vec& c, const Mat& A, const Vec& b, const Mat& E, const Vec& f,
                  double tol) {
    const int n = static_cast<int>(c.size());
    const int mi = static_cast<int>(A.rows());
    const int me = static_cast<int>(E.rows());
    if ((mi > 0 && A.cols() != n) || (me > 0 && E.cols() != n))
        throw DimensionMismatch("solve_lp");

    const int rows = mi + me;
    // columns: u (n), v (n), slacks (mi), artificials (rows)
    const int nc = 2 * n + mi;
    Mat M = Mat::Zero(rows, nc + rows);
    Vec d = Vec::Zero(rows);
    for (int r = 0; r < mi; ++r) {
        M.block(r, 0, 1, n) = A.row(r);
        M.block(r, n, 1, n) = -A.row(r);
        M(r, 2 * n + r) = 1.0;
        d[r] = b[r];
    }
    for (int r = 0; r < me; ++r) {
        M.block(mi + r, 0, 1, n) = E.row(r);
        M.block(mi + r, n, 1, n) = -E.row(r);
        d[mi + r] = f[r];
    }
    // make RHS nonnegative, then attach artificial identity
    for (int r = 0; r < rows; ++r) {
        if (d[r] < 0) {
            M.row(r) = -M.row(r);
            d[r] = -d[r];
        }
        M(r, nc + r) = 1.0;
    }

    Tableau tab(M, d);
    for (int r = 0; r < rows; ++r) tab.basis[r] = nc + r;

    // phase 1
    Vec c1 = Vec::Zero(nc + rows);
    for (int j = nc; j < nc + rows; ++j) c1[j] = 1.0;
    std::vector<bool> allow_all(nc + rows, true);
    LpStatus st = tab.run(c1, allow_all);
    if (st != LpStatus::Optimal) throw SolverFailure("phase-1 simplex anomaly");
    auto [red1, obj1] = tab.reduced_costs(c1);
    (void)red1;
    if (obj1 > tol) return {LpStatus::Infeasible, 0.0, Vec()};

    // drive artificials out of the basis when possible
    for (int r = 0; r < rows; ++r) {
        if (tab.basis[r] >= nc) {
            int pc = -1;
            for (int j = 0; j < nc; ++j) {
                if (std::abs(tab.t(r, j)) > 1e-8) { pc = j; break; }
            }
            if (pc >= 0) tab.pivot(r, pc);
        }
    }

    // phase 2: artificial columns frozen out
    Vec c2 = Vec::Zero(nc + rows);
    c2.head(n) = c;
    c2.segment(n, n) = -c;
    std::vector<bool> allowed(nc + rows, true);
    for (int j = nc; j < nc + rows; ++j) allowed[j] = false;
    st = tab.run(c2, allowed);
    if (st == LpStatus::Unbounded) return {LpStatus::Unbounded, -kInf, Vec()};

    Vec y = Vec::Zero(nc + rows);
    for (int r = 0; r < rows; ++r) {
        if (tab.basis[r] >= 0) y[tab.basis[r]] = tab.t(r, tab.cols);
    }
    LpResult res;
    res.status = LpStatus::Optimal;
    res.x = y.head(n) - y.segment(n, n);
    res.value = c.dot(res.x);
    return res;
}

LpResult solve_lp_max(const Vec& c, const Mat& A, const Vec& b, const Mat& E, const Vec& f,
                      double tol) {
    LpResult r = solve_lp(-c, A, b, E, f, tol);
    if (r.status == LpStatus::Optimal) r.value = -r.value;
    if (r.status == LpStatus::Unbounded) r.value = kInf;
    return r;
}

std::optional<Vec> lp_feasible_point(const Mat& A, const Vec& b, const Mat& E, const Vec& f,
                                     double tol) {
    int n = static_cast<int>(A.cols() > 0 ? A.cols() : E.cols());
    LpResult r = solve_lp(Vec::Zero(n), A, b, E, f, tol);
    if (r.status != LpStatus::Optimal) return std::nullopt;
    return r.x;
}

}  // namespace vreg
