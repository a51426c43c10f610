#pragma once

// Small dense LP kernel: two-phase simplex with Bland's rule.
// Sized for desk-scale problems (tens of rows/columns); every polyhedral
// decision in the toolkit funnels through here.

#include "vreg/common.hpp"

namespace vreg {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;  // optimal objective (minimization)
    Vec x;               // optimizer over the free variables, valid when Optimal
};

/// Minimize c.dot(x) subject to A x <= b and E x = f, x free.
/// A or E may have zero rows. Throws SolverFailure on iteration blowup.
LpResult solve_lp(const Vec& c, const Mat& A, const Vec& b, const Mat& E, const Vec& f,
                  double tol = 1e-9);

/// Maximize variant; result.value is the maximum.
LpResult solve_lp_max(const Vec& c, const Mat& A, const Vec& b, const Mat& E, const Vec& f,
                      double tol = 1e-9);

/// Feasibility of {x : A x <= b, E x = f}; returns a feasible point when found.
std::optional<Vec> lp_feasible_point(const Mat& A, const Vec& b, const Mat& E, const Vec& f,
                                     double tol = 1e-9);

}  // namespace vreg
