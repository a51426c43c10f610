#pragma once

// Application front-ends: coupled constraint systems 0 = Phi(x, sigma),
// x in Omega, 0 in T(sigma), and variational systems
// 0 in f(x) + M(x) N_{C0}(g(x)), compiled into generalized-equation form and
// run through the regularity checkers with closed-form derivative data.

#include "vreg/regularity.hpp"

namespace vreg {

struct ConstraintSystem {
    PolyMap phi;              // R^k x R^l -> R^p
    PolyhedralSet omega;      // subset of R^k
    StructuredMapping t_map;  // R^l => R^q

    int k() const { return omega.dim; }
    int l() const { return t_map.in_dim(); }
    int p() const { return phi.out_dim; }
    int q() const { return t_map.out_dim(); }

    /// Throws NotASolution unless Phi(x,sigma) = 0, x in Omega, 0 in T(sigma).
    void validate_solution(const Vec& x, const Vec& sigma, double tol = 1e-7) const;
};

struct CompiledSystem {
    PolyMap g;                // (x, sigma) -> (-x, Phi, 0)
    StructuredMapping p_map;  // product of the constant block and T
    StructuredMapping gp;     // the generalized-equation mapping G + P
};

CompiledSystem compile_constraint_system(const ConstraintSystem& cs);

struct CsRegularityReport {
    RegularityVerdict verdict;  // certified via the primal criterion
    bool crit_primal = false;   // joint-kernel criterion
    bool crit_range = false;    // range-form criterion with T metrically regular
    bool equivalent = false;    // the two criteria agreed on this instance
};

/// Metric regularity of G + P at a solution; evaluates both equivalent
/// criteria and records their agreement.
CsRegularityReport cs_metric_regularity(const ConstraintSystem& cs, const Vec& x, const Vec& sigma,
                                        const LsvParams& params = {});

struct CsM2rReport {
    RegularityVerdict verdict;
    bool crit_full = false;   // four-relation criterion with coderivative values
    bool crit_range = false;  // range-form criterion plus T metrically regular
    bool equivalent = false;
};

/// Polyhedral-data sufficient condition for metric 2-regularity of G + P
/// relative to (w, mu); also asserts the per-eta directional regularity.
CsM2rReport cs_m2r_polyhedral(const ConstraintSystem& cs, const Vec& x, const Vec& sigma,
                              const Vec& w, const Vec& mu, const LsvParams& params = {});

/// Unconstrained case Omega = R^k through the reduced mappings; throws
/// ConditionFailed naming the hypothesis that broke.
RegularityVerdict cs_m2r_unconstrained(const ConstraintSystem& cs, const Vec& x, const Vec& sigma,
                                       const Vec& w, const Vec& mu, const LsvParams& params = {});

// ---------------------------------------------------------------------------
// variational systems
// ---------------------------------------------------------------------------

struct VariationalSystem {
    PolyMap f;        // R^k -> R^s
    PolyMap g;        // R^k -> R^q
    MatrixPolyMap m;  // R^k -> R^{s x q}
    PolyhedralSet c0; // convex polyhedral subset of R^q

    int k() const { return f.in_dim; }
    int s() const { return f.out_dim; }
    int q() const { return g.out_dim; }

    void validate_solution(const Vec& x, const Vec& lambda, const Vec& zeta,
                           double tol = 1e-7) const;
};

/// Compile to the constraint-system form with sigma = (lambda, zeta), T the
/// shifted normal-cone mapping, Omega the whole space.
ConstraintSystem compile_variational_system(const VariationalSystem& vs);

/// Metric regularity through the closed-form coderivative criterion.
RegularityVerdict vs_metric_regularity(const VariationalSystem& vs, const Vec& x,
                                       const Vec& lambda, const Vec& zeta,
                                       const LsvParams& params = {});

struct VsM2rReport {
    RegularityVerdict verdict;
    bool alpha_independent = false;     // the lambda-direction terms vanish structurally
    std::vector<Vec> alphas;            // the sweep actually evaluated
    std::vector<bool> alpha_results;
};

/// Directional sufficient condition with the alpha sweep (a finite surrogate
/// for the all-alpha quantifier unless the dependence vanishes).
VsM2rReport vs_m2r(const VariationalSystem& vs, const Vec& x, const Vec& lambda, const Vec& zeta,
                   const Vec& w, const Vec& v, int n_random_alpha = 8,
                   const LsvParams& params = {});

}  // namespace vreg
