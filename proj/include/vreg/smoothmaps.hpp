#pragma once

// Exact polynomial single-valued mappings with Jacobians and semiderivatives
// of Jacobian fields, plus a numeric fallback path for black-box maps.
//
// Orientation convention: nabla(x) is the transposed Jacobian (in_dim x
// out_dim); it is the object written next to coderivatives in every sum-rule
// formula downstream.

#include "vreg/common.hpp"

#include <functional>

namespace vreg {

struct Monomial {
    double coeff = 0.0;
    std::vector<int> expo;  // one exponent per input variable
};

/// One scalar polynomial in in_dim variables.
struct PolyExpr {
    int in_dim = 0;
    std::vector<Monomial> terms;

    static PolyExpr zero(int in_dim) { return PolyExpr{in_dim, {}}; }
    static PolyExpr constant(int in_dim, double c);
    static PolyExpr variable(int in_dim, int j);

    double eval(const Vec& x) const;
    PolyExpr derivative(int j) const;
    PolyExpr& operator+=(const PolyExpr& o);
    PolyExpr& normalized();  // merge duplicate monomials, drop zeros
};

PolyExpr operator+(const PolyExpr& a, const PolyExpr& b);
PolyExpr operator-(const PolyExpr& a, const PolyExpr& b);
PolyExpr operator*(const PolyExpr& a, const PolyExpr& b);
PolyExpr operator*(double s, const PolyExpr& a);

/// Parse "2*x1^2*x2 - x3 + 0.5" style text; variables are x1..xn.
PolyExpr poly_parse(const std::string& text, int in_dim);
std::string poly_print(const PolyExpr& p);

struct PolyMap {
    int in_dim = 0, out_dim = 0;
    std::vector<PolyExpr> comps;

    PolyMap() = default;
    PolyMap(int in, int out);

    static PolyMap zero(int in, int out) { return PolyMap(in, out); }
    static PolyMap identity(int n);
    /// F(x) = L x + c with L out x in.
    static PolyMap affine(const Mat& L, const Vec& c);
    static PolyMap from_strings(int in, const std::vector<std::string>& comps);

    bool is_affine(double tol = 0.0) const;
    /// Linear/constant parts when affine (L out x in).
    std::pair<Mat, Vec> affine_parts() const;

    Vec eval(const Vec& x) const;
    /// Standard Jacobian, out_dim x in_dim.
    Mat jac(const Vec& x) const;
    /// Transposed Jacobian, in_dim x out_dim.
    Mat nabla(const Vec& x) const;
    /// Directional derivative of the field x -> nabla(x) along w; exact.
    Mat nabla_semiderivative(const Vec& x, const Vec& w) const;

    /// Variables re-embedded into a larger input space at the given offset.
    PolyMap lift_inputs(int new_in_dim, int offset) const;
};

PolyMap concat_outputs(const PolyMap& a, const PolyMap& b);
PolyMap operator+(const PolyMap& a, const PolyMap& b);

/// Matrix-valued polynomial map x -> M(x) (rows x cols), entries polynomial.
struct MatrixPolyMap {
    int in_dim = 0, rows = 0, cols = 0;
    std::vector<PolyExpr> entries;  // row-major

    MatrixPolyMap() = default;
    MatrixPolyMap(int in, int r, int c);
    static MatrixPolyMap constant(int in_dim, const Mat& M);

    Mat eval(const Vec& x) const;
    /// Semiderivative of the matrix field along w; exact for polynomials.
    Mat semiderivative(const Vec& x, const Vec& w) const;
    PolyExpr& at(int r, int c) { return entries[static_cast<size_t>(r) * cols + c]; }
    const PolyExpr& at(int r, int c) const { return entries[static_cast<size_t>(r) * cols + c]; }
};

// ---------------------------------------------------------------------------
// black-box path
// ---------------------------------------------------------------------------

struct BlackBoxMap {
    int in_dim = 0, out_dim = 0;
    std::function<Vec(const Vec&)> f;

    Vec eval(const Vec& x) const { return f(x); }
};

struct NumericDerivative {
    Vec value;          // semiderivative estimate, flattened output
    double dispersion;  // spread across the schedule tail
};

/// Forward difference-quotient extrapolation of the semiderivative of a
/// black-box map; throws NonConvergent when the tail spread exceeds tol_semi.
NumericDerivative numeric_semiderivative(const BlackBoxMap& m, const Vec& x, const Vec& w,
                                         const std::vector<double>& schedule = {1e-2, 1e-3, 1e-4,
                                                                                1e-5, 1e-6},
                                         double tol_semi = default_tols().semi);

}  // namespace vreg
