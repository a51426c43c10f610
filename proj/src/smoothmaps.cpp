#include "vreg/smoothmaps.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

namespace vreg {

// ---------------------------------------------------------------------------
// PolyExpr
// ---------------------------------------------------------------------------

PolyExpr PolyExpr::constant(int in_dim, double c) {
    PolyExpr p{in_dim, {}};
    if (c != 0.0) p.terms.push_back({c, std::vector<int>(in_dim, 0)});
    return p;
}

PolyExpr PolyExpr::variable(int in_dim, int j) {
    PolyExpr p{in_dim, {}};
    std::vector<int> e(in_dim, 0);
    e[j] = 1;
    p.terms.push_back({1.0, e});
    return p;
}

double PolyExpr::eval(const Vec& x) const {
    if (x.size() != in_dim) throw DimensionMismatch("PolyExpr::eval");
    double v = 0.0;
    for (const auto& t : terms) {
        double m = t.coeff;
        for (int j = 0; j < in_dim; ++j) {
            for (int k = 0; k < t.expo[j]; ++k) m *= x[j];
        }
        v += m;
    }
    return v;
}

PolyExpr PolyExpr::derivative(int j) const {
    PolyExpr out{in_dim, {}};
    for (const auto& t : terms) {
        if (t.expo[j] == 0) continue;
        Monomial m = t;
        m.coeff *= t.expo[j];
        m.expo[j] -= 1;
        out.terms.push_back(std::move(m));
    }
    return out.normalized();
}

PolyExpr& PolyExpr::operator+=(const PolyExpr& o) {
    if (o.in_dim != in_dim) throw DimensionMismatch("PolyExpr +=");
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return normalized();
}

PolyExpr& PolyExpr::normalized() {
    std::map<std::vector<int>, double> acc;
    for (const auto& t : terms) acc[t.expo] += t.coeff;
    terms.clear();
    for (const auto& [e, c] : acc)
        if (c != 0.0) terms.push_back({c, e});
    return *this;
}

PolyExpr operator+(const PolyExpr& a, const PolyExpr& b) {
    PolyExpr r = a;
    r += b;
    return r;
}

PolyExpr operator-(const PolyExpr& a, const PolyExpr& b) {
    PolyExpr r = a;
    r += -1.0 * b;
    return r;
}

PolyExpr operator*(const PolyExpr& a, const PolyExpr& b) {
    if (a.in_dim != b.in_dim) throw DimensionMismatch("PolyExpr *");
    PolyExpr r{a.in_dim, {}};
    for (const auto& ta : a.terms) {
        for (const auto& tb : b.terms) {
            Monomial m;
            m.coeff = ta.coeff * tb.coeff;
            m.expo.resize(static_cast<size_t>(a.in_dim));
            for (int j = 0; j < a.in_dim; ++j) m.expo[j] = ta.expo[j] + tb.expo[j];
            r.terms.push_back(std::move(m));
        }
    }
    return r.normalized();
}

PolyExpr operator*(double s, const PolyExpr& a) {
    PolyExpr r = a;
    for (auto& t : r.terms) t.coeff *= s;
    return r.normalized();
}

// ---------------------------------------------------------------------------
// parser / printer
// ---------------------------------------------------------------------------

PolyExpr poly_parse(const std::string& text, int in_dim) {
    PolyExpr out{in_dim, {}};
    size_t i = 0;
    auto skip_ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    skip_ws();
    bool first = true;
    while (i < text.size()) {
        double sign = 1.0;
        skip_ws();
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            if (text[i] == '-') sign = -1.0;
            ++i;
        } else if (!first) {
            throw Error("polynomial parse error at '" + text.substr(i) + "'");
        }
        first = false;
        skip_ws();
        Monomial m;
        m.coeff = sign;
        m.expo.assign(static_cast<size_t>(in_dim), 0);
        bool saw_factor = false;
        while (i < text.size()) {
            skip_ws();
            if (i < text.size() && text[i] == '*') {
                ++i;
                skip_ws();
            }
            if (i >= text.size()) break;
            char c = text[i];
            if (c == '+' || c == '-') break;
            if (c == 'x' || c == 'X') {
                ++i;
                size_t start = i;
                while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
                if (start == i) throw Error("polynomial parse: variable index expected");
                int idx = std::stoi(text.substr(start, i - start)) - 1;
                if (idx < 0 || idx >= in_dim) throw Error("polynomial parse: variable out of range");
                int power = 1;
                if (i < text.size() && text[i] == '^') {
                    ++i;
                    size_t ps = i;
                    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
                    if (ps == i) throw Error("polynomial parse: exponent expected");
                    power = std::stoi(text.substr(ps, i - ps));
                }
                m.expo[idx] += power;
                saw_factor = true;
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                size_t start = i;
                while (i < text.size() &&
                       (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.' ||
                        text[i] == 'e' || text[i] == 'E' ||
                        ((text[i] == '+' || text[i] == '-') && i > start &&
                         (text[i - 1] == 'e' || text[i - 1] == 'E'))))
                    ++i;
                m.coeff *= std::stod(text.substr(start, i - start));
                saw_factor = true;
            } else {
                throw Error("polynomial parse error at '" + text.substr(i) + "'");
            }
        }
        if (!saw_factor) throw Error("polynomial parse: empty term");
        out.terms.push_back(std::move(m));
        skip_ws();
    }
    return out.normalized();
}

std::string poly_print(const PolyExpr& p) {
    if (p.terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& t : p.terms) {
        double c = t.coeff;
        if (!first) {
            os << (c < 0 ? " - " : " + ");
            c = std::abs(c);
        } else if (c < 0) {
            os << "-";
            c = -c;
        }
        first = false;
        bool has_var = false;
        for (int e : t.expo) has_var = has_var || e > 0;
        bool coef_emitted = false;
        if (!has_var || c != 1.0) {
            os << c;
            coef_emitted = true;
        }
        for (int j = 0; j < p.in_dim; ++j) {
            if (t.expo[j] == 0) continue;
            if (coef_emitted || std::any_of(t.expo.begin(), t.expo.begin() + j,
                                            [](int e) { return e > 0; }))
                os << "*";
            os << "x" << (j + 1);
            if (t.expo[j] > 1) os << "^" << t.expo[j];
            coef_emitted = false;
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// PolyMap
// ---------------------------------------------------------------------------

PolyMap::PolyMap(int in, int out) : in_dim(in), out_dim(out) {
    if (in < 0 || out < 0) throw DimensionMismatch("PolyMap");
    comps.assign(static_cast<size_t>(out), PolyExpr::zero(in));
}

PolyMap PolyMap::identity(int n) {
    PolyMap m(n, n);
    for (int j = 0; j < n; ++j) m.comps[static_cast<size_t>(j)] = PolyExpr::variable(n, j);
    return m;
}

PolyMap PolyMap::affine(const Mat& L, const Vec& c) {
    int out = static_cast<int>(L.rows());
    int in = static_cast<int>(L.cols());
    if (c.size() != out) throw DimensionMismatch("PolyMap::affine");
    PolyMap m(in, out);
    for (int r = 0; r < out; ++r) {
        PolyExpr e = PolyExpr::constant(in, c[r]);
        for (int j = 0; j < in; ++j) e += L(r, j) * PolyExpr::variable(in, j);
        m.comps[static_cast<size_t>(r)] = e;
    }
    return m;
}

PolyMap PolyMap::from_strings(int in, const std::vector<std::string>& comps) {
    PolyMap m(in, static_cast<int>(comps.size()));
    for (size_t r = 0; r < comps.size(); ++r) m.comps[r] = poly_parse(comps[r], in);
    return m;
}

bool PolyMap::is_affine(double) const {
    for (const auto& c : comps)
        for (const auto& t : c.terms) {
            int deg = 0;
            for (int e : t.expo) deg += e;
            if (deg > 1) return false;
        }
    return true;
}

std::pair<Mat, Vec> PolyMap::affine_parts() const {
    if (!is_affine()) throw Error("affine_parts on nonlinear map");
    Mat L = Mat::Zero(out_dim, in_dim);
    Vec c = Vec::Zero(out_dim);
    for (int r = 0; r < out_dim; ++r) {
        for (const auto& t : comps[static_cast<size_t>(r)].terms) {
            int deg = 0, var = -1;
            for (int j = 0; j < in_dim; ++j) {
                deg += t.expo[j];
                if (t.expo[j] == 1) var = j;
            }
            if (deg == 0)
                c[r] += t.coeff;
            else
                L(r, var) += t.coeff;
        }
    }
    return {L, c};
}

Vec PolyMap::eval(const Vec& x) const {
    if (x.size() != in_dim) throw DimensionMismatch("PolyMap::eval");
    Vec y(out_dim);
    for (int r = 0; r < out_dim; ++r) y[r] = comps[static_cast<size_t>(r)].eval(x);
    return y;
}

Mat PolyMap::jac(const Vec& x) const {
    if (x.size() != in_dim) throw DimensionMismatch("PolyMap::jac");
    Mat J(out_dim, in_dim);
    for (int r = 0; r < out_dim; ++r)
        for (int j = 0; j < in_dim; ++j) J(r, j) = comps[static_cast<size_t>(r)].derivative(j).eval(x);
    return J;
}

Mat PolyMap::nabla(const Vec& x) const { return jac(x).transpose(); }

Mat PolyMap::nabla_semiderivative(const Vec& x, const Vec& w) const {
    if (x.size() != in_dim || w.size() != in_dim) throw DimensionMismatch("nabla_semiderivative");
    // polynomial Jacobian fields are differentiable, so the semiderivative is
    // the derivative of each entry contracted with w
    Mat D = Mat::Zero(in_dim, out_dim);
    for (int r = 0; r < out_dim; ++r) {
        for (int j = 0; j < in_dim; ++j) {
            PolyExpr entry = comps[static_cast<size_t>(r)].derivative(j);  // (jac)_{r,j}
            double dir = 0.0;
            for (int k = 0; k < in_dim; ++k) dir += entry.derivative(k).eval(x) * w[k];
            D(j, r) = dir;
        }
    }
    return D;
}

PolyMap PolyMap::lift_inputs(int new_in_dim, int offset) const {
    if (offset + in_dim > new_in_dim) throw DimensionMismatch("lift_inputs");
    PolyMap m(new_in_dim, out_dim);
    for (int r = 0; r < out_dim; ++r) {
        PolyExpr e = PolyExpr::zero(new_in_dim);
        for (const auto& t : comps[static_cast<size_t>(r)].terms) {
            Monomial nm;
            nm.coeff = t.coeff;
            nm.expo.assign(static_cast<size_t>(new_in_dim), 0);
            for (int j = 0; j < in_dim; ++j) nm.expo[static_cast<size_t>(offset + j)] = t.expo[j];
            e.terms.push_back(std::move(nm));
        }
        m.comps[static_cast<size_t>(r)] = e.normalized();
    }
    return m;
}

PolyMap concat_outputs(const PolyMap& a, const PolyMap& b) {
    if (a.in_dim != b.in_dim) throw DimensionMismatch("concat_outputs");
    PolyMap m(a.in_dim, a.out_dim + b.out_dim);
    for (int r = 0; r < a.out_dim; ++r) m.comps[static_cast<size_t>(r)] = a.comps[static_cast<size_t>(r)];
    for (int r = 0; r < b.out_dim; ++r)
        m.comps[static_cast<size_t>(a.out_dim + r)] = b.comps[static_cast<size_t>(r)];
    return m;
}

PolyMap operator+(const PolyMap& a, const PolyMap& b) {
    if (a.in_dim != b.in_dim || a.out_dim != b.out_dim) throw DimensionMismatch("PolyMap +");
    PolyMap m = a;
    for (int r = 0; r < m.out_dim; ++r) m.comps[static_cast<size_t>(r)] += b.comps[static_cast<size_t>(r)];
    return m;
}

// ---------------------------------------------------------------------------
// MatrixPolyMap
// ---------------------------------------------------------------------------

MatrixPolyMap::MatrixPolyMap(int in, int r, int c) : in_dim(in), rows(r), cols(c) {
    entries.assign(static_cast<size_t>(r) * c, PolyExpr::zero(in));
}

MatrixPolyMap MatrixPolyMap::constant(int in_dim, const Mat& M) {
    MatrixPolyMap m(in_dim, static_cast<int>(M.rows()), static_cast<int>(M.cols()));
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) m.at(r, c) = PolyExpr::constant(in_dim, M(r, c));
    return m;
}

Mat MatrixPolyMap::eval(const Vec& x) const {
    Mat M(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) M(r, c) = at(r, c).eval(x);
    return M;
}

Mat MatrixPolyMap::semiderivative(const Vec& x, const Vec& w) const {
    Mat M = Mat::Zero(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double dir = 0.0;
            for (int k = 0; k < in_dim; ++k) dir += at(r, c).derivative(k).eval(x) * w[k];
            M(r, c) = dir;
        }
    return M;
}

// ---------------------------------------------------------------------------
// numeric path
// ---------------------------------------------------------------------------

NumericDerivative numeric_semiderivative(const BlackBoxMap& m, const Vec& x, const Vec& w,
                                         const std::vector<double>& schedule, double tol_semi) {
    if (x.size() != m.in_dim || w.size() != m.in_dim) throw DimensionMismatch("numeric_semiderivative");
    if (schedule.empty()) throw Error("numeric_semiderivative: empty schedule");
    Vec f0 = m.eval(x);
    std::vector<Vec> quotients;
    for (double tau : schedule) {
        if (tau <= 0.0) throw Error("numeric_semiderivative: schedule must be positive");
        quotients.push_back((m.eval(x + tau * w) - f0) / tau);
    }
    size_t n = quotients.size();
    Vec value = quotients.back();
    if (n >= 2) {
        // one Richardson step on the last two levels assuming O(tau) error
        double t1 = schedule[n - 2], t2 = schedule[n - 1];
        if (std::abs(t1 - t2) > 1e-15)
            value = quotients[n - 1] + (quotients[n - 1] - quotients[n - 2]) * (t2 / (t1 - t2));
    }
    double disp = 0.0;
    size_t tail = std::min<size_t>(3, n);
    for (size_t i = n - tail; i < n; ++i)
        disp = std::max(disp, (quotients[i] - quotients[n - 1]).norm());
    if (disp > tol_semi * (1.0 + value.norm()))
        throw NonConvergent("numeric semiderivative dispersion " + std::to_string(disp));
    return {value, disp};
}

}  // namespace vreg
