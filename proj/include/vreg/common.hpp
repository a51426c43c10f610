#pragma once

// Shared scalar/vector aliases, tolerances, and the error taxonomy used
// across the toolkit.

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Tolerance bundle. Defaults match the toolkit-wide conventions:
/// membership/activity 1e-9, LP feasibility 1e-9, set-equality certificates
/// 1e-7, LSV comparisons 1e-7, numeric-semiderivative dispersion 1e-4.
struct Tols {
    double membership = 1e-9;
    double lp = 1e-9;
    double set_eq = 1e-7;
    double lsv = 1e-7;
    double semi = 1e-4;
    int max_patterns = 4096;
};

inline const Tols& default_tols() {
    static const Tols t{};
    return t;
}

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error("dimension mismatch: " + msg) {}
};

struct PointNotInSet : Error {
    explicit PointNotInSet(const std::string& msg) : Error("point not in set: " + msg) {}
};

struct PatternOverflow : Error {
    explicit PatternOverflow(const std::string& msg) : Error("pattern overflow: " + msg) {}
};

struct NotPolyhedral : Error {
    explicit NotPolyhedral(const std::string& msg) : Error("not polyhedral: " + msg) {}
};

struct BasepointOffGraph : Error {
    explicit BasepointOffGraph(const std::string& msg) : Error("basepoint off graph: " + msg) {}
};

struct NonConvergent : Error {
    explicit NonConvergent(const std::string& msg) : Error("nonconvergent: " + msg) {}
};

struct NotASolution : Error {
    explicit NotASolution(const std::string& msg) : Error("not a solution: " + msg) {}
};

struct CurveOffGraph : Error {
    explicit CurveOffGraph(const std::string& msg) : Error("curve off graph: " + msg) {}
};

struct NormalConeUnavailable : Error {
    explicit NormalConeUnavailable(const std::string& msg) : Error("normal cone unavailable: " + msg) {}
};

struct SolverFailure : Error {
    explicit SolverFailure(const std::string& msg) : Error("solver failure: " + msg) {}
};

struct EmptyGraphicalDerivative : Error {
    explicit EmptyGraphicalDerivative(const std::string& msg)
        : Error("empty graphical derivative: " + msg) {}
};

struct DirectionNotInDomain : Error {
    explicit DirectionNotInDomain(const std::string& msg)
        : Error("direction not in domain: " + msg) {}
};

struct DirectionNotTangent : Error {
    explicit DirectionNotTangent(const std::string& msg)
        : Error("direction not tangent: " + msg) {}
};

struct ConditionFailed : Error {
    std::string condition;
    ConditionFailed(std::string cond, const std::string& msg)
        : Error("condition " + cond + " failed: " + msg), condition(std::move(cond)) {}
};

inline Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline Vec zeros(int n) { return Vec::Zero(n); }

inline Vec unit_vec(int n, int j, double s = 1.0) {
    Vec v = Vec::Zero(n);
    v[j] = s;
    return v;
}

}  // namespace vreg
