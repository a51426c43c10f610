#pragma once

// The least-singular-value function of positively homogeneous set-valued
// maps: exact evaluation for conic piecewise graphs, grid/multistart numeric
// fallbacks, singularity reports, outer norms, numeric subderivatives, and
// the certified subderivative lower bounds with their side-condition
// bookkeeping.

#include "vreg/gendiff.hpp"
#include "vreg/setmaps.hpp"

#include <functional>

namespace vreg {

struct LsvParams {
    int grid_points = 720;  // per angular dimension on the z-sphere
    int multistart = 64;
    unsigned seed = 20240601u;
    bool numeric_only = false;  // skip the exact conic path
    Tols tols{};
};

struct LsvValue {
    double value = kInf;
    bool exact = true;
};

/// inf{ |eta| : (z,eta) in graph, |z| = 1 } for a graph whose pieces are all
/// cones; exact via face enumeration + pencil eigenvalues.
LsvValue exact_conic_lsv(const PolyhedralSet& graph, int z_dim, int eta_dim,
                         const Tols& tols = default_tols());

/// Same infimum for general polyhedral graphs, z_dim <= 3, via a geodesic
/// grid with local refinement; domain generators are added as candidates so
/// low-dimensional domains are hit exactly.
LsvValue grid_lsv(const PolyhedralSet& graph, int z_dim, int eta_dim,
                  const LsvParams& params = {});

/// Dispatch: exact when all pieces are conic, else grid/multistart.
LsvValue lsv_of_graph(const PolyhedralSet& graph, int z_dim, int eta_dim,
                      const LsvParams& params = {});

/// sup |z|^2/|eta|^2 route used as an independent cross-check of the outer
/// norm on small conic instances (+inf when the kernel is nontrivial).
double exact_conic_sup_ratio(const PolyhedralSet& graph, int z_dim, int eta_dim,
                             const Tols& tols = default_tols());

// ---------------------------------------------------------------------------
// instances
// ---------------------------------------------------------------------------

/// Parameter domain: a polyhedral set or the graph of a structured mapping.
class LsvDomain {
  public:
    static LsvDomain polyhedral(PolyhedralSet s);
    static LsvDomain mapping_graph(StructuredMapping s);
    static LsvDomain whole_space(int d) { return polyhedral(PolyhedralSet::whole_space(d)); }

    int dim() const { return dim_; }
    bool contains(const Vec& xi, double tol = default_tols().membership) const;
    std::optional<Vec> project(const Vec& xi, const Vec& hint) const;
    bool is_polyhedral() const { return std::holds_alternative<PolyhedralSet>(v_); }
    const PolyhedralSet& poly() const { return std::get<PolyhedralSet>(v_); }

  private:
    int dim_ = 0;
    std::variant<PolyhedralSet, StructuredMapping> v_;
};

/// The Gamma part of the split form: a per-parameter polyhedral graph over
/// (z, eta) plus the structural facts the bound certifiers consume.
struct GammaFamily {
    std::function<PolyhedralSet(const Vec&)> graph_at;
    std::optional<PolyhedralSet> joint_graph;  // over (xi, z, eta) when available
    int z_dim = 0, eta_dim = 0;

    bool cone_valued = false;   // every value a cone (exact structural fact)
    bool osc_exact = false;     // outer semicontinuity granted structurally
    bool osc_asserted = false;  // user assertion, recorded as evidence
    bool calmness_zero = false; // nearby values embed into the limit value
    std::optional<double> calmness_asserted;
};

struct LsvInstance {
    LsvDomain domain;
    std::optional<MatrixPolyMap> A;  // q x m matrix family over the parameter
    GammaFamily gamma;

    int z_dim() const { return gamma.z_dim; }
    int val_dim() const { return gamma.eta_dim; }
    /// Graph of z -> A(xi) z + Gamma(xi, z) over (z, eta).
    PolyhedralSet xi_graph_at(const Vec& xi) const;
    Mat A_at(const Vec& xi) const;
    Mat A_semiderivative(const Vec& xi, const Vec& omega) const;
};

/// Instance whose LSV is Reg(.,.; S): parameters on gph S, map D*S(u|y).
LsvInstance reg_instance(const StructuredMapping& s);

/// Sum-form instance of a smooth-plus mapping: parameters on gph C, map
/// z -> nabla F(u) z + D*C(u|y)(z).
LsvInstance sum_form_instance(const PolyMap& f, const StructuredMapping& c);

double lsv_value(const LsvInstance& inst, const Vec& xi, const LsvParams& params = {});

/// Reg(u, y; S): +inf off the graph, else the LSV of the coderivative.
double reg_value(const StructuredMapping& s, const Vec& u, const Vec& y,
                 const LsvParams& params = {});

/// |K^{-1}|^+ = 1/lsv (or +inf at singular points).
double outer_norm(const HomogeneousPiecewiseMap& k, const LsvParams& params = {});

struct SingularityReport {
    bool is_singular = false;
    double lsv = kInf;
    PolyhedralSet solution_set;   // {z : 0 in Xi(xi, z)}
    bool z0_finite = false;       // solution cone is a finite union of rays
    std::vector<Vec> z0_points;   // unit representatives when finite
};

SingularityReport singularity_report(const LsvInstance& inst, const Vec& xi,
                                     const LsvParams& params = {});

// ---------------------------------------------------------------------------
// numeric subderivative
// ---------------------------------------------------------------------------

struct SubderivativeEstimate {
    double value = 0.0;
    double dispersion = 0.0;
    bool diverging = false;  // quotients grow without bound: estimate is +inf
    std::vector<double> level_values;
};

SubderivativeEstimate subderivative_estimate(
    const std::function<double(const Vec&)>& phi,
    const std::function<std::optional<Vec>(const Vec&)>& project_domain, const Vec& xi_bar,
    const Vec& omega, const std::vector<double>& schedule = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5},
    unsigned seed = 20240602u, int samples_per_level = 16,
    double tol_semi = default_tols().semi);

/// Subderivative of xi -> lsv_value(inst, xi) with domain-aware sampling.
SubderivativeEstimate lsv_subderivative(const LsvInstance& inst, const Vec& xi_bar,
                                        const Vec& omega, const LsvParams& params = {});

// ---------------------------------------------------------------------------
// certified lower bounds
// ---------------------------------------------------------------------------

enum class CondStatus { ExactHold, ExactFail, EvidenceHold, EvidenceFail, Unknown };

const char* to_string(CondStatus s);

struct ConditionRecord {
    std::string id;
    CondStatus status = CondStatus::Unknown;
    std::string note;
};

struct BoundResult {
    bool produced = false;
    bool certified = false;  // every condition held exactly
    double bound = -kInf;    // lower bound for the subderivative at omega
    double calmness_c = 0.0;
    std::vector<ConditionRecord> conditions;
    std::string refused_condition;
};

/// cl cone(union of H(z) over unit z in dom H) for a polyhedral slice graph.
PolyhedralCone theta_cone(const PolyhedralSet& h_graph, int z_dim, int eta_dim,
                          const Tols& tols = default_tols());

/// Calmness-route bound: needs singularity, outer semicontinuity, exact
/// semiderivatives, a closed image, a calmness constant, and the image/Theta
/// separation; returns min dist[0, A'z + Theta + A dom H] - c|omega|.
BoundResult subderivative_bound_calmness(const LsvInstance& inst, const Vec& xi_bar,
                                         const Vec& omega,
                                         std::optional<double> user_c = std::nullopt,
                                         const LsvParams& params = {});

/// Range-route bound: needs cone-of-values outer semicontinuity and the
/// range/Theta separation; returns min dist[0, A'z + Theta + rge A].
BoundResult subderivative_bound_range(const LsvInstance& inst, const Vec& xi_bar, const Vec& omega,
                                      const LsvParams& params = {});

}  // namespace vreg
