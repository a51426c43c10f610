#pragma once

// Decision procedures and certificates for metric regularity, metric
// 2-regularity, Gfrerer regularity, and classic 2-regularity of single-valued
// maps, plus the four-way Reg-chain comparison and numeric falsifiers.
//
// Verdict taxonomy: Certified statuses come only from exact polyhedral
// paths; sufficient-condition checkers never emit CertifiedNo (the
// conditions are not necessary); numeric paths emit Evidence statuses only.

#include "vreg/lsv.hpp"

namespace vreg {

enum class RegProperty { MetricRegular, Metric2Regular, GfrererRegular, Classic2Regular };
enum class VerdictStatus {
    CertifiedYes,
    CertifiedNo,
    SufficientConditionHolds,
    SufficientConditionFails,
    NumericEvidenceFor,
    NumericEvidenceAgainst
};

const char* to_string(RegProperty p);
const char* to_string(VerdictStatus s);

struct RegularityVerdict {
    RegProperty property = RegProperty::MetricRegular;
    VerdictStatus status = VerdictStatus::NumericEvidenceAgainst;
    std::optional<double> modulus;  // exact regularity bound or estimate
    std::optional<Vec> witness;     // counterexample data when available
    std::string trace;              // canonical condition identifiers
    std::vector<std::string> notes;

    bool affirmative() const {
        return status == VerdictStatus::CertifiedYes ||
               status == VerdictStatus::SufficientConditionHolds ||
               status == VerdictStatus::NumericEvidenceFor;
    }
};

/// K_{eps,delta}(center; w) = center + (eps B intersect cone(w + delta B)).
struct DirectionalNeighborhood {
    Vec center, w;
    double eps = 1.0, delta = 1.0;
    bool contains(const Vec& u) const;
};

// ---------------------------------------------------------------------------
// first-order checks
// ---------------------------------------------------------------------------

/// Coderivative criterion: certified yes iff ker D*S(u|y) = {0}; modulus is
/// the exact regularity bound 1/Reg when regular.
RegularityVerdict check_metric_regularity(const StructuredMapping& s, const Vec& u, const Vec& y,
                                          const LsvParams& params = {});

struct RegChain {
    double r_sigma = kInf, r_script_c = kInf, r_q = kInf, r_script_q = kInf;
    bool ordering_ok = false;  // r_sigma >= max(r_script_c, r_q) >= r_script_q >= 0
};

/// The four Reg values of the sum, graph-shift, gated-sum, and doubled forms
/// of F + C at (u, y) in gph C, with the chain inequality verified.
RegChain reg_chain(const PolyMap& f, const StructuredMapping& c, const Vec& u, const Vec& y,
                   const LsvParams& params = {});

// ---------------------------------------------------------------------------
// metric 2-regularity
// ---------------------------------------------------------------------------

RegularityVerdict check_metric_2_regularity(const StructuredMapping& s, const Vec& u, const Vec& y,
                                            const Vec& w, const LsvParams& params = {});

/// Constant-set form F(.) + C0, polyhedral C0 (Eq (5.3) style premise).
RegularityVerdict m2r_sufficient_constant_polyhedral(const PolyMap& f, const ClosedSet& c0,
                                                     const Vec& u, const Vec& y, const Vec& w,
                                                     const LsvParams& params = {});

/// Polyhedral mapping form F + C (coderivative premise, Eq (5.4) style).
RegularityVerdict m2r_sufficient_polyhedral_mapping(const PolyMap& f, const StructuredMapping& c,
                                                    const Vec& u, const Vec& y, const Vec& w,
                                                    const LsvParams& params = {});

/// Indicator form F + Delta_{C0}, polyhedral C0 (Eq (5.5) style premise).
RegularityVerdict m2r_sufficient_indicator_polyhedral(const PolyMap& f, const ClosedSet& c0,
                                                      const Vec& u, const Vec& w,
                                                      const LsvParams& params = {});

/// Constant-set form over a general closed set (Eq (5.8) style premise).
RegularityVerdict m2r_sufficient_constant_closed(const PolyMap& f, const ClosedSet& c0,
                                                 const Vec& u, const Vec& y, const Vec& w,
                                                 const LsvParams& params = {});

/// Indicator form over a general closed set: separation Eq (5.6) first, then
/// Eq (5.5); refusal cites Eq (5.6) when the separation fails.
RegularityVerdict m2r_sufficient_indicator_closed(const PolyMap& f, const ClosedSet& c0,
                                                  const Vec& u, const Vec& w,
                                                  const LsvParams& params = {});

/// Summation-with-product form G + (R x T); throws ConditionFailed("(a)".."(d)")
/// when a hypothesis fails, evaluates the four-relation system otherwise.
RegularityVerdict m2r_sufficient_product_sum(const PolyMap& g, const StructuredMapping& r,
                                             const StructuredMapping& t, const Vec& x,
                                             const Vec& sigma, const Vec& yr, const Vec& nut,
                                             const Vec& w, const Vec& mu,
                                             const LsvParams& params = {});

// ---------------------------------------------------------------------------
// Gfrerer regularity
// ---------------------------------------------------------------------------

RegularityVerdict check_gfrerer(const StructuredMapping& s, const Vec& u, const Vec& y,
                                const Vec& w, const Vec& eta, const LsvParams& params = {});

struct M2rGfrererReport {
    bool consistent = true;
    RegularityVerdict m2r;
    std::vector<std::pair<Vec, RegularityVerdict>> per_eta;
};

/// Cross-check of the 2-regularity verdict against Gfrerer verdicts over an
/// eta sample (extreme directions of DS(u|y)(w) plus a seeded grid).
M2rGfrererReport m2r_gfrerer_consistency(const StructuredMapping& s, const Vec& u, const Vec& y,
                                         const Vec& w, const LsvParams& params = {});

// ---------------------------------------------------------------------------
// classic 2-regularity of single-valued maps
// ---------------------------------------------------------------------------

struct Classic2RegReport {
    RegularityVerdict verdict;       // via the kernel/semiderivative implication
    bool rank_route = false;         // the equality-of-ranges route, must agree
    std::optional<bool> span_condition;  // linear-hull condition, input-space set
    std::optional<bool> set_condition;   // tangent-set condition, output-space set
};

Classic2RegReport classic_2_regularity(
    const PolyMap& f, const Vec& u, const Vec& w,
    const std::optional<PolyhedralSet>& input_set = std::nullopt,
    const std::optional<std::pair<PolyhedralSet, Vec>>& output_set = std::nullopt,
    const LsvParams& params = {});

// ---------------------------------------------------------------------------
// curve falsifier
// ---------------------------------------------------------------------------

struct CurveFalsifierRecord {
    bool evidence_against = false;
    Vec initial_direction;
    std::vector<double> ts;
    std::vector<double> reg_values;
};

/// Reg along an on-graph curve; decaying Reg at the smallest schedule points
/// is numeric evidence against metric 2-regularity in the curve's direction.
CurveFalsifierRecord curve_falsifier(const StructuredMapping& s, const Vec& u, const Vec& y,
                                     const std::function<std::pair<Vec, Vec>(double)>& curve,
                                     const std::vector<double>& schedule = {1e-1, 1e-2, 1e-3,
                                                                            1e-4},
                                     const LsvParams& params = {});

}  // namespace vreg
