#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvkerr/grid.hpp"

namespace cvkerr {

/// One elementary gate exp(i sum_k c_k Q^k), Q in {X, P}. An all-zero
/// coefficient array is the explicit identity gate.
struct GateTerm {
    Quadrature basis = Quadrature::X;
    PolyCoeffs coeffs{};

    bool is_identity() const { return poly_degree(coeffs) == 0; }
    int degree() const { return poly_degree(coeffs); }
};

/// Ordered product of gate terms; terms[0] is applied first to the state
/// (the rightmost factor of the operator product).
struct GateSequence {
    std::vector<GateTerm> terms;
    std::string scheme_label;
};

enum class SchemeKind {
    first_order,
    separated,
    q2,
    q2_inverse,
    q2_reversed,
    q2_inv_reversed,
    third_order,
};

std::string to_string(SchemeKind k);
SchemeKind scheme_kind_from_string(const std::string& s);

struct CompositionScheme {
    SchemeKind kind = SchemeKind::first_order;
    double t = 0.0;
    int repetitions = 1;
};

// --- scheme builders (rightmost factor first; cubic amplitudes carry the
// --- sqrt(t) rescaling of the elementary gate set) ---

/// 4-gate sequence
/// e^{i sqrt(t) P^3} e^{(4/9) i sqrt(t) X^3} e^{-i sqrt(t) P^3 + i t P^4}
///   e^{-(4/9) i sqrt(t) X^3 + i t X^4}.
GateSequence kerr_first_order(double t);

/// 6-gate sequence with each cubic and quartic factor separate.
GateSequence kerr_separated(double t);

enum class Q2Variant { q2, inverse, reversed, inv_reversed };

/// Second-order 5-gate family and its inverse/reversed variants, with the
/// X^3 -> X^3/sqrt|t|, P^3 -> P^3/sqrt|t| rescaling applied per term.
GateSequence q2_family(double t, Q2Variant variant);

/// Third-order composition Q2(c1 t) Q2rev(c2 t) Q2(c3 t) Q2rev(c4 t) with the
/// cubic rescaling taken against the global t; adjacent same-basis boundary
/// terms are merged (17 terms). Negative-coefficient segments coincide with
/// the printed inverse / inverse-reversed variants.
GateSequence third_order(double t);

std::array<double, 4> third_order_coefficients();

/// Residuals of the four order conditions:
///   |sum c - 1|, |c1^2 - c2^2 + c3^2 - c4^2 - 1|, |sum c^3|, |cross-term sum|.
std::array<double, 4> verify_order_conditions(const std::array<double, 4>& c);

GateSequence build_sequence(const CompositionScheme& scheme);

/// n-fold concatenation of the base sequence (no merging across repetitions).
GateSequence repeat_scheme(const CompositionScheme& scheme, int n);

/// Matrix product of the per-term exponentials on the truncated basis.
FockOperator compile_sequence(const GateSequence& seq, int dim);

/// Applies the sequence on the grid via phase polynomials; agrees with the
/// compiled Fock route on interior-supported states.
GridState apply_sequence(const GateSequence& seq, const GridState& s);

struct LogExpansionResult {
    // Directions: X^3, P^3, X^4, P^4, [X^3,P^3].
    std::array<double, 5> fitted{};
    std::array<double, 5> predicted{};
    std::array<double, 5> residuals{};
};

/// Compiles the generic 4-factor concatenation
///   e^{i p1 sqrt(t) P^3 + i p2 t P^4} e^{i p3 sqrt(t) X^3 + i p4 t X^4}
///   e^{i p5 sqrt(t) P^3 + i p6 t P^4} e^{i p7 sqrt(t) X^3 + i p8 t X^4},
/// takes the log, projects it onto {X^3, P^3, X^4, P^4, [X^3,P^3]} (plus an
/// identity nuisance direction) on the interior block by least squares, and
/// returns deviations from the predicted coefficients
///   (p3+p7) sqrt(t), (p1+p5) sqrt(t), (p4+p8) t, (p2+p6) t,
///   (1/2)(p1 p3 - p3 p5 + p1 p7 + p5 p7) t.
/// Each residual is O(t^{3/2}).
LogExpansionResult verify_log_expansion(const std::array<double, 8>& p, double t, int dim = 20);

/// Interior operator norm of log(compile(seq) * kerr_target(t)^dag).
/// For the sqrt(t)-rescaled schemes the surviving triple-cubic brackets make
/// this scale as t^{3/2}.
double bch_residual(const GateSequence& seq, double t, int dim, int margin = -1);

/// Residual of the unrescaled generating identity of a scheme: the compiled
/// product with all amplitudes linear in t, against
/// exp(+-i t (X^4 + P^4) +- (4/9) t^2 [X^3, P^3]). Scales as t^3 for the q2
/// family and t^4 for the third-order composition; this is the quantity whose
/// order names the schemes. For first_order/separated it falls back to
/// bch_residual of the built sequence (t^{3/2}).
double composition_order_residual(SchemeKind kind, double t, int dim, int margin = -1);

/// Least-squares slope of log10(residual(t)) against log10(t).
double fit_order_exponent(const std::vector<double>& ts, const std::vector<double>& residuals);

// JSON round trip is bit-exact for the stored doubles.
void to_json(nlohmann::json& j, const GateTerm& t);
void from_json(const nlohmann::json& j, GateTerm& t);
void to_json(nlohmann::json& j, const GateSequence& s);
void from_json(const nlohmann::json& j, GateSequence& s);

}  // namespace cvkerr
