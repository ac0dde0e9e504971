#include "cvkerr/decomposition.hpp"

#include <cmath>

namespace cvkerr {

namespace {

GateTerm term(Quadrature b, std::initializer_list<std::pair<int, double>> cs) {
    GateTerm t;
    t.basis = b;
    for (auto& [k, v] : cs) t.coeffs[k] = v;
    return t;
}

/// Unrescaled 5-factor pattern of the second-order scheme, all amplitudes
/// linear in s, rightmost factor first.
std::vector<GateTerm> q2_pattern(double s) {
    return {
        term(Quadrature::X, {{4, 0.5 * s}, {3, -(4.0 / 9.0) * s}}),
        term(Quadrature::P, {{3, -s}}),
        term(Quadrature::X, {{3, (4.0 / 9.0) * s}}),
        term(Quadrature::P, {{4, s}, {3, s}}),
        term(Quadrature::X, {{4, 0.5 * s}}),
    };
}

std::vector<GateTerm> reversed(std::vector<GateTerm> v) {
    std::reverse(v.begin(), v.end());
    return v;
}

std::vector<GateTerm> negated(std::vector<GateTerm> v) {
    for (auto& t : v)
        for (int k = 1; k <= 4; ++k) t.coeffs[k] = -t.coeffs[k];
    return v;
}

void rescale_cubics(std::vector<GateTerm>& v, double sqrt_t) {
    for (auto& t : v) t.coeffs[3] /= sqrt_t;
}

void merge_adjacent(std::vector<GateTerm>& v) {
    std::vector<GateTerm> out;
    for (const auto& t : v) {
        if (!out.empty() && out.back().basis == t.basis) {
            for (int k = 1; k <= 4; ++k) out.back().coeffs[k] += t.coeffs[k];
        } else {
            out.push_back(t);
        }
    }
    v = std::move(out);
}

}  // namespace

std::string to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::first_order: return "first_order";
        case SchemeKind::separated: return "separated";
        case SchemeKind::q2: return "q2";
        case SchemeKind::q2_inverse: return "q2_inverse";
        case SchemeKind::q2_reversed: return "q2_reversed";
        case SchemeKind::q2_inv_reversed: return "q2_inv_reversed";
        case SchemeKind::third_order: return "third_order";
    }
    return "?";
}

SchemeKind scheme_kind_from_string(const std::string& s) {
    if (s == "first_order" || s == "first") return SchemeKind::first_order;
    if (s == "separated") return SchemeKind::separated;
    if (s == "q2") return SchemeKind::q2;
    if (s == "q2_inverse") return SchemeKind::q2_inverse;
    if (s == "q2_reversed") return SchemeKind::q2_reversed;
    if (s == "q2_inv_reversed") return SchemeKind::q2_inv_reversed;
    if (s == "third_order" || s == "third") return SchemeKind::third_order;
    throw std::invalid_argument("unknown scheme kind: " + s);
}

GateSequence kerr_first_order(double t) {
    if (t <= 0.0)
        throw std::invalid_argument("kerr_first_order: t must be positive (negative amplitudes go through q2_inverse)");
    double s = std::sqrt(t);
    GateSequence seq;
    seq.scheme_label = "first_order";
    seq.terms = {
        term(Quadrature::X, {{3, -(4.0 / 9.0) * s}, {4, t}}),
        term(Quadrature::P, {{3, -s}, {4, t}}),
        term(Quadrature::X, {{3, (4.0 / 9.0) * s}}),
        term(Quadrature::P, {{3, s}}),
    };
    return seq;
}

GateSequence kerr_separated(double t) {
    if (t <= 0.0) throw std::invalid_argument("kerr_separated: t must be positive");
    double s = std::sqrt(t);
    GateSequence seq;
    seq.scheme_label = "separated";
    seq.terms = {
        term(Quadrature::X, {{4, t}}),
        term(Quadrature::X, {{3, -(4.0 / 9.0) * s}}),
        term(Quadrature::P, {{4, t}}),
        term(Quadrature::P, {{3, -s}}),
        term(Quadrature::X, {{3, (4.0 / 9.0) * s}}),
        term(Quadrature::P, {{3, s}}),
    };
    return seq;
}

GateSequence q2_family(double t, Q2Variant variant) {
    if (t == 0.0) throw std::invalid_argument("q2_family: t must be nonzero");
    std::vector<GateTerm> pat;
    const char* label = "q2";
    switch (variant) {
        case Q2Variant::q2:
            pat = q2_pattern(t);
            break;
        case Q2Variant::inverse:
            pat = reversed(negated(q2_pattern(t)));
            label = "q2_inverse";
            break;
        case Q2Variant::reversed:
            pat = reversed(q2_pattern(t));
            label = "q2_reversed";
            break;
        case Q2Variant::inv_reversed:
            pat = negated(q2_pattern(t));
            label = "q2_inv_reversed";
            break;
    }
    rescale_cubics(pat, std::sqrt(std::abs(t)));
    GateSequence seq;
    seq.terms = std::move(pat);
    seq.scheme_label = label;
    return seq;
}

std::array<double, 4> third_order_coefficients() {
    double s = std::sqrt(15.0);
    return {(9.0 - s) / 6.0, (-3.0 + s) / 3.0, -std::sqrt(5.0 / 3.0), (3.0 + s) / 6.0};
}

GateSequence third_order(double t) {
    if (t == 0.0) throw std::invalid_argument("third_order: t must be nonzero");
    auto c = third_order_coefficients();
    double st = std::sqrt(std::abs(t));
    // operator product Q2(c1 t) Q2rev(c2 t) Q2(c3 t) Q2rev(c4 t): the c4
    // segment is the rightmost factor, so it is applied first.
    std::vector<GateTerm> terms;
    const bool rev_slot[4] = {false, true, false, true};
    for (int i = 3; i >= 0; --i) {
        auto pat = q2_pattern(c[i] * t);
        if (rev_slot[i]) pat = reversed(std::move(pat));
        rescale_cubics(pat, st);
        terms.insert(terms.end(), pat.begin(), pat.end());
    }
    merge_adjacent(terms);
    GateSequence seq;
    seq.terms = std::move(terms);
    seq.scheme_label = "third_order";
    return seq;
}

std::array<double, 4> verify_order_conditions(const std::array<double, 4>& c) {
    auto [c1, c2, c3, c4] = c;
    double r1 = std::abs(c1 + c2 + c3 + c4 - 1.0);
    double r2 = std::abs(c1 * c1 - c2 * c2 + c3 * c3 - c4 * c4 - 1.0);
    double r3 = std::abs(c1 * c1 * c1 + c2 * c2 * c2 + c3 * c3 * c3 + c4 * c4 * c4);
    double r4 = std::abs(c1 * c1 * c2 + c1 * c2 * c2 + c1 * c1 * c3 - c2 * c2 * c3 -
                         c1 * c3 * c3 - c2 * c3 * c3 + c1 * c1 * c4 - c2 * c2 * c4 +
                         c3 * c3 * c4 + c1 * c4 * c4 + c2 * c4 * c4 + c3 * c4 * c4);
    return {r1, r2, r3, r4};
}

GateSequence build_sequence(const CompositionScheme& scheme) {
    switch (scheme.kind) {
        case SchemeKind::first_order: return kerr_first_order(scheme.t);
        case SchemeKind::separated: return kerr_separated(scheme.t);
        case SchemeKind::q2: return q2_family(scheme.t, Q2Variant::q2);
        case SchemeKind::q2_inverse: return q2_family(scheme.t, Q2Variant::inverse);
        case SchemeKind::q2_reversed: return q2_family(scheme.t, Q2Variant::reversed);
        case SchemeKind::q2_inv_reversed: return q2_family(scheme.t, Q2Variant::inv_reversed);
        case SchemeKind::third_order: return third_order(scheme.t);
    }
    throw std::invalid_argument("build_sequence: bad scheme kind");
}

GateSequence repeat_scheme(const CompositionScheme& scheme, int n) {
    if (n < 1) throw std::invalid_argument("repeat_scheme: n must be >= 1");
    GateSequence base = build_sequence(scheme);
    GateSequence out;
    out.scheme_label = base.scheme_label + "_x" + std::to_string(n);
    out.terms.reserve(base.terms.size() * n);
    for (int i = 0; i < n; ++i)
        out.terms.insert(out.terms.end(), base.terms.begin(), base.terms.end());
    return out;
}

FockOperator compile_sequence(const GateSequence& seq, int dim) {
    auto q = quadrature_operators(dim);
    Eigen::SelfAdjointEigenSolver<Matrix> ex(q.x.entries), ep(q.p.entries);
    if (ex.info() != Eigen::Success || ep.info() != Eigen::Success)
        throw std::runtime_error("compile_sequence: quadrature eigensolver failed");
    Matrix u = Matrix::Identity(dim, dim);
    for (const auto& t : seq.terms) {
        if (t.is_identity()) continue;
        const auto& es = (t.basis == Quadrature::X) ? ex : ep;
        Vector ph(dim);
        for (int i = 0; i < dim; ++i) {
            double w = es.eigenvalues()(i);
            double g = ((t.coeffs[4] * w + t.coeffs[3]) * w + t.coeffs[2]) * w * w +
                       t.coeffs[1] * w;
            ph(i) = std::exp(Complex(0, g));
        }
        Matrix ut = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
        u = ut * u;  // term applied after everything before it
    }
    return {dim, std::move(u)};
}

GridState apply_sequence(const GateSequence& seq, const GridState& s) {
    GridState out = s;
    for (const auto& t : seq.terms) out = apply_phase_polynomial(out, t.basis, t.coeffs);
    return out;
}

LogExpansionResult verify_log_expansion(const std::array<double, 8>& p, double t, int dim) {
    if (t <= 0.0 || t > 1e-2)
        throw std::invalid_argument("verify_log_expansion: need 0 < t <= 1e-2");
    double s = std::sqrt(t);
    GateSequence seq;
    seq.terms = {
        term(Quadrature::X, {{3, p[6] * s}, {4, p[7] * t}}),
        term(Quadrature::P, {{3, p[4] * s}, {4, p[5] * t}}),
        term(Quadrature::X, {{3, p[2] * s}, {4, p[3] * t}}),
        term(Quadrature::P, {{3, p[0] * s}, {4, p[1] * t}}),
    };
    FockOperator u = compile_sequence(seq, dim);
    Matrix l = unitary_log(u).entries;

    auto q = quadrature_operators(dim);
    Matrix x2 = q.x.entries * q.x.entries, p2 = q.p.entries * q.p.entries;
    Matrix x3 = x2 * q.x.entries, p3 = p2 * q.p.entries;
    Matrix x4 = x3 * q.x.entries, p4 = p3 * q.p.entries;
    const Complex im(0, 1);
    std::array<Matrix, 6> basis = {im * x3, im * p3, im * x4, im * p4,
                                   Matrix(x3 * p3 - p3 * x3),
                                   im * Matrix::Identity(dim, dim)};

    // real least squares over the interior block, identity as nuisance direction
    int k = interior_rows(dim);
    Eigen::MatrixXd a(2 * k * k, 6);
    Eigen::VectorXd b(2 * k * k);
    for (int col = 0; col < 6; ++col) {
        Matrix blk = basis[col].topLeftCorner(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                a(i * k + j, col) = blk(i, j).real();
                a(k * k + i * k + j, col) = blk(i, j).imag();
            }
    }
    Matrix lblk = l.topLeftCorner(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            b(i * k + j) = lblk(i, j).real();
            b(k * k + i * k + j) = lblk(i, j).imag();
        }
    Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    if (!coef.allFinite())
        throw std::runtime_error("verify_log_expansion: basis projection failed");

    LogExpansionResult r;
    r.predicted = {(p[2] + p[6]) * s, (p[0] + p[4]) * s, (p[3] + p[7]) * t, (p[1] + p[5]) * t,
                   0.5 * (p[0] * p[2] - p[2] * p[4] + p[0] * p[6] + p[4] * p[6]) * t};
    for (int i = 0; i < 5; ++i) {
        r.fitted[i] = coef(i);
        r.residuals[i] = std::abs(coef(i) - r.predicted[i]);
    }
    return r;
}

double bch_residual(const GateSequence& seq, double t, int dim, int margin) {
    FockOperator u = compile_sequence(seq, dim);
    FockOperator target = kerr_target_unitary(t, dim);
    FockOperator m{dim, u.entries * target.entries.adjoint()};
    Matrix l = unitary_log(m).entries;
    return interior_opnorm(l, interior_rows(dim, margin));
}

double composition_order_residual(SchemeKind kind, double t, int dim, int margin) {
    if (t == 0.0) throw std::invalid_argument("composition_order_residual: t must be nonzero");
    bool reversed_sign = false;
    std::vector<GateTerm> terms;
    switch (kind) {
        case SchemeKind::first_order:
        case SchemeKind::separated:
            return bch_residual(build_sequence({kind, t, 1}), t, dim, margin);
        case SchemeKind::q2:
            terms = q2_pattern(t);
            break;
        case SchemeKind::q2_reversed:
            terms = reversed(q2_pattern(t));
            reversed_sign = true;
            break;
        case SchemeKind::q2_inverse:
            return composition_order_residual(SchemeKind::q2_reversed, -t, dim, margin);
        case SchemeKind::q2_inv_reversed:
            return composition_order_residual(SchemeKind::q2, -t, dim, margin);
        case SchemeKind::third_order: {
            auto c = third_order_coefficients();
            const bool rev_slot[4] = {false, true, false, true};
            for (int i = 3; i >= 0; --i) {
                auto pat = q2_pattern(c[i] * t);
                if (rev_slot[i]) pat = reversed(std::move(pat));
                terms.insert(terms.end(), pat.begin(), pat.end());
            }
            break;
        }
    }
    GateSequence seq;
    seq.terms = std::move(terms);
    FockOperator u = compile_sequence(seq, dim);
    Matrix l = unitary_log(u).entries;

    auto q = quadrature_operators(dim);
    Matrix x2 = q.x.entries * q.x.entries, p2 = q.p.entries * q.p.entries;
    Matrix x3 = x2 * q.x.entries, p3 = p2 * q.p.entries;
    Matrix x4 = x3 * q.x.entries, p4 = p3 * q.p.entries;
    double comm_sign = reversed_sign ? -1.0 : 1.0;
    Matrix expected = Complex(0, t) * (x4 + p4) +
                      comm_sign * (4.0 / 9.0) * t * t * Matrix(x3 * p3 - p3 * x3);
    return interior_opnorm(l - expected, interior_rows(dim, margin));
}

double fit_order_exponent(const std::vector<double>& ts, const std::vector<double>& residuals) {
    if (ts.size() != residuals.size() || ts.size() < 2)
        throw std::invalid_argument("fit_order_exponent: need matching lists of >= 2 points");
    double n = double(ts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < ts.size(); ++i) {
        double x = std::log10(ts[i]), y = std::log10(residuals[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void to_json(nlohmann::json& j, const GateTerm& t) {
    j = nlohmann::json::object();
    j["basis"] = (t.basis == Quadrature::X) ? "X" : "P";
    nlohmann::json cs = nlohmann::json::object();
    for (int k = 1; k <= 4; ++k)
        if (t.coeffs[k] != 0.0) cs[std::to_string(k)] = t.coeffs[k];
    j["coeffs"] = std::move(cs);
}

void from_json(const nlohmann::json& j, GateTerm& t) {
    std::string b = j.at("basis").get<std::string>();
    if (b != "X" && b != "P") throw std::invalid_argument("GateTerm: basis must be X or P");
    t.basis = (b == "X") ? Quadrature::X : Quadrature::P;
    t.coeffs = {};
    for (auto& [key, val] : j.at("coeffs").items()) {
        int k = std::stoi(key);
        if (k < 1 || k > 4) throw std::invalid_argument("GateTerm: power out of range");
        t.coeffs[k] = val.get<double>();
    }
}

void to_json(nlohmann::json& j, const GateSequence& s) {
    j = nlohmann::json::object();
    j["application_order"] = "first_to_last";
    j["scheme"] = s.scheme_label;
    j["terms"] = s.terms;
}

void from_json(const nlohmann::json& j, GateSequence& s) {
    if (j.value("application_order", "first_to_last") != std::string("first_to_last"))
        throw std::invalid_argument("GateSequence: unsupported application order");
    s.scheme_label = j.value("scheme", "");
    s.terms = j.at("terms").get<std::vector<GateTerm>>();
}

}  // namespace cvkerr
