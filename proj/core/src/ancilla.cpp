#include "cvkerr/ancilla.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cvkerr {

namespace {

double proxy_width(double r) { return std::exp(r) / std::sqrt(2.0); }

/// Eigenvalues of the companion matrix of a monic polynomial
/// z^n + c[n-1] z^{n-1} + ... + c[0].
std::vector<Complex> monic_roots(const std::vector<Complex>& c) {
    int n = int(c.size());
    Matrix comp = Matrix::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i];
    Eigen::ComplexEigenSolver<Matrix> es(comp, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("solve_displacement_roots: companion eigensolver failed");
    std::vector<Complex> roots(es.eigenvalues().data(), es.eigenvalues().data() + n);
    return roots;
}

std::vector<Complex> elementary_symmetric(std::span<const Complex> roots) {
    std::vector<Complex> e(roots.size() + 1, 0.0);
    e[0] = 1.0;
    for (auto c : roots)
        for (size_t k = e.size() - 1; k >= 1; --k) e[k] += c * e[k - 1];
    return e;
}

}  // namespace

std::string to_string(AncillaKind k) {
    switch (k) {
        case AncillaKind::ideal: return "ideal";
        case AncillaKind::first_order: return "first_order";
        case AncillaKind::photon_subtracted: return "photon_subtracted";
    }
    return "?";
}

GridState make_ancilla(const AncillaSpec& spec, const GridSpec& g) {
    switch (spec.kind) {
        case AncillaKind::ideal: {
            // Windowed phase state; boundary check deliberately waived, the
            // profile has unit modulus across the whole grid.
            Vector v(g.n_points);
            for (int j = 0; j < g.n_points; ++j) {
                double x = g.x(j);
                v(j) = std::exp(Complex(0, (spec.t3 + spec.t4 * x) * x * x * x));
            }
            GridState out{g, std::move(v)};
            out.normalize();
            return out;
        }
        case AncillaKind::first_order: {
            double w = proxy_width(spec.squeezing_r);
            Vector v(g.n_points);
            for (int j = 0; j < g.n_points; ++j) {
                double x = g.x(j);
                Complex poly = 1.0 + Complex(0, (spec.t3 + spec.t4 * x) * x * x * x);
                v(j) = poly * std::exp(-(x / w) * (x / w));
            }
            GridState out{g, std::move(v)};
            out.normalize();
            return out;
        }
        case AncillaKind::photon_subtracted: {
            if (spec.roots.empty())
                throw std::invalid_argument("make_ancilla: photon_subtracted needs roots");
            return photon_subtracted_ancilla(spec.roots, spec.squeezing_r, g);
        }
    }
    throw std::invalid_argument("make_ancilla: bad kind");
}

std::vector<Complex> solve_displacement_roots(double t, int order) {
    if (t <= 0.0) throw std::invalid_argument("solve_displacement_roots: t must be positive");
    std::vector<Complex> roots;
    if (order == 3) {
        roots = monic_roots({Complex(0, 1) / t, Complex(-1.5, 0), Complex(0, 0)});
    } else if (order == 4) {
        roots = monic_roots({Complex(0.75, 0) - Complex(0, 1) / t, Complex(0, 0),
                             Complex(-3.0, 0), Complex(0, 0)});
    } else {
        throw std::invalid_argument("solve_displacement_roots: order must be 3 or 4");
    }
    std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
        if (a.imag() != b.imag()) return a.imag() < b.imag();
        return a.real() < b.real();
    });
    auto res = displacement_root_residuals(roots, t);
    for (double r : res)
        if (r > 1e-9)
            throw std::runtime_error("solve_displacement_roots: condition residual " +
                                     std::to_string(r));
    return roots;
}

std::vector<double> displacement_root_residuals(std::span<const Complex> roots, double t) {
    auto e = elementary_symmetric(roots);
    const Complex it(0, t);
    if (roots.size() == 3) {
        return {std::abs(e[1]), std::abs(e[2] + 1.5), std::abs(it * e[3] - 1.0)};
    }
    if (roots.size() == 4) {
        return {std::abs(e[1]), std::abs(e[2] + 3.0), std::abs(e[3] + 1.5 * e[1]),
                std::abs(it * (e[4] + e[2] / 2.0 + 0.75) - 1.0)};
    }
    throw std::invalid_argument("displacement_root_residuals: need 3 or 4 roots");
}

GridState photon_subtracted_ancilla(std::span<const Complex> roots, double r, const GridSpec& g) {
    double w = proxy_width(r);
    Vector st(g.n_points);
    for (int j = 0; j < g.n_points; ++j) {
        double x = g.x(j);
        st(j) = std::exp(-(x / w) * (x / w));
    }
    GridState state{g, std::move(st)};
    state.normalize();
    // A wide proxy times the growing polynomial carries real weight at the
    // window edge (t x^3 is O(10) there), so the internal transforms run
    // unguarded; the window tails belong to the constructed profile itself.
    constexpr double guard = std::numeric_limits<double>::infinity();
    for (Complex c : roots) {
        // (X + iP + c) with P = F X F^dag on the lattice
        GridState pf = fourier_gate(state, FourierDirection::inverse, guard);
        for (int j = 0; j < g.n_points; ++j) pf.values(j) *= g.x(j);
        GridState p_applied = fourier_gate(pf, FourierDirection::forward, guard);
        Vector next(g.n_points);
        for (int j = 0; j < g.n_points; ++j)
            next(j) = g.x(j) * state.values(j) + Complex(0, 1) * p_applied.values(j) +
                      c * state.values(j);
        state.values = std::move(next);
    }
    state.normalize();
    return state;
}

void to_json(nlohmann::json& j, const AncillaSpec& s) {
    j = nlohmann::json::object();
    j["kind"] = to_string(s.kind);
    j["t3"] = s.t3;
    j["t4"] = s.t4;
    j["squeezing_r"] = s.squeezing_r;
    if (!s.roots.empty()) {
        nlohmann::json rs = nlohmann::json::array();
        for (auto c : s.roots) rs.push_back({c.real(), c.imag()});
        j["roots"] = std::move(rs);
    }
}

void from_json(const nlohmann::json& j, AncillaSpec& s) {
    std::string k = j.at("kind").get<std::string>();
    if (k == "ideal")
        s.kind = AncillaKind::ideal;
    else if (k == "first_order")
        s.kind = AncillaKind::first_order;
    else if (k == "photon_subtracted")
        s.kind = AncillaKind::photon_subtracted;
    else
        throw std::invalid_argument("AncillaSpec: bad kind " + k);
    s.t3 = j.value("t3", 0.0);
    s.t4 = j.value("t4", 0.0);
    s.squeezing_r = j.value("squeezing_r", 3.0);
    s.roots.clear();
    if (j.contains("roots"))
        for (auto& rc : j.at("roots")) s.roots.emplace_back(rc.at(0).get<double>(), rc.at(1).get<double>());
}

}  // namespace cvkerr
