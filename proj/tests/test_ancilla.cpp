#include <doctest.h>

#include "cvkerr/ancilla.hpp"
#include "cvkerr/teleport.hpp"

using namespace cvkerr;

namespace {

// Symbolic oracle for the photon-subtraction construction: commuting each P
// rightward with [X, P] = i/2 and P|p=0> = 0 turns one factor (X + iP + c)
// acting on q(x)|p=0> into ((x + c) q + q'/2)|p=0>. Returns the polynomial
// coefficients (index = power of x) after applying all factors to 1.
std::vector<Complex> subtraction_polynomial(std::span<const Complex> roots) {
    std::vector<Complex> q = {1.0};
    for (auto it = roots.rbegin(); it != roots.rend(); ++it) {
        std::vector<Complex> next(q.size() + 1, 0.0);
        for (size_t k = 0; k < q.size(); ++k) {
            next[k + 1] += q[k];            // x * q
            next[k] += *it * q[k];          // c * q
            if (k >= 1) next[k - 1] += 0.5 * double(k) * q[k];  // q'/2
        }
        q = std::move(next);
    }
    return q;
}

GridSpec default_grid() { return GridSpec::self_dual_grid(1024); }

}  // namespace

TEST_CASE("photon-subtraction oracle: root sets reproduce 1 + i t x^k") {
    for (int order : {3, 4}) {
        double t = 1e-3;
        auto roots = solve_displacement_roots(t, order);
        auto q = subtraction_polynomial(roots);
        REQUIRE(int(q.size()) == order + 1);
        // proportional to 1 + i t x^order: intermediate powers vanish, and
        // (leading coefficient) / (constant) = i t
        for (int k = 1; k < order; ++k) CHECK(std::abs(q[k]) / std::abs(q[0]) < 1e-9);
        Complex ratio = q[order] / q[0];
        CHECK(std::abs(ratio - Complex(0, t)) < 1e-9 * std::abs(ratio));
    }
}

TEST_CASE("displacement roots: printed values for the cubic at t = 1e-3") {
    auto roots = solve_displacement_roots(1e-3, 3);
    REQUIRE(roots.size() == 3);
    const Complex expected[3] = {{0.0, 9.95}, {-8.70356, -4.975}, {8.70356, -4.975}};
    for (const Complex& e : expected) {
        bool found = false;
        for (const Complex& r : roots) found = found || std::abs(r - e) < 1e-3;
        CHECK(found);
    }
    Complex sum = roots[0] + roots[1] + roots[2];
    CHECK(std::abs(sum) < 1e-12);
}

TEST_CASE("displacement roots: condition residuals at other amplitudes") {
    for (double t : {1e-2, 5e-3}) {
        auto r3 = solve_displacement_roots(t, 3);
        for (double r : displacement_root_residuals(r3, t)) CHECK(r < 1e-9);
        auto r4 = solve_displacement_roots(t, 4);
        for (double r : displacement_root_residuals(r4, t)) CHECK(r < 1e-9);
    }
    CHECK_THROWS_AS(solve_displacement_roots(-1e-3, 3), std::invalid_argument);
    CHECK_THROWS_AS(solve_displacement_roots(1e-3, 5), std::invalid_argument);
}

TEST_CASE("make_ancilla: flat profile for the identity gate") {
    GridSpec g = default_grid();
    AncillaSpec spec;  // ideal, t3 = t4 = 0
    GridState a = make_ancilla(spec, g);
    Complex v0 = a.values(0);
    CHECK((a.values.array() - v0).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(a.norm() - 1.0) < 1e-12);
}

TEST_CASE("make_ancilla: first-order profile is the Taylor truncation of the ideal one") {
    // pointwise |e^{ih} - (1 + ih)| <= h^2/2 (up to roundoff in the bound itself)
    GridSpec g = default_grid();
    double t3 = 1e-6;
    for (int j = 0; j < g.n_points; j += 7) {
        double x = g.x(j);
        double h = t3 * x * x * x;
        Complex ideal = std::exp(Complex(0, h));
        Complex trunc = 1.0 + Complex(0, h);
        // slack covers the cancellation noise in cos(h) - 1 near 1.0
        CHECK(std::abs(ideal - trunc) <= (h * h / 2.0) * (1.0 + 1e-6) + 1e-18);
    }
}

TEST_CASE("make_ancilla: first-order single-step gap sits at the expected scale") {
    GridSpec g = default_grid();
    int dim = 60;
    FockState in = FockState::coherent(1.0, dim);
    in.normalize();
    GridState input = fock_to_position(in, g);

    AncillaSpec ideal;
    ideal.kind = AncillaKind::ideal;
    ideal.t3 = 1e-3;
    AncillaSpec approx;
    approx.kind = AncillaKind::first_order;
    approx.t3 = 1e-3;
    approx.squeezing_r = 2.0;

    GridState out_ideal = teleport_step(input, make_ancilla(ideal, g), 0.0);
    GridState out_approx = teleport_step(input, make_ancilla(approx, g), 0.0);
    double gap = fidelity_error(out_ideal, out_approx);
    // one step of the four-gate protocol whose total error is ~1e-2.6
    CHECK(gap > 1e-6);
    CHECK(gap < 1e-2);
}

TEST_CASE("photon-subtracted ancilla approaches the first-order state") {
    GridSpec g = default_grid();
    double t = 1e-3;
    auto roots = solve_displacement_roots(t, 3);
    double r = 2.0;
    GridState ps = photon_subtracted_ancilla(roots, r, g);
    CHECK(std::abs(ps.norm() - 1.0) < 1e-12);

    AncillaSpec fo;
    fo.kind = AncillaKind::first_order;
    fo.t3 = t;
    fo.squeezing_r = r;
    GridState target = make_ancilla(fo, g);
    CHECK(fidelity_error(target, ps) < 1e-4);
}

TEST_CASE("photon-subtracted ancilla converges to the polynomial profile in r") {
    GridSpec g = default_grid();
    double t = 1e-3;
    auto roots = solve_displacement_roots(t, 3);

    Vector poly(g.n_points);
    for (int j = 0; j < g.n_points; ++j) {
        double x = g.x(j);
        poly(j) = 1.0 + Complex(0, t * x * x * x);
    }
    GridState limit{g, std::move(poly)};
    limit.normalize();

    double prev = 2.0;
    for (double r : {1.0, 2.0, 3.0}) {
        GridState ps = photon_subtracted_ancilla(roots, r, g);
        Complex ov = limit.values.dot(ps.values) * g.dx();
        Complex phase = ov / std::abs(ov);
        double sup = 0.0;
        for (int j = 0; j < g.n_points; ++j) {
            if (std::abs(g.x(j)) > g.x_max / 2) continue;
            sup = std::max(sup, std::abs(ps.values(j) / phase - limit.values(j)));
        }
        CHECK(sup < prev);
        prev = sup;
    }
}

TEST_CASE("photon-subtracted ancilla: conjugate parity pattern") {
    // the limiting profile 1 + i t x^3 obeys psi(-x) = conj(psi(x)) up to a
    // global phase (the construction carries the overall factor -i/t)
    GridSpec g = default_grid();
    auto roots = solve_displacement_roots(1e-3, 3);
    GridState ps = photon_subtracted_ancilla(roots, 2.0, g);
    const int n = g.n_points;
    Complex phase = 0.0;
    for (int j = 1; j < n; ++j) phase += ps.values(j) * ps.values(n - j);
    phase /= std::abs(phase);
    double sup = 0.0;
    for (int j = 1; j < n; ++j) {
        if (std::abs(g.x(j)) > g.x_max / 2) continue;
        sup = std::max(sup, std::abs(ps.values(n - j) / phase - std::conj(ps.values(j))));
    }
    CHECK(sup < 1e-10);
}

TEST_CASE("photon subtraction: single displaced factor on the proxy") {
    // P on the near-flat proxy is ~zero, so one factor gives (x + c) x gaussian
    GridSpec g = default_grid();
    double r = 3.0;
    Complex c(2.0, 0.0);
    std::array<Complex, 1> roots = {c};
    GridState one = photon_subtracted_ancilla(roots, r, g);

    double w = std::exp(r) / std::sqrt(2.0);
    Vector expect(g.n_points);
    for (int j = 0; j < g.n_points; ++j) {
        double x = g.x(j);
        expect(j) = (x + c) * std::exp(-(x / w) * (x / w));
    }
    GridState target{g, std::move(expect)};
    target.normalize();
    CHECK(fidelity_error(target, one) < 1e-4);
}

TEST_CASE("ancilla spec json round trip") {
    AncillaSpec s;
    s.kind = AncillaKind::photon_subtracted;
    s.t3 = 1e-3;
    s.squeezing_r = 2.5;
    s.roots = solve_displacement_roots(1e-3, 3);
    nlohmann::json j = s;
    AncillaSpec back = j.get<AncillaSpec>();
    CHECK(back.kind == s.kind);
    CHECK(back.t3 == s.t3);
    CHECK(back.squeezing_r == s.squeezing_r);
    REQUIRE(back.roots.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(back.roots[i] == s.roots[i]);
}
