#include <doctest.h>

#include <sstream>

#include "cvkerr/decomposition.hpp"

using namespace cvkerr;

namespace {

GridSpec default_grid() { return GridSpec::self_dual_grid(1024); }

GridState coherent_grid(double beta, int dim, const GridSpec& g) {
    FockState s = FockState::coherent(beta, dim);
    s.normalize();
    return fock_to_position(s, g);
}

}  // namespace

TEST_CASE("grid spec validation") {
    CHECK_THROWS_AS(GridSpec(8.0, 100), std::invalid_argument);   // not a power of two
    CHECK_THROWS_AS(GridSpec(8.0, 128), std::invalid_argument);   // too few points
    CHECK_THROWS_AS(GridSpec(-1.0, 1024), std::invalid_argument);
    GridSpec g = default_grid();
    CHECK(g.self_dual());
    CHECK(g.n_points * g.dx() * g.dx() == doctest::Approx(M_PI).epsilon(1e-15));
    CHECK(!GridSpec(8.0, 1024).self_dual());
    CHECK(GridSpec(8.0, 1024).nearest_self_dual().self_dual());
}

TEST_CASE("ground state synthesizes the analytic gaussian") {
    GridSpec g = default_grid();
    GridState s = fock_to_position(FockState::basis(60, 0), g);
    double c0 = std::pow(2.0 / M_PI, 0.25);
    double sup = 0.0;
    for (int j = 0; j < g.n_points; ++j) {
        double x = g.x(j);
        sup = std::max(sup, std::abs(s.values(j) - Complex(c0 * std::exp(-x * x), 0)));
    }
    CHECK(sup < 1e-12);
}

TEST_CASE("coherent amplitude 1 synthesizes the displaced gaussian") {
    GridSpec g = default_grid();
    GridState s = coherent_grid(1.0, 60, g);
    double c0 = std::pow(2.0 / M_PI, 0.25);
    double sup = 0.0;
    for (int j = 0; j < g.n_points; ++j) {
        double x = g.x(j);
        sup = std::max(sup, std::abs(s.values(j) - Complex(c0 * std::exp(-(x - 1) * (x - 1)), 0)));
    }
    CHECK(sup < 1e-10);
}

TEST_CASE("single photon wavefunction is odd and matches the recurrence oracle") {
    GridSpec g = default_grid();
    GridState s = fock_to_position(FockState::basis(60, 1), g);
    const int n = g.n_points;
    CHECK(std::abs(s.values(n / 2)) < 1e-14);  // x = 0 node
    // u1 = 2 x u0, checked by quadrature against the synthesized row
    double c0 = std::pow(2.0 / M_PI, 0.25);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        double x = g.x(j);
        acc += std::norm(s.values(j) - Complex(2 * x * c0 * std::exp(-x * x), 0));
    }
    CHECK(acc * g.dx() < 1e-20);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
    // parity: psi(-x) = -psi(x) away from the wrap point
    for (int j = 1; j < n; ++j)
        CHECK(std::abs(s.values(j) + s.values(n - j)) < 1e-12);
}

TEST_CASE("fock <-> position round trip") {
    GridSpec g = default_grid();
    FockState coh = FockState::coherent(1.0, 60);
    coh.normalize();
    GridState s = fock_to_position(coh, g);
    FockState back = position_to_fock(s, 60);
    CHECK(fidelity_error(coh, back) < 1e-8);

    GridState ground = fock_to_position(FockState::basis(40, 0), g);
    FockState c = position_to_fock(ground, 40);
    CHECK(std::abs(c.coeffs(0) - 1.0) < 1e-8);

    // odd input has no even components
    GridState odd = fock_to_position(FockState::basis(40, 3), g);
    FockState codd = position_to_fock(odd, 40);
    for (int n = 0; n < 40; n += 2) CHECK(std::abs(codd.coeffs(n)) < 1e-8);
}

TEST_CASE("position_to_fock flags untrustworthy reconstructions") {
    GridSpec g = default_grid();
    Vector v = Vector::Zero(g.n_points);
    for (int j = 0; j < g.n_points; ++j) {
        double x = g.x(j) - 0.8 * g.x_max;  // far outside the 40-mode support
        v(j) = std::exp(-x * x);
    }
    GridState s{g, std::move(v)};
    s.normalize();
    CHECK_THROWS_AS(position_to_fock(s, 40), TruncationError);
}

TEST_CASE("fourier gate: gaussian invariance, parity, period four") {
    GridSpec g = default_grid();
    GridState ground = fock_to_position(FockState::basis(60, 0), g);
    GridState f = fourier_gate(ground, FourierDirection::forward);
    CHECK(fidelity_error(f, ground) < 1e-12);

    GridState coh = coherent_grid(1.0, 60, g);
    GridState f2 = fourier_gate(fourier_gate(coh, FourierDirection::forward),
                                FourierDirection::forward);
    // F^2 is the parity operator on the lattice (index j -> n - j mod n)
    const int n = g.n_points;
    Vector mirrored(n);
    for (int j = 0; j < n; ++j) mirrored(j) = coh.values((n - j) % n);
    GridState mirror{g, std::move(mirrored)};
    CHECK(fidelity_error(f2, mirror) < 1e-12);

    GridState f4 = fourier_gate(fourier_gate(f2, FourierDirection::forward),
                                FourierDirection::forward);
    CHECK(fidelity_error(f4, coh) < 1e-8);

    GridState inv = fourier_gate(f, FourierDirection::inverse);
    CHECK(fidelity_error(inv, ground) < 1e-12);
}

TEST_CASE("fourier gate: non-self-dual grid rejected, aliasing guard fires") {
    GridSpec bad(8.0, 1024);
    GridState s{bad, Vector::Ones(1024)};
    CHECK_THROWS_AS(fourier_gate(s, FourierDirection::forward), std::domain_error);

    GridSpec g = default_grid();
    Vector spike = Vector::Zero(g.n_points);
    spike(g.n_points / 2) = 1.0;
    GridState delta{g, std::move(spike)};
    delta.normalize();
    CHECK_THROWS_AS(fourier_gate(delta, FourierDirection::forward), AliasingError);
}

TEST_CASE("fourier conjugation matches the Fock-compiled momentum gates") {
    // grid-realized F e^{itX^m} F^dag against e^{itP^m} compiled in Fock space
    GridSpec g = default_grid();
    int dim = 60;
    auto q = quadrature_operators(dim);
    for (int m = 1; m <= 4; ++m) {
        double t = 1e-2;
        for (const FockState& input :
             {FockState::coherent(1.0, dim), FockState::basis(dim, 1)}) {
            FockState in = input;
            in.normalize();
            GridState start = fock_to_position(in, g);

            PolyCoeffs cs{};
            cs[m] = t;
            GridState route_a = fourier_gate(start, FourierDirection::inverse);
            route_a = apply_phase_polynomial(route_a, Quadrature::X, cs);
            route_a = fourier_gate(route_a, FourierDirection::forward);

            Matrix pm = Matrix::Identity(dim, dim);
            for (int i = 0; i < m; ++i) pm = pm * q.p.entries;
            FockState evolved = apply(unitary_from_generator({dim, pm}, t), in);
            evolved.normalize();
            GridState route_b = fock_to_position(evolved, g);
            CHECK(fidelity_error(route_a, route_b) < 1e-6);
        }
    }
}

TEST_CASE("apply_phase_polynomial: identity, displacement, momentum cubic") {
    GridSpec g = default_grid();
    int dim = 60;
    GridState coh = coherent_grid(1.0, dim, g);

    PolyCoeffs none{};
    GridState same = apply_phase_polynomial(coh, Quadrature::X, none);
    CHECK((same.values - coh.values).norm() == 0.0);

    double beta = 0.4;
    PolyCoeffs disp{};
    disp[1] = 2 * beta;
    GridState shifted = apply_phase_polynomial(coh, Quadrature::X, disp);
    auto q = quadrature_operators(dim);
    FockState fock_route = apply(unitary_from_generator(q.x, 2 * beta),
                                 position_to_fock(coh, dim));
    fock_route.normalize();
    CHECK(fidelity_error(shifted, fock_to_position(fock_route, g)) < 1e-7);

    double t = 1e-3;
    PolyCoeffs cubic{};
    cubic[3] = t;
    GridState pcubic = apply_phase_polynomial(coh, Quadrature::P, cubic);
    Matrix p3 = q.p.entries * q.p.entries * q.p.entries;
    FockState fock_p = apply(unitary_from_generator({dim, p3}, t), position_to_fock(coh, dim));
    fock_p.normalize();
    CHECK(fidelity_error(pcubic, fock_to_position(fock_p, g)) < 1e-6);
}

TEST_CASE("grid operations preserve the discrete norm") {
    GridSpec g = default_grid();
    GridState s = coherent_grid(1.0, 60, g);
    PolyCoeffs cs{};
    cs[1] = 0.3;
    cs[3] = 2e-2;
    for (Quadrature b : {Quadrature::X, Quadrature::P}) {
        GridState out = apply_phase_polynomial(s, b, cs);
        CHECK(std::abs(out.norm() - 1.0) < 1e-8);
    }
    CHECK(std::abs(fourier_gate(s, FourierDirection::forward).norm() - 1.0) < 1e-8);
}

TEST_CASE("representation equivalence: grid application matches Fock compilation") {
    GridSpec g = default_grid();
    int dim = 60;
    for (SchemeKind kind : {SchemeKind::first_order, SchemeKind::third_order}) {
        GateSequence seq = build_sequence({kind, 1e-3, 1});
        FockState in = FockState::coherent(1.0, dim);
        in.normalize();
        GridState grid_route = apply_sequence(seq, fock_to_position(in, g));
        FockState compiled = apply(compile_sequence(seq, dim), in);
        compiled.normalize();
        CHECK(fidelity_error(grid_route, fock_to_position(compiled, g)) < 1e-6);
    }
}

TEST_CASE("grid csv round trip") {
    GridSpec g = default_grid();
    GridState s = coherent_grid(1.0, 40, g);
    std::stringstream buf;
    write_csv(s, buf);
    GridState back = read_csv(buf);
    REQUIRE(back.spec.n_points == g.n_points);
    CHECK(back.spec.dx() == doctest::Approx(g.dx()).epsilon(1e-14));
    CHECK((back.values - s.values).cwiseAbs().maxCoeff() == 0.0);  // 17 digits round-trip
}
