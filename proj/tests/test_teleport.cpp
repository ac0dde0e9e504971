#include <doctest.h>

#include "cvkerr/teleport.hpp"

using namespace cvkerr;

namespace {

GridSpec default_grid() { return GridSpec::self_dual_grid(1024); }

GridState coherent_grid(double beta, int dim, const GridSpec& g) {
    FockState s = FockState::coherent(beta, dim);
    s.normalize();
    return fock_to_position(s, g);
}

GridState flat_ancilla(const GridSpec& g) {
    AncillaSpec spec;  // ideal, zero phase
    return make_ancilla(spec, g);
}

/// F as a Fock operator: e^{i (pi/2) N}.
FockOperator fock_fourier(int dim, int power) {
    Matrix f = Matrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) f(n, n) = std::exp(Complex(0, power * M_PI / 2.0 * n));
    return {dim, std::move(f)};
}

}  // namespace

TEST_CASE("teleport_step: flat ancilla at beta = 0 applies the inverse Fourier gate") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    GridState out = teleport_step(in, flat_ancilla(g), 0.0);
    GridState expect = fourier_gate(in, FourierDirection::inverse);
    CHECK(fidelity_error(expect, out) < 1e-12);
}

TEST_CASE("teleport_step: ideal cubic ancilla applies the gate after F^dag") {
    GridSpec g = default_grid();
    int dim = 60;
    double t = 1e-3;
    GridState in = coherent_grid(1.0, dim, g);
    AncillaSpec spec;
    spec.t3 = t;
    GridState out = teleport_step(in, make_ancilla(spec, g), 0.0);

    // Fock oracle: e^{i t X^3} F^dag |psi>
    auto q = quadrature_operators(dim);
    Matrix x3 = q.x.entries * q.x.entries * q.x.entries;
    FockState fin = position_to_fock(in, dim);
    FockState evolved = apply(unitary_from_generator({dim, x3}, t),
                              apply(fock_fourier(dim, -1), fin));
    evolved.normalize();
    CHECK(fidelity_error(fock_to_position(evolved, g), out) < 1e-6);
}

TEST_CASE("teleport_step: nonzero outcome inserts the measured displacement") {
    GridSpec g = default_grid();
    int dim = 60;
    GridState in = coherent_grid(1.0, dim, g);
    double beta = snap_to_lattice(g, 0.5);
    GridState out = teleport_step(in, flat_ancilla(g), 0.5);

    // Fock oracle: F^dag e^{2 i beta X} |psi>
    auto q = quadrature_operators(dim);
    FockState fin = position_to_fock(in, dim);
    FockState evolved = apply(fock_fourier(dim, -1),
                              apply(unitary_from_generator(q.x, 2.0 * beta), fin));
    evolved.normalize();
    CHECK(fidelity_error(fock_to_position(evolved, g), out) < 1e-6);
}

TEST_CASE("teleport_step: argument validation") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 40, g);
    GridSpec g2 = GridSpec::self_dual_grid(2048);
    GridState anc2 = flat_ancilla(g2);
    CHECK_THROWS_AS(teleport_step(in, anc2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(teleport_step(in, flat_ancilla(g), 2.0 * g.x_max), std::domain_error);
}

TEST_CASE("homodyne density: normalization and parity symmetry") {
    GridSpec g = default_grid();
    GridState in = fock_to_position(FockState::basis(60, 0), g);
    AncillaSpec spec;
    spec.kind = AncillaKind::first_order;
    spec.t3 = 0.05;
    spec.squeezing_r = 2.0;
    GridState anc = make_ancilla(spec, g);
    auto q = homodyne_density(in, anc);
    double total = 0.0;
    for (double v : q) total += v;
    CHECK(std::abs(total - 1.0) < 1e-6);
    // |1 + i h|^2 is even for odd h and the input is even, so the density is even
    const int n = g.n_points;
    for (int j = 1; j < n; ++j) CHECK(std::abs(q[j] - q[(n - j) % n]) < 1e-8);
}

TEST_CASE("homodyne sampling: seeded reproducibility") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    AncillaSpec spec;
    spec.kind = AncillaKind::first_order;
    spec.t3 = 0.05;
    spec.squeezing_r = 1.5;
    GridState anc = make_ancilla(spec, g);
    std::mt19937_64 rng_a(42), rng_b(42);
    for (int i = 0; i < 50; ++i)
        CHECK(homodyne_sample(in, anc, rng_a) == homodyne_sample(in, anc, rng_b));
}

TEST_CASE("homodyne sampling: histogram matches the density within 3 sigma per bin") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    AncillaSpec spec;
    spec.kind = AncillaKind::first_order;
    spec.t3 = 0.05;
    spec.squeezing_r = 1.5;  // narrow proxy gives an informative density
    GridState anc = make_ancilla(spec, g);

    auto density = homodyne_density(in, anc);
    const int n = g.n_points;
    const int trials = 10000;
    std::mt19937_64 rng(1234);
    std::vector<int> counts(n, 0);
    for (int i = 0; i < trials; ++i) {
        double beta = homodyne_sample(in, anc, rng);
        counts[int(std::llround(beta / g.dx())) + n / 2]++;
    }
    // aggregate into 32 coarse bins
    const int bins = 32, width = n / bins;
    for (int b = 0; b < bins; ++b) {
        double p = 0.0;
        int obs = 0;
        for (int j = b * width; j < (b + 1) * width; ++j) {
            p += density[j];
            obs += counts[j];
        }
        double mean = trials * p;
        double sigma = std::sqrt(std::max(trials * p * (1 - p), 1.0));
        CHECK(std::abs(obs - mean) <= 3.0 * sigma);
    }
}

TEST_CASE("homodyne sampling: windowed acceptance rate matches the quadrature") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    AncillaSpec spec;
    spec.kind = AncillaKind::first_order;
    spec.t3 = 0.05;
    spec.squeezing_r = 1.5;
    GridState anc = make_ancilla(spec, g);

    double window = 0.05;
    auto density = homodyne_density(in, anc);
    double expected = 0.0;
    for (int j = 0; j < g.n_points; ++j)
        if (std::abs(g.x(j)) <= window) expected += density[j];

    const int trials = 10000;
    std::mt19937_64 rng(77);
    int accepted = 0;
    for (int i = 0; i < trials; ++i)
        if (std::abs(homodyne_sample(in, anc, rng)) <= window) ++accepted;
    double sigma = std::sqrt(trials * expected * (1 - expected));
    CHECK(std::abs(accepted - trials * expected) <= 3.0 * sigma);
}

TEST_CASE("correction_sequence: identity at beta = 0, printed structure otherwise") {
    GateTerm cubic;
    cubic.basis = Quadrature::X;
    cubic.coeffs[3] = 1e-3;
    CHECK(correction_sequence(cubic, 0.0).terms.empty());

    double beta = 0.3, t = 1e-3;
    GateSequence corr = correction_sequence(cubic, beta);
    REQUIRE(corr.terms.size() == 2);
    CHECK(corr.terms[0].basis == Quadrature::P);
    CHECK(corr.terms[0].coeffs[1] == 2 * beta);
    CHECK(corr.terms[1].basis == Quadrature::X);
    // f(x) - f(x + beta) for f = t x^3
    CHECK(corr.terms[1].coeffs[2] == doctest::Approx(-3 * t * beta).epsilon(1e-12));
    CHECK(corr.terms[1].coeffs[1] == doctest::Approx(-3 * t * beta * beta).epsilon(1e-12));
    CHECK(corr.terms[1].coeffs[3] == 0.0);
}

TEST_CASE("correction_sequence: conjugation oracle for quartic and mixed gates") {
    // compiled correction must equal A e^{2 i beta P} A^dag as an operator
    int dim = 60;
    double beta = 0.3;
    auto q = quadrature_operators(dim);
    FockState in = FockState::coherent(1.0, dim);
    in.normalize();

    for (auto [t3, t4] : {std::pair{0.0, 1e-3}, std::pair{2e-3, 1e-3}}) {
        GateTerm gate;
        gate.basis = Quadrature::X;
        gate.coeffs[3] = t3;
        gate.coeffs[4] = t4;
        Matrix h = t3 * (q.x.entries * q.x.entries * q.x.entries) +
                   t4 * (q.x.entries * q.x.entries * q.x.entries * q.x.entries);
        Matrix a = unitary_from_generator({dim, h}, 1.0).entries;
        Matrix disp = unitary_from_generator(q.p, 2.0 * beta).entries;
        Matrix oracle = a * disp * a.adjoint();

        FockOperator compiled = compile_sequence(correction_sequence(gate, beta), dim);
        FockState via_oracle{dim, oracle * in.coeffs};
        FockState via_terms = apply(compiled, in);
        via_oracle.normalize();
        via_terms.normalize();
        CHECK(fidelity_error(via_oracle, via_terms) < 1e-8);
    }
}

TEST_CASE("correction law: teleport, correct, recover A F^dag") {
    GridSpec g = default_grid();
    int dim = 60;
    double t = 1e-3;
    double beta = snap_to_lattice(g, 0.3);

    GateTerm gate;
    gate.basis = Quadrature::X;
    gate.coeffs[4] = t;
    AncillaSpec spec;
    spec.t4 = t;

    GridState in = coherent_grid(1.0, dim, g);
    GridState stepped = teleport_step(in, make_ancilla(spec, g), beta);
    GridState corrected = apply_sequence(correction_sequence(gate, beta), stepped);

    PolyCoeffs quartic{};
    quartic[4] = t;
    GridState expect =
        apply_phase_polynomial(fourier_gate(in, FourierDirection::inverse), Quadrature::X, quartic);
    CHECK(fidelity_error(expect, corrected) < 1e-6);
}

TEST_CASE("fourier_modify: the four-gate sequence maps to the printed momentum gates") {
    double t = 1e-3, s = std::sqrt(t);
    GateSequence primed = fourier_modify(kerr_first_order(t));
    REQUIRE(primed.terms.size() == 4);
    for (const auto& term : primed.terms) CHECK(term.basis == Quadrature::P);
    CHECK(primed.terms[0].coeffs[3] == doctest::Approx((4.0 / 9.0) * s).epsilon(1e-14));
    CHECK(primed.terms[0].coeffs[4] == t);
    CHECK(primed.terms[1].coeffs[3] == doctest::Approx(s).epsilon(1e-14));
    CHECK(primed.terms[1].coeffs[4] == t);
    CHECK(primed.terms[2].coeffs[3] == doctest::Approx((4.0 / 9.0) * s).epsilon(1e-14));
    CHECK(primed.terms[2].coeffs[4] == 0.0);
    CHECK(primed.terms[3].coeffs[3] == doctest::Approx(s).epsilon(1e-14));
    CHECK(primed.terms[3].coeffs[4] == 0.0);
}

TEST_CASE("fourier_modify: single term unchanged, double conjugation flips odd powers") {
    GateSequence one;
    GateTerm t;
    t.basis = Quadrature::X;
    t.coeffs[3] = 1e-3;
    one.terms.push_back(t);
    GateSequence primed = fourier_modify(one);
    CHECK(primed.terms[0].basis == Quadrature::X);
    CHECK(primed.terms[0].coeffs[3] == 1e-3);

    // first term of a 3-term sequence is conjugated by F^2: X^3 -> -X^3
    GateSequence three;
    three.terms = {t, GateTerm{}, GateTerm{}};
    GateSequence p3 = fourier_modify(three);
    CHECK(p3.terms[0].basis == Quadrature::X);
    CHECK(p3.terms[0].coeffs[3] == -1e-3);
}

TEST_CASE("protocol equals the compiled sequence at forced beta = 0 for every scheme") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    for (SchemeKind kind :
         {SchemeKind::first_order, SchemeKind::separated, SchemeKind::q2, SchemeKind::q2_inverse,
          SchemeKind::q2_reversed, SchemeKind::q2_inv_reversed, SchemeKind::third_order}) {
        CompositionScheme scheme{kind, 1e-3, 1};
        GridState direct = apply_sequence(build_sequence(scheme), in);
        for (ProtocolMode mode : {ProtocolMode::postselect, ProtocolMode::deterministic}) {
            ProtocolConfig cfg;
            cfg.mode = mode;
            cfg.force_beta_zero = true;
            auto res = run_protocol(in, scheme, cfg);
            CHECK(fidelity_error(direct, res.output) < 1e-6);
            CHECK(res.transcript.fourier_total % 4 == 0);
            for (const auto& step : res.transcript.steps) CHECK(step.accepted);
        }
    }
}

TEST_CASE("deterministic protocol with sampled outcomes is exact") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    for (SchemeKind kind : {SchemeKind::first_order, SchemeKind::separated, SchemeKind::q2,
                            SchemeKind::third_order}) {
        CompositionScheme scheme{kind, 1e-3, 1};
        GridState direct = apply_sequence(build_sequence(scheme), in);
        ProtocolConfig cfg;
        cfg.mode = ProtocolMode::deterministic;
        cfg.ancilla = AncillaKind::ideal;
        cfg.rng_seed = 7;
        auto res = run_protocol(in, scheme, cfg);
        CHECK(fidelity_error(direct, res.output) < 1e-9);
        bool some_beta = false;
        for (const auto& step : res.transcript.steps) some_beta = some_beta || step.beta != 0.0;
        CHECK(some_beta);  // outcomes were actually sampled
    }
}

TEST_CASE("deterministic schedule of the separated sequence counts ten steps") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    ProtocolConfig cfg;
    cfg.mode = ProtocolMode::deterministic;
    cfg.rng_seed = 3;
    auto res = run_protocol(in, {SchemeKind::separated, 1e-3, 1}, cfg);
    CHECK(res.transcript.counted_steps == 10);
    CHECK(res.transcript.closing_flat_steps == 2);
    CHECK(res.transcript.fourier_total == 12);
    int mains = 0, gauss = 0, flats = 0;
    for (const auto& s : res.transcript.steps) {
        if (s.kind == "main") ++mains;
        if (s.kind == "gauss") ++gauss;
        if (s.kind == "flat") ++flats;
    }
    CHECK(mains == 6);
    CHECK(gauss == 4);
    CHECK(flats == 2);
    // the two quartic corrections were folded into the following cubic steps
    int absorbed_mains = 0;
    for (const auto& s : res.transcript.steps)
        if (s.kind == "main" && s.absorbed_pending) ++absorbed_mains;
    CHECK(absorbed_mains == 2);
}

TEST_CASE("postselected four-gate protocol teleports four steps") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    ProtocolConfig cfg;
    cfg.mode = ProtocolMode::postselect;
    auto res = run_protocol(in, {SchemeKind::first_order, 1e-3, 1}, cfg);
    CHECK(res.transcript.counted_steps == 4);
    CHECK(res.transcript.closing_flat_steps == 0);
    CHECK(res.transcript.fourier_total == 4);
    CHECK(res.transcript.success_probability > 0.0);
}

TEST_CASE("open fourier frame differs from the closed run by Fourier gates") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    CompositionScheme scheme{SchemeKind::q2, 1e-3, 1};  // 5 gates -> 3 closing flats
    ProtocolConfig closed;
    closed.mode = ProtocolMode::postselect;
    auto res_closed = run_protocol(in, scheme, closed);
    CHECK(res_closed.transcript.closing_flat_steps == 3);

    ProtocolConfig open = closed;
    open.close_fourier_frame = false;
    auto res_open = run_protocol(in, scheme, open);
    GridState fixed = res_open.output;
    for (int i = 0; i < 3; ++i) fixed = fourier_gate(fixed, FourierDirection::inverse);
    CHECK(fidelity_error(res_closed.output, fixed) < 1e-9);
}

TEST_CASE("pre-Fourier strategy reproduces the compiled sequence") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    CompositionScheme scheme{SchemeKind::first_order, 1e-3, 1};
    GridState direct = apply_sequence(build_sequence(scheme), in);

    ProtocolConfig cfg;
    cfg.mode = ProtocolMode::deterministic;
    cfg.strategy = FourierStrategy::pre_fourier;
    cfg.rng_seed = 11;
    auto res = run_protocol(in, scheme, cfg);
    CHECK(fidelity_error(direct, res.output) < 1e-9);
    CHECK(res.transcript.fourier_total % 4 == 0);
}

TEST_CASE("postselection failure raises with transcript statistics") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    ProtocolConfig cfg;
    cfg.mode = ProtocolMode::postselect;
    cfg.postselect_window = 1e-4;  // smaller than one lattice bin
    cfg.max_retries = 3;
    cfg.rng_seed = 5;
    try {
        run_protocol(in, {SchemeKind::first_order, 1e-3, 1}, cfg);
        FAIL("expected PostselectFailure");
    } catch (const PostselectFailure& e) {
        CHECK(!e.transcript.steps.empty());
        CHECK(!e.transcript.steps.back().accepted);
        CHECK(e.transcript.steps.back().retries == 3);
        CHECK(e.transcript.success_probability < 0.1);
    }
}

TEST_CASE("transcript json round trip") {
    GridSpec g = default_grid();
    GridState in = coherent_grid(1.0, 60, g);
    ProtocolConfig cfg;
    cfg.mode = ProtocolMode::deterministic;
    cfg.rng_seed = 9;
    auto res = run_protocol(in, {SchemeKind::separated, 1e-3, 1}, cfg);
    nlohmann::json j = res.transcript;
    ProtocolTranscript back = j.get<ProtocolTranscript>();
    nlohmann::json j2 = back;
    CHECK(j.dump() == j2.dump());
}
