#include "cvkerr/teleport.hpp"

#include <cmath>
#include <limits>

#include <fftw3.h>

namespace cvkerr {

namespace {

// Protocol-internal transforms run unguarded: with lattice-snapped outcomes
// every step is exactly cyclic on the torus, and intermediate states may
// legitimately sit at the grid edge until the corrections recenter them.
constexpr double kUnguarded = std::numeric_limits<double>::infinity();

GridState poly_phase_unguarded(const GridState& s, Quadrature basis, const PolyCoeffs& coeffs) {
    if (poly_degree(coeffs) == 0) return s;
    auto mult = [](GridState st, const PolyCoeffs& c) {
        for (int j = 0; j < st.spec.n_points; ++j) {
            double x = st.spec.x(j);
            double ph = ((c[4] * x + c[3]) * x + c[2]) * x * x + c[1] * x;
            st.values(j) *= std::exp(Complex(0, ph));
        }
        return st;
    };
    if (basis == Quadrature::X) return mult(s, coeffs);
    PolyCoeffs flipped{};
    for (int k = 1; k <= 4; ++k) flipped[k] = (k % 2 == 0) ? coeffs[k] : -coeffs[k];
    GridState t = fourier_gate(s, FourierDirection::forward, kUnguarded);
    t = mult(std::move(t), flipped);
    return fourier_gate(t, FourierDirection::inverse, kUnguarded);
}

long long binom(int n, int k) {
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// F M F^dag: X-diagonal terms go to P with the same coefficients,
/// P-diagonal terms to X with (-1)^k per power.
GateTerm primed_conj_once(GateTerm t) {
    if (t.basis == Quadrature::X) {
        t.basis = Quadrature::P;
    } else {
        t.basis = Quadrature::X;
        for (int k = 1; k <= 4; k += 2) t.coeffs[k] = -t.coeffs[k];
    }
    return t;
}

/// F^dag M F: the frame advance a pending correction sees per executed step.
GateTerm pending_advance(GateTerm t) {
    if (t.basis == Quadrature::X) {
        t.basis = Quadrature::P;
        for (int k = 1; k <= 4; k += 2) t.coeffs[k] = -t.coeffs[k];
    } else {
        t.basis = Quadrature::X;
    }
    return t;
}

int lattice_index(const GridSpec& g, double beta) {
    return int(std::llround(beta / g.dx()));
}

Vector cyclic_shift(const Vector& v, int r) {
    const int n = int(v.size());
    r = ((r % n) + n) % n;
    Vector out(n);
    for (int j = 0; j < n; ++j) out(j) = v((j - r + n) % n);
    return out;  // out_j = v_{j-r}: samples of v(x - r dx)
}

double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

/// q_r = sum_j a_j w_{(j-r) mod n} for real a, w via three DFTs.
std::vector<double> cyclic_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& w) {
    const int n = int(a.size());
    Vector fa(n), fw(n);
    for (int j = 0; j < n; ++j) {
        fa(j) = a(j);
        fw(j) = w(j);
    }
    detail::raw_dft(fa, FFTW_FORWARD);
    detail::raw_dft(fw, FFTW_FORWARD);
    for (int j = 0; j < n; ++j) fa(j) *= std::conj(fw(j));
    detail::raw_dft(fa, FFTW_BACKWARD);
    std::vector<double> q(n);
    for (int j = 0; j < n; ++j) q[j] = std::max(0.0, fa(j).real() / n);
    return q;
}

struct PlanStep {
    std::string kind;           // main | gauss | flat
    int logical_index = -1;     // into the scheme's term list, for main steps
    bool absorbs_pending = false;
};

/// Teleportation schedule in logical-gate space. Deterministic mode inserts
/// the correction teleportations: a quartic gate's cubic correction merges
/// into an immediately following same-basis gate, everything else of degree
/// >= 2 gets its own step with the same logical basis.
std::vector<PlanStep> build_plan(const std::vector<GateTerm>& terms, ProtocolMode mode) {
    std::vector<PlanStep> plan;
    int incoming_deg = 0;
    for (size_t i = 0; i < terms.size(); ++i) {
        PlanStep s;
        s.kind = "main";
        s.logical_index = int(i);
        s.absorbs_pending = incoming_deg > 0;
        int total_deg = std::max(terms[i].degree(), incoming_deg);
        incoming_deg = 0;
        plan.push_back(s);
        if (mode != ProtocolMode::deterministic) continue;
        int cd = total_deg - 1;
        while (cd >= 2) {
            if (cd >= 3 && i + 1 < terms.size() && terms[i + 1].basis == terms[i].basis) {
                incoming_deg = cd;
                break;
            }
            PlanStep g;
            g.kind = "gauss";
            g.absorbs_pending = true;
            plan.push_back(g);
            --cd;
        }
    }
    return plan;
}

struct Executor {
    const ProtocolConfig& config;
    GridState state;
    ProtocolTranscript transcript;
    std::mt19937_64 rng;
    std::optional<GateTerm> pending;

    Executor(const ProtocolConfig& cfg, GridState initial)
        : config(cfg), state(std::move(initial)), rng(cfg.rng_seed) {}

    Eigen::VectorXd profile_sq(const GateTerm& gate) const {
        const GridSpec& g = state.spec;
        Eigen::VectorXd a(g.n_points);
        for (int j = 0; j < g.n_points; ++j) {
            double y = g.x(j);
            if (gate.basis == Quadrature::P) y = -y;
            a(j) = std::norm(profile_value(gate, y));
        }
        return a / (a.sum());
    }

    Complex profile_value(const GateTerm& gate, double y) const {
        double h = ((gate.coeffs[4] * y + gate.coeffs[3]) * y + gate.coeffs[2]) * y * y +
                   gate.coeffs[1] * y;
        if (config.ancilla == AncillaKind::ideal) return std::exp(Complex(0, h));
        double w = std::exp(config.squeezing_r) / std::sqrt(2.0);
        return (1.0 + Complex(0, h)) * std::exp(-(y / w) * (y / w));
    }

    std::vector<double> outcome_density(const GateTerm& gate, bool central_window) const {
        const GridSpec& g = state.spec;
        Eigen::VectorXd a = profile_sq(gate);
        Eigen::VectorXd w(g.n_points);
        if (gate.basis == Quadrature::X) {
            GridState phi = fourier_gate(state, FourierDirection::inverse, kUnguarded);
            for (int j = 0; j < g.n_points; ++j) w(j) = std::norm(phi.values(j));
        } else {
            for (int j = 0; j < g.n_points; ++j) w(j) = std::norm(state.values(j));
        }
        w *= g.dx();
        auto q = cyclic_correlation(a, w);
        if (central_window) {
            // The polynomial correction operators are exact while the shifted
            // state stays inside the window; the flat outcome tail beyond it
            // is an artifact of compactifying the homodyne line onto the grid.
            for (int j = 0; j < g.n_points; ++j)
                if (std::abs(g.x(j)) > g.x_max / 2) q[j] = 0.0;
        }
        double total = 0.0;
        for (double v : q) total += v;
        if (total <= 0.0 || !std::isfinite(total))
            throw std::runtime_error("run_protocol: degenerate outcome density");
        for (double& v : q) v /= total;
        return q;
    }

    /// state <- gate * F^dag * [measurement displacement] * state.
    void apply_step(const GateTerm& gate, int r) {
        const GridSpec& g = state.spec;
        const int n = g.n_points;
        if (gate.basis == Quadrature::X) {
            // profile(x) * F^dag(e^{2 i beta x} state) = profile(x) * (F^dag state)(x - beta)
            GridState phi = fourier_gate(state, FourierDirection::inverse, kUnguarded);
            Vector shifted = cyclic_shift(phi.values, r);
            for (int j = 0; j < n; ++j) shifted(j) *= profile_value(gate, g.x(j));
            state.values = std::move(shifted);
        } else {
            // gate(P) F^dag e^{-2 i beta P} = F^dag gate(-X) e^{-2 i beta P}
            Vector shifted = cyclic_shift(state.values, r);
            for (int j = 0; j < n; ++j) shifted(j) *= profile_value(gate, -g.x(j));
            GridState tmp{g, std::move(shifted)};
            state = fourier_gate(tmp, FourierDirection::inverse, kUnguarded);
        }
        state.normalize();
    }

    /// Exact correction for the step just applied; displacement and linear
    /// pieces act immediately, nonlinear pieces go pending for the next step.
    GateSequence apply_correction(const GateTerm& gate, double beta) {
        GateSequence corr = correction_sequence(gate, beta);
        for (const auto& term : corr.terms) {
            if (term.degree() <= 1) {
                state = poly_phase_unguarded(state, term.basis, term.coeffs);
                continue;
            }
            GateTerm linear;
            linear.basis = term.basis;
            linear.coeffs[1] = term.coeffs[1];
            if (linear.coeffs[1] != 0.0)
                state = poly_phase_unguarded(state, linear.basis, linear.coeffs);
            GateTerm nonlinear = term;
            nonlinear.coeffs[1] = 0.0;
            if (pending.has_value())
                throw std::runtime_error("run_protocol: unexpected overlapping corrections");
            pending = nonlinear;
        }
        return corr;
    }

    void run(const std::vector<PlanStep>& plan, const std::vector<GateTerm>& logical,
             const std::vector<int>& conj_exponent, int executed_steps) {
        for (int k = 0; k < executed_steps; ++k) {
            const PlanStep& ps = plan[k];
            if (pending.has_value()) pending = pending_advance(*pending);

            GateTerm gate;
            if (ps.kind == "main") {
                gate = logical[ps.logical_index];
                for (int c = 0; c < conj_exponent[k]; ++c) gate = primed_conj_once(gate);
            } else {
                gate.basis = pending.has_value() ? pending->basis : Quadrature::X;
            }
            bool absorbed = false;
            if (ps.absorbs_pending && pending.has_value()) {
                if (pending->basis != gate.basis)
                    throw std::runtime_error("run_protocol: pending correction basis mismatch");
                for (int p = 1; p <= 4; ++p) gate.coeffs[p] += pending->coeffs[p];
                pending.reset();
                absorbed = true;
            }

            StepRecord rec;
            rec.index = k;
            rec.kind = ps.kind;
            rec.basis = gate.basis;
            rec.gate = gate.coeffs;
            rec.absorbed_pending = absorbed;

            double beta = 0.0;
            bool forced = config.force_beta_zero ||
                          (config.mode == ProtocolMode::postselect && config.postselect_window == 0.0);
            if (forced && config.mode == ProtocolMode::postselect) {
                auto density = outcome_density(gate, false);
                transcript.success_probability *= density[state.spec.n_points / 2];
            }
            if (!forced) {
                auto density =
                    outcome_density(gate, config.mode == ProtocolMode::deterministic);
                if (config.mode == ProtocolMode::postselect) {
                    double window = config.postselect_window;
                    double accept_prob = 0.0;
                    for (int j = 0; j < state.spec.n_points; ++j)
                        if (std::abs(state.spec.x(j)) <= window) accept_prob += density[j];
                    transcript.success_probability *= accept_prob;
                    bool accepted = false;
                    for (int attempt = 0; attempt < config.max_retries; ++attempt) {
                        beta = draw(density);
                        ++rec.retries;
                        if (std::abs(beta) <= window) {
                            accepted = true;
                            break;
                        }
                    }
                    if (!accepted) {
                        rec.accepted = false;
                        rec.beta = beta;
                        transcript.steps.push_back(rec);
                        throw PostselectFailure(
                            "run_protocol: postselection failed after " +
                                std::to_string(config.max_retries) + " retries at step " +
                                std::to_string(k),
                            transcript);
                    }
                } else {
                    beta = draw(density);
                }
            }
            rec.beta = beta;
            rec.accepted = true;

            int r = lattice_index(state.spec, beta);
            apply_step(gate, r);
            rec.fourier_count = k + 1;
            transcript.fourier_total = k + 1;

            if (config.mode == ProtocolMode::deterministic && beta != 0.0) {
                GateSequence corr = apply_correction(gate, r * state.spec.dx());
                if (!corr.terms.empty()) rec.correction = std::move(corr);
            }
            transcript.steps.push_back(std::move(rec));
        }
        if (pending.has_value() && pending->degree() > 0)
            throw std::runtime_error("run_protocol: undischarged correction at protocol end");
    }

    double draw(const std::vector<double>& density) {
        double u = uniform01(rng);
        double acc = 0.0;
        for (size_t j = 0; j < density.size(); ++j) {
            acc += density[j];
            if (u <= acc) return state.spec.x(int(j));
        }
        return state.spec.x(state.spec.n_points - 1);
    }
};

GridState resample_to_self_dual(const GridState& s, bool& resampled) {
    if (s.spec.self_dual()) {
        resampled = false;
        return s;
    }
    resampled = true;
    FockState f = position_to_fock(s, 128);
    return fock_to_position(f, s.spec.nearest_self_dual());
}

}  // namespace

std::string to_string(ProtocolMode m) {
    switch (m) {
        case ProtocolMode::direct: return "direct";
        case ProtocolMode::postselect: return "postselect";
        case ProtocolMode::deterministic: return "deterministic";
    }
    return "?";
}

ProtocolMode protocol_mode_from_string(const std::string& s) {
    if (s == "direct") return ProtocolMode::direct;
    if (s == "postselect") return ProtocolMode::postselect;
    if (s == "deterministic") return ProtocolMode::deterministic;
    throw std::invalid_argument("unknown protocol mode: " + s);
}

double snap_to_lattice(const GridSpec& g, double beta) {
    return std::llround(beta / g.dx()) * g.dx();
}

GridState teleport_step(const GridState& input, const GridState& ancilla, double beta) {
    if (!(input.spec == ancilla.spec))
        throw std::invalid_argument("teleport_step: input and ancilla grids differ");
    if (!input.spec.self_dual())
        throw std::domain_error("teleport_step: grid is not self-dual");
    if (std::abs(beta) > input.spec.x_max)
        throw std::domain_error("teleport_step: beta outside the grid range");
    int r = lattice_index(input.spec, beta);
    GridState phi = fourier_gate(input, FourierDirection::inverse);
    Vector shifted = cyclic_shift(phi.values, r);
    for (int j = 0; j < input.spec.n_points; ++j) shifted(j) *= ancilla.values(j);
    GridState out{input.spec, std::move(shifted)};
    out.normalize();
    return out;
}

std::vector<double> homodyne_density(const GridState& input, const GridState& ancilla) {
    if (!(input.spec == ancilla.spec))
        throw std::invalid_argument("homodyne_density: input and ancilla grids differ");
    const GridSpec& g = input.spec;
    GridState phi = fourier_gate(input, FourierDirection::inverse);
    Eigen::VectorXd a(g.n_points), w(g.n_points);
    for (int j = 0; j < g.n_points; ++j) {
        a(j) = std::norm(ancilla.values(j));
        w(j) = std::norm(phi.values(j)) * g.dx();
    }
    auto q = cyclic_correlation(a, w);
    double total = 0.0;
    for (double v : q) total += v;
    if (total <= 0.0 || !std::isfinite(total))
        throw std::runtime_error("homodyne_density: degenerate outcome density");
    for (double& v : q) v /= total;
    return q;
}

double homodyne_sample(const GridState& input, const GridState& ancilla, std::mt19937_64& rng) {
    auto q = homodyne_density(input, ancilla);
    double u = uniform01(rng);
    double acc = 0.0;
    for (size_t j = 0; j < q.size(); ++j) {
        acc += q[j];
        if (u <= acc) return input.spec.x(int(j));
    }
    return input.spec.x(input.spec.n_points - 1);
}

GateSequence correction_sequence(const GateTerm& gate, double beta) {
    GateSequence out;
    out.scheme_label = "correction";
    if (beta == 0.0) return out;

    GateTerm displacement;
    displacement.basis = (gate.basis == Quadrature::X) ? Quadrature::P : Quadrature::X;
    displacement.coeffs[1] = 2.0 * beta;

    // X gate: f(X) - f(X + beta); P gate: f(P) - f(P - beta).
    double shift = (gate.basis == Quadrature::X) ? beta : -beta;
    GateTerm poly;
    poly.basis = gate.basis;
    for (int m = 1; m <= 3; ++m) {
        double c = 0.0;
        for (int k = m + 1; k <= 4; ++k)
            c -= gate.coeffs[k] * double(binom(k, m)) * std::pow(shift, k - m);
        poly.coeffs[m] = c;
    }

    out.terms.push_back(displacement);
    if (!poly.is_identity()) out.terms.push_back(poly);
    return out;
}

GateSequence fourier_modify(const GateSequence& seq) {
    const int m = int(seq.terms.size());
    GateSequence out;
    out.scheme_label = seq.scheme_label.empty() ? "primed" : seq.scheme_label + "_primed";
    out.terms.reserve(m);
    for (int k = 0; k < m; ++k) {
        GateTerm t = seq.terms[k];
        int j = (m - 1 - k) % 4;
        for (int c = 0; c < j; ++c) t = primed_conj_once(t);
        out.terms.push_back(t);
    }
    return out;
}

ProtocolResult run_protocol(const GridState& input, const CompositionScheme& scheme,
                            const ProtocolConfig& config) {
    GateSequence seq = scheme.repetitions > 1 ? repeat_scheme(scheme, scheme.repetitions)
                                              : build_sequence(scheme);
    bool resampled = false;
    GridState start = resample_to_self_dual(input, resampled);

    ProtocolTranscript transcript;
    transcript.mode = to_string(config.mode);
    transcript.strategy = config.strategy == FourierStrategy::primed ? "primed" : "pre_fourier";
    transcript.seed = config.rng_seed;
    transcript.grid_x_max = start.spec.x_max;
    transcript.grid_n_points = start.spec.n_points;
    transcript.grid_resampled = resampled;

    if (config.mode == ProtocolMode::direct) {
        GridState out = apply_sequence(seq, start);
        ProtocolResult res{std::move(out), std::move(transcript)};
        return res;
    }

    std::vector<PlanStep> plan = build_plan(seq.terms, config.mode);
    std::vector<PlanStep> executed = plan;
    std::vector<int> conj;
    int flats = 0;
    if (config.strategy == FourierStrategy::primed) {
        flats = int((4 - executed.size() % 4) % 4);
        for (int i = 0; i < flats; ++i) executed.push_back({"flat", -1, false});
        int m = int(executed.size());
        conj.resize(m);
        for (int k = 0; k < m; ++k) conj[k] = (m - 1 - k) % 4;
    } else {
        // three flat steps (= F) in front of every teleported gate
        std::vector<PlanStep> with_pre;
        for (const auto& s : plan) {
            for (int i = 0; i < 3; ++i) with_pre.push_back({"flat", -1, false});
            with_pre.push_back(s);
        }
        executed = std::move(with_pre);
        conj.assign(executed.size(), 0);
    }

    int total = int(executed.size());
    int run_count = total;
    if (!config.close_fourier_frame && config.strategy == FourierStrategy::primed)
        run_count = total - flats;

    Executor ex(config, start);
    ex.transcript = std::move(transcript);
    ex.run(executed, seq.terms, conj, run_count);

    for (const auto& s : executed)
        if (s.kind != "flat") ++ex.transcript.counted_steps;
    ex.transcript.closing_flat_steps =
        (config.strategy == FourierStrategy::primed) ? flats : 0;

    ProtocolResult res{std::move(ex.state), std::move(ex.transcript)};
    return res;
}

ProtocolResult run_protocol(const FockState& input, const CompositionScheme& scheme,
                            const ProtocolConfig& config) {
    GridSpec g = config.grid.value_or(GridSpec::self_dual_grid(1024));
    if (!g.self_dual()) g = g.nearest_self_dual();
    if (config.mode == ProtocolMode::direct) {
        FockOperator u = compile_sequence(
            scheme.repetitions > 1 ? repeat_scheme(scheme, scheme.repetitions)
                                   : build_sequence(scheme),
            input.dim);
        FockState out = apply(u, input);
        out.normalize();
        ProtocolTranscript transcript;
        transcript.mode = "direct";
        transcript.seed = config.rng_seed;
        transcript.grid_x_max = g.x_max;
        transcript.grid_n_points = g.n_points;
        return {fock_to_position(out, g), std::move(transcript)};
    }
    return run_protocol(fock_to_position(input, g), scheme, config);
}

void to_json(nlohmann::json& j, const StepRecord& r) {
    j = nlohmann::json::object();
    j["index"] = r.index;
    j["kind"] = r.kind;
    j["basis"] = (r.basis == Quadrature::X) ? "X" : "P";
    nlohmann::json g = nlohmann::json::object();
    for (int k = 1; k <= 4; ++k)
        if (r.gate[k] != 0.0) g[std::to_string(k)] = r.gate[k];
    j["gate"] = std::move(g);
    j["beta"] = r.beta;
    j["accepted"] = r.accepted;
    j["retries"] = r.retries;
    j["fourier_count"] = r.fourier_count;
    j["absorbed_pending"] = r.absorbed_pending;
    if (r.correction.has_value())
        j["correction"] = *r.correction;
    else
        j["correction"] = nullptr;
}

void from_json(const nlohmann::json& j, StepRecord& r) {
    r.index = j.at("index").get<int>();
    r.kind = j.at("kind").get<std::string>();
    r.basis = j.at("basis").get<std::string>() == "X" ? Quadrature::X : Quadrature::P;
    r.gate = {};
    for (auto& [key, val] : j.at("gate").items()) r.gate[std::stoi(key)] = val.get<double>();
    r.beta = j.at("beta").get<double>();
    r.accepted = j.at("accepted").get<bool>();
    r.retries = j.at("retries").get<int>();
    r.fourier_count = j.at("fourier_count").get<int>();
    r.absorbed_pending = j.at("absorbed_pending").get<bool>();
    if (!j.at("correction").is_null()) r.correction = j.at("correction").get<GateSequence>();
}

void to_json(nlohmann::json& j, const ProtocolTranscript& t) {
    j = nlohmann::json::object();
    j["mode"] = t.mode;
    j["strategy"] = t.strategy;
    j["seed"] = t.seed;
    j["counted_steps"] = t.counted_steps;
    j["closing_flat_steps"] = t.closing_flat_steps;
    j["fourier_total"] = t.fourier_total;
    j["success_probability"] = t.success_probability;
    j["grid"] = {{"x_max", t.grid_x_max},
                 {"n_points", t.grid_n_points},
                 {"resampled", t.grid_resampled}};
    j["steps"] = t.steps;
}

void from_json(const nlohmann::json& j, ProtocolTranscript& t) {
    t.mode = j.at("mode").get<std::string>();
    t.strategy = j.value("strategy", "primed");
    t.seed = j.at("seed").get<std::uint64_t>();
    t.counted_steps = j.at("counted_steps").get<int>();
    t.closing_flat_steps = j.at("closing_flat_steps").get<int>();
    t.fourier_total = j.at("fourier_total").get<int>();
    t.success_probability = j.at("success_probability").get<double>();
    t.grid_x_max = j.at("grid").at("x_max").get<double>();
    t.grid_n_points = j.at("grid").at("n_points").get<int>();
    t.grid_resampled = j.at("grid").at("resampled").get<bool>();
    t.steps = j.at("steps").get<std::vector<StepRecord>>();
}

}  // namespace cvkerr
