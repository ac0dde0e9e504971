#include "cvkerr/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <thread>

namespace cvkerr {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kTable1Ref[2][2] = {{-7.7594, -2.6641}, {-4.9653, -0.7526}};
constexpr double kSinglePhotonRef = -7.9853;
constexpr double kApproxAncillaRef = -2.7446;
constexpr double kThirdOrderRef = -9.9569;
constexpr double kStrongKerrRef = -3.8252;
constexpr double kNsGateRef = -3.2423;
// squeezing-proxy width used for the approximate-ancilla experiment
constexpr double kApproxAncillaR = 2.0;

double log10_eps(double eps) {
    return std::log10(std::max(eps, 1e-300));
}

GridSpec experiment_grid(const ExperimentConfig& c) {
    GridSpec g = c.grid.value_or(GridSpec::self_dual_grid(1024));
    return g.self_dual() ? g : g.nearest_self_dual();
}

/// exact/approx wavefunction CSV with the approximate column phase-aligned
/// to the exact one.
void write_pair_csv(const std::filesystem::path& path, const GridState& exact,
                    const GridState& approx, double* max_pointwise = nullptr) {
    Complex ov = exact.values.dot(approx.values) * exact.spec.dx();
    Complex phase = std::abs(ov) > 0 ? ov / std::abs(ov) : Complex(1, 0);
    std::ofstream out(path);
    out << "x,re_exact,im_exact,re_approx,im_approx\n";
    char line[192];
    double maxdiff = 0.0;
    for (int j = 0; j < exact.spec.n_points; ++j) {
        Complex a = approx.values(j) / phase;
        maxdiff = std::max(maxdiff, std::abs(a - exact.values(j)));
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", exact.spec.x(j),
                      exact.values(j).real(), exact.values(j).imag(), a.real(), a.imag());
        out << line;
    }
    if (max_pointwise) *max_pointwise = maxdiff;
}

struct DirectRun {
    double epsilon = 0.0;
    FockState exact{1, Vector::Ones(1)};
    FockState approx{1, Vector::Ones(1)};
};

DirectRun direct_run(const GateSequence& seq, double target_t, const FockState& input) {
    DirectRun r;
    FockOperator u = compile_sequence(seq, input.dim);
    FockOperator target = kerr_target_unitary(target_t, input.dim);
    r.approx = apply(u, input);
    r.approx.normalize();
    r.exact = apply(target, input);
    r.exact.normalize();
    r.epsilon = fidelity_error(r.exact, r.approx);
    return r;
}

struct Ctx {
    const ExperimentConfig& cfg;
    ordered_json& report;
    std::filesystem::path dir;
    std::vector<std::filesystem::path>& files;
};

using Runner = std::function<double(Ctx&)>;  // returns epsilon

double run_table1(Ctx& ctx) {
    const double ts[2] = {1e-3, 1e-2};
    const double amps[2] = {1.0, 5.0};
    double cell_eps[2][2];
    FockState cell_exact[2][2] = {{FockState::basis(2, 0), FockState::basis(2, 0)},
                                  {FockState::basis(2, 0), FockState::basis(2, 0)}};
    FockState cell_approx[2][2] = {{FockState::basis(2, 0), FockState::basis(2, 0)},
                                   {FockState::basis(2, 0), FockState::basis(2, 0)}};
    auto run_cell = [&](int i, int j) {
        FockState input = FockState::coherent(amps[j], ctx.cfg.dim);
        input.normalize();
        if (ctx.cfg.mode == ProtocolMode::direct) {
            DirectRun r = direct_run(kerr_first_order(ts[i]), ts[i], input);
            cell_eps[i][j] = r.epsilon;
            cell_exact[i][j] = r.exact;
            cell_approx[i][j] = r.approx;
        } else {
            ProtocolConfig pc;
            pc.mode = ctx.cfg.mode;
            pc.rng_seed = ctx.cfg.seed;
            pc.grid = experiment_grid(ctx.cfg);
            auto res = run_protocol(input, {SchemeKind::first_order, ts[i], 1}, pc);
            FockState target = apply(kerr_target_unitary(ts[i], ctx.cfg.dim), input);
            target.normalize();
            GridState target_grid = fock_to_position(target, res.output.spec);
            cell_eps[i][j] = fidelity_error(target_grid, res.output);
            cell_exact[i][j] = target;
            cell_approx[i][j] = position_to_fock(res.output, ctx.cfg.dim);
        }
    };
    if (ctx.cfg.jobs > 1) {
        std::vector<std::thread> pool;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) pool.emplace_back(run_cell, i, j);
        for (auto& th : pool) th.join();
    } else {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) run_cell(i, j);
    }

    GridSpec g = experiment_grid(ctx.cfg);
    ordered_json cells = ordered_json::array();
    bool all_ok = true;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double l = log10_eps(cell_eps[i][j]);
            bool ok = std::abs(l - kTable1Ref[i][j]) <= 0.5;
            all_ok = all_ok && ok;
            char name[64];
            std::snprintf(name, sizeof name, "state_t%g_amp%g.csv", ts[i], amps[j]);
            auto path = ctx.dir / name;
            write_pair_csv(path, fock_to_position(cell_exact[i][j], g),
                           fock_to_position(cell_approx[i][j], g));
            ctx.files.push_back(path);
            cells.push_back({{"t", ts[i]},
                             {"coherent_amplitude", amps[j]},
                             {"epsilon", cell_eps[i][j]},
                             {"log10_epsilon", l},
                             {"reference_log10_epsilon", kTable1Ref[i][j]},
                             {"tolerance", 0.5},
                             {"ok", ok},
                             {"csv", name}});
        }
    ctx.report["cells"] = cells;
    ctx.report["tolerance_ok"] = all_ok;
    return cell_eps[0][0];
}

double run_fig(Ctx& ctx, const double* reference) {
    double t = ctx.cfg.t;
    FockState input = parse_input_state(ctx.cfg.input_state, ctx.cfg.dim);
    DirectRun r = direct_run(build_sequence({ctx.cfg.scheme, t, 1}), t, input);
    GridSpec g = experiment_grid(ctx.cfg);
    auto path = ctx.dir / "state.csv";
    double maxdiff = 0.0;
    write_pair_csv(path, fock_to_position(r.exact, g), fock_to_position(r.approx, g), &maxdiff);
    ctx.files.push_back(path);
    ctx.report["max_pointwise_difference"] = maxdiff;
    if (reference) {
        double l = log10_eps(r.epsilon);
        bool ok = std::abs(l - *reference) <= 0.5 && maxdiff <= 1e-3;
        ctx.report["reference_log10_epsilon"] = *reference;
        ctx.report["tolerance"] = 0.5;
        ctx.report["tolerance_ok"] = ok;
    }
    return r.epsilon;
}

double run_fig3(Ctx& ctx) {
    FockState input = parse_input_state(ctx.cfg.input_state, ctx.cfg.dim);
    ProtocolConfig pc;
    pc.mode = ProtocolMode::postselect;
    pc.postselect_window = 0.0;  // forced beta = 0
    pc.ancilla = AncillaKind::first_order;
    pc.squeezing_r = kApproxAncillaR;
    pc.rng_seed = ctx.cfg.seed;
    pc.grid = experiment_grid(ctx.cfg);
    auto res = run_protocol(input, {ctx.cfg.scheme, ctx.cfg.t, 1}, pc);

    FockState target = apply(kerr_target_unitary(ctx.cfg.t, ctx.cfg.dim), input);
    target.normalize();
    GridState target_grid = fock_to_position(target, res.output.spec);
    double eps = fidelity_error(target_grid, res.output);

    auto path = ctx.dir / "state.csv";
    write_pair_csv(path, target_grid, res.output);
    ctx.files.push_back(path);
    auto tpath = ctx.dir / "transcript.json";
    std::ofstream tout(tpath);
    tout << json(res.transcript).dump(2) << "\n";
    ctx.files.push_back(tpath);

    double l = log10_eps(eps);
    ctx.report["squeezing_r"] = kApproxAncillaR;
    ctx.report["reference_log10_epsilon"] = kApproxAncillaRef;
    ctx.report["tolerance"] = 0.7;
    ctx.report["tolerance_ok"] = std::abs(l - kApproxAncillaRef) <= 0.7;
    return eps;
}

double run_single_photon(Ctx& ctx) {
    std::array<Complex, 2> c = {Complex(1, 0), Complex(1, 0)};
    FockState input = FockState::superposition(c, ctx.cfg.dim);
    DirectRun r = direct_run(kerr_first_order(ctx.cfg.t), ctx.cfg.t, input);
    GridSpec g = experiment_grid(ctx.cfg);
    auto path = ctx.dir / "state.csv";
    write_pair_csv(path, fock_to_position(r.exact, g), fock_to_position(r.approx, g));
    ctx.files.push_back(path);
    double l = log10_eps(r.epsilon);
    ctx.report["reference_log10_epsilon"] = kSinglePhotonRef;
    ctx.report["tolerance"] = 0.5;
    ctx.report["tolerance_ok"] = std::abs(l - kSinglePhotonRef) <= 0.5;
    return r.epsilon;
}

double run_third_order(Ctx& ctx) {
    FockState input = parse_input_state(ctx.cfg.input_state, ctx.cfg.dim);
    DirectRun third = direct_run(third_order(ctx.cfg.t), ctx.cfg.t, input);
    DirectRun first = direct_run(kerr_first_order(ctx.cfg.t), ctx.cfg.t, input);
    GridSpec g = experiment_grid(ctx.cfg);
    auto path = ctx.dir / "state.csv";
    write_pair_csv(path, fock_to_position(third.exact, g), fock_to_position(third.approx, g));
    ctx.files.push_back(path);

    double l3 = log10_eps(third.epsilon);
    double l1 = log10_eps(first.epsilon);
    ctx.report["first_order_log10_epsilon"] = l1;
    ctx.report["gain_orders"] = l1 - l3;
    ctx.report["reference_log10_epsilon"] = kThirdOrderRef;
    ctx.report["tolerance"] = 0.7;
    ctx.report["tolerance_ok"] = std::abs(l3 - kThirdOrderRef) <= 0.7 && (l1 - l3) >= 1.5;
    return third.epsilon;
}

double run_strong_kerr(Ctx& ctx) {
    FockState input = parse_input_state(ctx.cfg.input_state, ctx.cfg.dim);
    int reps = ctx.cfg.repetitions;
    FockOperator u = compile_sequence(third_order(ctx.cfg.t), ctx.cfg.dim);
    FockState state = input;
    for (int i = 0; i < reps; ++i) state = apply(u, state);
    state.normalize();
    double total = ctx.cfg.t * reps;
    FockState exact = apply(kerr_target_unitary(total, ctx.cfg.dim), input);
    exact.normalize();
    double eps = fidelity_error(exact, state);

    GridSpec g = experiment_grid(ctx.cfg);
    auto path = ctx.dir / "state.csv";
    write_pair_csv(path, fock_to_position(exact, g), fock_to_position(state, g));
    ctx.files.push_back(path);

    ctx.report["repetitions"] = reps;
    ctx.report["total_amplitude"] = total;
    double l = log10_eps(eps);
    ctx.report["reference_log10_epsilon"] = kStrongKerrRef;
    ctx.report["tolerance"] = 0.5;
    ctx.report["tolerance_ok"] = std::abs(l - kStrongKerrRef) <= 0.5;
    return eps;
}

double run_ns_gate(Ctx& ctx) {
    std::array<Complex, 3> c = {Complex(1, 0), Complex(1, 0), Complex(1, 0)};
    FockState input = FockState::superposition(c, ctx.cfg.dim);
    int reps = ctx.cfg.repetitions;
    FockOperator u = compile_sequence(third_order(ctx.cfg.t), ctx.cfg.dim);
    FockState state = input;
    for (int i = 0; i < reps; ++i) state = apply(u, state);
    state.normalize();
    double total = ctx.cfg.t * reps;

    FockState exact = apply(kerr_target_unitary(total, ctx.cfg.dim), input);
    exact.normalize();
    double eps_kerr = fidelity_error(exact, state);

    // Gaussian rotation bookkeeping: the number-shear core relates to the
    // sign-gate action by the diagonal rotation e^{-2 i total N}.
    FockState rotated = state;
    for (int n = 0; n < ctx.cfg.dim; ++n)
        rotated.coeffs(n) *= std::exp(Complex(0, -2.0 * total * n));
    std::array<Complex, 3> ns = {Complex(1, 0), Complex(1, 0), Complex(-1, 0)};
    FockState ns_target = FockState::superposition(ns, ctx.cfg.dim);
    double eps_ns = fidelity_error(ns_target, rotated);

    // relative phases against the |0> coefficient
    Complex c0 = rotated.coeffs(0);
    double re1 = (rotated.coeffs(1) * std::conj(c0)).real();
    double re2 = (rotated.coeffs(2) * std::conj(c0)).real();
    bool sign_flipped = re1 > 0.0 && re2 < 0.0;

    GridSpec g = experiment_grid(ctx.cfg);
    auto path = ctx.dir / "state.csv";
    write_pair_csv(path, fock_to_position(ns_target, g), fock_to_position(rotated, g));
    ctx.files.push_back(path);

    ctx.report["repetitions"] = reps;
    ctx.report["total_amplitude"] = total;
    ctx.report["epsilon_vs_kerr_target"] = eps_kerr;
    ctx.report["log10_epsilon_vs_kerr_target"] = log10_eps(eps_kerr);
    ctx.report["epsilon_vs_sign_flipped_state"] = eps_ns;
    ctx.report["sign_flipped"] = sign_flipped;
    double l = log10_eps(eps_ns);
    ctx.report["reference_log10_epsilon"] = kNsGateRef;
    ctx.report["tolerance"] = 0.5;
    ctx.report["tolerance_ok"] = std::abs(l - kNsGateRef) <= 0.5 && sign_flipped;
    return eps_ns;
}

double run_appendix(Ctx& ctx) {
    double t = ctx.cfg.t;
    int dim = ctx.cfg.dim;
    AppendixResiduals r = verify_appendix_identities(t, t, dim);
    ctx.report["t1"] = t;
    ctx.report["t2"] = t;
    ctx.report["dim_per_mode"] = dim;
    ctx.report["residual1"] = r.residual1;
    ctx.report["residual2"] = r.residual2;
    ctx.report["tolerance"] = 1e-6;
    ctx.report["tolerance_ok"] = r.residual1 <= 1e-6 && r.residual2 <= 1e-6;
    return std::max(r.residual1, r.residual2);
}

double run_teleport_equiv(Ctx& ctx) {
    FockState input = parse_input_state(ctx.cfg.input_state, ctx.cfg.dim);
    GridSpec g = experiment_grid(ctx.cfg);
    GridState start = fock_to_position(input, g);

    const SchemeKind kinds[] = {SchemeKind::first_order,  SchemeKind::separated,
                                SchemeKind::q2,           SchemeKind::q2_inverse,
                                SchemeKind::q2_reversed,  SchemeKind::q2_inv_reversed,
                                SchemeKind::third_order};
    ordered_json rows = ordered_json::array();
    double worst = 0.0;
    for (SchemeKind k : kinds) {
        CompositionScheme scheme{k, ctx.cfg.t, 1};
        GridState direct = apply_sequence(build_sequence(scheme), start);
        ProtocolConfig pc;
        pc.mode = ProtocolMode::postselect;
        pc.postselect_window = 0.0;
        pc.grid = g;
        auto res = run_protocol(start, scheme, pc);
        double gap = fidelity_error(direct, res.output);
        worst = std::max(worst, gap);
        rows.push_back({{"scheme", to_string(k)}, {"fidelity_gap", gap}});
    }
    ctx.report["schemes"] = rows;
    ctx.report["tolerance"] = 1e-6;
    ctx.report["tolerance_ok"] = worst <= 1e-6;
    return worst;
}

struct Registered {
    std::string description;
    Runner runner;
    // defaults applied when the caller leaves the generic fields untouched
    std::function<void(ExperimentConfig&)> defaults;
};

const std::map<std::string, Registered>& registry() {
    static const std::map<std::string, Registered> reg = {
        {"table1",
         {"error of the 4-gate scheme: t in {1e-3,1e-2} x coherent amplitude in {1,5}",
          run_table1, [](ExperimentConfig&) {}}},
        {"fig1",
         {"wavefunction overlap data, 4-gate scheme, t=1e-3, coherent 1",
          [](Ctx& c) { return run_fig(c, &kTable1Ref[0][0]); },
          [](ExperimentConfig& c) { c.t = 1e-3; }}},
        {"fig2",
         {"wavefunction overlap data, 4-gate scheme, t=1e-1, coherent 1",
          [](Ctx& c) { return run_fig(c, nullptr); },
          [](ExperimentConfig& c) { c.t = 1e-1; }}},
        {"fig3",
         {"4-gate protocol with first-order ancillae, forced beta=0, t=1e-3",
          run_fig3, [](ExperimentConfig&) {}}},
        {"single_photon",
         {"(|0>+|1>)/sqrt(2) under the 4-gate scheme, t=1e-3",
          run_single_photon, [](ExperimentConfig&) {}}},
        {"third_order",
         {"third-order composition vs 4-gate scheme, t=1e-3, coherent 1",
          run_third_order, [](ExperimentConfig&) {}}},
        {"strong_kerr",
         {"1000 x third_order(1e-3) against the amplitude-1 target",
          run_strong_kerr, [](ExperimentConfig& c) { c.repetitions = 1000; }}},
        {"ns_gate",
         {"500 x third_order(pi*1e-3) on (|0>+|1>+|2>)/sqrt(3); checks the |2> sign flip",
          run_ns_gate,
          [](ExperimentConfig& c) {
              c.repetitions = 500;
              c.t = M_PI * 1e-3;
              c.scheme = SchemeKind::third_order;
          }}},
        {"appendix",
         {"two-mode gate-product identity residuals (dim 30/mode, t=0.05)",
          run_appendix,
          [](ExperimentConfig& c) {
              c.dim = 30;
              c.t = 0.05;
          }}},
        {"teleport_equiv",
         {"protocol (forced beta=0, ideal ancillae) vs compiled sequence, all schemes",
          run_teleport_equiv, [](ExperimentConfig&) {}}},
    };
    return reg;
}

}  // namespace

FockState parse_input_state(const std::string& spec, int dim) {
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "coherent") {
        double amp = rest.empty() ? 1.0 : std::stod(rest);
        FockState s = FockState::coherent(amp, dim);
        s.normalize();
        return s;
    }
    if (kind == "fock") {
        std::vector<Complex> cs;
        size_t pos = 0;
        while (pos < rest.size()) {
            size_t comma = rest.find(',', pos);
            std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                                          : comma - pos);
            cs.emplace_back(std::stod(tok), 0.0);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (cs.empty()) throw std::invalid_argument("parse_input_state: empty fock list");
        return FockState::superposition(cs, dim);
    }
    throw std::invalid_argument("parse_input_state: expected coherent:<amp> or fock:<c0,..>");
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.experiment = j.value("experiment", "");
    c.dim = j.value("dim", 60);
    if (j.contains("grid"))
        c.grid = GridSpec(j.at("grid").at("x_max").get<double>(),
                          j.at("grid").at("n_points").get<int>());
    c.t = j.value("t", 1e-3);
    c.input_state = j.value("input_state", "coherent:1");
    if (j.contains("scheme")) c.scheme = scheme_kind_from_string(j.at("scheme").get<std::string>());
    if (j.contains("mode")) c.mode = protocol_mode_from_string(j.at("mode").get<std::string>());
    c.repetitions = j.value("repetitions", 1);
    c.seed = j.value("seed", std::uint64_t(1));
    if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
    c.jobs = j.value("jobs", 1);
    return c;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["experiment"] = c.experiment;
    j["dim"] = c.dim;
    if (c.grid) j["grid"] = {{"x_max", c.grid->x_max}, {"n_points", c.grid->n_points}};
    j["t"] = c.t;
    j["input_state"] = c.input_state;
    j["scheme"] = to_string(c.scheme);
    j["mode"] = to_string(c.mode);
    j["repetitions"] = c.repetitions;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    return j;
}

std::vector<std::pair<std::string, std::string>> list_experiments() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, reg] : registry()) out.emplace_back(name, reg.description);
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config_in) {
    auto it = registry().find(config_in.experiment);
    if (it == registry().end())
        throw std::invalid_argument("unknown experiment: " + config_in.experiment +
                                    " (see `cvkerr list`)");
    ExperimentConfig config = config_in;
    it->second.defaults(config);
    // explicit caller values win over experiment defaults
    if (config_in.repetitions != 1) config.repetitions = config_in.repetitions;
    if (config_in.t != 1e-3) config.t = config_in.t;

    std::filesystem::path dir = config.out_dir.empty()
                                    ? std::filesystem::path("cvkerr_out") / config.experiment
                                    : config.out_dir;
    std::filesystem::create_directories(dir);

    ExperimentReport rep;
    rep.data = ordered_json::object();
    rep.data["experiment"] = config.experiment;
    rep.data["config"] = experiment_config_to_json(config);
    rep.data["tolerance_ok"] = true;

    Ctx ctx{config, rep.data, dir, rep.files};
    auto t0 = std::chrono::steady_clock::now();
    double eps = it->second.runner(ctx);
    auto t1 = std::chrono::steady_clock::now();

    rep.epsilon = eps;
    rep.log10_epsilon = log10_eps(eps);
    rep.data["epsilon"] = eps;
    rep.data["log10_epsilon"] = rep.log10_epsilon;
    rep.tolerance_ok = rep.data.value("tolerance_ok", true);

    // input tail diagnostics where a Fock input is in play
    try {
        FockState probe = parse_input_state(config.input_state, config.dim);
        rep.data["input_tail_mass"] = probe.tail_mass();
    } catch (const std::exception&) {
    }

    rep.data["runtime_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    ordered_json files = ordered_json::array();
    for (const auto& f : rep.files) files.push_back(f.filename().string());
    files.push_back("report.json");
    rep.data["files"] = files;

    auto report_path = dir / "report.json";
    std::ofstream out(report_path);
    out << rep.data.dump(2) << "\n";
    rep.files.push_back(report_path);
    return rep;
}

}  // namespace cvkerr
