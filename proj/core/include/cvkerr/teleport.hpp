#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include <nlohmann/json.hpp>

#include "cvkerr/ancilla.hpp"
#include "cvkerr/decomposition.hpp"

namespace cvkerr {

enum class ProtocolMode { direct, postselect, deterministic };
enum class FourierStrategy { primed, pre_fourier };

std::string to_string(ProtocolMode m);
ProtocolMode protocol_mode_from_string(const std::string& s);

struct ProtocolConfig {
    ProtocolMode mode = ProtocolMode::postselect;
    /// Acceptance window for |beta| in postselect mode; 0 forces the exact
    /// beta = 0 outcome (the windowless limit) instead of sampling.
    double postselect_window = 0.0;
    int max_retries = 100;
    std::uint64_t rng_seed = 1;
    /// Forces every homodyne outcome to 0 regardless of mode.
    bool force_beta_zero = false;
    AncillaKind ancilla = AncillaKind::ideal;
    double squeezing_r = 3.0;
    /// primed: teleport conjugated gates so the residual Fourier powers cancel
    /// (with up to 3 closing flat-ancilla steps). pre_fourier: precede every
    /// gate with three flat steps that apply F.
    FourierStrategy strategy = FourierStrategy::primed;
    /// When false, the closing flat-ancilla steps are planned but not
    /// executed; the output then differs from the target by Fourier powers.
    bool close_fourier_frame = true;
    std::optional<GridSpec> grid;      // grid for FockState inputs
};

struct StepRecord {
    int index = 0;
    std::string kind;  // main | gauss | flat
    Quadrature basis = Quadrature::X;
    PolyCoeffs gate{};           // gate actually teleported (conjugated + merged)
    double beta = 0.0;
    bool accepted = true;
    int retries = 0;
    int fourier_count = 0;       // cumulative inverse-Fourier count
    bool absorbed_pending = false;
    std::optional<GateSequence> correction;  // applied right after this step
};

struct ProtocolTranscript {
    std::string mode;
    std::string strategy;
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    int counted_steps = 0;       // main + gauss; flats and displacements excluded
    int closing_flat_steps = 0;
    int fourier_total = 0;
    double success_probability = 1.0;
    double grid_x_max = 0.0;
    int grid_n_points = 0;
    bool grid_resampled = false;
};

void to_json(nlohmann::json& j, const StepRecord& r);
void to_json(nlohmann::json& j, const ProtocolTranscript& t);
void from_json(const nlohmann::json& j, StepRecord& r);
void from_json(const nlohmann::json& j, ProtocolTranscript& t);

struct PostselectFailure : std::runtime_error {
    PostselectFailure(const std::string& what, ProtocolTranscript transcript_)
        : std::runtime_error(what), transcript(std::move(transcript_)) {}
    ProtocolTranscript transcript;
};

/// Measurement outcome snapped to the position lattice.
double snap_to_lattice(const GridSpec& g, double beta);

/// One teleportation step: psi_out(x) = alpha(x) (F^dag psi)(x - beta),
/// normalized; beta is snapped to the lattice. Equals
/// A(X) F^dag e^{2 i beta X} |psi> for the gate A with diagonal profile alpha.
GridState teleport_step(const GridState& input, const GridState& ancilla, double beta);

/// Outcome density over the beta lattice (= x lattice), proportional to the
/// squared norm of the unnormalized step output; sums to 1.
std::vector<double> homodyne_density(const GridState& input, const GridState& ancilla);

/// Draws one lattice outcome from homodyne_density.
double homodyne_sample(const GridState& input, const GridState& ancilla, std::mt19937_64& rng);

/// Correction O = A e^{2 i beta P} A^dag for an X-diagonal gate A = e^{if(X)},
/// expanded exactly into a P displacement followed by the X polynomial
/// f(X) - f(X + beta):  O = e^{i[f(X) - f(X+beta)]} e^{2 i beta P}.
/// P-diagonal gates get the mirrored expansion (X displacement + P polynomial
/// f(P) - f(P - beta)). beta = 0 returns the empty (identity) sequence.
GateSequence correction_sequence(const GateTerm& gate, double beta);

/// Primed sequence for the teleportation chain: term k conjugated by
/// F^{(m-1-k) mod 4}, so that teleporting the primed gates reproduces the
/// original product (times F^dag per step, cancelled when m = 0 mod 4).
GateSequence fourier_modify(const GateSequence& seq);

struct ProtocolResult {
    GridState output;
    ProtocolTranscript transcript;
};

ProtocolResult run_protocol(const GridState& input, const CompositionScheme& scheme,
                            const ProtocolConfig& config);
ProtocolResult run_protocol(const FockState& input, const CompositionScheme& scheme,
                            const ProtocolConfig& config);

}  // namespace cvkerr
