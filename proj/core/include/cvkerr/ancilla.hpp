#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "cvkerr/grid.hpp"

namespace cvkerr {

enum class AncillaKind { ideal, first_order, photon_subtracted };

std::string to_string(AncillaKind k);

/// Recipe for an ancilla wavefunction.
///  - ideal: e^{i t3 x^3 + i t4 x^4}, windowed to the grid.
///  - first_order: (1 + i t3 x^3 + i t4 x^4) e^{-(x/w)^2} with the squeezing
///    proxy width w = e^r / sqrt(2) standing in for |p = 0>.
///  - photon_subtracted: prod_k (X + iP + c_k) applied to the proxy.
struct AncillaSpec {
    AncillaKind kind = AncillaKind::ideal;
    double t3 = 0.0;
    double t4 = 0.0;
    double squeezing_r = 3.0;
    std::vector<Complex> roots;  // photon_subtracted only
};

GridState make_ancilla(const AncillaSpec& spec, const GridSpec& g);

/// Displacement coefficients for the photon-subtraction construction.
/// Order 3: roots of z^3 - (3/2) z + i/t = 0 (targets 1 + i t x^3).
/// Order 4: roots of z^4 - 3 z^2 + (3/4 - i/t) = 0 (targets 1 + i t x^4).
/// Returned sorted by imaginary part, then real part; the symmetric-function
/// conditions are verified to 1e-9 before returning.
std::vector<Complex> solve_displacement_roots(double t, int order);

/// Residuals of the symmetric-function conditions for a candidate root set.
/// Order 3: {|e1|, |e2 + 3/2|, |i t e3 - 1|};
/// order 4: {|e1|, |e2 + 3|, |e3 + (3/2) e1|, |i t (e4 + e2/2 + 3/4) - 1|}.
std::vector<double> displacement_root_residuals(std::span<const Complex> roots, double t);

/// prod_k (X + iP + c_k) |proxy>, with P realized spectrally through the
/// Fourier gate, normalized on the grid. Converges pointwise to a profile
/// proportional to 1 + i t x^k as the proxy widens.
GridState photon_subtracted_ancilla(std::span<const Complex> roots, double r, const GridSpec& g);

void to_json(nlohmann::json& j, const AncillaSpec& s);
void from_json(const nlohmann::json& j, AncillaSpec& s);

}  // namespace cvkerr
