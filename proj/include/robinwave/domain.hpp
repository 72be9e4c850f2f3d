#pragma once

#include <random>
#include <vector>

#include "robinwave/grid.hpp"
#include "robinwave/linalg.hpp"

namespace robinwave {

/// Best constant μ₀ in ∫|∇u|² + ∫_Γ u² ≥ μ₀ ∫u², i.e. the smallest
/// eigenvalue of the discrete Robin form against the lumped mass.
inline double poincare_constant(const Grid& g, const linalg::InverseIterationOptions& opt = {}) {
    const auto form = linalg::robin_form_matrix(g);
    return linalg::smallest_eigenpairs(form, g.cell_weights, 1, opt).front().value;
}

/// Random combination of the `modes` lowest discrete Robin eigenvectors,
/// normalised to unit boundary-augmented H1 norm. Such data is smooth and
/// compatible with the Robin law, so it does not excite grid-scale modes.
inline std::vector<double> smooth_robin_data(const Grid& g, std::mt19937_64& rng, int modes = 4) {
    const auto pairs = linalg::smallest_eigenpairs(linalg::robin_form_matrix(g), g.cell_weights, modes);
    std::normal_distribution<double> amp(0.0, 1.0);
    std::vector<double> out(g.size(), 0.0);
    for (int k = 0; k < modes; ++k) {
        const double a = amp(rng) / (1.0 + k);
        for (int i = 0; i < g.size(); ++i) out[i] += a * pairs[k].vector[i];
    }
    const double h1 = norm(g, out, NormKind::H1);
    for (double& v : out) v /= h1;
    return out;
}

}  // namespace robinwave
