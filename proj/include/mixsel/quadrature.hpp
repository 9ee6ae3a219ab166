#pragma once

#include <cstdint>
#include <vector>

#include "mixsel/density.hpp"

namespace mixsel {

enum class GridScheme { uniform, gauss_hermite, monte_carlo };

struct GridSpec {
    GridScheme scheme = GridScheme::uniform;
    double step = 0.01;     // uniform: node spacing per axis
    double radius = 0.0;    // uniform: box half-width; <= 0 selects the default
    int order = 64;         // gauss_hermite: nodes per axis
    long mc_nodes = 200000; // monte_carlo (d >= 3 fallback)
    std::uint64_t mc_seed = 1;
    double tail_tol = 1e-10;

    static GridSpec uniform(double step, double radius);
    static GridSpec gauss_hermite(int order);
    static GridSpec monte_carlo(long nodes, std::uint64_t seed);
};

// Nodes/weights realizing integrals against dmu and f* dmu. f* values are
// cached at the nodes since every divergence evaluates against them.
struct QuadratureGrid {
    int dim = 1;
    std::vector<double> nodes;      // n*d row-major
    std::vector<double> weights;    // dmu weights
    std::vector<double> fstar_log;  // log f*(node)
    std::vector<double> mass;       // weights[i] * f*(node_i): the f*dmu measure
    double truncation_radius = 0.0;
    double tail_mass = 0.0;    // analytic estimate of excluded f* mass
    double norm_defect = 0.0;  // |1 - sum(mass)|
    double mc_standard_error = 0.0;
    GridSpec spec;
    MixtureParams fstar;
    LocationFamily family;

    long size() const { return static_cast<long>(weights.size()); }
    std::span<const double> node(long i) const {
        return {nodes.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    double tolerance() const;  // declared normalization tolerance
};

// The default truncation radius max_i |theta_i*| + extent + 10 sigma keeps
// Gaussian tail mass far below the refusal threshold in the tested regimes.
double default_radius(const MixtureParams& fstar, const LocationFamily& family,
                      double extent);

QuadratureGrid build_grid(const MixtureParams& fstar, const LocationFamily& family,
                          GridSpec spec);

// Gauss-Hermite nodes/weights for weight exp(-x^2) via Golub-Welsch.
void gauss_hermite_rule(int order, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace mixsel
