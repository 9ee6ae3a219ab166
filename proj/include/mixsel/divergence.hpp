#pragma once

#include <functional>

#include "mixsel/quadrature.hpp"

namespace mixsel {

// Hellinger distance h(f,g), computed cancellation-free from the
// square-root difference; h(f,f) = 0 exactly.
double hellinger(const MixtureParams& f, const MixtureParams& g, const QuadratureGrid& grid);

// chi^2(f||f*) = ||f/f* - 1||^2 in L2(f* dmu)
double chi_square(const MixtureParams& f, const MixtureParams& fstar, const QuadratureGrid& grid);

// relative entropy D(f*||f)
double kl(const MixtureParams& fstar, const MixtureParams& f, const QuadratureGrid& grid);

// integral |f - g| dmu
double l1_distance(const MixtureParams& f, const MixtureParams& g, const QuadratureGrid& grid);

// d_f = (sqrt(f/f*) - 1) / h(f, f*): the unit-norm direction of f relative
// to f* in L2(f* dmu). Evaluated via expm1 of half the log ratio to avoid
// cancellation near f = f*.
struct WeightedDensity {
    MixtureParams f;
    MixtureParams fstar;
    LocationFamily family;
    double h = 0.0;

    double operator()(std::span<const double> x) const;
    std::vector<double> values(const QuadratureGrid& grid) const;
    double norm2(const QuadratureGrid& grid) const;        // should be 1
    double inner_with_1(const QuadratureGrid& grid) const; // should be -h/2
};

WeightedDensity weighted_density(const MixtureParams& f, const MixtureParams& fstar,
                                 const QuadratureGrid& grid);

// nu_n(g) = n^{-1/2} sum_k {g(X_k) - mean_g}
double empirical_process(const std::function<double(std::span<const double>)>& g,
                         const Dataset& data, double mean_g);

// I_n(g) = nu_n(g) / sqrt(2 log log n)
double strassen_normalized(const std::function<double(std::span<const double>)>& g,
                           const Dataset& data, double mean_g);

}  // namespace mixsel
