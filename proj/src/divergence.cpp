#include "mixsel/divergence.hpp"

#include <algorithm>
#include <cmath>

namespace mixsel {

double hellinger(const MixtureParams& f, const MixtureParams& g, const QuadratureGrid& grid) {
    const long n = grid.size();
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
        const double lf = eval_log_density(f, grid.family, grid.node(i));
        const double lg = eval_log_density(g, grid.family, grid.node(i));
        // (sqrt f - sqrt g)^2 = f * expm1((lg - lf)/2)^2
        const double r = std::expm1(0.5 * (lg - lf));
        acc += grid.weights[static_cast<std::size_t>(i)] * std::exp(lf) * r * r;
    }
    return std::sqrt(std::min(acc, 2.0));
}

double chi_square(const MixtureParams& f, const MixtureParams& fstar, const QuadratureGrid& grid) {
    const long n = grid.size();
    double acc = 0.0;
    double peak = 0.0;
    double boundary = 0.0;
    const double rim = 0.98 * grid.truncation_radius;
    for (long i = 0; i < n; ++i) {
        const double lf = eval_log_density(f, grid.family, grid.node(i));
        const double lr = lf - grid.fstar_log[static_cast<std::size_t>(i)];
        if (lr > 300.0)
            throw DivergentIntegralError("f/f* overflows at a tail node; enlarge the grid");
        const double r = std::expm1(lr);
        const double term = grid.mass[static_cast<std::size_t>(i)] * r * r;
        acc += term;
        peak = std::max(peak, term);
        bool on_rim = false;
        auto x = grid.node(i);
        for (double c : x)
            if (std::abs(c) > rim) on_rim = true;
        if (on_rim) boundary = std::max(boundary, term);
    }
    // integrand not negligible at the rim: mass is escaping the box
    if (peak > 0.0 && boundary > 1e-8 * peak)
        throw DivergentIntegralError("chi-square integrand does not vanish at grid boundary");
    return acc;
}

double kl(const MixtureParams& fstar, const MixtureParams& f, const QuadratureGrid& grid) {
    const long n = grid.size();
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
        const double lf = eval_log_density(f, grid.family, grid.node(i));
        acc += grid.mass[static_cast<std::size_t>(i)] *
               (grid.fstar_log[static_cast<std::size_t>(i)] - lf);
    }
    return acc;
}

double l1_distance(const MixtureParams& f, const MixtureParams& g, const QuadratureGrid& grid) {
    const long n = grid.size();
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
        const double lf = eval_log_density(f, grid.family, grid.node(i));
        const double lg = eval_log_density(g, grid.family, grid.node(i));
        acc += grid.weights[static_cast<std::size_t>(i)] * std::abs(std::exp(lf) - std::exp(lg));
    }
    return acc;
}

double WeightedDensity::operator()(std::span<const double> x) const {
    const double lf = eval_log_density(f, family, x);
    const double ls = eval_log_density(fstar, family, x);
    return std::expm1(0.5 * (lf - ls)) / h;
}

std::vector<double> WeightedDensity::values(const QuadratureGrid& grid) const {
    const long n = grid.size();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        const double lf = eval_log_density(f, family, grid.node(i));
        out[static_cast<std::size_t>(i)] =
            std::expm1(0.5 * (lf - grid.fstar_log[static_cast<std::size_t>(i)])) / h;
    }
    return out;
}

double WeightedDensity::norm2(const QuadratureGrid& grid) const {
    const auto v = values(grid);
    double acc = 0.0;
    for (long i = 0; i < grid.size(); ++i)
        acc += grid.mass[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)] *
               v[static_cast<std::size_t>(i)];
    return std::sqrt(acc);
}

double WeightedDensity::inner_with_1(const QuadratureGrid& grid) const {
    const auto v = values(grid);
    double acc = 0.0;
    for (long i = 0; i < grid.size(); ++i)
        acc += grid.mass[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    return acc;
}

WeightedDensity weighted_density(const MixtureParams& f, const MixtureParams& fstar,
                                 const QuadratureGrid& grid) {
    const double h = hellinger(f, fstar, grid);
    if (h <= grid.tolerance())
        throw DegenerateWeightingError("f coincides with f* up to grid tolerance");
    return WeightedDensity{f, fstar, grid.family, h};
}

double empirical_process(const std::function<double(std::span<const double>)>& g,
                         const Dataset& data, double mean_g) {
    const long n = data.size();
    double acc = 0.0;
    for (long i = 0; i < n; ++i) acc += g(data.point(i)) - mean_g;
    return acc / std::sqrt(static_cast<double>(n));
}

double strassen_normalized(const std::function<double(std::span<const double>)>& g,
                           const Dataset& data, double mean_g) {
    const long n = data.size();
    if (n < 3) throw std::invalid_argument("strassen normalization needs n >= 3");
    return empirical_process(g, data, mean_g) /
           std::sqrt(2.0 * std::log(std::log(static_cast<double>(n))));
}

}  // namespace mixsel
