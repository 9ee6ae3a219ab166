#include "mixsel/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mixsel/rng.hpp"

namespace mixsel {

namespace {

double std_normal_tail(double t) {  // P(Z > t)
    return 0.5 * std::erfc(t / std::sqrt(2.0));
}

// Exact f* mass outside [-R, R]^d: coordinates are independent per component.
double excluded_mass(const MixtureParams& fstar, const LocationFamily& fam, double R) {
    double total = 0.0;
    for (int i = 0; i < fstar.order(); ++i) {
        auto th = fstar.location(i);
        double inside = 1.0;
        for (int k = 0; k < fam.dim; ++k) {
            const double lo = (-R - th[static_cast<std::size_t>(k)]) / fam.sigma;
            const double hi = (R - th[static_cast<std::size_t>(k)]) / fam.sigma;
            inside *= std::max(0.0, std_normal_tail(lo) - std_normal_tail(hi));
        }
        total += fstar.weights[static_cast<std::size_t>(i)] * (1.0 - inside);
    }
    return total;
}

}  // namespace

GridSpec GridSpec::uniform(double step, double radius) {
    if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
    GridSpec s;
    s.scheme = GridScheme::uniform;
    s.step = step;
    s.radius = radius;
    return s;
}

GridSpec GridSpec::gauss_hermite(int order) {
    if (order < 2) throw std::invalid_argument("gauss-hermite order must be >= 2");
    GridSpec s;
    s.scheme = GridScheme::gauss_hermite;
    s.order = order;
    return s;
}

GridSpec GridSpec::monte_carlo(long nodes, std::uint64_t seed) {
    if (nodes < 100) throw std::invalid_argument("monte-carlo grid needs >= 100 nodes");
    GridSpec s;
    s.scheme = GridScheme::monte_carlo;
    s.mc_nodes = nodes;
    s.mc_seed = seed;
    return s;
}

double QuadratureGrid::tolerance() const {
    if (spec.scheme == GridScheme::monte_carlo) return std::max(1e-6, 4.0 * mc_standard_error);
    return 1e-9;
}

double default_radius(const MixtureParams& fstar, const LocationFamily& family, double extent) {
    double m = 0.0;
    for (int i = 0; i < fstar.order(); ++i) m = std::max(m, norm(fstar.location(i)));
    return m + extent + 10.0 * family.sigma;
}

// Sum of squared orthonormal Hermite values scaled by exp(-x^2/2). The
// scaling keeps every term representable, so 1/sum gives the dmu-effective
// weight w*exp(x^2) without the catastrophic eigenvector underflow of the
// plain Golub-Welsch route at extreme nodes.
static double hermite_christoffel_scaled(int order, double x) {
    double prev = 0.0;
    double cur = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
    double sum = cur * cur;
    for (int k = 0; k < order - 1; ++k) {
        const double next =
            x * std::sqrt(2.0 / (k + 1.0)) * cur - std::sqrt(k / (k + 1.0)) * prev;
        prev = cur;
        cur = next;
        sum += cur * cur;
    }
    return sum;
}

void gauss_hermite_rule(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    // nodes: eigenvalues of the Jacobi matrix (zero diagonal, b_k = sqrt(k/2))
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = std::sqrt(k / 2.0);
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    nodes.resize(static_cast<std::size_t>(order));
    weights.resize(static_cast<std::size_t>(order));
    for (int k = 0; k < order; ++k) {
        const double x = es.eigenvalues()(k);
        nodes[static_cast<std::size_t>(k)] = x;
        weights[static_cast<std::size_t>(k)] =
            std::exp(-x * x) / hermite_christoffel_scaled(order, x);
    }
}

QuadratureGrid build_grid(const MixtureParams& fstar, const LocationFamily& family,
                          GridSpec spec) {
    if (fstar.dim() != family.dim) throw std::invalid_argument("dimension mismatch");
    const int d = family.dim;

    QuadratureGrid g;
    g.dim = d;
    g.spec = spec;
    g.fstar = fstar;
    g.family = family;

    std::vector<double> axis_nodes;
    std::vector<double> axis_weights;

    switch (spec.scheme) {
        case GridScheme::uniform: {
            double R = spec.radius > 0.0 ? spec.radius : default_radius(fstar, family, 0.0);
            const long m = static_cast<long>(std::ceil(R / spec.step));
            R = m * spec.step;
            for (long k = -m; k <= m; ++k) {
                axis_nodes.push_back(k * spec.step);
                // trapezoid endpoints carry half weight
                axis_weights.push_back((k == -m || k == m) ? 0.5 * spec.step : spec.step);
            }
            g.truncation_radius = R;
            break;
        }
        case GridScheme::gauss_hermite: {
            std::vector<double> hn, hw;
            gauss_hermite_rule(spec.order, hn, hw);
            for (std::size_t k = 0; k < hn.size(); ++k) {
                axis_nodes.push_back(hn[k]);
                // effective dmu weight w*exp(x^2), in its stable form
                axis_weights.push_back(1.0 / hermite_christoffel_scaled(spec.order, hn[k]));
            }
            g.truncation_radius = std::abs(hn.back());
            break;
        }
        case GridScheme::monte_carlo: {
            if (d < 3)
                throw std::invalid_argument("monte-carlo grid is the d >= 3 fallback; use a "
                                            "deterministic scheme for d <= 2");
            // importance nodes X ~ f*, weights 1/(N f*(X)); normalization exact
            Dataset draws = sample(fstar, family, spec.mc_nodes, spec.mc_seed);
            const long n = draws.size();
            g.nodes = std::move(draws.points);
            g.weights.resize(static_cast<std::size_t>(n));
            g.fstar_log.resize(static_cast<std::size_t>(n));
            g.mass.resize(static_cast<std::size_t>(n));
            double rmax = 0.0;
            for (long i = 0; i < n; ++i) {
                const double lf = eval_log_density(fstar, family, g.node(i));
                g.fstar_log[static_cast<std::size_t>(i)] = lf;
                g.weights[static_cast<std::size_t>(i)] = std::exp(-lf) / static_cast<double>(n);
                g.mass[static_cast<std::size_t>(i)] = 1.0 / static_cast<double>(n);
                rmax = std::max(rmax, norm(g.node(i)));
            }
            g.truncation_radius = rmax;
            g.tail_mass = 0.0;
            g.norm_defect = 0.0;
            g.mc_standard_error = 1.0 / std::sqrt(static_cast<double>(n));
            return g;
        }
    }

    // required coverage: every component center within 8 sigma of the box
    double need = 0.0;
    for (int i = 0; i < fstar.order(); ++i) {
        auto th = fstar.location(i);
        for (int k = 0; k < d; ++k)
            need = std::max(need, std::abs(th[static_cast<std::size_t>(k)]));
    }
    need += 8.0 * family.sigma;
    if (g.truncation_radius < need)
        throw GridTooSmallError("truncation radius " + std::to_string(g.truncation_radius) +
                                " does not cover f* support (need >= " + std::to_string(need) + ")");

    g.tail_mass = excluded_mass(fstar, family, g.truncation_radius);
    if (g.tail_mass > spec.tail_tol)
        throw GridTooSmallError("excluded tail mass " + std::to_string(g.tail_mass) +
                                " exceeds tolerance");

    // tensorize
    const long m1 = static_cast<long>(axis_nodes.size());
    long total = 1;
    for (int k = 0; k < d; ++k) {
        if (total > (1L << 24) / m1)
            throw std::invalid_argument("tensor grid too large; coarsen the spec");
        total *= m1;
    }
    g.nodes.resize(static_cast<std::size_t>(total) * d);
    g.weights.resize(static_cast<std::size_t>(total));
    std::vector<long> idx(static_cast<std::size_t>(d), 0);
    for (long i = 0; i < total; ++i) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            const long j = idx[static_cast<std::size_t>(k)];
            g.nodes[static_cast<std::size_t>(i) * d + k] = axis_nodes[static_cast<std::size_t>(j)];
            w *= axis_weights[static_cast<std::size_t>(j)];
        }
        g.weights[static_cast<std::size_t>(i)] = w;
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[static_cast<std::size_t>(k)] < m1) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
    }

    g.fstar_log.resize(static_cast<std::size_t>(total));
    g.mass.resize(static_cast<std::size_t>(total));
    double sum_mass = 0.0;
    for (long i = 0; i < total; ++i) {
        const double lf = eval_log_density(fstar, family, g.node(i));
        g.fstar_log[static_cast<std::size_t>(i)] = lf;
        g.mass[static_cast<std::size_t>(i)] = g.weights[static_cast<std::size_t>(i)] * std::exp(lf);
        sum_mass += g.mass[static_cast<std::size_t>(i)];
    }
    g.norm_defect = std::abs(1.0 - sum_mass);
    if (g.norm_defect > g.tolerance() + g.tail_mass)
        throw GridTooSmallError("grid normalization defect " + std::to_string(g.norm_defect));
    return g;
}

}  // namespace mixsel
