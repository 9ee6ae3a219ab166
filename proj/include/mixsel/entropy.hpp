#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "mixsel/divergence.hpp"

namespace mixsel {

enum class ClassKind { hellinger_ball, weighted_class };

// Function values at the grid nodes, one row per sampled class member,
// pre-scaled by sqrt of the f*dmu node mass so Euclidean row distance
// equals the L2(f* dmu) distance.
struct FunctionCloud {
    ClassKind kind = ClassKind::hellinger_ball;
    int q = 1;
    double epsilon = 0.0;  // ball radius for hellinger_ball
    Eigen::MatrixXd rows;  // n_functions x grid.size(), scaled
    std::vector<std::vector<double>> params;  // weights then locations per row
    std::vector<double> h_values;
    double acceptance_rate = 1.0;

    long size() const { return rows.rows(); }
    double distance(long i, long j) const { return (rows.row(i) - rows.row(j)).norm(); }
    double diameter_upper_bound() const;
};

FunctionCloud sample_class(int q, ClassKind kind, const MixtureParams& fstar,
                           const LocationFamily& family, const ParamBall& ball, double epsilon,
                           std::size_t n_functions, std::uint64_t seed, const QuadratureGrid& grid,
                           int threads = 1, double min_acceptance = 1e-4);

// Maximal greedy delta-separated subset in row order; the selected centers
// also form a delta-covering, so the same scan serves both counts.
std::size_t greedy_packing(const FunctionCloud& cloud, double delta);
std::size_t greedy_covering(const FunctionCloud& cloud, double delta);

struct PackingResult {
    std::vector<double> deltas;
    std::vector<std::size_t> counts;
};

struct ExponentFit {
    double eta_hat = 0.0;   // slope of log M against log(1/delta)
    double logK_hat = 0.0;  // intercept
    double r2 = 0.0;
    std::size_t points = 0;
};

PackingResult packing_curve(const FunctionCloud& cloud, const std::vector<double>& deltas);

// Fits log M(delta) ~ eta * log(C eps / delta); needs >= 4 delta points and
// at least two distinct counts.
ExponentFit fit_exponent(const PackingResult& packing);

struct EntropyCurve {
    PackingResult packing;
    ExponentFit fit;
    // eta_hat above the 18(d+1)q + 1 ceiling; reported, not thrown
    bool exponent_red_flag = false;
};

// delta grid must lie in (0, epsilon] for Hellinger-ball clouds
EntropyCurve entropy_curve(const FunctionCloud& cloud, const std::vector<double>& deltas, int dim);

std::vector<double> geometric_deltas(double hi, double lo, int count);

// Quadrature discretization error for cloud distances, estimated by
// re-evaluating a few row pairs on a twice-refined grid.
double discretization_error(const FunctionCloud& cloud, const MixtureParams& fstar,
                            const QuadratureGrid& fine, std::size_t pairs = 8);

struct LocalGlobalPair {
    double delta = 0.0;
    double rho = 0.0;
    std::size_t packing = 0;
    double bound = 0.0;
    bool ok = false;
};

struct LocalGlobalReport {
    double C0 = 0.0;       // global weighted-class constant (slack applied)
    double q_hat = 0.0;    // fitted weighted-class exponent
    double eps0 = 0.0;     // largest delta the global fit used
    double R_norm2 = 0.0;  // envelope L2 norm
    double C1 = 0.0;       // 8 C0 (1 v ||R||_2 / 4 eps0)
    std::vector<LocalGlobalPair> pairs;
    bool all_ok = true;
};

// Verifies M(H(delta), rho) <= (C1 delta / rho)^(q_hat + 1) for every
// requested pair with rho/delta < 4 ^ 2||R||_2 (strict). C0 is measured by
// packing, a lower proxy for the bracketing number, and carries the
// documented factor-2 slack.
LocalGlobalReport check_local_global(int q, const MixtureParams& fstar,
                                     const LocationFamily& family, const ParamBall& ball,
                                     const QuadratureGrid& grid, double R_norm2,
                                     const std::vector<double>& deltas,
                                     const std::vector<double>& rho_over_delta,
                                     std::size_t n_functions, std::uint64_t seed, int threads = 1);

void write_curve_csv(int q, double epsilon, const PackingResult& packing, const std::string& path,
                     bool append = false);
void write_fit_csv(int q, const ExponentFit& fit, const std::string& path, bool append = false);

}  // namespace mixsel
