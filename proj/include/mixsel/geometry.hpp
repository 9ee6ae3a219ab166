#pragma once

#include <cstdint>
#include <vector>

#include "mixsel/divergence.hpp"

namespace mixsel {

// Disjoint convex neighborhoods A_1..A_{q*} of the true component
// locations, with directions u_1..u_d whose projections separate them;
// A_0 is the implicit complement. For q* = 1 the single neighborhood is
// all of R^d (disjointness is vacuous and the pseudodistance then carries
// no stray-mass or weight-mismatch term).
struct Partition {
    std::vector<double> centers;     // q* x d
    std::vector<double> directions;  // d x d row-major, unit rows
    int dim = 1;
    int qstar = 1;
    double radius = 0.0;  // +inf encoded as infinity() when qstar == 1
    double separation = 0.0;

    std::span<const double> center(int i) const {
        return {centers.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    // 0 for A_0, i in 1..q* for A_i
    int region_of(std::span<const double> theta) const;
    bool projections_disjoint() const;
};

Partition build_partition(const MixtureParams& fstar, std::uint64_t seed);

// Stray mass + weight mismatch + first and (half) second moment
// displacements across the partition.
double pseudodistance(const MixtureParams& f, const MixtureParams& fstar, const Partition& part);

// Ratio-of-derivative envelopes H_0..H_3 over the parameter ball. H_0 uses
// the exact nearest-point projection; H_1..H_3 maximize along the ray
// through x (exact for d = 1) with a coarse bracket plus golden-section
// refinement.
struct EnvelopeSet {
    MixtureParams fstar;
    LocationFamily family;
    ParamBall ball;
    double norm_h0_4 = 0.0;
    double norm_h1_4 = 0.0;
    double norm_h2_4 = 0.0;
    double norm_h3_2 = 0.0;

    double h0(std::span<const double> x) const;
    double h1(std::span<const double> x) const;
    double h2(std::span<const double> x) const;
    double h3(std::span<const double> x) const;
};

EnvelopeSet build_envelopes(const MixtureParams& fstar, const LocationFamily& family,
                            const ParamBall& ball, const QuadratureGrid& grid);

// S = (H0 + H1 + H2) d / c*, D = 2S, with empirical c* supplied by the
// ratio study.
struct SDEnvelope {
    EnvelopeSet env;
    double cstar = 0.0;
    double norm_S_4 = 0.0;
    double norm_D_2 = 0.0;

    double S(std::span<const double> x) const;
    double D(std::span<const double> x) const { return 2.0 * S(x); }
};

SDEnvelope envelope_S_D(const EnvelopeSet& env, double cstar, const QuadratureGrid& grid);

// Uniform box over mixture parameters: q-1 free weights followed by the
// q*d location coordinates; the last weight is 1 - sum of the others and
// draws violating the simplex are rejected (never happens for q = 2 with
// weight range within [0,1]).
struct ParamBox {
    int q = 2;
    int dim = 1;
    std::vector<double> lo;  // (q-1) + q*dim entries
    std::vector<double> hi;

    int coords() const { return q - 1 + q * dim; }
    static ParamBox unit_figure1();  // q=2, d=1, [0,1]^3 over (p, th1, th2)
};

struct RatioSample {
    std::vector<double> params;  // box coordinates
    double h = 0.0;
    double N = 0.0;
    double ratio = 0.0;
};

struct GeometryReport {
    std::size_t n_samples = 0;
    std::size_t excluded = 0;  // h = N = 0 draws, counted but not ratioed
    std::size_t rejected = 0;  // simplex violations
    double r_min = 0.0, r_max = 0.0;
    double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
    std::vector<RatioSample> samples;
    // level sets on a res^coords lattice over the box (only emitted when
    // the box has at most 3 coordinates); raw h and N values kept so
    // membership can be re-derived at other thresholds
    int level_res = 0;
    double level_eps = 0.0;
    std::vector<std::uint8_t> level_h;
    std::vector<std::uint8_t> level_N;
    std::vector<float> level_h_val;
    std::vector<float> level_N_val;
};

GeometryReport ratio_study(const MixtureParams& fstar, const LocationFamily& family,
                           const Partition& part, const ParamBox& box, std::size_t n_samples,
                           const QuadratureGrid& grid, std::uint64_t seed, double level_eps = 0.0,
                           int level_res = 0, int threads = 1);

void write_ratio_csv(const GeometryReport& rep, const ParamBox& box, const std::string& path);
void write_levelset_csv(const GeometryReport& rep, const ParamBox& box, bool h_set,
                        const std::string& path);

}  // namespace mixsel
