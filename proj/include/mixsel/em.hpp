#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixsel/density.hpp"

namespace mixsel {

struct FitOptions {
    int starts = 20;
    std::uint64_t seed = 1;
    double tol = 1e-7;
    int max_iter = 500;
    int threads = 1;
};

struct FitResult {
    MixtureParams params;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    int starts_used = 0;
    int best_start_index = 0;
};

double log_likelihood(const MixtureParams& mix, const LocationFamily& family,
                      const Dataset& data);

// Multi-start EM over the ball-constrained location-mixture class: standard
// responsibility E-step, weighted-mean M-step followed by ball projection.
// Projection can break EM monotonicity; a decreasing step reverts to the
// previous iterate and stops that run. Half the starts are k-means++-style
// draws from the data, the rest uniform in the ball; weights start uniform.
// Bit-for-bit reproducible for fixed (data, q, seed, starts), independent of
// the thread count.
FitResult fit_constrained(int q, const Dataset& data, const LocationFamily& family,
                          const ParamBall& ball, const FitOptions& opts,
                          const MixtureParams* warm_start = nullptr);

// score(q) - score(q_ref), clamped below at zero (nesting makes the true
// value nonnegative; a negative raw value flags optimizer slack and is
// reported through raw_out).
double lr_statistic(int q, int q_ref, const Dataset& data, const LocationFamily& family,
                    const ParamBall& ball, const FitOptions& opts, double* raw_out = nullptr);

struct LilTrajectory {
    std::vector<long> n;
    std::vector<double> w;  // (score_q - score_qstar) / log log n
    int q = 0;
    int q_star = 0;
};

// One growing sample path (prefix property): W at n_k is computed from the
// first n_k points of a single stream. Entries below 16 are rejected.
LilTrajectory lil_trajectory_mixture(std::uint64_t stream_seed, int q,
                                     const MixtureParams& truth, const LocationFamily& family,
                                     const ParamBall& ball, const std::vector<long>& n_schedule,
                                     const FitOptions& opts);

// Regular nested Gaussian-mean model: f* = N(0,1), null {N(0,1)} against
// {N(theta,1): |theta| <= T}. The MLE is the ball-truncated sample mean, so
// LR_n = n(xbar*that - that^2/2) in closed form.
LilTrajectory lil_trajectory_regular(std::uint64_t stream_seed, double T,
                                     const std::vector<long>& n_schedule);

std::string to_json(const FitResult& fit);

}  // namespace mixsel
