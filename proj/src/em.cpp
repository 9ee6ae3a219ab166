#include "mixsel/em.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "mixsel/parallel.hpp"
#include "mixsel/rng.hpp"

namespace mixsel {

double log_likelihood(const MixtureParams& mix, const LocationFamily& family,
                      const Dataset& data) {
    if (data.size() < 1) throw std::invalid_argument("dataset is empty");
    double acc = 0.0;
    for (long i = 0; i < data.size(); ++i) acc += eval_log_density(mix, family, data.point(i));
    return acc;
}

namespace {

struct RunOutcome {
    MixtureParams params;
    double loglik = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// k-means++-style location seeds drawn from the data
std::vector<double> kmeanspp_seeds(int q, const Dataset& data, Rng& rng) {
    const int d = data.dim;
    const long n = data.size();
    std::vector<double> centers(static_cast<std::size_t>(q) * d);
    std::vector<double> dist2(static_cast<std::size_t>(n),
                              std::numeric_limits<double>::infinity());
    long first = static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    for (int k = 0; k < d; ++k) centers[static_cast<std::size_t>(k)] = data.point(first)[static_cast<std::size_t>(k)];
    for (int c = 1; c < q; ++c) {
        double total = 0.0;
        const double* prev = centers.data() + static_cast<std::size_t>(c - 1) * d;
        for (long i = 0; i < n; ++i) {
            double sq = 0.0;
            auto x = data.point(i);
            for (int k = 0; k < d; ++k) {
                const double z = x[static_cast<std::size_t>(k)] - prev[k];
                sq += z * z;
            }
            dist2[static_cast<std::size_t>(i)] = std::min(dist2[static_cast<std::size_t>(i)], sq);
            total += dist2[static_cast<std::size_t>(i)];
        }
        long pick = 0;
        if (total > 0.0) {
            const double u = rng.uniform01() * total;
            double cum = 0.0;
            for (long i = 0; i < n; ++i) {
                cum += dist2[static_cast<std::size_t>(i)];
                if (u < cum) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        }
        for (int k = 0; k < d; ++k)
            centers[static_cast<std::size_t>(c) * d + k] = data.point(pick)[static_cast<std::size_t>(k)];
    }
    return centers;
}

RunOutcome em_run(int q, const Dataset& data, const LocationFamily& family, const ParamBall& ball,
                  MixtureParams init, double tol, int max_iter) {
    const int d = family.dim;
    const long n = data.size();
    const double inv2s2 = 0.5 / (family.sigma * family.sigma);
    const double lc = family.log_sup_density();

    MixtureParams params = std::move(init);
    MixtureParams prev = params;
    double ll_prev = -std::numeric_limits<double>::infinity();

    std::vector<double> logw(static_cast<std::size_t>(q));
    std::vector<double> sw(static_cast<std::size_t>(q));
    std::vector<double> sx(static_cast<std::size_t>(q) * d);
    std::vector<double> t(static_cast<std::size_t>(q));

    RunOutcome out;
    int iter = 0;
    for (; iter <= max_iter; ++iter) {
        for (int i = 0; i < q; ++i)
            logw[static_cast<std::size_t>(i)] =
                params.weights[static_cast<std::size_t>(i)] > 0.0
                    ? std::log(params.weights[static_cast<std::size_t>(i)])
                    : -std::numeric_limits<double>::infinity();
        std::fill(sw.begin(), sw.end(), 0.0);
        std::fill(sx.begin(), sx.end(), 0.0);

        double ll = 0.0;
        for (long k = 0; k < n; ++k) {
            auto x = data.point(k);
            double best = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < q; ++i) {
                double sq = 0.0;
                const double* th = params.locations.data() + static_cast<std::size_t>(i) * d;
                for (int m = 0; m < d; ++m) {
                    const double z = x[static_cast<std::size_t>(m)] - th[m];
                    sq += z * z;
                }
                t[static_cast<std::size_t>(i)] = logw[static_cast<std::size_t>(i)] + lc - sq * inv2s2;
                best = std::max(best, t[static_cast<std::size_t>(i)]);
            }
            double denom = 0.0;
            for (int i = 0; i < q; ++i)
                denom += std::exp(t[static_cast<std::size_t>(i)] - best);
            ll += best + std::log(denom);
            for (int i = 0; i < q; ++i) {
                const double r = std::exp(t[static_cast<std::size_t>(i)] - best) / denom;
                sw[static_cast<std::size_t>(i)] += r;
                for (int m = 0; m < d; ++m)
                    sx[static_cast<std::size_t>(i) * d + m] += r * x[static_cast<std::size_t>(m)];
            }
        }

        if (ll < ll_prev) {
            // projected step lost likelihood: keep the previous iterate
            params = prev;
            out.loglik = ll_prev;
            out.converged = false;
            break;
        }
        if (iter > 0 && ll - ll_prev < tol) {
            out.loglik = ll;
            out.converged = true;
            break;
        }
        prev = params;
        ll_prev = ll;
        if (iter == max_iter) {
            out.loglik = ll;
            out.converged = false;
            break;
        }

        // M-step with ball projection
        for (int i = 0; i < q; ++i) {
            const double w = sw[static_cast<std::size_t>(i)];
            params.weights[static_cast<std::size_t>(i)] = w / static_cast<double>(n);
            if (w > 1e-300) {
                std::vector<double> mean(static_cast<std::size_t>(d));
                for (int m = 0; m < d; ++m)
                    mean[static_cast<std::size_t>(m)] = sx[static_cast<std::size_t>(i) * d + m] / w;
                auto proj = project_to_ball(mean, ball);
                for (int m = 0; m < d; ++m)
                    params.locations[static_cast<std::size_t>(i) * d + m] =
                        proj[static_cast<std::size_t>(m)];
            }
        }
        // exact simplex renormalization
        double acc = 0.0;
        for (int i = 0; i + 1 < q; ++i) acc += params.weights[static_cast<std::size_t>(i)];
        params.weights[static_cast<std::size_t>(q - 1)] = 1.0 - acc;
    }
    out.params = std::move(params);
    out.iterations = iter;
    return out;
}

}  // namespace

FitResult fit_constrained(int q, const Dataset& data, const LocationFamily& family,
                          const ParamBall& ball, const FitOptions& opts,
                          const MixtureParams* warm_start) {
    if (q < 1) throw std::invalid_argument("q must be >= 1");
    if (data.size() < 1) throw std::invalid_argument("dataset is empty");
    if (opts.starts < 1) throw std::invalid_argument("need at least one start");
    if (data.dim != family.dim) throw std::invalid_argument("dimension mismatch");
    const int d = family.dim;

    const int data_starts = (opts.starts + 1) / 2;
    const int total = opts.starts + (warm_start != nullptr ? 1 : 0);
    std::vector<RunOutcome> runs(static_cast<std::size_t>(total));

    parallel_for(static_cast<std::size_t>(total), opts.threads, [&](std::size_t s) {
        MixtureParams init;
        if (static_cast<int>(s) == opts.starts) {
            init = *warm_start;
        } else {
            Rng rng(stream_seed(opts.seed, "em-start", s));
            std::vector<double> w(static_cast<std::size_t>(q), 1.0 / q);
            double acc = 0.0;
            for (int i = 0; i + 1 < q; ++i) acc += w[static_cast<std::size_t>(i)];
            w[static_cast<std::size_t>(q - 1)] = 1.0 - acc;
            std::vector<double> locs;
            if (static_cast<int>(s) < data_starts) {
                locs = kmeanspp_seeds(q, data, rng);
                for (int i = 0; i < q; ++i) {
                    std::span<const double> th{locs.data() + static_cast<std::size_t>(i) * d,
                                               static_cast<std::size_t>(d)};
                    auto proj = project_to_ball(th, ball);
                    for (int m = 0; m < d; ++m)
                        locs[static_cast<std::size_t>(i) * d + m] = proj[static_cast<std::size_t>(m)];
                }
            } else {
                locs.resize(static_cast<std::size_t>(q) * d);
                for (auto& v : locs) v = rng.uniform(-ball.radius, ball.radius);
                if (d > 1) {
                    for (int i = 0; i < q; ++i) {
                        std::span<const double> th{locs.data() + static_cast<std::size_t>(i) * d,
                                                   static_cast<std::size_t>(d)};
                        auto proj = project_to_ball(th, ball);
                        for (int m = 0; m < d; ++m)
                            locs[static_cast<std::size_t>(i) * d + m] =
                                proj[static_cast<std::size_t>(m)];
                    }
                }
            }
            init = MixtureParams(std::move(w), std::move(locs), d);
        }
        runs[s] = em_run(q, data, family, ball, std::move(init), opts.tol, opts.max_iter);
    });

    int best = 0;
    for (int s = 1; s < total; ++s)
        if (runs[static_cast<std::size_t>(s)].loglik > runs[static_cast<std::size_t>(best)].loglik)
            best = s;

    FitResult fit;
    fit.params = std::move(runs[static_cast<std::size_t>(best)].params);
    fit.loglik = log_likelihood(fit.params, family, data);  // recomputed, exact
    fit.iterations = runs[static_cast<std::size_t>(best)].iterations;
    fit.converged = runs[static_cast<std::size_t>(best)].converged;
    fit.starts_used = total;
    fit.best_start_index = best;
    return fit;
}

double lr_statistic(int q, int q_ref, const Dataset& data, const LocationFamily& family,
                    const ParamBall& ball, const FitOptions& opts, double* raw_out) {
    if (q < q_ref) throw std::invalid_argument("q must be >= q_ref");
    FitOptions o = opts;
    o.seed = stream_seed(opts.seed, "fit-q", static_cast<std::uint64_t>(q));
    const double score_q = fit_constrained(q, data, family, ball, o).loglik;
    o.seed = stream_seed(opts.seed, "fit-q", static_cast<std::uint64_t>(q_ref));
    const double score_ref = fit_constrained(q_ref, data, family, ball, o).loglik;
    const double raw = score_q - score_ref;
    if (raw_out != nullptr) *raw_out = raw;
    return std::max(0.0, raw);
}

namespace {

void check_schedule(const std::vector<long>& n_schedule) {
    if (n_schedule.empty()) throw std::invalid_argument("empty n schedule");
    long prev = 0;
    for (long n : n_schedule) {
        if (n < 16) throw std::invalid_argument("schedule entries below 16 are rejected");
        if (n <= prev) throw std::invalid_argument("schedule must be strictly increasing");
        prev = n;
    }
}

}  // namespace

LilTrajectory lil_trajectory_mixture(std::uint64_t stream_seed_, int q,
                                     const MixtureParams& truth, const LocationFamily& family,
                                     const ParamBall& ball, const std::vector<long>& n_schedule,
                                     const FitOptions& opts) {
    check_schedule(n_schedule);
    const int q_star = truth.order();
    if (q < q_star) throw std::invalid_argument("q must be >= q*");
    Dataset path = sample(truth, family, n_schedule.back(), stream_seed_);

    LilTrajectory traj;
    traj.q = q;
    traj.q_star = q_star;
    MixtureParams warm_q;
    MixtureParams warm_s;
    bool have_warm = false;
    for (long nk : n_schedule) {
        Dataset pre = path.prefix(nk);
        FitOptions o = opts;
        o.seed = stream_seed(opts.seed, "lil-q", static_cast<std::uint64_t>(nk));
        auto fit_q = fit_constrained(q, pre, family, ball, o, have_warm ? &warm_q : nullptr);
        o.seed = stream_seed(opts.seed, "lil-qstar", static_cast<std::uint64_t>(nk));
        auto fit_s = fit_constrained(q_star, pre, family, ball, o, have_warm ? &warm_s : nullptr);
        warm_q = fit_q.params;
        warm_s = fit_s.params;
        have_warm = true;
        const double lr = std::max(0.0, fit_q.loglik - fit_s.loglik);
        traj.n.push_back(nk);
        traj.w.push_back(lr / std::log(std::log(static_cast<double>(nk))));
    }
    return traj;
}

LilTrajectory lil_trajectory_regular(std::uint64_t stream_seed_, double T,
                                     const std::vector<long>& n_schedule) {
    check_schedule(n_schedule);
    if (!(T > 0.0)) throw std::invalid_argument("ball radius must be positive");
    Rng rng(stream_seed(stream_seed_, "regular-path", 0));
    LilTrajectory traj;
    traj.q = 1;
    traj.q_star = 0;
    double sum = 0.0;
    long have = 0;
    for (long nk : n_schedule) {
        for (; have < nk; ++have) sum += rng.normal();
        const double xbar = sum / static_cast<double>(nk);
        const double that = std::clamp(xbar, -T, T);
        const double lr = static_cast<double>(nk) * (xbar * that - 0.5 * that * that);
        traj.n.push_back(nk);
        traj.w.push_back(lr / std::log(std::log(static_cast<double>(nk))));
    }
    return traj;
}

std::string to_json(const FitResult& fit) {
    nlohmann::json j;
    j["q"] = fit.params.order();
    j["weights"] = fit.params.weights;
    std::vector<std::vector<double>> locs;
    for (int i = 0; i < fit.params.order(); ++i) {
        auto th = fit.params.location(i);
        locs.emplace_back(th.begin(), th.end());
    }
    j["locations"] = locs;
    j["loglik"] = fit.loglik;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["starts_used"] = fit.starts_used;
    j["best_start_index"] = fit.best_start_index;
    return j.dump(2);
}

}  // namespace mixsel
