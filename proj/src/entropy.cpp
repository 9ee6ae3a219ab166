#include "mixsel/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mixsel/parallel.hpp"
#include "mixsel/rng.hpp"

namespace mixsel {

namespace {

// uniform on the q-simplex (exponential spacings), deterministic stream
std::vector<double> sample_simplex(Rng& rng, int q) {
    std::vector<double> w(static_cast<std::size_t>(q));
    double s = 0.0;
    for (auto& wi : w) {
        double u = rng.uniform01();
        while (u <= 0.0) u = rng.uniform01();
        wi = -std::log(u);
        s += wi;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        w[i] /= s;
        acc += w[i];
    }
    w.back() = 1.0 - acc;
    return w;
}

double hellinger_to_fstar(const MixtureParams& f, const QuadratureGrid& grid) {
    double acc = 0.0;
    for (long i = 0; i < grid.size(); ++i) {
        const double lf = eval_log_density(f, grid.family, grid.node(i));
        const double r = std::expm1(0.5 * (lf - grid.fstar_log[static_cast<std::size_t>(i)]));
        acc += grid.mass[static_cast<std::size_t>(i)] * r * r;
    }
    return std::sqrt(std::min(acc, 2.0));
}

}  // namespace

double FunctionCloud::diameter_upper_bound() const {
    // twice the max distance to the first row
    double m = 0.0;
    for (long i = 1; i < size(); ++i) m = std::max(m, distance(0, i));
    return 2.0 * m;
}

FunctionCloud sample_class(int q, ClassKind kind, const MixtureParams& fstar,
                           const LocationFamily& family, const ParamBall& ball, double epsilon,
                           std::size_t n_functions, std::uint64_t seed, const QuadratureGrid& grid,
                           int threads, double min_acceptance) {
    if (n_functions < 100) throw std::invalid_argument("need at least 100 functions");
    if (q < 1) throw std::invalid_argument("q must be >= 1");
    if (kind == ClassKind::hellinger_ball && !(epsilon > 0.0))
        throw std::invalid_argument("hellinger ball needs epsilon > 0");
    const int d = family.dim;
    const long m = grid.size();

    FunctionCloud cloud;
    cloud.kind = kind;
    cloud.q = q;
    cloud.epsilon = epsilon;
    cloud.rows.resize(static_cast<long>(n_functions), m);
    cloud.params.resize(n_functions);
    cloud.h_values.resize(n_functions);

    std::vector<double> root_mass(static_cast<std::size_t>(m));
    for (long i = 0; i < m; ++i)
        root_mass[static_cast<std::size_t>(i)] = std::sqrt(grid.mass[static_cast<std::size_t>(i)]);

    const std::size_t budget_per_fn = static_cast<std::size_t>(std::ceil(2.0 / min_acceptance));
    std::vector<std::size_t> tries(n_functions, 0);
    std::vector<std::uint8_t> failed(n_functions, 0);

    parallel_for(n_functions, threads, [&](std::size_t r) {
        Rng rng(stream_seed(seed, "class", r));
        for (std::size_t attempt = 0; attempt < budget_per_fn; ++attempt) {
            ++tries[r];
            auto w = sample_simplex(rng, q);
            std::vector<double> locs(static_cast<std::size_t>(q) * d);
            for (auto& t : locs) t = rng.uniform(-ball.radius, ball.radius);
            if (d > 1) {  // resample coordinates outside the euclidean ball
                bool ok = true;
                for (int i = 0; i < q; ++i) {
                    double sq = 0.0;
                    for (int k = 0; k < d; ++k) {
                        const double v = locs[static_cast<std::size_t>(i) * d + k];
                        sq += v * v;
                    }
                    if (sq > ball.radius * ball.radius) ok = false;
                }
                if (!ok) continue;
            }
            MixtureParams f(w, locs, d);
            const double h = hellinger_to_fstar(f, grid);
            if (kind == ClassKind::hellinger_ball) {
                if (h > epsilon) continue;
            } else {
                if (h <= grid.tolerance()) continue;  // weighted class excludes f*
            }
            // accepted: evaluate the class member on the grid
            cloud.h_values[r] = h;
            cloud.params[r] = w;
            cloud.params[r].insert(cloud.params[r].end(), locs.begin(), locs.end());
            for (long i = 0; i < m; ++i) {
                const double lf = eval_log_density(f, family, grid.node(i));
                const double e = std::expm1(0.5 * (lf - grid.fstar_log[static_cast<std::size_t>(i)]));
                double v;
                if (kind == ClassKind::hellinger_ball) {
                    v = 1.0 + e;  // sqrt(f/f*)
                } else {
                    v = e / h;  // d_f
                }
                cloud.rows(static_cast<long>(r), i) = v * root_mass[static_cast<std::size_t>(i)];
            }
            return;
        }
        failed[r] = 1;
    });

    std::size_t total_tries = 0;
    for (std::size_t r = 0; r < n_functions; ++r) {
        total_tries += tries[r];
        if (failed[r])
            throw BallTooSmallError("acceptance rate below " + std::to_string(min_acceptance) +
                                    ": the class constraint is unreachable by rejection");
    }
    cloud.acceptance_rate = static_cast<double>(n_functions) / static_cast<double>(total_tries);
    return cloud;
}

std::size_t greedy_packing(const FunctionCloud& cloud, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    const long n = cloud.size();
    std::vector<long> centers;
    for (long i = 0; i < n; ++i) {
        bool separated = true;
        for (long c : centers) {
            if ((cloud.rows.row(i) - cloud.rows.row(c)).norm() < delta) {
                separated = false;
                break;
            }
        }
        if (separated) centers.push_back(i);
    }
    return centers.size();
}

std::size_t greedy_covering(const FunctionCloud& cloud, double delta) {
    // the maximal separated set doubles as a covering at the same scale
    return greedy_packing(cloud, delta);
}

PackingResult packing_curve(const FunctionCloud& cloud, const std::vector<double>& deltas) {
    PackingResult out;
    out.deltas = deltas;
    out.counts.resize(deltas.size());
    for (std::size_t i = 0; i < deltas.size(); ++i) out.counts[i] = greedy_packing(cloud, deltas[i]);
    return out;
}

ExponentFit fit_exponent(const PackingResult& packing) {
    if (packing.deltas.size() < 4) throw std::invalid_argument("fit needs at least 4 delta points");
    bool distinct = false;
    for (std::size_t i = 1; i < packing.counts.size(); ++i)
        if (packing.counts[i] != packing.counts[0]) distinct = true;
    if (!distinct)
        throw InsufficientResolutionError("packing counts identical across the delta grid");

    const std::size_t n = packing.deltas.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(1.0 / packing.deltas[i]);
        const double y = std::log(static_cast<double>(packing.counts[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double nn = static_cast<double>(n);
    const double vxx = sxx - sx * sx / nn;
    const double vxy = sxy - sx * sy / nn;
    const double vyy = syy - sy * sy / nn;
    ExponentFit fit;
    fit.points = n;
    fit.eta_hat = vxy / vxx;
    fit.logK_hat = (sy - fit.eta_hat * sx) / nn;
    fit.r2 = vyy > 0.0 ? vxy * vxy / (vxx * vyy) : 1.0;
    return fit;
}

EntropyCurve entropy_curve(const FunctionCloud& cloud, const std::vector<double>& deltas, int dim) {
    if (cloud.kind == ClassKind::hellinger_ball) {
        for (double d : deltas)
            if (!(d > 0.0 && d <= cloud.epsilon))
                throw std::invalid_argument("delta grid must lie in (0, epsilon]");
    }
    EntropyCurve out;
    out.packing = packing_curve(cloud, deltas);
    out.fit = fit_exponent(out.packing);
    const double ceiling = 18.0 * (dim + 1) * cloud.q + 1.0;
    out.exponent_red_flag = out.fit.eta_hat > ceiling;
    return out;
}

std::vector<double> geometric_deltas(double hi, double lo, int count) {
    if (!(hi > lo && lo > 0.0) || count < 2) throw std::invalid_argument("bad delta grid");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double ratio = std::pow(lo / hi, 1.0 / (count - 1));
    double v = hi;
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = v;
        v *= ratio;
    }
    return out;
}

double discretization_error(const FunctionCloud& cloud, const MixtureParams& fstar,
                            const QuadratureGrid& fine, std::size_t pairs) {
    const long n = cloud.size();
    if (n < 2) return 0.0;
    double worst = 0.0;
    const int d = fine.dim;
    for (std::size_t p = 0; p < pairs; ++p) {
        const long i = static_cast<long>(p % static_cast<std::size_t>(n));
        const long j = static_cast<long>((p * 7 + 1) % static_cast<std::size_t>(n));
        if (i == j) continue;
        const double coarse = cloud.distance(i, j);
        // rebuild both functions on the fine grid
        auto build = [&](long row) {
            const auto& pr = cloud.params[static_cast<std::size_t>(row)];
            std::vector<double> w(pr.begin(), pr.begin() + cloud.q);
            std::vector<double> locs(pr.begin() + cloud.q, pr.end());
            return MixtureParams(w, locs, d);
        };
        MixtureParams fi = build(i);
        MixtureParams fj = build(j);
        const double hi = hellinger_to_fstar(fi, fine);
        const double hj = hellinger_to_fstar(fj, fine);
        double acc = 0.0;
        for (long k = 0; k < fine.size(); ++k) {
            const double li = eval_log_density(fi, fine.family, fine.node(k));
            const double lj = eval_log_density(fj, fine.family, fine.node(k));
            const double base = fine.fstar_log[static_cast<std::size_t>(k)];
            double vi, vj;
            if (cloud.kind == ClassKind::hellinger_ball) {
                vi = 1.0 + std::expm1(0.5 * (li - base));
                vj = 1.0 + std::expm1(0.5 * (lj - base));
            } else {
                vi = std::expm1(0.5 * (li - base)) / hi;
                vj = std::expm1(0.5 * (lj - base)) / hj;
            }
            acc += fine.mass[static_cast<std::size_t>(k)] * (vi - vj) * (vi - vj);
        }
        worst = std::max(worst, std::abs(std::sqrt(acc) - coarse));
    }
    (void)fstar;
    return worst;
}

LocalGlobalReport check_local_global(int q, const MixtureParams& fstar,
                                     const LocationFamily& family, const ParamBall& ball,
                                     const QuadratureGrid& grid, double R_norm2,
                                     const std::vector<double>& deltas,
                                     const std::vector<double>& rho_over_delta,
                                     std::size_t n_functions, std::uint64_t seed, int threads) {
    if (!(R_norm2 > 0.0)) throw std::invalid_argument("envelope norm must be positive");
    const double ratio_cap = std::min(4.0, 2.0 * R_norm2);
    for (double r : rho_over_delta)
        if (!(r > 0.0) || r >= ratio_cap)
            throw std::invalid_argument("rho/delta must be strictly below 4 ^ 2||R||_2");

    // global weighted-class constants from the packing curve on D_q
    auto dcloud = sample_class(q, ClassKind::weighted_class, fstar, family, ball, 0.0, n_functions,
                               stream_seed(seed, "lg-dq", 0), grid, threads);
    auto gdeltas = geometric_deltas(0.5, 0.05, 6);
    auto gcurve = packing_curve(dcloud, gdeltas);
    auto gfit = fit_exponent(gcurve);

    LocalGlobalReport rep;
    rep.q_hat = std::max(1.0, gfit.eta_hat);
    rep.eps0 = gdeltas.front();
    // fit gives log M ~ logK + eta log(1/delta), i.e. C0 = exp(logK/eta);
    // factor 2 converts the packing proxy toward a bracketing constant
    rep.C0 = 2.0 * std::exp(gfit.logK_hat / rep.q_hat);
    rep.R_norm2 = R_norm2;
    rep.C1 = 8.0 * rep.C0 * std::max(1.0, R_norm2 / (4.0 * rep.eps0));

    for (double delta : deltas) {
        auto hcloud = sample_class(q, ClassKind::hellinger_ball, fstar, family, ball, delta,
                                   n_functions, stream_seed(seed, "lg-hball", 0), grid, threads);
        for (double r : rho_over_delta) {
            LocalGlobalPair pair;
            pair.delta = delta;
            pair.rho = r * delta;
            pair.packing = greedy_packing(hcloud, pair.rho);
            pair.bound = std::pow(rep.C1 * delta / pair.rho, rep.q_hat + 1.0);
            pair.ok = static_cast<double>(pair.packing) <= pair.bound;
            rep.all_ok = rep.all_ok && pair.ok;
            rep.pairs.push_back(pair);
        }
    }
    return rep;
}

void write_curve_csv(int q, double epsilon, const PackingResult& packing, const std::string& path,
                     bool append) {
    std::ofstream out(path, append ? std::ios::app : std::ios::out);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    if (!append) out << "q,epsilon,delta,packing_count\n";
    for (std::size_t i = 0; i < packing.deltas.size(); ++i)
        out << q << ',' << epsilon << ',' << packing.deltas[i] << ',' << packing.counts[i] << '\n';
}

void write_fit_csv(int q, const ExponentFit& fit, const std::string& path, bool append) {
    std::ofstream out(path, append ? std::ios::app : std::ios::out);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    if (!append) out << "q,eta_hat,logK_hat,r2\n";
    out << q << ',' << fit.eta_hat << ',' << fit.logK_hat << ',' << fit.r2 << '\n';
}

}  // namespace mixsel
