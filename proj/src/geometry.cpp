#include "mixsel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mixsel/parallel.hpp"
#include "mixsel/rng.hpp"

namespace mixsel {

namespace {

// Haar-distributed rotation via QR of a Gaussian matrix with sign fix.
// SO(1) is trivial, so d = 1 always yields u = 1.
std::vector<double> random_rotation(int d, Rng& rng) {
    if (d == 1) return {1.0};
    std::vector<double> a(static_cast<std::size_t>(d) * d);
    for (auto& v : a) v = rng.normal();
    // Gram-Schmidt on rows
    for (int i = 0; i < d; ++i) {
        double* ri = a.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < i; ++j) {
            const double* rj = a.data() + static_cast<std::size_t>(j) * d;
            double proj = 0.0;
            for (int k = 0; k < d; ++k) proj += ri[k] * rj[k];
            for (int k = 0; k < d; ++k) ri[k] -= proj * rj[k];
        }
        double nrm = 0.0;
        for (int k = 0; k < d; ++k) nrm += ri[k] * ri[k];
        nrm = std::sqrt(nrm);
        for (int k = 0; k < d; ++k) ri[k] /= nrm;
    }
    return a;
}

double golden_max(const std::function<double(double)>& g, double a, double b) {
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = g(x1);
        }
    }
    return std::max(f1, f2);
}

// sup of g over [-T, T]: coarse scan for the basin, golden-section refine
double ray_sup(const std::function<double(double)>& g, double T) {
    const int scan = 129;
    double best = -1.0;
    int besti = 0;
    for (int i = 0; i < scan; ++i) {
        const double t = -T + 2.0 * T * i / (scan - 1);
        const double v = g(t);
        if (v > best) {
            best = v;
            besti = i;
        }
    }
    const double step = 2.0 * T / (scan - 1);
    const double a = std::max(-T, -T + step * (besti - 1));
    const double b = std::min(T, -T + step * (besti + 1));
    return std::max(best, golden_max(g, a, b));
}

double lp_norm_on_grid(const QuadratureGrid& grid,
                       const std::function<double(std::span<const double>)>& g, double p) {
    double acc = 0.0;
    double peak = 0.0;
    double boundary = 0.0;
    const double rim = 0.98 * grid.truncation_radius;
    for (long i = 0; i < grid.size(); ++i) {
        const double v = std::pow(std::abs(g(grid.node(i))), p);
        const double term = grid.mass[static_cast<std::size_t>(i)] * v;
        acc += term;
        peak = std::max(peak, term);
        bool on_rim = false;
        for (double c : grid.node(i))
            if (std::abs(c) > rim) on_rim = true;
        if (on_rim) boundary = std::max(boundary, term);
    }
    if (peak > 0.0 && boundary > 1e-8 * peak)
        throw GridTooSmallError("envelope norm integrand does not vanish at grid boundary");
    return std::pow(acc, 1.0 / p);
}

}  // namespace

int Partition::region_of(std::span<const double> theta) const {
    for (int i = 0; i < qstar; ++i) {
        auto c = center(i);
        double sq = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double z = theta[static_cast<std::size_t>(k)] - c[static_cast<std::size_t>(k)];
            sq += z * z;
        }
        if (sq < radius * radius || std::isinf(radius)) return i + 1;
    }
    return 0;
}

bool Partition::projections_disjoint() const {
    if (qstar == 1) return true;
    for (int k = 0; k < dim; ++k) {
        const double* u = directions.data() + static_cast<std::size_t>(k) * dim;
        for (int i = 0; i < qstar; ++i)
            for (int j = i + 1; j < qstar; ++j) {
                double pi = 0.0, pj = 0.0;
                for (int m = 0; m < dim; ++m) {
                    pi += center(i)[static_cast<std::size_t>(m)] * u[m];
                    pj += center(j)[static_cast<std::size_t>(m)] * u[m];
                }
                // interval disjointness of projections +- radius
                if (std::abs(pi - pj) <= 2.0 * radius) return false;
            }
    }
    return true;
}

Partition build_partition(const MixtureParams& fstar, std::uint64_t seed) {
    const int d = fstar.dim();
    const int q = fstar.order();
    for (int i = 0; i < q; ++i) {
        if (!(fstar.weights[static_cast<std::size_t>(i)] > 0.0))
            throw InvalidModelError("f* must have strictly positive weights");
        for (int j = i + 1; j < q; ++j) {
            double sq = 0.0;
            for (int k = 0; k < d; ++k) {
                const double z = fstar.location(i)[static_cast<std::size_t>(k)] -
                                 fstar.location(j)[static_cast<std::size_t>(k)];
                sq += z * z;
            }
            if (sq == 0.0) throw InvalidModelError("f* has duplicate component locations");
        }
    }

    Partition part;
    part.dim = d;
    part.qstar = q;
    part.centers = fstar.locations;
    if (q == 1) {
        part.directions.assign(static_cast<std::size_t>(d) * d, 0.0);
        for (int k = 0; k < d; ++k) part.directions[static_cast<std::size_t>(k) * d + k] = 1.0;
        part.radius = std::numeric_limits<double>::infinity();
        part.separation = std::numeric_limits<double>::infinity();
        return part;
    }

    Rng rng(stream_seed(seed, "partition", 0));
    // a single draw works almost surely; retries guard exact collisions
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto rot = random_rotation(d, rng);
        double eps = std::numeric_limits<double>::infinity();
        for (int k = 0; k < d; ++k) {
            const double* u = rot.data() + static_cast<std::size_t>(k) * d;
            for (int i = 0; i < q; ++i)
                for (int j = i + 1; j < q; ++j) {
                    double p = 0.0;
                    for (int m = 0; m < d; ++m)
                        p += (fstar.location(i)[static_cast<std::size_t>(m)] -
                              fstar.location(j)[static_cast<std::size_t>(m)]) *
                             u[m];
                    eps = std::min(eps, std::abs(p));
                }
        }
        if (eps > 0.0) {
            part.directions = rot;
            part.separation = eps;
            part.radius = eps / 4.0;
            return part;
        }
    }
    throw InvalidModelError("could not separate center projections after 64 rotations");
}

double pseudodistance(const MixtureParams& f, const MixtureParams& fstar, const Partition& part) {
    if (f.dim() != part.dim || fstar.dim() != part.dim)
        throw std::invalid_argument("dimension mismatch");
    const int d = part.dim;
    const int q = f.order();
    const int qs = part.qstar;

    double stray = 0.0;
    std::vector<double> mass(static_cast<std::size_t>(qs), 0.0);
    std::vector<double> first(static_cast<std::size_t>(qs) * d, 0.0);
    std::vector<double> second(static_cast<std::size_t>(qs), 0.0);

    for (int j = 0; j < q; ++j) {
        const double pj = f.weights[static_cast<std::size_t>(j)];
        auto th = f.location(j);
        const int r = part.region_of(th);
        if (r == 0) {
            stray += pj;
            continue;
        }
        const int i = r - 1;
        auto c = part.center(i);
        mass[static_cast<std::size_t>(i)] += pj;
        double sq = 0.0;
        for (int k = 0; k < d; ++k) {
            const double z = th[static_cast<std::size_t>(k)] - c[static_cast<std::size_t>(k)];
            first[static_cast<std::size_t>(i) * d + k] += pj * z;
            sq += z * z;
        }
        second[static_cast<std::size_t>(i)] += pj * sq;
    }

    double total = stray;
    for (int i = 0; i < qs; ++i) {
        total += std::abs(mass[static_cast<std::size_t>(i)] -
                          fstar.weights[static_cast<std::size_t>(i)]);
        double sq = 0.0;
        for (int k = 0; k < d; ++k) {
            const double v = first[static_cast<std::size_t>(i) * d + k];
            sq += v * v;
        }
        total += std::sqrt(sq) + 0.5 * second[static_cast<std::size_t>(i)];
    }
    return total;
}

double EnvelopeSet::h0(std::span<const double> x) const {
    auto proj = project_to_ball(x, ball);
    std::vector<double> z(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) z[k] = x[k] - proj[k];
    return family.f0(z) / std::exp(eval_log_density(fstar, family, x));
}

namespace {

double ray_envelope(const EnvelopeSet& env, std::span<const double> x,
                    double (LocationFamily::*deriv)(std::span<const double>) const) {
    const int d = env.family.dim;
    std::vector<double> dir(static_cast<std::size_t>(d), 0.0);
    const double r = norm(x);
    if (r > 0.0) {
        for (int k = 0; k < d; ++k) dir[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)] / r;
    } else {
        dir[0] = 1.0;
    }
    std::vector<double> z(static_cast<std::size_t>(d));
    auto g = [&](double t) {
        for (int k = 0; k < d; ++k)
            z[static_cast<std::size_t>(k)] =
                x[static_cast<std::size_t>(k)] - t * dir[static_cast<std::size_t>(k)];
        return (env.family.*deriv)(z);
    };
    const double sup = ray_sup(g, env.ball.radius);
    return sup / std::exp(eval_log_density(env.fstar, env.family, x));
}

}  // namespace

double EnvelopeSet::h1(std::span<const double> x) const {
    return ray_envelope(*this, x, &LocationFamily::max_abs_d1);
}
double EnvelopeSet::h2(std::span<const double> x) const {
    return ray_envelope(*this, x, &LocationFamily::max_abs_d2);
}
double EnvelopeSet::h3(std::span<const double> x) const {
    return ray_envelope(*this, x, &LocationFamily::max_abs_d3);
}

EnvelopeSet build_envelopes(const MixtureParams& fstar, const LocationFamily& family,
                            const ParamBall& ball, const QuadratureGrid& grid) {
    if (!(ball.radius > 0.0)) throw std::invalid_argument("envelope ball radius must be positive");
    EnvelopeSet env;
    env.fstar = fstar;
    env.family = family;
    env.ball = ball;
    env.norm_h0_4 = lp_norm_on_grid(grid, [&](std::span<const double> x) { return env.h0(x); }, 4.0);
    env.norm_h1_4 = lp_norm_on_grid(grid, [&](std::span<const double> x) { return env.h1(x); }, 4.0);
    env.norm_h2_4 = lp_norm_on_grid(grid, [&](std::span<const double> x) { return env.h2(x); }, 4.0);
    env.norm_h3_2 = lp_norm_on_grid(grid, [&](std::span<const double> x) { return env.h3(x); }, 2.0);
    for (double v : {env.norm_h0_4, env.norm_h1_4, env.norm_h2_4, env.norm_h3_2})
        if (!std::isfinite(v)) throw InvalidModelError("envelope norm not finite");
    return env;
}

double SDEnvelope::S(std::span<const double> x) const {
    return (env.h0(x) + env.h1(x) + env.h2(x)) * env.family.dim / cstar;
}

SDEnvelope envelope_S_D(const EnvelopeSet& env, double cstar, const QuadratureGrid& grid) {
    if (!(cstar > 0.0)) throw std::invalid_argument("cstar must be positive");
    SDEnvelope sd;
    sd.env = env;
    sd.cstar = cstar;
    sd.norm_S_4 = lp_norm_on_grid(grid, [&](std::span<const double> x) { return sd.S(x); }, 4.0);
    sd.norm_D_2 = lp_norm_on_grid(grid, [&](std::span<const double> x) { return sd.D(x); }, 2.0);
    return sd;
}

ParamBox ParamBox::unit_figure1() {
    ParamBox box;
    box.q = 2;
    box.dim = 1;
    box.lo = {0.0, 0.0, 0.0};
    box.hi = {1.0, 1.0, 1.0};
    return box;
}

namespace {

// nullopt-free: returns false when the draw leaves the simplex
bool box_to_mixture(const ParamBox& box, std::span<const double> coords, MixtureParams& out) {
    std::vector<double> w(static_cast<std::size_t>(box.q));
    double acc = 0.0;
    for (int i = 0; i + 1 < box.q; ++i) {
        w[static_cast<std::size_t>(i)] = coords[static_cast<std::size_t>(i)];
        acc += coords[static_cast<std::size_t>(i)];
    }
    if (acc > 1.0) return false;
    w[static_cast<std::size_t>(box.q - 1)] = 1.0 - acc;
    std::vector<double> locs(coords.begin() + (box.q - 1), coords.end());
    out = MixtureParams(std::move(w), std::move(locs), box.dim);
    return true;
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

GeometryReport ratio_study(const MixtureParams& fstar, const LocationFamily& family,
                           const Partition& part, const ParamBox& box, std::size_t n_samples,
                           const QuadratureGrid& grid, std::uint64_t seed, double level_eps,
                           int level_res, int threads) {
    if (n_samples < 1000) throw std::invalid_argument("ratio study needs at least 1000 samples");
    if (box.dim != family.dim) throw std::invalid_argument("dimension mismatch");
    const int nc = box.coords();

    GeometryReport rep;
    rep.n_samples = n_samples;
    rep.samples.resize(n_samples);
    std::vector<std::uint8_t> bad(n_samples, 0);  // 1 = simplex reject, 2 = 0/0 excluded

    parallel_for(n_samples, threads, [&](std::size_t i) {
        Rng rng(stream_seed(seed, "ratio", i));
        std::vector<double> coords(static_cast<std::size_t>(nc));
        for (int k = 0; k < nc; ++k)
            coords[static_cast<std::size_t>(k)] =
                rng.uniform(box.lo[static_cast<std::size_t>(k)], box.hi[static_cast<std::size_t>(k)]);
        MixtureParams f;
        if (!box_to_mixture(box, coords, f)) {
            bad[i] = 1;
            return;
        }
        RatioSample s;
        s.params = coords;
        s.h = hellinger_to_fstar(f, grid);
        s.N = pseudodistance(f, fstar, part);
        if (s.N <= 1e-14 || s.h <= grid.tolerance()) {
            bad[i] = 2;
            rep.samples[i] = std::move(s);
            return;
        }
        s.ratio = s.h / s.N;
        rep.samples[i] = std::move(s);
    });

    std::vector<RatioSample> kept;
    kept.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (bad[i] == 1) {
            ++rep.rejected;
        } else if (bad[i] == 2) {
            ++rep.excluded;
        } else {
            kept.push_back(std::move(rep.samples[i]));
        }
    }
    rep.samples = std::move(kept);
    if (rep.samples.empty()) throw InvalidModelError("no valid ratio samples");

    std::vector<double> ratios;
    ratios.reserve(rep.samples.size());
    for (const auto& s : rep.samples) ratios.push_back(s.ratio);
    std::sort(ratios.begin(), ratios.end());
    const auto quant = [&](double p) {
        const double idx = p * (static_cast<double>(ratios.size()) - 1.0);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min(lo + 1, ratios.size() - 1);
        const double frac = idx - static_cast<double>(lo);
        return ratios[lo] * (1.0 - frac) + ratios[hi] * frac;
    };
    rep.r_min = ratios.front();
    rep.r_max = ratios.back();
    rep.q05 = quant(0.05);
    rep.q25 = quant(0.25);
    rep.q50 = quant(0.50);
    rep.q75 = quant(0.75);
    rep.q95 = quant(0.95);

    if (level_res > 1 && level_eps > 0.0) {
        if (nc > 3) throw std::invalid_argument("level-set lattice limited to 3 box coordinates");
        rep.level_res = level_res;
        rep.level_eps = level_eps;
        std::size_t total = 1;
        for (int k = 0; k < nc; ++k) total *= static_cast<std::size_t>(level_res);
        rep.level_h.assign(total, 0);
        rep.level_N.assign(total, 0);
        rep.level_h_val.assign(total, std::numeric_limits<float>::quiet_NaN());
        rep.level_N_val.assign(total, std::numeric_limits<float>::quiet_NaN());
        parallel_for(total, threads, [&](std::size_t idx) {
            std::vector<double> coords(static_cast<std::size_t>(nc));
            std::size_t rem = idx;
            for (int k = nc - 1; k >= 0; --k) {
                const std::size_t j = rem % static_cast<std::size_t>(level_res);
                rem /= static_cast<std::size_t>(level_res);
                coords[static_cast<std::size_t>(k)] =
                    box.lo[static_cast<std::size_t>(k)] +
                    (box.hi[static_cast<std::size_t>(k)] - box.lo[static_cast<std::size_t>(k)]) *
                        static_cast<double>(j) / (level_res - 1);
            }
            MixtureParams f;
            if (!box_to_mixture(box, coords, f)) return;
            const double h = hellinger_to_fstar(f, grid);
            const double N = pseudodistance(f, fstar, part);
            rep.level_h_val[idx] = static_cast<float>(h);
            rep.level_N_val[idx] = static_cast<float>(N);
            rep.level_h[idx] = h <= level_eps ? 1 : 0;
            rep.level_N[idx] = N <= level_eps ? 1 : 0;
        });
    }
    return rep;
}

namespace {

void write_box_header(std::ofstream& out, const ParamBox& box) {
    if (box.q == 2) {
        out << "p";
    } else {
        for (int i = 1; i < box.q; ++i) out << "p" << i << (i + 1 < box.q ? "," : "");
    }
    for (int i = 1; i <= box.q * box.dim; ++i) out << ",theta" << i;
}

}  // namespace

void write_ratio_csv(const GeometryReport& rep, const ParamBox& box, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_box_header(out, box);
    out << ",h,N,ratio\n";
    char buf[64];
    for (const auto& s : rep.samples) {
        for (std::size_t k = 0; k < s.params.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", s.params[k]);
            out << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", s.h, s.N, s.ratio);
        out << buf << '\n';
    }
}

void write_levelset_csv(const GeometryReport& rep, const ParamBox& box, bool h_set,
                        const std::string& path) {
    const auto& members = h_set ? rep.level_h : rep.level_N;
    if (members.empty()) throw std::invalid_argument("report carries no level-set lattice");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_box_header(out, box);
    out << ",member\n";
    const int nc = box.coords();
    const int res = rep.level_res;
    char buf[64];
    for (std::size_t idx = 0; idx < members.size(); ++idx) {
        std::size_t rem = idx;
        double coords[3] = {0, 0, 0};
        for (int k = nc - 1; k >= 0; --k) {
            const std::size_t j = rem % static_cast<std::size_t>(res);
            rem /= static_cast<std::size_t>(res);
            coords[k] = box.lo[static_cast<std::size_t>(k)] +
                        (box.hi[static_cast<std::size_t>(k)] - box.lo[static_cast<std::size_t>(k)]) *
                            static_cast<double>(j) / (res - 1);
        }
        for (int k = 0; k < nc; ++k) {
            std::snprintf(buf, sizeof buf, "%.10g", coords[k]);
            out << buf << ',';
        }
        out << static_cast<int>(members[idx]) << '\n';
    }
}

}  // namespace mixsel
