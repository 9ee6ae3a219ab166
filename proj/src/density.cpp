#include "mixsel/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "mixsel/rng.hpp"

namespace mixsel {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

LocationFamily LocationFamily::gaussian(int dim) {
    if (dim < 1) throw std::invalid_argument("dim must be positive");
    return LocationFamily{FamilyKind::gaussian_standard, dim, 1.0};
}

LocationFamily LocationFamily::gaussian_scaled(int dim, double sigma) {
    if (dim < 1) throw std::invalid_argument("dim must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    return LocationFamily{FamilyKind::gaussian_scaled, dim, sigma};
}

double LocationFamily::log_f0(std::span<const double> z) const {
    const double s2 = sigma * sigma;
    return -0.5 * dim * (kLog2Pi + 2.0 * std::log(sigma)) - 0.5 * squared_norm(z) / s2;
}

double LocationFamily::f0(std::span<const double> z) const { return std::exp(log_f0(z)); }

// d f_theta / d theta_i = (z_i / s2) f0(z) at z = x - theta
double LocationFamily::max_abs_d1(std::span<const double> z) const {
    const double s2 = sigma * sigma;
    double m = 0.0;
    for (double zi : z) m = std::max(m, std::abs(zi));
    return m / s2 * f0(z);
}

// d2 f / d theta_i d theta_j = (z_i z_j / s4 - delta_ij / s2) f0(z)
double LocationFamily::max_abs_d2(std::span<const double> z) const {
    const double s2 = sigma * sigma;
    const double s4 = s2 * s2;
    double m = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = i; j < z.size(); ++j) {
            double v = z[i] * z[j] / s4 - (i == j ? 1.0 / s2 : 0.0);
            m = std::max(m, std::abs(v));
        }
    return m * f0(z);
}

// d3 f = (z_i z_j z_k / s6 - (d_ij z_k + d_ik z_j + d_jk z_i) / s4) f0(z)
double LocationFamily::max_abs_d3(std::span<const double> z) const {
    const double s2 = sigma * sigma;
    const double s4 = s2 * s2;
    const double s6 = s4 * s2;
    double m = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = i; j < z.size(); ++j)
            for (std::size_t k = j; k < z.size(); ++k) {
                double v = z[i] * z[j] * z[k] / s6;
                if (i == j) v -= z[k] / s4;
                if (i == k) v -= z[j] / s4;
                if (j == k) v -= z[i] / s4;
                m = std::max(m, std::abs(v));
            }
    return m * f0(z);
}

double LocationFamily::sup_density() const { return std::exp(log_sup_density()); }

double LocationFamily::log_sup_density() const {
    return -0.5 * dim * (kLog2Pi + 2.0 * std::log(sigma));
}

MixtureParams::MixtureParams(std::vector<double> w, std::vector<double> locs, int dim)
    : weights(std::move(w)), locations(std::move(locs)), dim_(dim) {
    if (weights.empty()) throw std::invalid_argument("mixture needs at least one component");
    if (dim_ < 1) throw std::invalid_argument("dim must be positive");
    if (locations.size() != weights.size() * static_cast<std::size_t>(dim_))
        throw std::invalid_argument("locations shape mismatch");
    double sum = 0.0;
    for (double wi : weights) {
        if (!(wi >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
        sum += wi;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to 1");
    if (!all_finite(locations)) throw std::invalid_argument("locations must be finite");
}

MixtureParams MixtureParams::single(std::vector<double> location) {
    const int d = static_cast<int>(location.size());
    return MixtureParams({1.0}, std::move(location), d);
}

MixtureParams MixtureParams::two_component(double w1, double theta1, double theta2) {
    return MixtureParams({w1, 1.0 - w1}, {theta1, theta2}, 1);
}

SieveSchedule SieveSchedule::constant(double T) {
    if (!(T > 0.0)) throw std::invalid_argument("constant sieve radius must be positive");
    return {Rule::constant, T, 0.0};
}

SieveSchedule SieveSchedule::sqrt_loglog(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("sieve multiplier must be positive");
    return {Rule::sqrt_loglog, c, 0.0};
}

SieveSchedule SieveSchedule::sqrt_log_little_o(double c, double exponent) {
    if (!(c > 0.0)) throw std::invalid_argument("sieve multiplier must be positive");
    if (!(exponent > 0.0 && exponent < 0.5))
        throw std::invalid_argument("little-o exponent must lie in (0, 1/2)");
    return {Rule::sqrt_log_little_o, c, exponent};
}

Dataset Dataset::prefix(long n) const {
    if (n < 1 || n > size()) throw std::invalid_argument("prefix length out of range");
    Dataset out = *this;
    out.points.resize(static_cast<std::size_t>(n) * dim);
    return out;
}

double eval_log_density(const MixtureParams& mix, const LocationFamily& family,
                        std::span<const double> x) {
    if (static_cast<int>(x.size()) != family.dim || mix.dim() != family.dim)
        throw std::invalid_argument("dimension mismatch");
    if (!all_finite(x)) throw std::invalid_argument("point must be finite");
    const int q = mix.order();
    const int d = family.dim;
    const double inv2s2 = 0.5 / (family.sigma * family.sigma);
    const double lc = family.log_sup_density();
    // single-pass log-sum-exp with running rescale; no scratch allocation
    double best = -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (int i = 0; i < q; ++i) {
        const double w = mix.weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const double* th = mix.locations.data() + static_cast<std::size_t>(i) * d;
        double sq = 0.0;
        for (int k = 0; k < d; ++k) {
            const double z = x[static_cast<std::size_t>(k)] - th[k];
            sq += z * z;
        }
        const double t = std::log(w) + lc - sq * inv2s2;
        if (t <= best) {
            acc += std::exp(t - best);
        } else {
            acc = acc * std::exp(best - t) + 1.0;
            best = t;
        }
    }
    return best + std::log(acc);
}

Dataset sample(const MixtureParams& mix, const LocationFamily& family, long n,
               std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample size must be at least 1");
    if (mix.dim() != family.dim) throw std::invalid_argument("dimension mismatch");
    Rng rng(stream_seed(seed, "sample", 0));
    const int d = family.dim;
    const int q = mix.order();
    Dataset out;
    out.dim = d;
    out.provenance = Dataset::Provenance::simulated;
    out.seed = seed;
    out.points.resize(static_cast<std::size_t>(n) * d);
    for (long i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        int comp = q - 1;
        double cum = 0.0;
        for (int j = 0; j < q; ++j) {
            cum += mix.weights[static_cast<std::size_t>(j)];
            if (u < cum) {
                comp = j;
                break;
            }
        }
        auto th = mix.location(comp);
        for (int k = 0; k < d; ++k)
            out.points[static_cast<std::size_t>(i) * d + k] = th[k] + family.sigma * rng.normal();
    }
    return out;
}

std::vector<double> project_to_ball(std::span<const double> theta, const ParamBall& ball) {
    if (!all_finite(theta)) throw std::invalid_argument("point must be finite");
    std::vector<double> out(theta.begin(), theta.end());
    const double r = norm(theta);
    if (r > ball.radius && r > 0.0) {
        const double scale = ball.radius / r;
        for (double& v : out) v *= scale;
    }
    return out;
}

double sieve_radius(const SieveSchedule& sched, long n) {
    if (n < 1) throw std::invalid_argument("n must be positive");
    switch (sched.rule) {
        case SieveSchedule::Rule::constant:
            return sched.c;
        case SieveSchedule::Rule::sqrt_loglog: {
            if (n < 3) throw std::invalid_argument("loglog sieve needs n >= 3");
            return sched.c * std::sqrt(std::log(std::log(static_cast<double>(n))));
        }
        case SieveSchedule::Rule::sqrt_log_little_o: {
            if (n < 2) throw std::invalid_argument("log sieve needs n >= 2");
            return sched.c * std::pow(std::log(static_cast<double>(n)), sched.exponent);
        }
    }
    throw std::logic_error("unreachable");
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char buf[64];
    const long n = data.size();
    for (long i = 0; i < n; ++i) {
        auto pt = data.point(i);
        for (int k = 0; k < data.dim; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", pt[static_cast<std::size_t>(k)]);
            out << buf;
            if (k + 1 < data.dim) out << ',';
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset read_csv(const std::string& path, int dim) {
    if (dim < 1) throw std::invalid_argument("dim must be positive");
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    Dataset out;
    out.dim = dim;
    out.provenance = Dataset::Provenance::ingested;
    out.path = path;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            if (in.eof()) break;
            throw ParseError("empty row", lineno);
        }
        std::stringstream ss(line);
        std::string cell;
        int cols = 0;
        while (std::getline(ss, cell, ',')) {
            ++cols;
            if (cols > dim) throw ParseError("too many columns", lineno);
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError("non-numeric cell '" + cell + "'", lineno);
            }
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
            if (used != cell.size()) throw ParseError("non-numeric cell '" + cell + "'", lineno);
            if (!std::isfinite(v)) throw ParseError("non-finite value", lineno);
            out.points.push_back(v);
        }
        if (cols != dim) throw ParseError("expected " + std::to_string(dim) + " columns, got " +
                                              std::to_string(cols),
                                          lineno);
    }
    if (out.points.empty()) throw ParseError("no data rows", lineno == 0 ? 1 : lineno);
    return out;
}

}  // namespace mixsel
