#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixsel/common.hpp"

namespace mixsel {

enum class FamilyKind { gaussian_standard, gaussian_scaled };

// Location family f_theta(x) = f0(x - theta). Only Gaussian bases ship;
// the interface is closed-form-derivative based (f0, D1, D2, D3 analytic)
// because the envelope and entropy machinery needs exact derivative
// suprema, not finite differences.
struct LocationFamily {
    FamilyKind kind = FamilyKind::gaussian_standard;
    int dim = 1;
    double sigma = 1.0;

    static LocationFamily gaussian(int dim);
    static LocationFamily gaussian_scaled(int dim, double sigma);

    // z = x - theta
    double log_f0(std::span<const double> z) const;
    double f0(std::span<const double> z) const;
    // componentwise suprema of |D1|, |D2|, |D3| over index pairs at fixed z
    double max_abs_d1(std::span<const double> z) const;
    double max_abs_d2(std::span<const double> z) const;
    double max_abs_d3(std::span<const double> z) const;

    double sup_density() const;      // f0(0)
    double log_sup_density() const;  // log f0(0)
};

// Weights on the simplex plus component locations; the element of the
// q-component model class.
struct MixtureParams {
    std::vector<double> weights;    // q entries, nonnegative, sum 1 (1e-12)
    std::vector<double> locations;  // q*d, row-major

    MixtureParams() = default;
    MixtureParams(std::vector<double> w, std::vector<double> locs, int dim);

    int order() const { return static_cast<int>(weights.size()); }
    int dim() const { return dim_; }
    std::span<const double> location(int i) const {
        return {locations.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
    }
    static MixtureParams single(std::vector<double> location);
    static MixtureParams two_component(double w1, double theta1, double theta2);

  private:
    int dim_ = 1;
};

struct ParamBall {
    double radius = 0.0;  // >= 0; locations constrained to ||theta|| <= radius
};

// T(n) schedules used to grow the parameter ball with the sample size.
struct SieveSchedule {
    enum class Rule { constant, sqrt_loglog, sqrt_log_little_o };
    Rule rule = Rule::constant;
    double c = 1.0;        // constant value, or multiplier for the two growth rules
    double exponent = 0.4; // sqrt_log_little_o: T(n) = c * (log n)^exponent, exponent < 1/2

    static SieveSchedule constant(double T);
    static SieveSchedule sqrt_loglog(double c);
    static SieveSchedule sqrt_log_little_o(double c, double exponent);
};

struct Dataset {
    enum class Provenance { simulated, ingested };
    std::vector<double> points;  // n*d row-major
    int dim = 1;
    Provenance provenance = Provenance::simulated;
    std::uint64_t seed = 0;
    std::string path;

    long size() const { return static_cast<long>(points.size()) / dim; }
    std::span<const double> point(long i) const {
        return {points.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    Dataset prefix(long n) const;
};

// log sum_i pi_i f0(x - theta_i), log-sum-exp stabilized
double eval_log_density(const MixtureParams& mix, const LocationFamily& family,
                        std::span<const double> x);

Dataset sample(const MixtureParams& mix, const LocationFamily& family, long n,
               std::uint64_t seed);

std::vector<double> project_to_ball(std::span<const double> theta, const ParamBall& ball);

double sieve_radius(const SieveSchedule& sched, long n);

// Dataset CSV: one observation per row, exactly d comma-separated numeric
// columns, no header; values written with 17 significant digits.
void write_csv(const Dataset& data, const std::string& path);
Dataset read_csv(const std::string& path, int dim);

}  // namespace mixsel
