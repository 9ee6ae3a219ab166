#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixsel/entropy.hpp"
#include "mixsel/geometry.hpp"
#include "mixsel/order.hpp"

namespace mixsel {

enum class Study { consistency, inconsistency, lil, geometry_figure, entropy_study };

struct ExperimentSpec {
    Study study = Study::consistency;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int threads = 1;
    std::string config_echo;  // normalized JSON of the parsed config

    // order-selection studies
    MixtureParams truth;
    LocationFamily family = LocationFamily::gaussian(1);
    std::vector<long> n_grid;
    int replicates = 100;
    std::vector<std::string> penalty_specs;
    SieveSchedule sieve = SieveSchedule::constant(10.0);
    int q_cap = 5;
    FitOptions fit;

    // lil
    int lil_q = 3;
    double ball_radius = 10.0;
    double regular_T = 10.0;

    // geometry figure
    ParamBox box;
    std::size_t n_samples = 100000;
    double epsilon = 0.05;
    int level_res = 101;
    double grid_step = 0.02;
    double grid_radius = 0.0;
    std::uint64_t seed2 = 0;

    // entropy study
    std::vector<int> q_list;
    double entropy_epsilon = 0.2;
    double delta_hi = 0.2, delta_lo = 0.04;
    int delta_count = 5;
    std::size_t n_functions = 800;
};

// Parses and schema-validates a config document; unknown keys are rejected
// with their names listed in the exception message.
ExperimentSpec parse_config(const std::string& json_text);
std::string study_name(Study s);

struct ReplicateRecord {
    int replicate = 0;
    std::uint64_t seed = 0;
    long n = 0;
    std::vector<int> q_hat;        // one per penalty
    std::vector<double> scores;    // per q
    double wall_ms = 0.0;
};

struct SummaryRow {
    std::string study;
    long n = 0;
    std::string penalty_id;
    double frac_under = 0.0, frac_correct = 0.0, frac_over = 0.0;
    int replicates = 0;
};

struct SummaryTable {
    std::vector<SummaryRow> rows;
    std::vector<ReplicateRecord> records;
};

SummaryTable run_consistency(const ExperimentSpec& spec);
// consistency machinery plus a paired overestimation contrast against the
// first bic penalty in the list
SummaryTable run_inconsistency(const ExperimentSpec& spec);

struct LilStats {
    double mixture_max_w = 0.0;
    double mixture_slope = 0.0;
    double mixture_slope_t = 0.0;
    double regular_max_w = 0.0;
    double regular_slope = 0.0;
    double regular_slope_t = 0.0;
    std::vector<LilTrajectory> mixture;
    std::vector<LilTrajectory> regular;
};

LilStats run_lil(const ExperimentSpec& spec);

struct GeometryStudyResult {
    GeometryReport run_a;
    GeometryReport run_b;
    double drift_r_min = 0.0;
    double drift_r_max = 0.0;
    // sandwich {N <= eps/r_max} <= {h <= eps} <= {N <= eps/r_min} on the lattice
    std::size_t sandwich_violations_left = 0;
    std::size_t sandwich_violations_right = 0;
    // the literal-threshold variant {N <= eps*r_min}, reported only
    std::size_t as_written_left_violations = 0;
};

GeometryStudyResult run_geometry_figure(const ExperimentSpec& spec);

struct EntropyStudyResult {
    std::vector<int> qs;
    std::vector<EntropyCurve> curves;
};

EntropyStudyResult run_entropy_study(const ExperimentSpec& spec);

Dataset ingest_csv(const std::string& path, int dim);

// OLS of y on x with the large-sample t statistic for the slope
struct SlopeFit {
    double slope = 0.0;
    double t_stat = 0.0;
};
SlopeFit ols_slope(const std::vector<double>& x, const std::vector<double>& y);

void write_summary_csv(const SummaryTable& table, const std::string& path);
void write_records_csv(const SummaryTable& table, const std::vector<std::string>& penalty_ids,
                       const std::string& path);

// manifest.json: config echo, master seed, and every output file with its
// byte count and fnv1a64 content hash
void write_manifest(const ExperimentSpec& spec, const std::vector<std::string>& files,
                    const std::string& path);

}  // namespace mixsel
