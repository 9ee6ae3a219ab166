#include "mixsel/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "mixsel/parallel.hpp"
#include "mixsel/rng.hpp"

namespace mixsel {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& required,
                  const std::set<std::string>& optional) {
    std::vector<std::string> unknown;
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!required.count(it.key()) && !optional.count(it.key())) unknown.push_back(it.key());
    if (!unknown.empty()) {
        std::string msg = "unknown keys in " + where + ":";
        for (const auto& k : unknown) msg += " '" + k + "'";
        throw std::invalid_argument(msg);
    }
    for (const auto& k : required)
        if (!obj.contains(k))
            throw std::invalid_argument("missing required key '" + k + "' in " + where);
}

LocationFamily parse_family(const json& j) {
    require_keys(j, "family", {"kind", "dim"}, {"sigma"});
    const std::string kind = j.at("kind").get<std::string>();
    const int dim = j.at("dim").get<int>();
    if (kind == "gaussian-standard") {
        if (j.contains("sigma")) throw std::invalid_argument("gaussian-standard takes no sigma");
        return LocationFamily::gaussian(dim);
    }
    if (kind == "gaussian-scaled")
        return LocationFamily::gaussian_scaled(dim, j.at("sigma").get<double>());
    throw std::invalid_argument("unknown family kind '" + kind + "'");
}

MixtureParams parse_mixture(const json& j, int dim) {
    require_keys(j, "truth", {"weights", "locations"}, {});
    auto w = j.at("weights").get<std::vector<double>>();
    std::vector<double> locs;
    for (const auto& row : j.at("locations")) {
        auto v = row.get<std::vector<double>>();
        if (static_cast<int>(v.size()) != dim)
            throw std::invalid_argument("location row dimension mismatch");
        locs.insert(locs.end(), v.begin(), v.end());
    }
    return MixtureParams(std::move(w), std::move(locs), dim);
}

SieveSchedule parse_sieve(const json& j) {
    require_keys(j, "sieve", {"rule"}, {"c", "exponent"});
    const std::string rule = j.at("rule").get<std::string>();
    const double c = j.value("c", 1.0);
    if (rule == "constant") return SieveSchedule::constant(c);
    if (rule == "sqrt-loglog") return SieveSchedule::sqrt_loglog(c);
    if (rule == "sqrt-log-little-o")
        return SieveSchedule::sqrt_log_little_o(c, j.at("exponent").get<double>());
    throw std::invalid_argument("unknown sieve rule '" + rule + "'");
}

FitOptions parse_fit(const json& j) {
    require_keys(j, "fit", {}, {"starts", "tol", "max_iter"});
    FitOptions f;
    f.starts = j.value("starts", 20);
    f.tol = j.value("tol", 1e-7);
    f.max_iter = j.value("max_iter", 300);
    return f;
}

std::vector<Penalty> parse_penalties(const std::vector<std::string>& specs) {
    if (specs.empty()) throw std::invalid_argument("penalty list is empty");
    std::vector<Penalty> out;
    for (const auto& s : specs) out.push_back(Penalty::parse(s));
    return out;
}

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// shared consistency/inconsistency core; one score table per (replicate, n),
// penalties applied post-fit so cross-penalty comparisons pair exactly
SummaryTable run_order_study(const ExperimentSpec& spec, const std::vector<Penalty>& penalties) {
    const int qstar = spec.truth.order();
    const std::size_t reps = static_cast<std::size_t>(spec.replicates);
    SummaryTable table;
    table.records.resize(reps * spec.n_grid.size());

    for (std::size_t ni = 0; ni < spec.n_grid.size(); ++ni) {
        const long n = spec.n_grid[ni];
        parallel_for(reps, spec.threads, [&](std::size_t r) {
            const double t0 = now_ms();
            const std::uint64_t rep_seed = stream_seed(spec.seed, "rep", r);
            const std::uint64_t s = stream_seed(rep_seed, "n", ni);
            Dataset data = sample(spec.truth, spec.family, n, s);
            const double T = sieve_radius(spec.sieve, n);
            const ParamBall ball{T};

            FitOptions o = spec.fit;
            o.threads = 1;
            o.seed = stream_seed(s, "fit-q", 1);
            const double score1 =
                fit_constrained(1, data, spec.family, ball, o).loglik;
            int qb = 2;
            for (const auto& pen : penalties)
                qb = std::max(qb, scan_bound(pen, n, spec.family.dim, score1,
                                             spec.family.log_sup_density(), spec.q_cap));
            std::vector<double> scores(static_cast<std::size_t>(qb));
            scores[0] = score1;
            for (int q = 2; q <= qb; ++q) {
                o.seed = stream_seed(s, "fit-q", static_cast<std::uint64_t>(q));
                scores[static_cast<std::size_t>(q - 1)] =
                    fit_constrained(q, data, spec.family, ball, o).loglik;
            }

            ReplicateRecord rec;
            rec.replicate = static_cast<int>(r);
            rec.seed = s;
            rec.n = n;
            rec.scores = scores;
            for (const auto& pen : penalties)
                rec.q_hat.push_back(
                    estimate_from_scores(scores, pen, n, spec.family.dim, T).q_hat);
            rec.wall_ms = now_ms() - t0;
            table.records[ni * reps + r] = std::move(rec);
        });
    }

    for (std::size_t ni = 0; ni < spec.n_grid.size(); ++ni) {
        for (std::size_t p = 0; p < penalties.size(); ++p) {
            int under = 0, correct = 0, over = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                const int qh = table.records[ni * reps + r].q_hat[p];
                if (qh < qstar)
                    ++under;
                else if (qh == qstar)
                    ++correct;
                else
                    ++over;
            }
            SummaryRow row;
            row.study = study_name(spec.study);
            row.n = spec.n_grid[ni];
            row.penalty_id = penalties[p].id();
            row.replicates = spec.replicates;
            row.frac_under = static_cast<double>(under) / spec.replicates;
            row.frac_correct = static_cast<double>(correct) / spec.replicates;
            row.frac_over = static_cast<double>(over) / spec.replicates;
            table.rows.push_back(row);
        }
    }
    return table;
}

}  // namespace

std::string study_name(Study s) {
    switch (s) {
        case Study::consistency:
            return "consistency";
        case Study::inconsistency:
            return "inconsistency";
        case Study::lil:
            return "lil";
        case Study::geometry_figure:
            return "geometry";
        case Study::entropy_study:
            return "entropy";
    }
    return "";
}

ExperimentSpec parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    if (!j.contains("study")) throw std::invalid_argument("missing required key 'study'");
    const std::string study = j.at("study").get<std::string>();

    ExperimentSpec spec;
    const std::set<std::string> common = {"study", "seed", "out_dir", "threads"};
    auto with_common = [&](std::set<std::string> extra_req, std::set<std::string> extra_opt) {
        std::set<std::string> opt = {"out_dir", "threads"};
        opt.insert(extra_opt.begin(), extra_opt.end());
        std::set<std::string> req = {"study", "seed"};
        req.insert(extra_req.begin(), extra_req.end());
        require_keys(j, "config", req, opt);
    };
    (void)common;

    if (study == "consistency" || study == "inconsistency") {
        spec.study = study == "consistency" ? Study::consistency : Study::inconsistency;
        with_common({"truth", "family", "n_grid", "replicates", "penalties", "sieve"},
                    {"q_cap", "fit"});
        spec.family = parse_family(j.at("family"));
        spec.truth = parse_mixture(j.at("truth"), spec.family.dim);
        spec.n_grid = j.at("n_grid").get<std::vector<long>>();
        spec.replicates = j.at("replicates").get<int>();
        spec.penalty_specs = j.at("penalties").get<std::vector<std::string>>();
        spec.sieve = parse_sieve(j.at("sieve"));
        spec.q_cap = j.value("q_cap", 5);
        if (j.contains("fit")) spec.fit = parse_fit(j.at("fit"));
        if (spec.n_grid.empty()) throw std::invalid_argument("n_grid is empty");
        for (std::size_t i = 1; i < spec.n_grid.size(); ++i)
            if (spec.n_grid[i] <= spec.n_grid[i - 1])
                throw std::invalid_argument("n_grid must be increasing");
        if (spec.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
        parse_penalties(spec.penalty_specs);  // validate now
    } else if (study == "lil") {
        spec.study = Study::lil;
        with_common({"truth", "family", "n_grid", "replicates", "q"},
                    {"ball", "regular_T", "fit"});
        spec.family = parse_family(j.at("family"));
        spec.truth = parse_mixture(j.at("truth"), spec.family.dim);
        spec.n_grid = j.at("n_grid").get<std::vector<long>>();
        spec.replicates = j.at("replicates").get<int>();
        spec.lil_q = j.at("q").get<int>();
        spec.ball_radius = j.value("ball", 10.0);
        spec.regular_T = j.value("regular_T", 10.0);
        if (j.contains("fit")) spec.fit = parse_fit(j.at("fit"));
        if (spec.n_grid.empty()) throw std::invalid_argument("n_grid is empty");
        for (std::size_t i = 0; i < spec.n_grid.size(); ++i) {
            const long n = spec.n_grid[i];
            if (n < 16) throw std::invalid_argument("lil n_grid entries must be >= 16");
            if ((n & (n - 1)) != 0)
                throw std::invalid_argument("lil n_grid must be dyadic (powers of 2)");
            if (i > 0 && n != 2 * spec.n_grid[i - 1])
                throw std::invalid_argument("lil n_grid must be dyadic (each entry doubles)");
        }
        if (spec.lil_q <= spec.truth.order())
            throw std::invalid_argument("lil q must exceed the truth order");
    } else if (study == "geometry") {
        spec.study = Study::geometry_figure;
        with_common({"truth", "family", "box", "n_samples", "epsilon"},
                    {"level_res", "grid", "seed2"});
        spec.family = parse_family(j.at("family"));
        spec.truth = parse_mixture(j.at("truth"), spec.family.dim);
        const json& b = j.at("box");
        require_keys(b, "box", {"q", "lo", "hi"}, {});
        spec.box.q = b.at("q").get<int>();
        spec.box.dim = spec.family.dim;
        spec.box.lo = b.at("lo").get<std::vector<double>>();
        spec.box.hi = b.at("hi").get<std::vector<double>>();
        if (static_cast<int>(spec.box.lo.size()) != spec.box.coords() ||
            static_cast<int>(spec.box.hi.size()) != spec.box.coords())
            throw std::invalid_argument("box lo/hi must have q-1+q*dim entries");
        spec.n_samples = j.at("n_samples").get<std::size_t>();
        spec.epsilon = j.at("epsilon").get<double>();
        spec.level_res = j.value("level_res", 101);
        if (j.contains("grid")) {
            require_keys(j.at("grid"), "grid", {"step"}, {"radius"});
            spec.grid_step = j.at("grid").at("step").get<double>();
            spec.grid_radius = j.at("grid").value("radius", 0.0);
        }
        spec.seed2 = j.value("seed2", 0);
    } else if (study == "entropy") {
        spec.study = Study::entropy_study;
        with_common({"truth", "family", "q_list", "epsilon", "n_functions"},
                    {"delta", "ball", "grid"});
        spec.family = parse_family(j.at("family"));
        spec.truth = parse_mixture(j.at("truth"), spec.family.dim);
        spec.q_list = j.at("q_list").get<std::vector<int>>();
        spec.entropy_epsilon = j.at("epsilon").get<double>();
        spec.n_functions = j.at("n_functions").get<std::size_t>();
        spec.ball_radius = j.value("ball", 2.0);
        if (j.contains("delta")) {
            require_keys(j.at("delta"), "delta", {"hi", "lo", "count"}, {});
            spec.delta_hi = j.at("delta").at("hi").get<double>();
            spec.delta_lo = j.at("delta").at("lo").get<double>();
            spec.delta_count = j.at("delta").at("count").get<int>();
        } else {
            spec.delta_hi = spec.entropy_epsilon;
            spec.delta_lo = spec.entropy_epsilon / 5.0;
            spec.delta_count = 5;
        }
        if (j.contains("grid")) {
            require_keys(j.at("grid"), "grid", {"step"}, {"radius"});
            spec.grid_step = j.at("grid").at("step").get<double>();
            spec.grid_radius = j.at("grid").value("radius", 0.0);
        } else {
            spec.grid_step = 0.025;
        }
    } else {
        throw std::invalid_argument("unknown study '" + study + "'");
    }

    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.out_dir = j.value("out_dir", std::string("out/") + study);
    spec.threads = j.value("threads", 1);
    if (spec.threads < 1) spec.threads = default_threads();
    spec.config_echo = j.dump(2);
    return spec;
}

SummaryTable run_consistency(const ExperimentSpec& spec) {
    auto penalties = parse_penalties(spec.penalty_specs);
    auto table = run_order_study(spec, penalties);

    fs::create_directories(spec.out_dir);
    std::vector<std::string> files;
    const std::string summary = spec.out_dir + "/summary.csv";
    const std::string records = spec.out_dir + "/records.csv";
    write_summary_csv(table, summary);
    std::vector<std::string> ids;
    for (const auto& p : penalties) ids.push_back(p.id());
    write_records_csv(table, ids, records);
    files = {summary, records};
    write_manifest(spec, files, spec.out_dir + "/manifest.json");
    return table;
}

SummaryTable run_inconsistency(const ExperimentSpec& spec) {
    auto penalties = parse_penalties(spec.penalty_specs);
    std::size_t bic_idx = penalties.size();
    std::size_t loglog_idx = penalties.size();
    for (std::size_t p = 0; p < penalties.size(); ++p) {
        if (bic_idx == penalties.size() && penalties[p].variant() == Penalty::Variant::bic)
            bic_idx = p;
        if (loglog_idx == penalties.size() && penalties[p].variant() == Penalty::Variant::loglog)
            loglog_idx = p;
    }
    if (bic_idx == penalties.size() || loglog_idx == penalties.size())
        throw std::invalid_argument(
            "inconsistency study needs both a bic and a loglog penalty in the list");

    auto table = run_order_study(spec, penalties);

    fs::create_directories(spec.out_dir);
    const std::string summary = spec.out_dir + "/summary.csv";
    const std::string records = spec.out_dir + "/records.csv";
    const std::string contrast = spec.out_dir + "/contrast.csv";
    write_summary_csv(table, summary);
    std::vector<std::string> ids;
    for (const auto& p : penalties) ids.push_back(p.id());
    write_records_csv(table, ids, records);

    // paired overestimation contrast against bic
    std::ofstream out(contrast);
    out << "n,penalty_id,over_count,bic_over_count,only_penalty_over,only_bic_over,over_ratio\n";
    const int qstar = spec.truth.order();
    const std::size_t reps = static_cast<std::size_t>(spec.replicates);
    for (std::size_t ni = 0; ni < spec.n_grid.size(); ++ni) {
        for (std::size_t p = 0; p < penalties.size(); ++p) {
            if (p == bic_idx) continue;
            int over = 0, bic_over = 0, only_p = 0, only_b = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                const auto& rec = table.records[ni * reps + r];
                const bool po = rec.q_hat[p] > qstar;
                const bool bo = rec.q_hat[bic_idx] > qstar;
                over += po;
                bic_over += bo;
                only_p += po && !bo;
                only_b += bo && !po;
            }
            const double ratio =
                bic_over > 0 ? static_cast<double>(over) / bic_over
                             : (over > 0 ? std::numeric_limits<double>::infinity() : 1.0);
            out << spec.n_grid[ni] << ',' << penalties[p].id() << ',' << over << ',' << bic_over
                << ',' << only_p << ',' << only_b << ',' << fmt17(ratio) << '\n';
        }
    }
    out.close();
    write_manifest(spec, {summary, records, contrast}, spec.out_dir + "/manifest.json");
    return table;
}

SlopeFit ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    if (m != y.size() || m < 3) throw std::invalid_argument("need >= 3 paired points");
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    double sse = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = y[i] - my - fit.slope * (x[i] - mx);
        sse += r * r;
    }
    const double se = std::sqrt(sse / (static_cast<double>(m) - 2.0) / sxx);
    fit.t_stat = se > 0.0 ? fit.slope / se : 0.0;
    return fit;
}

LilStats run_lil(const ExperimentSpec& spec) {
    const std::size_t reps = static_cast<std::size_t>(spec.replicates);
    LilStats stats;
    stats.mixture.resize(reps);
    stats.regular.resize(reps);
    const ParamBall ball{spec.ball_radius};

    parallel_for(reps, spec.threads, [&](std::size_t r) {
        FitOptions o = spec.fit;
        o.threads = 1;
        o.seed = stream_seed(spec.seed, "lil-fit", r);
        stats.mixture[r] = lil_trajectory_mixture(stream_seed(spec.seed, "lil-path", r),
                                                  spec.lil_q, spec.truth, spec.family, ball,
                                                  spec.n_grid, o);
        stats.regular[r] =
            lil_trajectory_regular(stream_seed(spec.seed, "lil-reg", r), spec.regular_T,
                                   spec.n_grid);
    });

    auto pool = [&](const std::vector<LilTrajectory>& trajs, double& max_w, double& slope,
                    double& tstat) {
        std::vector<double> xs, ys;
        max_w = 0.0;
        for (const auto& t : trajs)
            for (std::size_t k = 0; k < t.n.size(); ++k) {
                xs.push_back(std::log(static_cast<double>(t.n[k])));
                ys.push_back(t.w[k]);
                max_w = std::max(max_w, t.w[k]);
            }
        auto fit = ols_slope(xs, ys);
        slope = fit.slope;
        tstat = fit.t_stat;
    };
    pool(stats.mixture, stats.mixture_max_w, stats.mixture_slope, stats.mixture_slope_t);
    pool(stats.regular, stats.regular_max_w, stats.regular_slope, stats.regular_slope_t);

    fs::create_directories(spec.out_dir);
    const std::string trajs = spec.out_dir + "/trajectories.csv";
    const std::string statsf = spec.out_dir + "/lil_stats.csv";
    {
        std::ofstream out(trajs);
        out << "kind,replicate,n,w\n";
        for (std::size_t r = 0; r < reps; ++r) {
            for (std::size_t k = 0; k < stats.mixture[r].n.size(); ++k)
                out << "mixture," << r << ',' << stats.mixture[r].n[k] << ','
                    << fmt17(stats.mixture[r].w[k]) << '\n';
            for (std::size_t k = 0; k < stats.regular[r].n.size(); ++k)
                out << "regular," << r << ',' << stats.regular[r].n[k] << ','
                    << fmt17(stats.regular[r].w[k]) << '\n';
        }
    }
    {
        std::ofstream out(statsf);
        out << "kind,max_w,slope,slope_t,replicates\n";
        out << "mixture," << fmt17(stats.mixture_max_w) << ',' << fmt17(stats.mixture_slope) << ','
            << fmt17(stats.mixture_slope_t) << ',' << reps << '\n';
        out << "regular," << fmt17(stats.regular_max_w) << ',' << fmt17(stats.regular_slope) << ','
            << fmt17(stats.regular_slope_t) << ',' << reps << '\n';
    }
    write_manifest(spec, {trajs, statsf}, spec.out_dir + "/manifest.json");
    return stats;
}

GeometryStudyResult run_geometry_figure(const ExperimentSpec& spec) {
    double extent = 0.0;
    for (std::size_t k = static_cast<std::size_t>(spec.box.q - 1); k < spec.box.lo.size(); ++k)
        extent = std::max({extent, std::abs(spec.box.lo[k]), std::abs(spec.box.hi[k])});
    const double radius = spec.grid_radius > 0.0
                              ? spec.grid_radius
                              : default_radius(spec.truth, spec.family, extent);
    auto grid = build_grid(spec.truth, spec.family, GridSpec::uniform(spec.grid_step, radius));
    auto part = build_partition(spec.truth, stream_seed(spec.seed, "partition", 0));

    GeometryStudyResult res;
    res.run_a = ratio_study(spec.truth, spec.family, part, spec.box, spec.n_samples, grid,
                            spec.seed, spec.epsilon, spec.level_res, spec.threads);
    const std::uint64_t sb = spec.seed2 != 0 ? spec.seed2 : stream_seed(spec.seed, "geo-b", 0);
    res.run_b = ratio_study(spec.truth, spec.family, part, spec.box, spec.n_samples, grid, sb,
                            0.0, 0, spec.threads);
    res.drift_r_min = std::abs(res.run_a.r_min - res.run_b.r_min) / res.run_a.r_min;
    res.drift_r_max = std::abs(res.run_a.r_max - res.run_b.r_max) / res.run_a.r_max;

    const double eps = spec.epsilon;
    for (std::size_t i = 0; i < res.run_a.level_h_val.size(); ++i) {
        const float h = res.run_a.level_h_val[i];
        const float N = res.run_a.level_N_val[i];
        if (std::isnan(h) || std::isnan(N)) continue;
        const bool mid = h <= eps;
        if (N <= eps / res.run_a.r_max && !mid) ++res.sandwich_violations_left;
        if (mid && !(N <= eps / res.run_a.r_min)) ++res.sandwich_violations_right;
        if (N <= eps * res.run_a.r_min && !mid) ++res.as_written_left_violations;
    }

    fs::create_directories(spec.out_dir);
    const std::string ratios = spec.out_dir + "/ratios.csv";
    const std::string lsh = spec.out_dir + "/levelset_h.csv";
    const std::string lsn = spec.out_dir + "/levelset_N.csv";
    const std::string gsum = spec.out_dir + "/geometry_summary.csv";
    write_ratio_csv(res.run_a, spec.box, ratios);
    write_levelset_csv(res.run_a, spec.box, true, lsh);
    write_levelset_csv(res.run_a, spec.box, false, lsn);
    {
        std::ofstream out(gsum);
        out << "run,r_min,r_max,samples,excluded\n";
        out << "a," << fmt17(res.run_a.r_min) << ',' << fmt17(res.run_a.r_max) << ','
            << res.run_a.n_samples << ',' << res.run_a.excluded << '\n';
        out << "b," << fmt17(res.run_b.r_min) << ',' << fmt17(res.run_b.r_max) << ','
            << res.run_b.n_samples << ',' << res.run_b.excluded << '\n';
    }
    write_manifest(spec, {ratios, lsh, lsn, gsum}, spec.out_dir + "/manifest.json");
    return res;
}

EntropyStudyResult run_entropy_study(const ExperimentSpec& spec) {
    EntropyStudyResult res;
    fs::create_directories(spec.out_dir);
    std::vector<std::string> files;
    if (!spec.q_list.empty()) {
        const double radius = spec.grid_radius > 0.0
                                  ? spec.grid_radius
                                  : default_radius(spec.truth, spec.family, spec.ball_radius);
        auto grid =
            build_grid(spec.truth, spec.family, GridSpec::uniform(spec.grid_step, radius));
        auto deltas = geometric_deltas(spec.delta_hi, spec.delta_lo, spec.delta_count);
        const std::string curvef = spec.out_dir + "/curve.csv";
        const std::string fitf = spec.out_dir + "/fit.csv";
        bool append = false;
        for (int q : spec.q_list) {
            auto cloud = sample_class(q, ClassKind::hellinger_ball, spec.truth, spec.family,
                                      {spec.ball_radius}, spec.entropy_epsilon, spec.n_functions,
                                      stream_seed(spec.seed, "entropy", static_cast<std::uint64_t>(q)),
                                      grid, spec.threads);
            auto curve = entropy_curve(cloud, deltas, spec.family.dim);
            write_curve_csv(q, spec.entropy_epsilon, curve.packing, curvef, append);
            write_fit_csv(q, curve.fit, fitf, append);
            append = true;
            res.qs.push_back(q);
            res.curves.push_back(std::move(curve));
        }
        files = {curvef, fitf};
    }
    write_manifest(spec, files, spec.out_dir + "/manifest.json");
    return res;
}

Dataset ingest_csv(const std::string& path, int dim) { return read_csv(path, dim); }

void write_summary_csv(const SummaryTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "study,n,penalty_id,frac_under,frac_correct,frac_over,replicates\n";
    for (const auto& row : table.rows)
        out << row.study << ',' << row.n << ',' << row.penalty_id << ',' << fmt17(row.frac_under)
            << ',' << fmt17(row.frac_correct) << ',' << fmt17(row.frac_over) << ','
            << row.replicates << '\n';
}

void write_records_csv(const SummaryTable& table, const std::vector<std::string>& penalty_ids,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "replicate,seed,n";
    for (const auto& id : penalty_ids) out << ",qhat_" << id;
    out << ",scores,wall_ms\n";
    for (const auto& rec : table.records) {
        out << rec.replicate << ',' << rec.seed << ',' << rec.n;
        for (int qh : rec.q_hat) out << ',' << qh;
        out << ',';
        for (std::size_t i = 0; i < rec.scores.size(); ++i)
            out << fmt17(rec.scores[i]) << (i + 1 < rec.scores.size() ? ";" : "");
        out << ',' << fmt17(rec.wall_ms) << '\n';
    }
}

void write_manifest(const ExperimentSpec& spec, const std::vector<std::string>& files,
                    const std::string& path) {
    json m;
    m["study"] = study_name(spec.study);
    m["seed"] = spec.seed;
    m["config"] = json::parse(spec.config_echo.empty() ? "{}" : spec.config_echo);
    m["outputs"] = json::array();
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw std::runtime_error("manifest: missing output " + f);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        char hex[32];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
        json entry;
        entry["path"] = fs::path(f).filename().string();
        entry["bytes"] = bytes.size();
        entry["fnv1a64"] = hex;
        m["outputs"].push_back(entry);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << m.dump(2) << '\n';
}

}  // namespace mixsel
