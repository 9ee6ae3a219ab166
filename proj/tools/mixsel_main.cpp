#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mixsel/experiments.hpp"
#include "mixsel/parallel.hpp"

using namespace mixsel;

namespace {

constexpr int kExitCompute = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

int resolve_threads(int flag_value, int config_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("MIXSEL_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    if (config_value > 0) return config_value;
    return default_threads();
}

SieveSchedule parse_sieve_flag(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() == 2 && parts[0] == "constant") return SieveSchedule::constant(std::stod(parts[1]));
    if (parts.size() == 2 && parts[0] == "sqrt-loglog")
        return SieveSchedule::sqrt_loglog(std::stod(parts[1]));
    if (parts.size() == 3 && parts[0] == "sqrt-log-little-o")
        return SieveSchedule::sqrt_log_little_o(std::stod(parts[1]), std::stod(parts[2]));
    throw std::invalid_argument(
        "sieve spec must be constant:T, sqrt-loglog:c or sqrt-log-little-o:c:exp");
}

std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path, 0);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct FitArgs {
    std::string data;
    int q = 0;
    double radius = 0.0;
    std::string sieve;
    std::uint64_t seed = 0;
    int starts = 20;
    double tol = 1e-7;
    int max_iter = 300;
    int dim = 1;
    double sigma = 0.0;  // 0 = standard
    int threads = 0;
};

LocationFamily family_from(const FitArgs& a) {
    return a.sigma > 0.0 ? LocationFamily::gaussian_scaled(a.dim, a.sigma)
                         : LocationFamily::gaussian(a.dim);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixsel: penalized-likelihood order estimation for location mixtures"};
    app.require_subcommand(1);

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "constrained EM fit for a fixed order q");
    fit->add_option("--data", fa.data, "dataset CSV")->required();
    fit->add_option("--q", fa.q, "number of components")->required();
    fit->add_option("--radius", fa.radius, "parameter ball radius");
    fit->add_option("--sieve", fa.sieve, "sieve rule, e.g. constant:10 or sqrt-loglog:2");
    fit->add_option("--seed", fa.seed, "rng seed")->required();
    fit->add_option("--starts", fa.starts, "EM starts");
    fit->add_option("--tol", fa.tol, "EM convergence tolerance");
    fit->add_option("--max-iter", fa.max_iter, "EM iteration cap");
    fit->add_option("--dim", fa.dim, "observation dimension");
    fit->add_option("--sigma", fa.sigma, "component scale (default standard)");
    fit->add_option("--threads", fa.threads, "worker threads");

    FitArgs oa;
    std::string penalty_spec;
    std::string table_out = "order_table.csv";
    int q_cap = 32;
    auto* order = app.add_subcommand("order", "penalized likelihood order estimation");
    order->add_option("--data", oa.data, "dataset CSV")->required();
    order->add_option("--penalty", penalty_spec, "bic | loglog:C | linear:<rate>")->required();
    order->add_option("--seed", oa.seed, "rng seed")->required();
    order->add_option("--radius", oa.radius, "parameter ball radius");
    order->add_option("--sieve", oa.sieve, "sieve rule");
    order->add_option("--q-cap", q_cap, "scan cap");
    order->add_option("--starts", oa.starts, "EM starts");
    order->add_option("--tol", oa.tol, "EM convergence tolerance");
    order->add_option("--max-iter", oa.max_iter, "EM iteration cap");
    order->add_option("--dim", oa.dim, "observation dimension");
    order->add_option("--sigma", oa.sigma, "component scale");
    order->add_option("--out", table_out, "per-q table CSV path");
    order->add_option("--threads", oa.threads, "worker threads");

    std::string exp_study;
    std::string config_path;
    int exp_threads = 0;
    auto* exp = app.add_subcommand("exp", "run a seeded study from a config file");
    exp->add_option("study", exp_study, "consistency|inconsistency|lil|geometry|entropy")
        ->required();
    exp->add_option("--config", config_path, "JSON config")->required();
    exp->add_option("--threads", exp_threads, "worker threads (overrides config)");

    std::string ingest_path;
    int ingest_dim = 1;
    auto* ingest = app.add_subcommand("ingest-check", "validate a dataset CSV");
    ingest->add_option("--data", ingest_path, "dataset CSV")->required();
    ingest->add_option("--dim", ingest_dim, "expected column count")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*fit) {
            if ((fa.radius > 0.0) == !fa.sieve.empty())
                throw std::invalid_argument("give exactly one of --radius or --sieve");
            Dataset data = read_csv(fa.data, fa.dim);
            const SieveSchedule sched =
                fa.sieve.empty() ? SieveSchedule::constant(fa.radius) : parse_sieve_flag(fa.sieve);
            const double T = sieve_radius(sched, data.size());
            FitOptions opts;
            opts.starts = fa.starts;
            opts.seed = fa.seed;
            opts.tol = fa.tol;
            opts.max_iter = fa.max_iter;
            opts.threads = resolve_threads(fa.threads, 0);
            auto result = fit_constrained(fa.q, data, family_from(fa), {T}, opts);
            std::cout << to_json(result) << '\n';
            return 0;
        }
        if (*order) {
            if ((oa.radius > 0.0) == !oa.sieve.empty())
                throw std::invalid_argument("give exactly one of --radius or --sieve");
            const Penalty pen = Penalty::parse(penalty_spec);
            Dataset data = read_csv(oa.data, oa.dim);
            const SieveSchedule sched =
                oa.sieve.empty() ? SieveSchedule::constant(oa.radius) : parse_sieve_flag(oa.sieve);
            FitOptions opts;
            opts.starts = oa.starts;
            opts.seed = oa.seed;
            opts.tol = oa.tol;
            opts.max_iter = oa.max_iter;
            opts.threads = resolve_threads(oa.threads, 0);
            auto est = estimate_order(data, family_from(oa), pen, sched, opts, q_cap);
            write_order_csv(est, table_out);
            std::cout << format_order_table(est);
            std::cout << "q_hat: " << est.q_hat << '\n';
            return 0;
        }
        if (*exp) {
            static const std::set<std::string> known{"consistency", "inconsistency", "lil",
                                                     "geometry", "entropy"};
            if (!known.count(exp_study))
                throw std::invalid_argument("unknown study '" + exp_study + "'");
            auto spec = parse_config(read_file_or_throw(config_path));
            if (study_name(spec.study) != exp_study)
                throw std::invalid_argument("config declares study '" + study_name(spec.study) +
                                            "', command asked for '" + exp_study + "'");
            spec.threads = resolve_threads(exp_threads, spec.threads);
            if (spec.study == Study::consistency) {
                auto table = run_consistency(spec);
                std::cout << "study,n,penalty_id,frac_under,frac_correct,frac_over,replicates\n";
                for (const auto& r : table.rows)
                    std::cout << r.study << ',' << r.n << ',' << r.penalty_id << ',' << r.frac_under
                              << ',' << r.frac_correct << ',' << r.frac_over << ','
                              << r.replicates << '\n';
            } else if (spec.study == Study::inconsistency) {
                auto table = run_inconsistency(spec);
                std::cout << "study,n,penalty_id,frac_under,frac_correct,frac_over,replicates\n";
                for (const auto& r : table.rows)
                    std::cout << r.study << ',' << r.n << ',' << r.penalty_id << ',' << r.frac_under
                              << ',' << r.frac_correct << ',' << r.frac_over << ','
                              << r.replicates << '\n';
            } else if (spec.study == Study::lil) {
                auto stats = run_lil(spec);
                std::cout << "kind,max_w,slope,slope_t\n";
                std::cout << "mixture," << stats.mixture_max_w << ',' << stats.mixture_slope << ','
                          << stats.mixture_slope_t << '\n';
                std::cout << "regular," << stats.regular_max_w << ',' << stats.regular_slope << ','
                          << stats.regular_slope_t << '\n';
            } else if (spec.study == Study::geometry_figure) {
                auto res = run_geometry_figure(spec);
                std::cout << "run,r_min,r_max\n";
                std::cout << "a," << res.run_a.r_min << ',' << res.run_a.r_max << '\n';
                std::cout << "b," << res.run_b.r_min << ',' << res.run_b.r_max << '\n';
                std::cout << "sandwich_violations," << res.sandwich_violations_left << ','
                          << res.sandwich_violations_right << '\n';
            } else {
                auto res = run_entropy_study(spec);
                std::cout << "q,eta_hat,r2\n";
                for (std::size_t i = 0; i < res.qs.size(); ++i)
                    std::cout << res.qs[i] << ',' << res.curves[i].fit.eta_hat << ','
                              << res.curves[i].fit.r2 << '\n';
            }
            std::cerr << "outputs written to " << spec.out_dir << '\n';
            return 0;
        }
        if (*ingest) {
            auto data = ingest_csv(ingest_path, ingest_dim);
            std::cout << "rows: " << data.size() << "\ndim: " << data.dim << '\n';
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCompute;
    }
    return kExitConfig;
}
