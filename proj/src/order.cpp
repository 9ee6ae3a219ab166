#include "mixsel/order.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mixsel/parallel.hpp"
#include "mixsel/rng.hpp"

namespace mixsel {

double RateSpec::value(long n) const {
    switch (kind) {
        case Kind::power:
            return std::pow(static_cast<double>(n), a);
        case Kind::log_n:
            if (n < 2) throw std::invalid_argument("log rate needs n >= 2");
            return std::log(static_cast<double>(n));
        case Kind::loglog_n:
            if (n < 3) throw std::invalid_argument("loglog rate needs n >= 3");
            return std::log(std::log(static_cast<double>(n)));
        case Kind::constant:
            return a;
    }
    throw std::logic_error("unreachable");
}

std::string RateSpec::id() const {
    switch (kind) {
        case Kind::power:
            return "power:" + std::to_string(a);
        case Kind::log_n:
            return "log";
        case Kind::loglog_n:
            return "loglog";
        case Kind::constant:
            return "const:" + std::to_string(a);
    }
    return "";
}

RateSpec RateSpec::power(double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("power rate needs 0 < a < 1");
    return {Kind::power, a};
}
RateSpec RateSpec::log_n() { return {Kind::log_n, 0.0}; }
RateSpec RateSpec::loglog_n() { return {Kind::loglog_n, 0.0}; }
RateSpec RateSpec::constant(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("constant rate must be positive");
    return {Kind::constant, c};
}

double EtaSpec::value(int q) const {
    switch (kind) {
        case Kind::linear:
            return a * q;
        case Kind::power:
            return std::pow(static_cast<double>(q), a);
    }
    throw std::logic_error("unreachable");
}

std::string EtaSpec::id() const {
    return kind == Kind::linear ? "lin:" + std::to_string(a) : "pow:" + std::to_string(a);
}

EtaSpec EtaSpec::linear(double coeff) {
    if (!(coeff >= 1.0)) throw std::invalid_argument("eta(q) >= q requires coeff >= 1");
    return {Kind::linear, coeff};
}
EtaSpec EtaSpec::power(double exponent) {
    if (!(exponent >= 1.0)) throw std::invalid_argument("eta(q) >= q requires exponent >= 1");
    return {Kind::power, exponent};
}

Penalty Penalty::bic() {
    Penalty p;
    p.variant_ = Variant::bic;
    p.id_ = "bic";
    return p;
}

Penalty Penalty::linear_q(RateSpec omega) {
    Penalty p;
    p.variant_ = Variant::linear_q;
    p.rate_ = omega;
    p.id_ = "linear:" + omega.id();
    return p;
}

Penalty Penalty::loglog(double C) {
    if (!(C > 0.0)) throw std::invalid_argument("loglog penalty needs C > 0");
    Penalty p;
    p.variant_ = Variant::loglog;
    p.C_ = C;
    p.id_ = "loglog:" + std::to_string(C);
    return p;
}

Penalty Penalty::eta_varpi(EtaSpec eta, RateSpec varpi) {
    Penalty p;
    p.variant_ = Variant::eta_varpi;
    p.eta_ = eta;
    p.rate_ = varpi;
    p.id_ = "eta-varpi:" + eta.id() + ":" + varpi.id();
    // strict increase in q needs a strictly positive rate; the rate specs
    // enforce positivity, so nothing further to check here
    return p;
}

Penalty Penalty::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.empty()) throw std::invalid_argument("empty penalty spec");
    try {
        if (parts[0] == "bic") {
            if (parts.size() != 1) throw std::invalid_argument("bic takes no parameter");
            return bic();
        }
        if (parts[0] == "loglog") {
            if (parts.size() != 2) throw std::invalid_argument("usage: loglog:C");
            return loglog(std::stod(parts[1]));
        }
        if (parts[0] == "linear") {
            if (parts.size() == 2 && parts[1] == "log") return linear_q(RateSpec::log_n());
            if (parts.size() == 2 && parts[1] == "loglog") return linear_q(RateSpec::loglog_n());
            if (parts.size() == 2 && parts[1] == "sqrt") return linear_q(RateSpec::power(0.5));
            if (parts.size() == 3 && parts[1] == "power")
                return linear_q(RateSpec::power(std::stod(parts[2])));
            throw std::invalid_argument("usage: linear:{log|loglog|sqrt|power:a}");
        }
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("malformed penalty parameter in '" + text + "'");
    }
    throw std::invalid_argument("unknown penalty '" + text + "'");
}

double Penalty::value(long n, int q, int dim) const {
    if (q < 1) throw std::invalid_argument("orders start at 1");
    if (n < 1) throw std::invalid_argument("n must be positive");
    switch (variant_) {
        case Variant::bic:
            if (n < 2) throw std::invalid_argument("bic needs n >= 2");
            return 0.5 * (dim * q + q - 1) * std::log(static_cast<double>(n));
        case Variant::linear_q:
            return q * rate_.value(n);
        case Variant::loglog:
            if (n < 3) throw std::invalid_argument("loglog penalty needs n >= 3");
            return C_ * q * std::log(std::log(static_cast<double>(n)));
        case Variant::eta_varpi:
            return eta_.value(q) * rate_.value(n);
    }
    throw std::logic_error("unreachable");
}

int scan_bound(const Penalty& pen, long n, int dim, double score_1, double log_sup_f0,
               int q_cap) {
    if (q_cap < 2) throw std::invalid_argument("q_cap must be at least 2");
    const double gap_needed = static_cast<double>(n) * log_sup_f0 - score_1;
    const double pen1 = pen.value(n, 1, dim);
    for (int q = 2; q <= q_cap; ++q) {
        if (pen.value(n, q, dim) - pen1 > gap_needed) return q;
    }
    return q_cap;
}

OrderEstimate estimate_from_scores(const std::vector<double>& scores, const Penalty& pen, long n,
                                   int dim, double sieve_radius_used) {
    if (scores.empty()) throw std::invalid_argument("empty score table");
    OrderEstimate est;
    est.scan_bound = static_cast<int>(scores.size());
    est.sieve_radius = sieve_radius_used;
    int best = 0;
    for (int q = 1; q <= static_cast<int>(scores.size()); ++q) {
        OrderRow row;
        row.q = q;
        row.score = scores[static_cast<std::size_t>(q - 1)];
        row.penalty = pen.value(n, q, dim);
        row.criterion = row.score - row.penalty;
        est.table.push_back(row);
        if (row.criterion > est.table[static_cast<std::size_t>(best)].criterion) best = q - 1;
    }
    est.q_hat = best + 1;  // ties keep the smallest q by the strict comparison
    return est;
}

OrderEstimate estimate_order(const Dataset& data, const LocationFamily& family,
                             const Penalty& pen, const SieveSchedule& sieve,
                             const FitOptions& opts, int q_cap) {
    if (data.size() < 1) throw std::invalid_argument("dataset is empty");
    const long n = data.size();
    const double T = sieve_radius(sieve, n);
    const ParamBall ball{T};

    FitOptions o1 = opts;
    o1.seed = stream_seed(opts.seed, "fit-q", 1);
    const double score_1 = fit_constrained(1, data, family, ball, o1).loglik;
    const int qb = scan_bound(pen, n, family.dim, score_1, family.log_sup_density(), q_cap);

    std::vector<double> scores(static_cast<std::size_t>(qb));
    scores[0] = score_1;
    parallel_for(static_cast<std::size_t>(qb - 1), opts.threads, [&](std::size_t i) {
        const int q = static_cast<int>(i) + 2;
        FitOptions o = opts;
        o.threads = 1;
        o.seed = stream_seed(opts.seed, "fit-q", static_cast<std::uint64_t>(q));
        scores[static_cast<std::size_t>(q - 1)] =
            fit_constrained(q, data, family, ball, o).loglik;
    });
    return estimate_from_scores(scores, pen, n, family.dim, T);
}

void write_order_csv(const OrderEstimate& est, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "q,score,penalty,criterion\n";
    char buf[128];
    for (const auto& row : est.table) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g", row.q, row.score, row.penalty,
                      row.criterion);
        out << buf << '\n';
    }
}

std::string format_order_table(const OrderEstimate& est) {
    std::string s;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%4s %16s %12s %16s\n", "q", "score", "penalty", "criterion");
    s += buf;
    for (const auto& row : est.table) {
        std::snprintf(buf, sizeof buf, "%4d %16.6f %12.6f %16.6f%s\n", row.q, row.score,
                      row.penalty, row.criterion, row.q == est.q_hat ? "  <- q_hat" : "");
        s += buf;
    }
    return s;
}

}  // namespace mixsel
