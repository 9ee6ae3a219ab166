#pragma once

#include <string>
#include <vector>

#include "mixsel/em.hpp"

namespace mixsel {

// Rate specifications for penalty growth in n.
struct RateSpec {
    enum class Kind { power, log_n, loglog_n, constant };
    Kind kind = Kind::log_n;
    double a = 0.5;  // power exponent (0 < a < 1) or the constant value

    double value(long n) const;
    std::string id() const;
    static RateSpec power(double a);
    static RateSpec log_n();
    static RateSpec loglog_n();
    static RateSpec constant(double c);
};

// eta(q): strictly increasing with eta(q) >= q.
struct EtaSpec {
    enum class Kind { linear, power };
    Kind kind = Kind::linear;
    double a = 1.0;  // linear coefficient (>= 1) or power exponent (>= 1)

    double value(int q) const;
    std::string id() const;
    static EtaSpec linear(double coeff);
    static EtaSpec power(double exponent);
};

// Penalty family. Construction validates the Theorem hypotheses that are
// checkable structurally: pen(n, q) strictly increasing in q for fixed n,
// and pen(n, q)/n -> 0 along the supported rates.
class Penalty {
  public:
    enum class Variant { bic, linear_q, loglog, eta_varpi };

    static Penalty bic();
    static Penalty linear_q(RateSpec omega);
    static Penalty loglog(double C);
    static Penalty eta_varpi(EtaSpec eta, RateSpec varpi);

    // mini-language: "bic" | "loglog:C" | "linear:{log|loglog|sqrt|power:a}"
    static Penalty parse(const std::string& text);

    double value(long n, int q, int dim) const;
    Variant variant() const { return variant_; }
    std::string id() const { return id_; }

  private:
    Penalty() = default;
    Variant variant_ = Variant::bic;
    double C_ = 1.0;
    RateSpec rate_;
    EtaSpec eta_;
    std::string id_;
};

// Smallest q_b with pen(n, q_b) - pen(n, 1) > n log f0(0) - score_1, capped
// at q_cap. For bounded location families the criterion at any q > q_b
// cannot exceed the q = 1 criterion, because sup_f l_n(f) <= n log f0(0).
int scan_bound(const Penalty& pen, long n, int dim, double score_1, double log_sup_f0,
               int q_cap = 32);

struct OrderRow {
    int q = 0;
    double score = 0.0;
    double penalty = 0.0;
    double criterion = 0.0;
};

struct OrderEstimate {
    int q_hat = 0;
    std::vector<OrderRow> table;
    int scan_bound = 0;
    double sieve_radius = 0.0;
};

// Penalized likelihood order estimator: criterion(q) = score(q) - pen(n, q)
// for q = 1..scan bound, argmax with ties broken to the smallest q.
OrderEstimate estimate_order(const Dataset& data, const LocationFamily& family,
                             const Penalty& pen, const SieveSchedule& sieve,
                             const FitOptions& opts, int q_cap = 32);

// Assemble the estimate from an externally computed score table (used by the
// experiment runners, where one table is shared across penalties).
OrderEstimate estimate_from_scores(const std::vector<double>& scores, const Penalty& pen, long n,
                                   int dim, double sieve_radius_used);

void write_order_csv(const OrderEstimate& est, const std::string& path);
std::string format_order_table(const OrderEstimate& est);

}  // namespace mixsel
