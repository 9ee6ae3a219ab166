#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mixsel/order.hpp"

using namespace mixsel;

TEST_CASE("penalty closed forms") {
    auto bic = Penalty::bic();
    CHECK(bic.value(1000, 2, 1) == doctest::Approx(10.361633).epsilon(1e-6));
    auto ll = Penalty::loglog(0.5);
    CHECK(ll.value(10000, 2, 1) == doctest::Approx(2.2203268063678463).epsilon(1e-12));
    auto lin = Penalty::linear_q(RateSpec::log_n());
    CHECK(lin.value(100, 3, 1) == doctest::Approx(3.0 * std::log(100.0)).epsilon(1e-12));
    auto ev = Penalty::eta_varpi(EtaSpec::linear(2.0), RateSpec::power(0.5));
    CHECK(ev.value(400, 2, 1) == doctest::Approx(4.0 * 20.0).epsilon(1e-12));
    CHECK_THROWS_AS(bic.value(1000, 0, 1), std::invalid_argument);
}

TEST_CASE("penalties increase strictly in q and are o(n)") {
    std::vector<Penalty> pens{Penalty::bic(), Penalty::loglog(0.05),
                              Penalty::linear_q(RateSpec::power(0.3)),
                              Penalty::eta_varpi(EtaSpec::power(1.5), RateSpec::loglog_n())};
    for (const auto& p : pens) {
        for (long n : {100L, 10000L}) {
            double prev = 0.0;
            for (int q = 1; q <= 8; ++q) {
                const double v = p.value(n, q, 1);
                CHECK(v > prev);
                prev = v;
            }
        }
        CHECK(p.value(100000000L, 1, 1) / 1e8 < 0.01);
    }
}

TEST_CASE("degenerate penalties rejected at construction") {
    CHECK_THROWS_AS(Penalty::loglog(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Penalty::loglog(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(RateSpec::constant(0.0), std::invalid_argument);  // constant-zero penalty
    CHECK_THROWS_AS(RateSpec::power(1.0), std::invalid_argument);
    CHECK_THROWS_AS(EtaSpec::linear(0.5), std::invalid_argument);
}

TEST_CASE("penalty mini-language") {
    CHECK(Penalty::parse("bic").variant() == Penalty::Variant::bic);
    CHECK(Penalty::parse("loglog:0.1").variant() == Penalty::Variant::loglog);
    CHECK(Penalty::parse("linear:loglog").variant() == Penalty::Variant::linear_q);
    CHECK(Penalty::parse("linear:power:0.4").value(16, 1, 1) == doctest::Approx(3.031433).epsilon(1e-5));
    CHECK_THROWS_AS(Penalty::parse("loglog:0"), std::invalid_argument);
    CHECK_THROWS_AS(Penalty::parse("ridge"), std::invalid_argument);
    CHECK_THROWS_AS(Penalty::parse("loglog:zero"), std::invalid_argument);
}

TEST_CASE("scan bound arithmetic") {
    auto fam = LocationFamily::gaussian(1);
    const double lsup = fam.log_sup_density();
    auto bic = Penalty::bic();
    // score_1 = n log f0(0) - 50: smallest q with (q-1) log(1000) > 50 is 9
    CHECK(scan_bound(bic, 1000, 1, 1000.0 * lsup - 50.0, lsup) == 9);
    // degenerate score: any positive penalty gap suffices
    CHECK(scan_bound(bic, 1000, 1, 1000.0 * lsup, lsup) == 2);
    // gap too large for every q: cap fallback
    CHECK(scan_bound(Penalty::loglog(0.01), 1000, 1, 1000.0 * lsup - 1e6, lsup, 32) == 32);
}

TEST_CASE("estimate from scores: table identity, tie break, shift invariance") {
    auto pen = Penalty::bic();
    std::vector<double> scores{-500.0, -495.0, -494.0};
    auto est = estimate_from_scores(scores, pen, 1000, 1, 10.0);
    REQUIRE(est.table.size() == 3);
    for (const auto& row : est.table) {
        CHECK(row.criterion == row.score - row.penalty);
        CHECK(row.penalty == pen.value(1000, row.q, 1));
    }

    // exact tie between q=1 and q=2 constructed from the penalty gap
    const double gap = pen.value(1000, 2, 1) - pen.value(1000, 1, 1);
    auto tie = estimate_from_scores({-100.0, -100.0 + gap}, pen, 1000, 1, 10.0);
    CHECK(tie.table[0].criterion == tie.table[1].criterion);
    CHECK(tie.q_hat == 1);

    // shifting every score by a constant leaves q_hat unchanged
    std::vector<double> shifted;
    for (double s : scores) shifted.push_back(s + 123.456);
    CHECK(estimate_from_scores(shifted, pen, 1000, 1, 10.0).q_hat == est.q_hat);
}

TEST_CASE("single gaussian data selects q=1 under bic") {
    auto fam = LocationFamily::gaussian(1);
    auto data = sample(MixtureParams::single({0.0}), fam, 2000, 101);
    FitOptions opts;
    opts.starts = 10;
    opts.seed = 3;
    opts.threads = 2;
    auto est = estimate_order(data, fam, Penalty::bic(), SieveSchedule::constant(10.0), opts, 8);
    CHECK(est.q_hat == 1);
    CHECK(est.sieve_radius == 10.0);
    CHECK(est.table.size() == static_cast<std::size_t>(est.scan_bound));

    // scan-bound soundness: extend the scan past q_b and confirm the
    // criterion never beats q=1 there
    auto wide = estimate_order(data, fam, Penalty::bic(), SieveSchedule::constant(10.0), opts, 10);
    for (const auto& row : wide.table)
        if (row.q > est.scan_bound) CHECK(row.criterion < wide.table[0].criterion);
}

TEST_CASE("order table csv") {
    auto est = estimate_from_scores({-10.0, -8.0}, Penalty::bic(), 100, 1, 5.0);
    const auto path = std::filesystem::temp_directory_path() / "mixsel_order_table.csv";
    write_order_csv(est, path.string());
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "q,score,penalty,criterion");
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(path);
    CHECK(format_order_table(est).find("q_hat") != std::string::npos);
}
