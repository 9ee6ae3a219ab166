#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixsel/geometry.hpp"
#include "mixsel/rng.hpp"

using namespace mixsel;

TEST_CASE("partition for two separated centers in d=1") {
    auto fstar = MixtureParams::two_component(0.5, -1.0, 1.0);
    auto part = build_partition(fstar, 1);
    CHECK(part.qstar == 2);
    CHECK(part.separation == doctest::Approx(2.0));
    CHECK(part.radius == doctest::Approx(0.5));
    CHECK(std::abs(part.directions[0]) == doctest::Approx(1.0));
    CHECK(part.projections_disjoint());
    const double inside = -0.8;
    const double outside = 0.0;
    CHECK(part.region_of({&inside, 1}) == 1);
    CHECK(part.region_of({&outside, 1}) == 0);
}

TEST_CASE("partition for a single component covers everything") {
    auto fstar = MixtureParams::single({0.5});
    auto part = build_partition(fstar, 9);
    CHECK(part.qstar == 1);
    CHECK(std::isinf(part.radius));
    const double anywhere = 123.0;
    CHECK(part.region_of({&anywhere, 1}) == 1);
    CHECK(part.projections_disjoint());
}

TEST_CASE("degenerate f* rejected") {
    MixtureParams dup({0.5, 0.5}, {1.0, 1.0}, 1);
    CHECK_THROWS_AS(build_partition(dup, 1), InvalidModelError);
}

TEST_CASE("partition disjointness holds in d=2 with q*=3") {
    MixtureParams fstar({0.3, 0.3, 0.4}, {0.0, 0.0, 2.0, 0.1, -1.0, 1.5}, 2);
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 17ull}) {
        auto part = build_partition(fstar, seed);
        CHECK(part.projections_disjoint());
        CHECK(part.radius > 0.0);
        // each true center lands in its own cell
        for (int i = 0; i < 3; ++i) CHECK(part.region_of(fstar.location(i)) == i + 1);
    }
}

TEST_CASE("pseudodistance vanishes exactly at f*") {
    auto fstar = MixtureParams::two_component(0.5, -1.0, 1.0);
    auto part = build_partition(fstar, 1);
    CHECK(pseudodistance(fstar, fstar, part) == 0.0);
}

TEST_CASE("pseudodistance worked example") {
    auto fstar = MixtureParams::two_component(0.5, -1.0, 1.0);
    auto part = build_partition(fstar, 1);
    auto f = MixtureParams::two_component(0.5, -1.0, 1.1);
    CHECK(pseudodistance(f, fstar, part) == doctest::Approx(0.0525).epsilon(1e-12));
}

TEST_CASE("pseudodistance with all mass stray") {
    auto fstar = MixtureParams::two_component(0.5, -1.0, 1.0);
    auto part = build_partition(fstar, 1);
    auto f = MixtureParams::two_component(0.5, 5.0, -5.0);
    CHECK(pseudodistance(f, fstar, part) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("pseudodistance zero iff components coincide") {
    auto fstar = MixtureParams::two_component(0.5, -1.0, 1.0);
    auto part = build_partition(fstar, 1);
    // same components listed in the other order, split across duplicates
    MixtureParams same({0.25, 0.25, 0.5}, {1.0, 1.0, -1.0}, 1);
    CHECK(pseudodistance(same, fstar, part) == doctest::Approx(0.0).epsilon(1e-12));
    // a perturbed copy cannot be at zero
    auto off = MixtureParams::two_component(0.5, -1.0 + 1e-6, 1.0);
    CHECK(pseudodistance(off, fstar, part) > 0.0);
}

TEST_CASE("envelope H0 via ball projection") {
    auto fam = LocationFamily::gaussian(1);
    auto fstar = MixtureParams::single({0.0});
    auto grid = build_grid(fstar, fam, GridSpec::uniform(0.02, 20.0));
    auto env = build_envelopes(fstar, fam, {2.0}, grid);

    const double x0 = 0.0;
    const double z0 = 0.0;
    CHECK(env.h0({&x0, 1}) ==
          doctest::Approx(fam.f0({&z0, 1}) / std::exp(eval_log_density(fstar, fam, {&x0, 1})))
              .epsilon(1e-12));

    const double x5 = 5.0;
    const double z3 = 3.0;
    CHECK(env.h0({&x5, 1}) ==
          doctest::Approx(fam.f0({&z3, 1}) / std::exp(eval_log_density(fstar, fam, {&x5, 1})))
              .epsilon(1e-12));
}

TEST_CASE("envelope norms finite and H0 norm matches brute force") {
    auto fam = LocationFamily::gaussian(1);
    auto fstar = MixtureParams::single({0.0});
    auto grid = build_grid(fstar, fam, GridSpec::uniform(0.02, 16.0));
    auto env = build_envelopes(fstar, fam, {1.0}, grid);
    CHECK(std::isfinite(env.norm_h0_4));
    CHECK(std::isfinite(env.norm_h1_4));
    CHECK(std::isfinite(env.norm_h2_4));
    CHECK(std::isfinite(env.norm_h3_2));

    // brute force sup over theta on a fine lattice, same x nodes
    double acc = 0.0;
    for (long i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i)[0];
        double sup = 0.0;
        for (double th = -1.0; th <= 1.0 + 1e-12; th += 1e-4) {
            const double z = x - th;
            sup = std::max(sup, fam.f0({&z, 1}));
        }
        const double h0 = sup / std::exp(grid.fstar_log[static_cast<std::size_t>(i)]);
        acc += grid.mass[static_cast<std::size_t>(i)] * h0 * h0 * h0 * h0;
    }
    const double brute = std::pow(acc, 0.25);
    CHECK(env.norm_h0_4 == doctest::Approx(brute).epsilon(1e-4));
}

TEST_CASE("envelope norms grow with the ball radius") {
    auto fam = LocationFamily::gaussian(1);
    auto fstar = MixtureParams::single({0.0});
    auto grid = build_grid(fstar, fam, GridSpec::uniform(0.02, 24.0));
    auto e1 = build_envelopes(fstar, fam, {1.0}, grid);
    auto e2 = build_envelopes(fstar, fam, {2.0}, grid);
    CHECK(e2.norm_h0_4 > e1.norm_h0_4);
    CHECK(e2.norm_h3_2 > e1.norm_h3_2);
}

TEST_CASE("S and D envelopes") {
    auto fam = LocationFamily::gaussian(1);
    auto fstar = MixtureParams::single({0.0});
    auto grid = build_grid(fstar, fam, GridSpec::uniform(0.02, 16.0));
    auto env = build_envelopes(fstar, fam, {1.0}, grid);
    CHECK_THROWS_AS(envelope_S_D(env, 0.0, grid), std::invalid_argument);
    auto sd = envelope_S_D(env, 0.35, grid);
    CHECK(std::isfinite(sd.norm_S_4));
    for (double x : {-3.0, -0.5, 0.0, 1.2, 4.0})
        CHECK(sd.D({&x, 1}) == doctest::Approx(2.0 * sd.S({&x, 1})).epsilon(1e-15));
}

TEST_CASE("weighted densities dominated by D with the empirical constant") {
    auto fam = LocationFamily::gaussian(1);
    auto fstar = MixtureParams::single({0.0});
    auto grid = build_grid(fstar, fam, GridSpec::uniform(0.01, 16.0));
    auto part = build_partition(fstar, 3);

    ParamBox box;
    box.q = 2;
    box.dim = 1;
    box.lo = {0.0, -1.0, -1.0};
    box.hi = {1.0, 1.0, 1.0};
    auto rep = ratio_study(fstar, fam, part, box, 3000, grid, 5);
    const double cstar = rep.r_min;
    CHECK(cstar > 0.0);

    auto env = build_envelopes(fstar, fam, {1.0}, grid);
    auto sd = envelope_S_D(env, cstar, grid);

    Rng rng(88);
    std::size_t tried = 0;
    for (int rep2 = 0; rep2 < 100; ++rep2) {
        const double w = rng.uniform(0.0, 1.0);
        MixtureParams f({w, 1.0 - w}, {rng.uniform(-1, 1), rng.uniform(-1, 1)}, 1);
        double h = hellinger(f, fstar, grid);
        if (h <= grid.tolerance()) continue;
        auto wd = weighted_density(f, fstar, grid);
        for (int k = 0; k < 100; ++k) {
            const double x = rng.uniform(-6.0, 6.0);
            CHECK(std::abs(wd({&x, 1})) <= sd.D({&x, 1}) + 1e-9);
            ++tried;
        }
    }
    CHECK(tried >= 9000);
}

TEST_CASE("ratio study is deterministic and excludes the 0/0 point") {
    auto fam = LocationFamily::gaussian_scaled(1, 0.5);
    auto fstar = MixtureParams::single({0.5});
    auto grid = build_grid(fstar, fam, GridSpec::uniform(0.02, 7.0));
    auto part = build_partition(fstar, 1);
    auto box = ParamBox::unit_figure1();

    auto a = ratio_study(fstar, fam, part, box, 2000, grid, 42, 0.0, 0, 1);
    auto b = ratio_study(fstar, fam, part, box, 2000, grid, 42, 0.0, 0, 4);
    CHECK(a.r_min == b.r_min);
    CHECK(a.r_max == b.r_max);
    CHECK(a.samples.size() == b.samples.size());
    CHECK(a.r_min > 0.0);
    CHECK(std::isfinite(a.r_max));
    CHECK(a.q25 <= a.q50);
    CHECK(a.q50 <= a.q75);
}

TEST_CASE("sub-box ratios stay within the full-box envelope") {
    auto fam = LocationFamily::gaussian_scaled(1, 0.5);
    auto fstar = MixtureParams::single({0.5});
    auto grid = build_grid(fstar, fam, GridSpec::uniform(0.02, 7.0));
    auto part = build_partition(fstar, 1);

    auto full = ParamBox::unit_figure1();
    auto fullrep = ratio_study(fstar, fam, part, full, 20000, grid, 7, 0.0, 0, 4);

    ParamBox sub = full;
    sub.lo = {0.25, 0.3, 0.3};
    sub.hi = {0.75, 0.7, 0.7};
    auto subrep = ratio_study(fstar, fam, part, sub, 20000, grid, 8, 0.0, 0, 4);
    CHECK(subrep.r_min >= 0.9 * fullrep.r_min);
    CHECK(subrep.r_max <= 1.1 * fullrep.r_max);
}

TEST_CASE("level-set lattice membership is consistent with direct evaluation") {
    auto fam = LocationFamily::gaussian_scaled(1, 0.5);
    auto fstar = MixtureParams::single({0.5});
    auto grid = build_grid(fstar, fam, GridSpec::uniform(0.02, 7.0));
    auto part = build_partition(fstar, 1);
    auto box = ParamBox::unit_figure1();

    auto rep = ratio_study(fstar, fam, part, box, 1000, grid, 3, 0.05, 11, 2);
    REQUIRE(rep.level_h.size() == 11u * 11u * 11u);
    // spot check the lattice center: p=0.5, th1=th2=0.5 gives f = f*
    const std::size_t center = (5 * 11 + 5) * 11 + 5;
    CHECK(rep.level_h[center] == 1);
    CHECK(rep.level_N[center] == 1);
    // far corner p=1, th1=0, th2=0: h and N are large
    std::size_t corner = (10 * 11 + 0) * 11 + 0;
    CHECK(rep.level_h[corner] == 0);
    CHECK(rep.level_N[corner] == 0);
}
