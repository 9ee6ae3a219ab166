#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixsel/divergence.hpp"
#include "mixsel/rng.hpp"

using namespace mixsel;

namespace {

QuadratureGrid std_grid(double radius = 14.0, double step = 0.01) {
    return build_grid(MixtureParams::single({0.0}), LocationFamily::gaussian(1),
                      GridSpec::uniform(step, radius));
}

MixtureParams random_mixture(Rng& rng, int q, double box = 1.5) {
    std::vector<double> w(static_cast<std::size_t>(q));
    double s = 0.0;
    for (auto& wi : w) {
        wi = rng.uniform(0.05, 1.0);
        s += wi;
    }
    for (auto& wi : w) wi /= s;
    // renormalize exactly
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) acc += w[i];
    w.back() = 1.0 - acc;
    std::vector<double> locs(static_cast<std::size_t>(q));
    for (auto& t : locs) t = rng.uniform(-box, box);
    return MixtureParams(w, locs, 1);
}

}  // namespace

TEST_CASE("grid normalization & determinism") {
    auto g1 = build_grid(MixtureParams::single({0.0}), LocationFamily::gaussian(1),
                         GridSpec::uniform(0.01, 10.0));
    CHECK(g1.norm_defect < 1e-12);
    auto g2 = build_grid(MixtureParams::single({0.0}), LocationFamily::gaussian(1),
                         GridSpec::uniform(0.01, 10.0));
    CHECK(g1.nodes == g2.nodes);
    CHECK(g1.weights == g2.weights);
    CHECK(g1.mass == g2.mass);
}

TEST_CASE("grid refuses insufficient truncation") {
    CHECK_THROWS_AS(build_grid(MixtureParams::single({0.0}), LocationFamily::gaussian(1),
                               GridSpec::uniform(0.01, 1.0)),
                    GridTooSmallError);
}

TEST_CASE("gauss-hermite rule integrates low moments exactly") {
    std::vector<double> x, w;
    gauss_hermite_rule(20, x, w);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        m0 += w[i];
        m2 += w[i] * x[i] * x[i];
        m4 += w[i] * x[i] * x[i] * x[i] * x[i];
    }
    const double rpi = std::sqrt(M_PI);
    CHECK(m0 == doctest::Approx(rpi).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(0.5 * rpi).epsilon(1e-13));
    CHECK(m4 == doctest::Approx(0.75 * rpi).epsilon(1e-13));
}

TEST_CASE("gauss-hermite grid normalizes a centered gaussian") {
    auto g = build_grid(MixtureParams::single({0.0}), LocationFamily::gaussian(1),
                        GridSpec::gauss_hermite(96));
    CHECK(g.norm_defect < 1e-9);
}

TEST_CASE("hellinger closed form for unit gaussians") {
    auto grid = std_grid();
    auto f0 = MixtureParams::single({0.0});
    auto f1 = MixtureParams::single({1.0});
    CHECK(hellinger(f0, f0, grid) == doctest::Approx(0.0).epsilon(1e-12));
    const double expected = std::sqrt(2.0 * (1.0 - std::exp(-1.0 / 8.0)));
    CHECK(hellinger(f0, f1, grid) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(hellinger(f1, f0, grid) == doctest::Approx(hellinger(f0, f1, grid)).epsilon(1e-14));
}

TEST_CASE("hellinger for the quarter-variance family") {
    auto fam = LocationFamily::gaussian_scaled(1, 0.5);
    auto grid = build_grid(MixtureParams::single({0.5}), fam, GridSpec::uniform(0.005, 8.0));
    auto fa = MixtureParams::single({0.5});
    auto fb = MixtureParams::single({0.6});
    const double expected = std::sqrt(2.0 * (1.0 - std::exp(-0.005)));
    CHECK(hellinger(fb, fa, grid) == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("hellinger triangle inequality on random triples") {
    auto grid = std_grid(16.0, 0.02);
    Rng rng(101);
    for (int rep = 0; rep < 30; ++rep) {
        auto a = random_mixture(rng, 2);
        auto b = random_mixture(rng, 2);
        auto c = random_mixture(rng, 3);
        const double ab = hellinger(a, b, grid);
        const double bc = hellinger(b, c, grid);
        const double ac = hellinger(a, c, grid);
        CHECK(ac <= ab + bc + 1e-9);
        CHECK(ab >= 0.0);
        CHECK(ab <= std::sqrt(2.0) + 1e-12);
    }
}

TEST_CASE("chi-square closed form") {
    auto grid = std_grid(20.0, 0.01);
    auto f0 = MixtureParams::single({0.0});
    CHECK(chi_square(f0, f0, grid) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(chi_square(MixtureParams::single({0.5}), f0, grid) ==
          doctest::Approx(std::exp(0.25) - 1.0).epsilon(1e-9));
    CHECK(chi_square(MixtureParams::single({1.0}), f0, grid) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-9));
}

TEST_CASE("chi-square reports divergence when the grid cannot hold it") {
    auto grid = std_grid(9.0, 0.01);
    // integrand mass sits near 2*theta = 10, outside the box
    CHECK_THROWS_AS(chi_square(MixtureParams::single({5.0}), MixtureParams::single({0.0}), grid),
                    DivergentIntegralError);
}

TEST_CASE("kl closed form and the h^2 lower bound") {
    auto grid = std_grid();
    auto f0 = MixtureParams::single({0.0});
    CHECK(kl(f0, f0, grid) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(kl(f0, MixtureParams::single({1.0}), grid) == doctest::Approx(0.5).epsilon(1e-9));

    Rng rng(55);
    for (int rep = 0; rep < 100; ++rep) {
        auto f = random_mixture(rng, 1 + static_cast<int>(rng.uniform_index(3)));
        const double d = kl(f0, f, grid);
        const double h = hellinger(f, f0, grid);
        CHECK(d >= h * h - 1e-10);
    }
}

TEST_CASE("total variation bounded by twice hellinger") {
    auto grid = std_grid(16.0, 0.02);
    auto f0 = MixtureParams::single({0.0});
    Rng rng(77);
    for (int rep = 0; rep < 50; ++rep) {
        auto f = random_mixture(rng, 2);
        CHECK(l1_distance(f, f0, grid) <= 2.0 * hellinger(f, f0, grid) + 1e-9);
    }
}

TEST_CASE("weighted density identities") {
    auto grid = std_grid(16.0, 0.02);
    auto f0 = MixtureParams::single({0.0});
    Rng rng(303);
    for (int rep = 0; rep < 100; ++rep) {
        auto f = random_mixture(rng, 1 + static_cast<int>(rng.uniform_index(3)));
        auto wd = weighted_density(f, f0, grid);
        CHECK(wd.norm2(grid) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(wd.inner_with_1(grid) == doctest::Approx(-wd.h / 2.0).epsilon(1e-6));
    }
}

TEST_CASE("weighted density rejects f = f*") {
    auto grid = std_grid();
    auto f0 = MixtureParams::single({0.0});
    CHECK_THROWS_AS(weighted_density(f0, f0, grid), DegenerateWeightingError);
}

TEST_CASE("empirical process basics") {
    Dataset d;
    d.dim = 1;
    d.points = {1.5};
    auto g = [](std::span<const double> x) { return x[0]; };
    CHECK(empirical_process(g, d, 0.25) == doctest::Approx(1.25).epsilon(1e-15));

    Dataset d2;
    d2.dim = 1;
    d2.points = {0.3, -1.0, 2.0, 0.7};
    auto c = [](std::span<const double>) { return 3.14; };
    CHECK(empirical_process(c, d2, 3.14) == 0.0);
}

TEST_CASE("likelihood inequality holds per sampled pair") {
    auto fam = LocationFamily::gaussian(1);
    auto grid = std_grid(16.0, 0.02);
    auto fstar = MixtureParams::two_component(0.5, -1.0, 1.0);
    auto gridstar = build_grid(fstar, fam, GridSpec::uniform(0.02, 16.0));
    Rng rng(99);
    for (int rep = 0; rep < 25; ++rep) {
        auto f = random_mixture(rng, 2);
        auto data = sample(fstar, fam, 400, 1000 + static_cast<std::uint64_t>(rep));
        auto wd = weighted_density(f, fstar, gridstar);
        const double mean_df = wd.inner_with_1(gridstar);
        const double nu = empirical_process([&](std::span<const double> x) { return wd(x); }, data,
                                            mean_df);
        double lr = 0.0;
        for (long i = 0; i < data.size(); ++i)
            lr += eval_log_density(f, fam, data.point(i)) -
                  eval_log_density(fstar, fam, data.point(i));
        CHECK(lr <= nu * nu + 1e-6);
    }
}

TEST_CASE("strassen normalization identity") {
    auto fam = LocationFamily::gaussian(1);
    auto data = sample(MixtureParams::single({0.0}), fam, 16, 4);
    auto g = [](std::span<const double> x) { return x[0] * x[0]; };
    const double nu = empirical_process(g, data, 1.0);
    const double in = strassen_normalized(g, data, 1.0);
    CHECK(in == doctest::Approx(nu / std::sqrt(2.0 * std::log(std::log(16.0)))).epsilon(1e-14));

    // independent arithmetic for n = 16
    double ssum = 0.0;
    for (long i = 0; i < data.size(); ++i) ssum += g(data.point(i)) - 1.0;
    CHECK(in == doctest::Approx(ssum / std::sqrt(2.0 * 16.0 * std::log(std::log(16.0)))).epsilon(1e-12));

    auto c = [](std::span<const double>) { return 2.0; };
    CHECK(strassen_normalized(c, data, 2.0) == 0.0);

    Dataset tiny;
    tiny.dim = 1;
    tiny.points = {0.0, 1.0};
    CHECK_THROWS_AS(strassen_normalized(g, tiny, 1.0), std::invalid_argument);
}

TEST_CASE("chi-square normalization approximates d_f as h shrinks") {
    auto grid = std_grid(16.0, 0.02);
    auto f0 = MixtureParams::single({0.0});
    // shrink a fixed perturbation direction toward f*
    double prev = 1e300;
    for (double target : {0.2, 0.1, 0.05, 0.025}) {
        // scale the location offset until h is close to the target
        double lo = 0.0, hi = 2.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double h = hellinger(MixtureParams::two_component(0.4, -mid, mid), f0, grid);
            (h > target ? hi : lo) = mid;
        }
        const double t = 0.5 * (lo + hi);
        auto f = MixtureParams::two_component(0.4, -t, t);
        auto wd = weighted_density(f, f0, grid);
        const double c2 = chi_square(f, f0, grid);
        double err2 = 0.0;
        for (long i = 0; i < grid.size(); ++i) {
            const double lf = eval_log_density(f, grid.family, grid.node(i));
            const double lr = lf - grid.fstar_log[static_cast<std::size_t>(i)];
            const double df = std::expm1(0.5 * lr) / wd.h;
            const double cf = std::expm1(lr) / std::sqrt(c2);
            err2 += grid.mass[static_cast<std::size_t>(i)] * (df - cf) * (df - cf);
        }
        const double err = std::sqrt(err2);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 0.05);
}

TEST_CASE("monte carlo grid for d >= 3 with reported standard error") {
    auto fam = LocationFamily::gaussian(3);
    auto fstar = MixtureParams::single(std::vector<double>{0.0, 0.0, 0.0});
    auto grid = build_grid(fstar, fam, GridSpec::monte_carlo(40000, 9));
    CHECK(grid.mc_standard_error > 0.0);
    MixtureParams shifted = MixtureParams::single(std::vector<double>{1.0, 0.0, 0.0});
    const double expected = std::sqrt(2.0 * (1.0 - std::exp(-1.0 / 8.0)));
    CHECK(hellinger(shifted, fstar, grid) == doctest::Approx(expected).epsilon(0.05));
}
