#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rpme/operators.hpp"
#include "rpme/rds.hpp"

#include <cmath>
#include <memory>
#include <random>

using namespace rpme;

namespace {

std::shared_ptr<CoefficientSet> sine_coeffs(const GridPtr& g, double amp, double freq) {
    CoefficientTerm t;
    t.shape = CoefficientTerm::Shape::sine;
    t.amp = amp;
    t.wx = t.wy = freq;
    return std::make_shared<CoefficientSet>(g, std::vector<CoefficientTerm>{t});
}

Field bump_field(const GridPtr& g, double amp) {
    Field f(g);
    for (int i = 0; i < g->size(); ++i) f[i] = amp * std::exp(-2.0 * g->node_r2(i));
    return f;
}

CocycleRun make_run(uint64_t seed, double t_back = 2.0, double t_fwd = 1.0) {
    auto g = Grid::interval(-2.0, 2.0, 81);
    auto cs = sine_coeffs(g, 0.1, M_PI / 2.0);
    SolverConfig cfg;
    cfg.dt = 2e-3;
    // omega is sampled finer than the solver step so the absorbing-bound
    // partition has room under its 4 dt floor
    auto omega = SignalPath::sample(NoiseModel::brownian(), -t_back, t_fwd, 5e-4, seed);
    return CocycleRun(std::move(omega), cs, cfg);
}

} // namespace

TEST_CASE("cocycle: identity at t = 0 and zero preservation") {
    auto run = make_run(3);
    Field x = bump_field(run.grid(), 0.7);
    Field same = run.cocycle(0.0, -1.0, x);
    for (int i = 0; i < x.size(); ++i) CHECK(same[i] == x[i]);

    Field zero(run.grid());
    Field img = run.cocycle(1.5, -1.5, zero);
    for (int i = 0; i < img.size(); ++i) CHECK(img[i] == 0.0);

    CHECK_THROWS_AS(run.cocycle(5.0, -2.0, x), SolverError);
}

TEST_CASE("cocycle identity: two legs equal one leg") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uni(0.2, 0.8);
    for (uint64_t seed : {10u, 11u, 12u}) {
        auto run = make_run(seed);
        const double s = std::round(uni(rng) * 100.0) / 100.0;
        const double t = std::round(uni(rng) * 100.0) / 100.0;
        Field x = bump_field(run.grid(), 0.5 + 0.3 * uni(rng));
        Field one_leg = run.cocycle(s + t, -1.0, x);
        Field mid = run.cocycle(s, -1.0, x);
        Field two_leg = run.cocycle(t, -1.0 + s, mid);
        const double steps = (s + t) / run.config().dt;
        CHECK(norm_l1(one_leg - two_leg) <= 5.0 * run.config().newton_tol * steps);
    }
}

TEST_CASE("pullback report: trivial bundles") {
    auto run = make_run(21);
    Field zero(run.grid());
    const std::vector<double> times = {0.5, 1.0, 2.0};

    auto rep0 = pullback(run, {zero, zero}, times);
    for (size_t j = 0; j < times.size(); ++j) {
        CHECK(rep0.diam_l1[j] == 0.0);
        CHECK(rep0.diam_linf[j] == 0.0);
        CHECK(rep0.sup_norm[j] == 0.0);
    }

    Field x = bump_field(run.grid(), 0.6);
    auto rep1 = pullback(run, {x, x}, times);
    for (size_t j = 0; j < times.size(); ++j) CHECK(rep1.diam_l1[j] == 0.0);
}

TEST_CASE("pullback preserves ordering of the bundle") {
    auto run = make_run(22);
    Field x1 = bump_field(run.grid(), 0.3);
    Field x2 = bump_field(run.grid(), 0.6);
    Field x3 = bump_field(run.grid(), 0.9);
    auto rep = pullback(run, {x1, x2, x3}, {0.5, 1.0, 2.0});
    for (size_t j = 0; j < rep.times.size(); ++j) {
        for (int i = 0; i < x1.size(); ++i) {
            CHECK(rep.images[j][0][i] <= rep.images[j][1][i] + 1e-8);
            CHECK(rep.images[j][1][i] <= rep.images[j][2][i] + 1e-8);
        }
    }
}

TEST_CASE("absorption: images enter the U ball at time 1") {
    auto run = make_run(23, 4.0, 0.5);
    std::vector<Field> bundle;
    for (double amp : {0.5, 10.0, 1000.0}) bundle.push_back(bump_field(run.grid(), amp));
    auto rep = pullback(run, bundle, {0.5, 1.0, 2.0, 4.0});
    auto res = absorption_check(rep, run);
    REQUIRE(res.size() == 4);
    CHECK_FALSE(res[0].checked); // t < 1 is excluded
    for (size_t j = 1; j < res.size(); ++j) {
        CHECK(res[j].checked);
        CHECK(res[j].absorbed);
        CHECK(res[j].bound > 0.0);
    }
    // once absorbed, later times stay within the ball
    CHECK(res[2].margin >= -1e-9);
    CHECK(res[3].margin >= -1e-9);

    auto rep_short = pullback(run, bundle, {0.25, 0.5});
    CHECK_THROWS_AS(absorption_check(rep_short, run), std::invalid_argument);
}

TEST_CASE("diameter curve: deterministic contraction and slope fit") {
    auto g = Grid::interval(-2.0, 2.0, 81);
    auto cs = sine_coeffs(g, 0.4, M_PI / 2.0);
    SolverConfig cfg;
    cfg.dt = 2e-3;
    auto omega = SignalPath::zero(1, -4.0, 0.5, cfg.dt);
    CocycleRun run(std::move(omega), cs, cfg);

    std::vector<Field> bundle;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.1, 1.0);
    for (int k = 0; k < 4; ++k) bundle.push_back(bump_field(run.grid(), uni(rng)));
    auto rep = pullback(run, bundle, {0.5, 1.0, 2.0, 4.0});

    // deterministic porous medium flow contracts the L1 diameter
    for (size_t j = 1; j < rep.times.size(); ++j)
        CHECK(rep.diam_l1[j] <= rep.diam_l1[j - 1] * (1.0 + 1e-9));

    auto curve = attractor_diameter_curve(rep);
    CHECK(curve.times.size() == 4);
    CHECK(curve.log_slope < 0.0);

    auto rep2 = pullback(run, {bundle[0], bundle[0]}, {0.5, 1.0, 2.0});
    auto curve2 = attractor_diameter_curve(rep2);
    for (double d : curve2.diam_l1) CHECK(d == 0.0);
}

TEST_CASE("equicontinuity surrogate is reported and bounded") {
    auto run = make_run(29, 3.0, 0.5);
    std::vector<Field> bundle = {bump_field(run.grid(), 0.5), bump_field(run.grid(), 500.0)};
    auto rep = pullback(run, bundle, {1.0, 2.0});
    auto res = absorption_check(rep, run);
    for (size_t j = 0; j < rep.times.size(); ++j) {
        CHECK(rep.max_adjacent_diff[j] > 0.0);
        // trivial IC-independent estimate from the absorbing radius
        CHECK(rep.max_adjacent_diff[j] <= 2.0 * res[j].bound);
    }
}
