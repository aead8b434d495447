#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rpme/operators.hpp"
#include "rpme/solver.hpp"
#include "rpme/zkb.hpp"

#include <cmath>
#include <cstring>
#include <random>

using namespace rpme;

namespace {

CoefficientSet constant_coeffs(const GridPtr& g, double amp = 1.0) {
    return CoefficientSet(g, {CoefficientTerm::parse("const " + std::to_string(amp))});
}

CoefficientSet sine_coeffs(const GridPtr& g, double amp, double freq) {
    CoefficientTerm t;
    t.shape = CoefficientTerm::Shape::sine;
    t.amp = amp;
    t.wx = t.wy = freq;
    return CoefficientSet(g, {t});
}

Field random_field(const GridPtr& g, uint64_t seed, double amp = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-amp, amp);
    Field f(g);
    for (int i = 0; i < f.size(); ++i) f[i] = uni(rng);
    return f;
}

} // namespace

TEST_CASE("mu_field combinations") {
    auto g = Grid::interval(0.0, 1.0, 64);

    // z = 0 gives vanishing mu and derivatives
    CoefficientSet cs = sine_coeffs(g, 1.0, M_PI);
    double z0 = 0.0;
    auto mu0 = cs.mu_field(&z0);
    for (int i = 0; i < g->size(); ++i) {
        CHECK(mu0.mu[i] == 0.0);
        CHECK(mu0.grad_x[i] == 0.0);
        CHECK(mu0.lap[i] == 0.0);
    }

    // constant coefficient: mu = -2, flat
    CoefficientSet cc = constant_coeffs(g, 1.0);
    double z2 = 2.0;
    auto mu2 = cc.mu_field(&z2);
    for (int i = 0; i < g->size(); ++i) {
        CHECK(mu2.mu[i] == doctest::Approx(-2.0));
        CHECK(mu2.grad_x[i] == 0.0);
        CHECK(mu2.lap[i] == 0.0);
    }

    // f = sin(pi x), z = 1: lap mu = pi^2 sin(pi x) analytically
    double z1 = 1.0;
    auto mus = cs.mu_field(&z1);
    for (int i = 0; i < g->size(); ++i) {
        const double s = std::sin(M_PI * g->node_x(i));
        CHECK(mus.mu[i] == doctest::Approx(-s).epsilon(1e-13));
        CHECK(mus.lap[i] == doctest::Approx(M_PI * M_PI * s).epsilon(1e-12));
    }
}

TEST_CASE("coefficient derivatives match finite differences of samples") {
    auto g = Grid::interval(-2.0, 2.0, 400);
    const double h = g->hx();
    for (const char* text : {"sin 0.5 0.785398163397448", "cos 0.3 1.2", "gauss 0.8 0.2 0.5"}) {
        CoefficientSet cs(g, {CoefficientTerm::parse(text)});
        double worst_g = 0.0, worst_l = 0.0;
        double z = -1.0; // mu = f
        auto mu = cs.mu_field(&z);
        for (int i = 1; i + 1 < g->size(); ++i) {
            const double fd_g = (mu.mu[i + 1] - mu.mu[i - 1]) / (2.0 * h);
            const double fd_l = (mu.mu[i + 1] - 2.0 * mu.mu[i] + mu.mu[i - 1]) / (h * h);
            worst_g = std::max(worst_g, std::abs(fd_g - mu.grad_x[i]));
            worst_l = std::max(worst_l, std::abs(fd_l - mu.lap[i]));
        }
        CHECK(worst_g <= 5.0 * h * h);
        CHECK(worst_l <= 5.0 * h * h);
    }
}

TEST_CASE("zero is an exact fixed point of all three schemes") {
    auto g = Grid::interval(-1.0, 1.0, 40);
    CoefficientSet cs = sine_coeffs(g, 0.5, M_PI);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    const auto z = SignalPath::sample(NoiseModel::brownian(), 0.0, 0.5, 1e-2, 4);
    Field zero(g);

    auto ty = solve_transformed(zero, z, cfg, cs, 0.5);
    auto tx = solve_rough(zero, z, cfg, cs, 0.5);
    auto td = solve_direct_bv(zero, z.piecewise_linear(4), cfg, cs, 0.5);
    for (const auto& traj : {ty, tx, td}) {
        for (const auto& f : traj.fields)
            for (int i = 0; i < f.size(); ++i) CHECK(f[i] == 0.0);
        for (const auto& d : traj.diags) CHECK(d.newton_iters == 0);
    }
}

TEST_CASE("one transformed step against a fine-dt reference") {
    auto g = Grid::interval(-4.0, 4.0, 200);
    CoefficientSet cs = constant_coeffs(g);
    const auto z = SignalPath::zero(1, 0.0, 1.0, 1e-3);
    Field y = zkb_field(g, 0.1, 2.0, 1.0);

    SolverConfig coarse;
    coarse.dt = 4e-3;
    coarse.delta = 0.05;
    Field one = step_transformed(y, 0.0, z, coarse, cs);

    SolverConfig fine = coarse;
    fine.dt = coarse.dt / 16.0;
    Field ref = y;
    for (int k = 0; k < 16; ++k) ref = step_transformed(ref, k * fine.dt, z, fine, cs);

    const double err_coarse = norm_l1(one - ref);
    CHECK(err_coarse <= 0.05); // O(dt) at worst

    // halving dt shrinks the one-step defect at second order (local error)
    SolverConfig half = coarse;
    half.dt = coarse.dt / 2.0;
    Field two = y;
    for (int k = 0; k < 2; ++k) two = step_transformed(two, k * half.dt, z, half, cs);
    const double err_half = norm_l1(two - ref);
    CHECK(err_half <= 0.6 * err_coarse);
}

TEST_CASE("spatially constant mu equals a time-rescaled mu = 0 run") {
    auto g = Grid::interval(-4.0, 4.0, 150);
    CoefficientSet cs = constant_coeffs(g);
    const double c = 0.4, m = 2.0;

    // f = 1 and z = -c gives mu = c on every node
    std::vector<double> vals(201, -c);
    const auto zc = SignalPath::from_samples(0.0, 1e-3, 1, vals);
    SolverConfig cfg;
    cfg.m = m;
    cfg.dt = 1e-3;
    cfg.delta = 0.05;
    Field y0 = zkb_field(g, 0.1, m, 1.0);
    auto run = solve_transformed(y0, zc, cfg, cs, 0.2);

    // oracle: mu = 0 with dt scaled by e^{(1-m)c}
    SolverConfig scaled = cfg;
    scaled.dt = cfg.dt * std::exp((1.0 - m) * c);
    const auto z0 = SignalPath::zero(1, 0.0, 1.0, 1e-3);
    auto oracle = solve_transformed(y0, z0, scaled, cs, 0.2 * std::exp((1.0 - m) * c));

    REQUIRE(run.fields.size() == oracle.fields.size());
    for (size_t j = 0; j < run.fields.size(); ++j)
        CHECK(norm_linf(run.fields[j] - oracle.fields[j]) <= 1e-8);
}

TEST_CASE("transformed solve: mass decay and energy inequality") {
    auto g = Grid::interval(-4.0, 4.0, 150);
    CoefficientSet cs = sine_coeffs(g, 0.5, M_PI / 4.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    const auto z = SignalPath::sample(NoiseModel::brownian(), 0.0, 0.3, 1e-3, 21);
    Field y0 = zkb_field(g, 0.1, 2.0, 1.0);

    auto traj = solve_transformed(y0, z, cfg, cs, 0.3);
    // energy inequality: Psi energy plus cumulative dissipation stays below
    // the initial energy plus the recorded source
    const double e0 = traj.diags.front().psi_energy;
    for (const auto& d : traj.diags)
        CHECK(d.psi_energy + d.dissipation_cum <= e0 + d.source_cum + 1e-8);

    // z = 0 and nonnegative data: L1 norm non-increasing (boundary outflow)
    const auto z0 = SignalPath::zero(1, 0.0, 0.3, 1e-3);
    auto det = solve_transformed(y0, z0, cfg, cs, 0.3);
    for (size_t j = 1; j < det.diags.size(); ++j)
        CHECK(det.diags[j].l1 <= det.diags[j - 1].l1 + 1e-10);

    // L^{m+1} a-priori bound: sup_t ||Y||^{m+1} below its initial value plus
    // the recorded source scale
    const double lmp1_0 = std::pow(det.diags.front().lmp1, 3.0);
    for (const auto& d : det.diags) CHECK(std::pow(d.lmp1, 3.0) <= lmp1_0 * (1.0 + 1e-9));
}

TEST_CASE("solve_rough: relation to transformed solve and positivity") {
    auto g = Grid::interval(-4.0, 4.0, 120);
    CoefficientSet cs = sine_coeffs(g, 0.5, M_PI / 4.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;

    // z = 0: identical to the transformed evolution
    const auto z0 = SignalPath::zero(1, 0.0, 0.2, 1e-3);
    Field x0 = zkb_field(g, 0.1, 2.0, 1.0);
    auto a = solve_rough(x0, z0, cfg, cs, 0.2);
    auto b = solve_transformed(x0, z0, cfg, cs, 0.2);
    REQUIRE(a.fields.size() == b.fields.size());
    for (size_t j = 0; j < a.fields.size(); ++j)
        CHECK(norm_linf(a.fields[j] - b.fields[j]) == 0.0);

    // nonnegative data stays nonnegative up to solver tolerance
    const auto z = SignalPath::sample(NoiseModel::brownian(), 0.0, 0.2, 1e-3, 31);
    auto traj = solve_rough(x0, z, cfg, cs, 0.2);
    for (const auto& f : traj.fields)
        for (int i = 0; i < f.size(); ++i) CHECK(f[i] >= -1e-9);
}

TEST_CASE("direct BV scheme agrees with the rough scheme for z = 0") {
    auto g = Grid::interval(-4.0, 4.0, 100);
    CoefficientSet cs = sine_coeffs(g, 0.5, M_PI / 4.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    const auto z0 = SignalPath::zero(1, 0.0, 0.2, 1e-3);
    Field x0 = zkb_field(g, 0.1, 2.0, 1.0);
    auto a = solve_rough(x0, z0, cfg, cs, 0.2);
    auto b = solve_direct_bv(x0, z0, cfg, cs, 0.2);
    for (size_t j = 0; j < a.fields.size(); ++j)
        CHECK(norm_linf(a.fields[j] - b.fields[j]) <= 1e-10);

    const auto w = SignalPath::sample(NoiseModel::brownian(), 0.0, 0.2, 1e-3, 3);
    CHECK_THROWS_AS(solve_direct_bv(x0, w, cfg, cs, 0.2), SolverError);
}

TEST_CASE("monotone step: ordered states stay ordered") {
    auto g = Grid::interval(-2.0, 2.0, 80);
    CoefficientSet cs = sine_coeffs(g, 0.4, M_PI / 2.0);
    const auto z = SignalPath::sample(NoiseModel::brownian(), 0.0, 0.1, 1e-3, 9);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.delta = 0.08;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(0.0, 0.5);
    for (int rep = 0; rep < 20; ++rep) {
        Field lo = random_field(g, 100 + rep, 0.8);
        Field hi = lo;
        for (int i = 0; i < hi.size(); ++i) hi[i] += uni(rng);
        Field lo1 = step_transformed(lo, 0.0, z, cfg, cs);
        Field hi1 = step_transformed(hi, 0.0, z, cfg, cs);
        for (int i = 0; i < lo1.size(); ++i) CHECK(lo1[i] <= hi1[i] + 2.0 * cfg.newton_tol);
    }
}

TEST_CASE("deterministic solver: equal inputs give bit-identical runs") {
    auto g = Grid::interval(-1.0, 1.0, 60);
    CoefficientSet cs = sine_coeffs(g, 0.5, M_PI);
    SolverConfig cfg;
    cfg.dt = 2e-3;
    const auto z = SignalPath::sample(NoiseModel::fbm(0.7), 0.0, 0.2, 2e-3, 12);
    Field x0 = random_field(g, 55, 0.5);
    auto a = solve_rough(x0, z, cfg, cs, 0.2);
    auto b = solve_rough(x0, z, cfg, cs, 0.2);
    REQUIRE(a.fields.size() == b.fields.size());
    for (size_t j = 0; j < a.fields.size(); ++j)
        CHECK(std::memcmp(a.fields[j].v.data(), b.fields[j].v.data(),
                          a.fields[j].v.size() * sizeof(double)) == 0);
}

TEST_CASE("limit solution: bounded data short-circuits, spike obeys contraction") {
    auto g = Grid::interval(-2.0, 2.0, 100);
    CoefficientSet cs = constant_coeffs(g, 0.5);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    const auto z = SignalPath::sample(NoiseModel::brownian(), 0.0, 0.1, 1e-3, 41);

    Field x0 = random_field(g, 5, 0.5);
    auto plain = limit_solution(x0, {10.0, 100.0}, z, cfg, cs, 0.1);
    CHECK(plain.error_estimate == 0.0);
    for (double inc : plain.cauchy_increments) CHECK(inc == 0.0);

    Field spike(g);
    spike[50] = 1000.0;
    auto lim = limit_solution(spike, {10.0, 100.0, 1000.0}, z, cfg, cs, 0.1);
    REQUIRE(lim.cauchy_increments.size() == 2);
    // slices after the smoothing layer sit below the universal bound
    {
        const double R = g->enclosing_radius();
        const auto part = choose_partition(z, cs, cfg.m, R, 0.1);
        const auto u = uniform_bound_U(part, cs, z, cfg.m, R);
        for (size_t j = 0; j < lim.trajectory.times.size(); ++j) {
            if (lim.trajectory.times[j] < 0.05) continue;
            for (int i = 0; i < g->size(); ++i)
                CHECK(lim.trajectory.fields[j][i] <=
                      u.evaluate_x(lim.trajectory.times[j], i) + 1e-8);
        }
    }
    // increments are controlled by the L1 distance of the clamped data
    const double w1 = g->weight(50);
    CHECK(lim.cauchy_increments[0] <= 10.0 * (100.0 - 10.0) * w1);
    CHECK(lim.cauchy_increments[1] <= 10.0 * (1000.0 - 100.0) * w1);
    CHECK(lim.cauchy_increments[1] / (900.0 * w1) <= 2.0);
}

TEST_CASE("very weak residual: zero trajectory, corruption, basic magnitude") {
    auto g = Grid::interval(-4.0, 4.0, 200);
    CoefficientSet cs = sine_coeffs(g, 0.5, M_PI / 4.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    const auto z0 = SignalPath::zero(1, 0.0, 0.2, 1e-3);

    Field zero(g);
    auto zt = solve_transformed(zero, z0, cfg, cs, 0.2);
    TestFunction eta{0.2, 1, 1};
    CHECK(very_weak_residual(zt, eta, cs, z0, 2.0) <= 1e-12);

    Field y0 = zkb_field(g, 0.1, 2.0, 1.0);
    auto traj = solve_transformed(y0, z0, cfg, cs, 0.2);
    const double res = very_weak_residual(traj, eta, cs, z0, 2.0);

    Trajectory corrupted = traj;
    const size_t mid = corrupted.fields.size() / 2;
    for (double& v : corrupted.fields[mid].v) v = 0.0;
    const double res_bad = very_weak_residual(corrupted, eta, cs, z0, 2.0);
    CHECK(res_bad >= 100.0 * res);
}

TEST_CASE("2D: rough solve, ordering, and mu registry") {
    auto g = Grid::rectangle(-1.0, 1.0, 24, -1.0, 1.0, 24);
    CoefficientSet cs = sine_coeffs(g, 0.3, M_PI / 2.0);
    SolverConfig cfg;
    cfg.dt = 2e-3;

    // sin(wx x) sin(wy y) has analytic laplacian -(wx^2 + wy^2) f
    double zval = 1.0;
    auto mu = cs.mu_field(&zval);
    const double w2 = 2.0 * (M_PI / 2.0) * (M_PI / 2.0);
    for (int i = 0; i < g->size(); ++i)
        CHECK(mu.lap[i] == doctest::Approx(-w2 * mu.mu[i]).epsilon(1e-11));

    const auto z = SignalPath::sample(NoiseModel::brownian(), 0.0, 0.1, 2e-3, 14);
    Field x0(g);
    for (int i = 0; i < g->size(); ++i)
        x0[i] = 0.8 * std::exp(-3.0 * g->node_r2(i));
    auto traj = solve_rough(x0, z, cfg, cs, 0.1);
    CHECK(traj.final().all_finite());
    for (const auto& f : traj.fields)
        for (int i = 0; i < f.size(); ++i) CHECK(f[i] >= -1e-9);

    // z = 0 agrees between the rough and transformed paths in 2D as well
    const auto z0 = SignalPath::zero(1, 0.0, 0.1, 2e-3);
    auto a = solve_rough(x0, z0, cfg, cs, 0.1);
    auto b = solve_transformed(x0, z0, cfg, cs, 0.1);
    CHECK(norm_linf(a.final() - b.final()) == 0.0);

    // ordered data stays ordered
    Field hi = x0;
    for (int i = 0; i < g->size(); ++i) hi[i] += 0.2;
    auto tlo = solve_rough(x0, z, cfg, cs, 0.1);
    auto thi = solve_rough(hi, z, cfg, cs, 0.1);
    for (size_t j = 0; j < tlo.fields.size(); ++j)
        for (int i = 0; i < g->size(); ++i)
            CHECK(tlo.fields[j][i] <= thi.fields[j][i] + 1e-8);

    // residual checker runs on 2D trajectories
    TestFunction eta{0.1, 1, 1};
    auto ty = solve_transformed(x0, z0, cfg, cs, 0.1);
    CHECK(very_weak_residual(ty, eta, cs, z0, 2.0) <= 0.05);
}

TEST_CASE("solver error reporting") {
    auto g = Grid::interval(-1.0, 1.0, 30);
    CoefficientSet cs = constant_coeffs(g);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    const auto z = SignalPath::zero(1, 0.0, 0.05, 1e-2);
    Field bad(g);
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_transformed(bad, z, cfg, cs, 0.05), SolverError);

    Field ok(g, 0.5);
    CHECK_THROWS_AS(solve_transformed(ok, z, cfg, cs, 5.0), SolverError); // window too short
}
