#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rpme/signal.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace rpme;

TEST_CASE("sampling preconditions") {
    CHECK_THROWS_AS(SignalPath::sample(NoiseModel::fbm(0.0), 0, 1, 0.01, 1), std::invalid_argument);
    CHECK_THROWS_AS(SignalPath::sample(NoiseModel::fbm(1.0), 0, 1, 0.01, 1), std::invalid_argument);
    CHECK_THROWS_AS(SignalPath::sample(NoiseModel::brownian(), 0, 1, -0.01, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(SignalPath::sample(NoiseModel::brownian(), 1, 0, 0.01, 1),
                    std::invalid_argument);
}

TEST_CASE("determinism and pinning at time zero") {
    const auto a = SignalPath::sample(NoiseModel::brownian(2), -0.5, 1.0, 0.01, 99);
    const auto b = SignalPath::sample(NoiseModel::brownian(2), -0.5, 1.0, 0.01, 99);
    REQUIRE(a.samples() == b.samples());
    for (int j = 0; j < a.samples(); ++j)
        for (int k = 0; k < 2; ++k) CHECK(a.value(j, k) == b.value(j, k));
    // z = 0 at time 0 (a sample of this window)
    const int j0 = 50;
    CHECK(a.sample_time(j0) == doctest::Approx(0.0));
    CHECK(a.value(j0, 0) == 0.0);
    CHECK(a.value(j0, 1) == 0.0);

    const auto c = SignalPath::sample(NoiseModel::brownian(2), -0.5, 1.0, 0.01, 100);
    bool differs = false;
    for (int j = 0; j < a.samples() && !differs; ++j) differs = a.value(j, 0) != c.value(j, 0);
    CHECK(differs);
}

TEST_CASE("brownian kind and fbm with H = 1/2 share the generator") {
    const auto a = SignalPath::sample(NoiseModel::brownian(), 0.0, 1.0, 0.01, 31);
    const auto b = SignalPath::sample(NoiseModel::fbm(0.5), 0.0, 1.0, 0.01, 31);
    REQUIRE(a.samples() == b.samples());
    for (int j = 0; j < a.samples(); ++j) CHECK(a.value(j, 0) == b.value(j, 0));
    CHECK(a.kind() == SignalKind::brownian);
    CHECK(b.kind() == SignalKind::fbm);
}

TEST_CASE("Brownian increment variance matches dt") {
    const double dt = 0.01;
    const int seeds = 3000;
    double sum = 0.0, sumsq = 0.0;
    long count = 0;
    for (int s = 0; s < seeds; ++s) {
        const auto p = SignalPath::sample(NoiseModel::fbm(0.5), 0.0, 1.0, dt, 1234 + s);
        for (int j = 0; j + 1 < p.samples(); ++j) {
            const double inc = p.value(j + 1, 0) - p.value(j, 0);
            sum += inc;
            sumsq += inc * inc;
            ++count;
        }
    }
    const double var = sumsq / count - (sum / count) * (sum / count);
    const double se = dt * std::sqrt(2.0 / count);
    CHECK(std::abs(var - dt) <= 3.0 * se);
}

TEST_CASE("fBm unit-time variance for several Hurst exponents") {
    for (double hurst : {0.3, 0.5, 0.7}) {
        const int seeds = 10000;
        double sumsq = 0.0;
        for (int s = 0; s < seeds; ++s) {
            const auto p = SignalPath::sample(NoiseModel::fbm(hurst), 0.0, 1.0, 0.02, 777 + s);
            const double z1 = p.value(p.samples() - 1, 0);
            sumsq += z1 * z1;
        }
        const double var = sumsq / seeds;
        const double se = std::sqrt(2.0 / seeds); // Var(z_1) = 1
        CHECK(std::abs(var - 1.0) <= 4.0 * se);
    }
}

TEST_CASE("fBm covariance against the closed form") {
    // reduced Monte-Carlo here; the acceptance suite runs the full version
    const int seeds = 4000;
    const double dt = 0.02;
    const std::vector<std::pair<double, double>> pairs = {
        {0.1, 0.3}, {0.2, 0.2}, {0.5, 0.9}, {0.3, 1.0}, {0.7, 0.8}, {1.0, 1.0}};
    for (double hurst : {0.3, 0.7}) {
        std::vector<double> sum_st(pairs.size(), 0.0), sum_sq(pairs.size(), 0.0);
        for (int s = 0; s < seeds; ++s) {
            const auto p = SignalPath::sample(NoiseModel::fbm(hurst), 0.0, 1.0, dt, 31337 + s);
            for (size_t q = 0; q < pairs.size(); ++q) {
                const double zs = p.value_at(pairs[q].first, 0);
                const double zt = p.value_at(pairs[q].second, 0);
                sum_st[q] += zs * zt;
                sum_sq[q] += zs * zs * zt * zt;
            }
        }
        for (size_t q = 0; q < pairs.size(); ++q) {
            const double est = sum_st[q] / seeds;
            const double exact = fbm_covariance(pairs[q].first, pairs[q].second, hurst);
            const double var_est = sum_sq[q] / seeds - est * est;
            const double se = std::sqrt(std::max(var_est, 1e-12) / seeds);
            CHECK(std::abs(est - exact) <= 4.5 * se);
        }
    }
}

TEST_CASE("increment stationarity") {
    const double dt = 0.02;
    const int seeds = 4000;
    // variance of z_{t+h} - z_t at two different anchors t
    for (double hurst : {0.3, 0.7}) {
        double v1 = 0.0, v2 = 0.0;
        const double h = 0.2;
        for (int s = 0; s < seeds; ++s) {
            const auto p = SignalPath::sample(NoiseModel::fbm(hurst), 0.0, 1.0, dt, 555 + s);
            const double d1 = p.value_at(0.2 + h, 0) - p.value_at(0.2, 0);
            const double d2 = p.value_at(0.7 + h, 0) - p.value_at(0.7, 0);
            v1 += d1 * d1;
            v2 += d2 * d2;
        }
        v1 /= seeds;
        v2 /= seeds;
        const double exact = std::pow(h, 2.0 * hurst);
        const double se = exact * std::sqrt(2.0 / seeds);
        CHECK(std::abs(v1 - exact) <= 4.0 * se);
        CHECK(std::abs(v2 - exact) <= 4.0 * se);
    }
}

TEST_CASE("shift: identity, group property, window") {
    const auto p = SignalPath::sample(NoiseModel::brownian(), -1.0, 1.0, 0.01, 5);
    const auto same = p.shift(0.0);
    for (int j = 0; j < p.samples(); ++j) CHECK(same.value(j, 0) == p.value(j, 0));

    const double s = 0.25;
    const auto fwd = p.shift(s);
    CHECK(fwd.t0() == doctest::Approx(-1.25));
    const auto back = fwd.shift(-s);
    REQUIRE(back.samples() == p.samples());
    // bit-equal because the path is pinned to zero at time 0
    for (int j = 0; j < p.samples(); ++j) CHECK(back.value(j, 0) == p.value(j, 0));

    CHECK_THROWS(p.shift(3.0));
    CHECK_THROWS(p.shift(0.0051)); // not a sample time
}

TEST_CASE("shifted Brownian path keeps its increment law") {
    const double dt = 0.01;
    const int seeds = 2000;
    double sumsq = 0.0;
    long count = 0;
    for (int s = 0; s < seeds; ++s) {
        const auto p = SignalPath::sample(NoiseModel::brownian(), 0.0, 1.0, dt, 9000 + s).shift(0.5);
        for (int j = 0; j + 1 < p.samples(); ++j) {
            const double inc = p.value(j + 1, 0) - p.value(j, 0);
            sumsq += inc * inc;
            ++count;
        }
    }
    const double var = sumsq / count;
    CHECK(std::abs(var - dt) <= 4.0 * dt * std::sqrt(2.0 / count));
}

TEST_CASE("piecewise_linear reproduces affine paths and converges") {
    // affine parent
    std::vector<double> vals;
    const int n = 129;
    for (int j = 0; j < n; ++j) vals.push_back(0.3 * j * 0.01 - 0.1);
    const auto lin = SignalPath::from_samples(0.0, 0.01, 1, vals);
    for (int level : {0, 2, 5}) {
        const auto pl = lin.piecewise_linear(level);
        CHECK(pl.kind() == SignalKind::piecewise_linear_of);
        CHECK(pl.parent_param() == level);
        CHECK(pl.sup_distance(lin) <= 1e-12);
    }

    // dyadic refinement approaches the parent (monotone-trend test: fitted
    // log-slope is clearly negative; exact coincidence at the finest level)
    const auto w = SignalPath::sample(NoiseModel::brownian(), 0.0, 1.0, 1.0 / 1024, 42);
    std::vector<double> dist;
    for (int level = 2; level <= 9; ++level)
        dist.push_back(w.piecewise_linear(level).sup_distance(w));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < dist.size(); ++i) {
        const double x = static_cast<double>(i), y = std::log2(dist[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nlev = static_cast<double>(dist.size());
    const double slope = (nlev * sxy - sx * sy) / (nlev * sxx - sx * sx);
    CHECK(slope <= -0.3);
    CHECK(dist.back() <= 0.25 * dist.front());
    CHECK(w.piecewise_linear(10).sup_distance(w) == 0.0); // level 10 hits every sample

    const auto zero = SignalPath::zero(1, 0.0, 1.0, 1.0 / 1024);
    CHECK(zero.piecewise_linear(3).sup_distance(zero) == 0.0);

    CHECK_THROWS_AS(w.piecewise_linear(11), std::invalid_argument);
}

TEST_CASE("mollify: unit mass, modulus bound, bookkeeping") {
    std::vector<double> cvals(201, 0.7);
    const auto c = SignalPath::from_samples(0.0, 0.005, 1, cvals);
    const auto cm = c.mollify(0.05);
    for (int j = 0; j < cm.samples(); ++j)
        CHECK(cm.value(j, 0) == doctest::Approx(0.7).epsilon(1e-13));

    // smooth sine parent: sup distance bounded by the modulus of continuity at eps
    std::vector<double> svals;
    const int n = 501;
    for (int j = 0; j < n; ++j) svals.push_back(std::sin(2.0 * M_PI * j / (n - 1.0)));
    const auto sine = SignalPath::from_samples(0.0, 1.0 / (n - 1.0), 1, svals);
    const double eps = 0.01;
    const auto sm = sine.mollify(eps);
    CHECK(sm.kind() == SignalKind::mollified_of);
    CHECK(sm.parent_param() == doctest::Approx(eps));
    CHECK(sm.sup_distance(sine) <= sine.modulus_of_continuity(eps) * (1.0 + 1e-12));

    CHECK_THROWS_AS(sine.mollify(0.5 / (n - 1.0)), std::invalid_argument);

    // mollification converges to the parent as eps -> 0
    const auto w = SignalPath::sample(NoiseModel::brownian(), 0.0, 1.0, 1.0 / 512, 4242);
    double prev = 1e300;
    for (double eps2 : {0.25, 0.125, 0.0625, 0.03125}) {
        const double d = w.mollify(eps2).sup_distance(w);
        CHECK(d <= prev * (1.0 + 1e-9));
        prev = d;
    }
}

TEST_CASE("modulus of continuity") {
    // linear path z = t
    std::vector<double> vals;
    for (int j = 0; j <= 100; ++j) vals.push_back(j * 0.01);
    const auto lin = SignalPath::from_samples(0.0, 0.01, 1, vals);
    CHECK(lin.modulus_of_continuity(0.25) == doctest::Approx(0.25).epsilon(1e-12));

    const auto zero = SignalPath::zero(2, 0.0, 1.0, 0.01);
    CHECK(zero.modulus_of_continuity(0.3) == 0.0);

    // h = dt equals the largest single increment; brute-force oracle
    const auto w = SignalPath::sample(NoiseModel::brownian(), 0.0, 1.0, 0.01, 11);
    double biggest = 0.0;
    for (int j = 0; j + 1 < w.samples(); ++j)
        biggest = std::max(biggest, std::abs(w.value(j + 1, 0) - w.value(j, 0)));
    CHECK(w.modulus_of_continuity(0.01) == doctest::Approx(biggest));

    // oracle for a larger lag: full double scan
    const double h = 0.17;
    double sup = 0.0;
    for (int a = 0; a < w.samples(); ++a)
        for (int b = a + 1; b < w.samples(); ++b)
            if ((b - a) * 0.01 <= h + 1e-12)
                sup = std::max(sup, std::abs(w.value(b, 0) - w.value(a, 0)));
    CHECK(w.modulus_of_continuity(h) == doctest::Approx(sup));
}

TEST_CASE("constant zero path and bounded variation flags") {
    const auto zero = SignalPath::zero(3, -1.0, 1.0, 0.1);
    CHECK(zero.kind() == SignalKind::constant_zero);
    CHECK(zero.is_bounded_variation());
    CHECK(zero.total_variation() == 0.0);

    const auto w = SignalPath::sample(NoiseModel::fbm(0.3), 0.0, 1.0, 0.01, 3);
    CHECK_FALSE(w.is_bounded_variation());
    CHECK(w.piecewise_linear(4).is_bounded_variation());
    CHECK(w.mollify(0.05).is_bounded_variation());
}

TEST_CASE("csv round trip is bit exact") {
    const auto p = SignalPath::sample(NoiseModel::brownian(2), 0.0, 0.5, 0.01, 77);
    std::stringstream ss;
    p.to_csv(ss);
    const auto q = SignalPath::from_csv(ss);
    REQUIRE(q.samples() == p.samples());
    REQUIRE(q.dimension() == 2);
    for (int j = 0; j < p.samples(); ++j)
        for (int k = 0; k < 2; ++k) CHECK(q.value(j, k) == p.value(j, k));
}
