#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rpme/grid.hpp"
#include "rpme/operators.hpp"

#include <cmath>
#include <random>

using namespace rpme;

namespace {

Field random_field(const GridPtr& g, uint64_t seed, double amp = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-amp, amp);
    Field f(g);
    for (int i = 0; i < f.size(); ++i) f[i] = uni(rng);
    return f;
}

} // namespace

TEST_CASE("grid basics") {
    auto g = Grid::interval(0.0, 1.0, 99);
    CHECK(g->hx() == doctest::Approx(0.01));
    CHECK(g->node_x(0) == doctest::Approx(0.01));
    CHECK(g->node_x(98) == doctest::Approx(0.99));

    // weights positive, summing to |O| exactly
    double total = 0.0;
    for (int i = 0; i < g->size(); ++i) {
        CHECK(g->weight(i) > 0.0);
        total += g->weight(i);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));

    // R strictly exceeds the farthest node, so C4 > 0
    CHECK(g->enclosing_radius() > 0.99);
    CHECK(g->c4() > 0.0);

    auto r = Grid::rectangle(-1.0, 1.0, 13, -2.0, 1.0, 17);
    double total2 = 0.0;
    for (int i = 0; i < r->size(); ++i) total2 += r->weight(i);
    CHECK(total2 == doctest::Approx(6.0).epsilon(1e-13));
}

TEST_CASE("laplacian trivial and quadratic exactness") {
    auto g = Grid::interval(0.0, 1.0, 57);
    Field zero(g);
    Field lz = laplacian(zero);
    for (int i = 0; i < lz.size(); ++i) CHECK(lz[i] == 0.0);

    // u = x(1-x) has constant Laplacian -2; the 3-point stencil is exact on
    // quadratics and the boundary values vanish
    Field u(g);
    for (int i = 0; i < u.size(); ++i) {
        const double x = g->node_x(i);
        u[i] = x * (1.0 - x);
    }
    Field lu = laplacian(u);
    for (int i = 0; i < lu.size(); ++i) CHECK(lu[i] == doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("laplacian Taylor remainder on sin(pi x)") {
    const int n = 200;
    auto g = Grid::interval(0.0, 1.0, n);
    Field u(g);
    for (int i = 0; i < u.size(); ++i) u[i] = std::sin(M_PI * g->node_x(i));
    Field lu = laplacian(u);
    double worst = 0.0;
    for (int i = 0; i < u.size(); ++i)
        worst = std::max(worst, std::abs(lu[i] + M_PI * M_PI * u[i]));
    const double h = g->hx();
    const double taylor = std::pow(M_PI, 4.0) / 12.0 * h * h;
    CHECK(worst <= taylor * 1.05);
    CHECK(worst >= taylor * 0.5); // the bound is sharp up to lower-order terms
}

TEST_CASE("laplacian 2D separable quadratic") {
    auto g = Grid::rectangle(0.0, 1.0, 21, 0.0, 1.0, 34);
    Field u(g);
    for (int i = 0; i < u.size(); ++i) {
        const double x = g->node_x(i), y = g->node_y(i);
        u[i] = x * (1.0 - x) * y * (1.0 - y);
    }
    Field lu = laplacian(u);
    for (int i = 0; i < u.size(); ++i) {
        const double x = g->node_x(i), y = g->node_y(i);
        const double exact = -2.0 * y * (1.0 - y) - 2.0 * x * (1.0 - x);
        CHECK(lu[i] == doctest::Approx(exact).epsilon(1e-9));
    }
}

TEST_CASE("inverse laplacian analytic and round trip") {
    auto g = Grid::interval(0.0, 1.0, 199); // odd n puts a node at x = 1/2
    Field one(g, 1.0);
    Field v = inverse_laplacian(one);
    // -v'' = 1, v(0)=v(1)=0 => v = x(1-x)/2, quadratic => discretely exact
    const int mid = 99;
    CHECK(g->node_x(mid) == doctest::Approx(0.5));
    CHECK(v[mid] == doctest::Approx(0.125).epsilon(1e-11));

    Field zero(g);
    Field vz = inverse_laplacian(zero);
    for (int i = 0; i < vz.size(); ++i) CHECK(vz[i] == 0.0);

    Field u = random_field(g, 7);
    Field round = laplacian(inverse_laplacian(u));
    for (int i = 0; i < u.size(); ++i) CHECK(round[i] == doctest::Approx(-u[i]).epsilon(1e-10));

    auto g2 = Grid::rectangle(0.0, 1.0, 17, 0.0, 1.0, 19);
    Field u2 = random_field(g2, 8);
    Field round2 = laplacian(inverse_laplacian(u2));
    for (int i = 0; i < u2.size(); ++i)
        CHECK(round2[i] == doctest::Approx(-u2[i]).epsilon(1e-9));
}

TEST_CASE("norms: L1 of the unit field and dual eigenfunction") {
    auto g = Grid::interval(0.0, 1.0, 128);
    Field one(g, 1.0);
    CHECK(norm_l1(one) == doctest::Approx(1.0).epsilon(1e-13));

    Field u(g);
    for (int i = 0; i < u.size(); ++i) u[i] = std::sin(M_PI * g->node_x(i));
    // sin(pi x) is a discrete eigenfunction: ||u||_H = ||u||_2 / sqrt(lambda_h)
    const double exact = 1.0 / (M_PI * std::sqrt(2.0));
    const double h2 = g->hx() * g->hx();
    CHECK(std::abs(norm_hdual(u) - exact) / exact <= 2.0 * h2);
}

TEST_CASE("norms: homogeneity and triangle inequality on random triples") {
    auto g = Grid::interval(-2.0, 3.0, 61);
    for (uint64_t s = 1; s <= 6; ++s) {
        Field u = random_field(g, s), v = random_field(g, s + 100), w = u - v;
        Field nu = -1.0 * u;
        for (double p : {1.0, 2.0, 3.5}) {
            CHECK(norm_lp(nu, p) == doctest::Approx(norm_lp(u, p)).epsilon(1e-12));
            CHECK(norm_lp(u + v, p) <= norm_lp(u, p) + norm_lp(v, p) + 1e-12);
        }
        CHECK(norm_linf(nu) == doctest::Approx(norm_linf(u)).epsilon(1e-12));
        CHECK(norm_h10(nu) == doctest::Approx(norm_h10(u)).epsilon(1e-12));
        CHECK(norm_hdual(nu) == doctest::Approx(norm_hdual(u)).epsilon(1e-12));
        CHECK(norm_hdual(u + v) <= norm_hdual(u) + norm_hdual(v) + 1e-12);
        CHECK(norm_h10(u + v) <= norm_h10(u) + norm_h10(v) + 1e-12);
        (void)w;
    }
}

TEST_CASE("discrete Laplacian is symmetric negative definite") {
    auto g = Grid::interval(0.0, 2.0, 47);
    const double vol = g->cell_volume();
    for (uint64_t s = 0; s < 5; ++s) {
        Field u = random_field(g, 11 + s), v = random_field(g, 211 + s);
        Field lu = laplacian(u), lv = laplacian(v);
        double a = 0.0, b = 0.0, quad = 0.0;
        for (int i = 0; i < u.size(); ++i) {
            a += vol * lu[i] * v[i];
            b += vol * u[i] * lv[i];
            quad += vol * lu[i] * u[i];
        }
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
        CHECK(quad < 0.0);
        // and the Dirichlet form matches the H10 seminorm
        CHECK(-quad == doctest::Approx(norm_h10(u) * norm_h10(u)).epsilon(1e-11));
    }
}

TEST_CASE("Poincare bound for the dual norm") {
    auto g = Grid::interval(0.0, 1.0, 83);
    const double h = g->hx();
    const double lambda1 = (2.0 - 2.0 * std::cos(M_PI * h)) / (h * h);
    const double cp = 1.0 / std::sqrt(lambda1);
    for (uint64_t s = 0; s < 8; ++s) {
        Field u = random_field(g, 31 + s);
        double l2_uniform = 0.0;
        for (int i = 0; i < u.size(); ++i) l2_uniform += g->cell_volume() * u[i] * u[i];
        CHECK(norm_hdual(u) <= cp * std::sqrt(l2_uniform) * (1.0 + 1e-12));
    }
}

TEST_CASE("norm dispatcher routes all kinds") {
    auto g = Grid::interval(0.0, 1.0, 33);
    Field u = random_field(g, 3);
    CHECK(norm(u, NormKind::Lp, 1.0) == norm_l1(u));
    CHECK(norm(u, NormKind::Lp, 3.0) == norm_lp(u, 3.0));
    CHECK(norm(u, NormKind::Linf) == norm_linf(u));
    CHECK(norm(u, NormKind::H10) == norm_h10(u));
    CHECK(norm(u, NormKind::Hdual) == norm_hdual(u));
}

TEST_CASE("invalid norm parameters are rejected") {
    auto g = Grid::interval(0.0, 1.0, 10);
    Field u(g, 1.0);
    CHECK_THROWS_AS(norm_lp(u, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(norm_lp(u, std::numeric_limits<double>::infinity()), std::invalid_argument);
}
