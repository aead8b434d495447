#include "rpme/operators.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>

namespace rpme {

Field laplacian(const Field& u) {
    const Grid& g = *u.grid;
    Field r(u.grid);
    if (g.dim() == 1) {
        const int n = g.nx();
        const double c = 1.0 / (g.hx() * g.hx());
        for (int i = 0; i < n; ++i) {
            const double left = i > 0 ? u[i - 1] : 0.0;
            const double right = i < n - 1 ? u[i + 1] : 0.0;
            r[i] = c * (left - 2.0 * u[i] + right);
        }
    } else {
        const int nx = g.nx(), ny = g.ny();
        const double cx = 1.0 / (g.hx() * g.hx());
        const double cy = 1.0 / (g.hy() * g.hy());
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const int i = ix + nx * iy;
                const double l = ix > 0 ? u[i - 1] : 0.0;
                const double rr = ix < nx - 1 ? u[i + 1] : 0.0;
                const double d = iy > 0 ? u[i - nx] : 0.0;
                const double up = iy < ny - 1 ? u[i + nx] : 0.0;
                r[i] = cx * (l - 2.0 * u[i] + rr) + cy * (d - 2.0 * u[i] + up);
            }
        }
    }
    return r;
}

Field inverse_laplacian(const Field& u) {
    Field r(u.grid);
    u.grid->poisson_solve(u.v.data(), r.v.data());
    return r;
}

double integrate(const Field& u) {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += u.grid->weight(i) * u[i];
    return s;
}

double inner(const Field& a, const Field& b) {
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) s += a.grid->weight(i) * a[i] * b[i];
    return s;
}

double norm_lp(const Field& u, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("norm: p must be in [1, inf)");
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += u.grid->weight(i) * std::pow(std::abs(u[i]), p);
    return std::pow(s, 1.0 / p);
}

double norm_l1(const Field& u) {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += u.grid->weight(i) * std::abs(u[i]);
    return s;
}

double norm_l2(const Field& u) {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += u.grid->weight(i) * u[i] * u[i];
    return std::sqrt(s);
}

double norm_linf(const Field& u) {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s = std::max(s, std::abs(u[i]));
    return s;
}

// Edge sum of the Dirichlet form: ||u||^2 = sum over lattice edges of
// h^d |du/h|^2, boundary values zero. Equals (u, -Lap_h u) h^d exactly.
double norm_h10(const Field& u) {
    const Grid& g = *u.grid;
    double s = 0.0;
    if (g.dim() == 1) {
        const int n = g.nx();
        const double h = g.hx();
        double prev = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double cur = i < n ? u[i] : 0.0;
            const double d = (cur - prev) / h;
            s += h * d * d;
            prev = cur;
        }
    } else {
        const int nx = g.nx(), ny = g.ny();
        const double hx = g.hx(), hy = g.hy(), vol = hx * hy;
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix <= nx; ++ix) {
                const double a = ix > 0 ? u[(ix - 1) + nx * iy] : 0.0;
                const double b = ix < nx ? u[ix + nx * iy] : 0.0;
                const double d = (b - a) / hx;
                s += vol * d * d;
            }
        }
        for (int ix = 0; ix < nx; ++ix) {
            for (int iy = 0; iy <= ny; ++iy) {
                const double a = iy > 0 ? u[ix + nx * (iy - 1)] : 0.0;
                const double b = iy < ny ? u[ix + nx * iy] : 0.0;
                const double d = (b - a) / hy;
                s += vol * d * d;
            }
        }
    }
    return std::sqrt(s);
}

// ||u||_H^2 = h^d (u, (-Lap_h)^{-1} u). Uniform cell weights keep the
// bilinear form symmetric, which the round-trip identity relies on.
double norm_hdual(const Field& u) {
    Field w = inverse_laplacian(u);
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += u[i] * w[i];
    s *= u.grid->cell_volume();
    return std::sqrt(std::max(0.0, s));
}

double norm(const Field& u, NormKind which, double p) {
    switch (which) {
        case NormKind::Lp: return norm_lp(u, p);
        case NormKind::Linf: return norm_linf(u);
        case NormKind::H10: return norm_h10(u);
        case NormKind::Hdual: return norm_hdual(u);
    }
    throw std::logic_error("norm: unknown kind");
}

} // namespace rpme
