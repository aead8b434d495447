#include "rpme/solver.hpp"

#include "rpme/operators.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <memory>

namespace rpme {

double SolverConfig::resolved_delta(const Grid& grid) const {
    if (delta > 0.0) return delta;
    const double h = grid.dim() == 1 ? grid.hx() : std::max(grid.hx(), grid.hy());
    return std::min(0.5, std::max(1e-6, std::pow(h, 2.0 / (m + 1.0))));
}

namespace {

// Cumulative table of Psi^delta for the per-step energy diagnostic. The
// public psi_delta stays quadrature-based; this is an O(1) lookup with the
// same values to ~1e-12.
class PsiTable {
  public:
    explicit PsiTable(const PhiSpec& spec) : spec_(spec) {
        rmax_ = 2.0 / spec.delta();
        const int cells = 4096;
        h_ = rmax_ / cells;
        val_.resize(static_cast<size_t>(cells + 1));
        slope_.resize(static_cast<size_t>(cells + 1));
        val_[0] = 0.0;
        slope_[0] = 0.0;
        for (int i = 0; i < cells; ++i) {
            const double a = h_ * i, b = a + h_;
            const double fa = spec.phi_delta(a).value;
            const double fm = spec.phi_delta(0.5 * (a + b)).value;
            const double fb = spec.phi_delta(b).value;
            val_[static_cast<size_t>(i + 1)] = val_[static_cast<size_t>(i)] + h_ / 6.0 * (fa + 4.0 * fm + fb);
            slope_[static_cast<size_t>(i)] = fa;
            slope_[static_cast<size_t>(i + 1)] = fb;
        }
        tail_value_ = spec.phi_delta(rmax_).value;
        tail_slope_ = spec.phi_delta(rmax_ + 1.0).value - tail_value_; // constant tail slope
        psi_rmax_ = val_.back();
    }

    double operator()(double r) const {
        const double a = std::abs(r);
        if (a >= rmax_) {
            const double s = a - rmax_;
            return psi_rmax_ + tail_value_ * s + 0.5 * tail_slope_ * s * s;
        }
        const int i = std::min(static_cast<int>(val_.size()) - 2,
                               static_cast<int>(std::floor(a / h_)));
        const double u = a / h_ - i;
        const double y0 = val_[static_cast<size_t>(i)], y1 = val_[static_cast<size_t>(i + 1)];
        const double d0 = slope_[static_cast<size_t>(i)] * h_, d1 = slope_[static_cast<size_t>(i + 1)] * h_;
        const double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * d0 + (-2 * u3 + 3 * u2) * y1 +
               (u3 - u2) * d1;
    }

  private:
    const PhiSpec& spec_;
    double rmax_, h_, tail_value_, tail_slope_, psi_rmax_;
    std::vector<double> val_, slope_;
};

struct Workspace {
    GridPtr grid;
    // 1D Thomas arrays
    std::vector<double> sub, diag, sup, rhs;
    // 2D sparse machinery
    Eigen::SparseMatrix<double> jac;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu;
    bool pattern_ready = false;

    explicit Workspace(GridPtr g) : grid(std::move(g)) {
        const int n = grid->size();
        if (grid->dim() == 1) {
            sub.resize(static_cast<size_t>(n));
            diag.resize(static_cast<size_t>(n));
            sup.resize(static_cast<size_t>(n));
            rhs.resize(static_cast<size_t>(n));
        } else {
            jac.resize(n, n);
            lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
        }
    }
};

// residual of the generic implicit system
//   F(U) = U - b - dt * E .* Lap_h(W .* phidelta(U)) - M .* U
struct ImplicitSystem {
    const Grid* grid;
    const PhiSpec* phi;
    double dt;
    const std::vector<double>* e; // multiplier in front of the Laplacian
    const std::vector<double>* w; // weight inside the Laplacian
    const std::vector<double>* m; // zeroth-order multiplier (may be null)
    const Field* b;

    void flux(const std::vector<double>& u, std::vector<double>& g) const {
        const int n = grid->size();
        for (int i = 0; i < n; ++i)
            g[static_cast<size_t>(i)] =
                (*w)[static_cast<size_t>(i)] * phi->phi_delta(u[static_cast<size_t>(i)]).value;
    }

    double residual(const std::vector<double>& u, std::vector<double>& g,
                    std::vector<double>& f) const {
        flux(u, g);
        const int n = grid->size();
        double sup = 0.0;
        if (grid->dim() == 1) {
            const double c = 1.0 / (grid->hx() * grid->hx());
            for (int i = 0; i < n; ++i) {
                const double gl = i > 0 ? g[static_cast<size_t>(i - 1)] : 0.0;
                const double gr = i < n - 1 ? g[static_cast<size_t>(i + 1)] : 0.0;
                const double lap = c * (gl - 2.0 * g[static_cast<size_t>(i)] + gr);
                double fi = u[static_cast<size_t>(i)] - (*b)[i] -
                            dt * (*e)[static_cast<size_t>(i)] * lap;
                if (m) fi -= (*m)[static_cast<size_t>(i)] * u[static_cast<size_t>(i)];
                f[static_cast<size_t>(i)] = fi;
                sup = std::max(sup, std::abs(fi));
            }
        } else {
            const int nx = grid->nx(), ny = grid->ny();
            const double cx = 1.0 / (grid->hx() * grid->hx());
            const double cy = 1.0 / (grid->hy() * grid->hy());
            for (int iy = 0; iy < ny; ++iy) {
                for (int ix = 0; ix < nx; ++ix) {
                    const int i = ix + nx * iy;
                    const double gl = ix > 0 ? g[static_cast<size_t>(i - 1)] : 0.0;
                    const double gr = ix < nx - 1 ? g[static_cast<size_t>(i + 1)] : 0.0;
                    const double gd = iy > 0 ? g[static_cast<size_t>(i - nx)] : 0.0;
                    const double gu = iy < ny - 1 ? g[static_cast<size_t>(i + nx)] : 0.0;
                    const double lap = cx * (gl - 2.0 * g[static_cast<size_t>(i)] + gr) +
                                       cy * (gd - 2.0 * g[static_cast<size_t>(i)] + gu);
                    double fi = u[static_cast<size_t>(i)] - (*b)[i] -
                                dt * (*e)[static_cast<size_t>(i)] * lap;
                    if (m) fi -= (*m)[static_cast<size_t>(i)] * u[static_cast<size_t>(i)];
                    f[static_cast<size_t>(i)] = fi;
                    sup = std::max(sup, std::abs(fi));
                }
            }
        }
        return sup;
    }

    // slope[i]: either phidelta'(u_i) (Newton) or phidelta(u_i)/u_i (Picard)
    void solve_linear(Workspace& ws, const std::vector<double>& slope,
                      const std::vector<double>& f, std::vector<double>& s) const {
        const int n = grid->size();
        if (grid->dim() == 1) {
            const double c = 1.0 / (grid->hx() * grid->hx());
            for (int i = 0; i < n; ++i) {
                const double wd = (*w)[static_cast<size_t>(i)] * slope[static_cast<size_t>(i)];
                double d = 1.0 + 2.0 * dt * (*e)[static_cast<size_t>(i)] * c * wd;
                if (m) d -= (*m)[static_cast<size_t>(i)];
                ws.diag[static_cast<size_t>(i)] = d;
                ws.sub[static_cast<size_t>(i)] =
                    i > 0 ? -dt * (*e)[static_cast<size_t>(i)] * c *
                                (*w)[static_cast<size_t>(i - 1)] * slope[static_cast<size_t>(i - 1)]
                          : 0.0;
                ws.sup[static_cast<size_t>(i)] =
                    i < n - 1 ? -dt * (*e)[static_cast<size_t>(i)] * c *
                                    (*w)[static_cast<size_t>(i + 1)] * slope[static_cast<size_t>(i + 1)]
                              : 0.0;
                ws.rhs[static_cast<size_t>(i)] = -f[static_cast<size_t>(i)];
            }
            // Thomas sweep
            for (int i = 1; i < n; ++i) {
                const double w_ = ws.sub[static_cast<size_t>(i)] / ws.diag[static_cast<size_t>(i - 1)];
                ws.diag[static_cast<size_t>(i)] -= w_ * ws.sup[static_cast<size_t>(i - 1)];
                ws.rhs[static_cast<size_t>(i)] -= w_ * ws.rhs[static_cast<size_t>(i - 1)];
            }
            s[static_cast<size_t>(n - 1)] = ws.rhs[static_cast<size_t>(n - 1)] / ws.diag[static_cast<size_t>(n - 1)];
            for (int i = n - 2; i >= 0; --i)
                s[static_cast<size_t>(i)] = (ws.rhs[static_cast<size_t>(i)] -
                                             ws.sup[static_cast<size_t>(i)] * s[static_cast<size_t>(i + 1)]) /
                                            ws.diag[static_cast<size_t>(i)];
            return;
        }
        const int nx = grid->nx(), ny = grid->ny();
        const double cx = 1.0 / (grid->hx() * grid->hx());
        const double cy = 1.0 / (grid->hy() * grid->hy());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(5 * n));
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const int i = ix + nx * iy;
                const double ei = (*e)[static_cast<size_t>(i)];
                double d = 1.0 + 2.0 * dt * ei * (cx + cy) * (*w)[static_cast<size_t>(i)] *
                                     slope[static_cast<size_t>(i)];
                if (m) d -= (*m)[static_cast<size_t>(i)];
                trip.emplace_back(i, i, d);
                auto off = [&](int j, double c) {
                    trip.emplace_back(i, j,
                                      -dt * ei * c * (*w)[static_cast<size_t>(j)] *
                                          slope[static_cast<size_t>(j)]);
                };
                if (ix > 0) off(i - 1, cx);
                if (ix < nx - 1) off(i + 1, cx);
                if (iy > 0) off(i - nx, cy);
                if (iy < ny - 1) off(i + nx, cy);
            }
        }
        ws.jac.setFromTriplets(trip.begin(), trip.end());
        if (!ws.pattern_ready) {
            ws.lu->analyzePattern(ws.jac);
            ws.pattern_ready = true;
        }
        ws.lu->factorize(ws.jac);
        if (ws.lu->info() != Eigen::Success)
            throw SolverError(SolverError::Code::newton_diverged, "Jacobian factorization failed");
        Eigen::Map<const Eigen::VectorXd> fv(f.data(), n);
        Eigen::VectorXd sv = ws.lu->solve(-fv);
        for (int i = 0; i < n; ++i) s[static_cast<size_t>(i)] = sv[i];
    }
};

// damped Newton with a frozen-secant Picard fallback
Field implicit_solve(const ImplicitSystem& sys, Workspace& ws, const SolverConfig& cfg,
                     StepDiag* diag) {
    const int n = sys.grid->size();
    std::vector<double> u(sys.b->v), g(static_cast<size_t>(n)), f(static_cast<size_t>(n)),
        s(static_cast<size_t>(n)), slope(static_cast<size_t>(n)), utry(static_cast<size_t>(n)),
        ftry(static_cast<size_t>(n));
    double r = sys.residual(u, g, f);
    int iters = 0, stalls = 0;
    bool picard = false;

    while (r > cfg.newton_tol && iters < cfg.newton_max) {
        for (int i = 0; i < n; ++i)
            slope[static_cast<size_t>(i)] = sys.phi->phi_delta(u[static_cast<size_t>(i)]).deriv;
        sys.solve_linear(ws, slope, f, s);
        double lam = 1.0;
        bool accepted = false;
        for (int trial = 0; trial < 12 && !accepted; ++trial, lam *= 0.5) {
            for (int i = 0; i < n; ++i)
                utry[static_cast<size_t>(i)] = u[static_cast<size_t>(i)] + lam * s[static_cast<size_t>(i)];
            const double rtry = sys.residual(utry, g, ftry);
            if (std::isfinite(rtry) && (rtry <= (1.0 - 1e-4 * lam) * r || rtry <= cfg.newton_tol)) {
                u.swap(utry);
                f.swap(ftry);
                r = rtry;
                accepted = true;
            }
        }
        ++iters;
        if (!accepted && ++stalls >= 2) break;
    }

    if (r > cfg.newton_tol) {
        // Picard: refresh the secant slope phidelta(u)/u and resolve
        picard = true;
        const double slope0 = sys.phi->phi_delta(0.0).deriv;
        for (int k = 0; k < 400 && r > cfg.newton_tol; ++k) {
            for (int i = 0; i < n; ++i) {
                const double ui = u[static_cast<size_t>(i)];
                slope[static_cast<size_t>(i)] =
                    ui != 0.0 ? sys.phi->phi_delta(ui).value / ui : slope0;
            }
            // solve the frozen-slope linear problem from scratch: J_sec U = b
            // expressed as a Newton-like correction about u
            sys.solve_linear(ws, slope, f, s);
            for (int i = 0; i < n; ++i) u[static_cast<size_t>(i)] += s[static_cast<size_t>(i)];
            r = sys.residual(u, g, f);
            if (!std::isfinite(r)) break;
            ++iters;
        }
    }

    if (!(r <= cfg.newton_tol))
        throw SolverError(SolverError::Code::newton_diverged,
                          "nonlinear step stalled at residual " + std::to_string(r) +
                              " (dt or delta too aggressive)");
    Field out(sys.b->grid);
    out.v = std::move(u);
    if (diag) {
        diag->newton_iters = iters;
        diag->residual = r;
        diag->picard = picard;
    }
    return out;
}

std::vector<double> path_values_at(const SignalPath& z, double t) {
    std::vector<double> v(static_cast<size_t>(z.dimension()));
    for (int k = 0; k < z.dimension(); ++k) v[static_cast<size_t>(k)] = z.value_at(t, k);
    return v;
}

// per-step energy bookkeeping shared by the three schemes
struct EnergyAccount {
    double dissipation = 0.0, source = 0.0;
};

EnergyAccount energy_update(const Grid& grid, const PhiSpec& phi, const std::vector<double>& e,
                            const std::vector<double>& w, const Field& unew, const Field& uold,
                            double dt, const PsiTable& psi) {
    const int n = grid.size();
    const double vol = grid.cell_volume();
    // production from the actual update (includes the Newton defect)
    double prod = 0.0;
    for (int i = 0; i < n; ++i)
        prod += phi.phi_delta(unew[i]).value * (unew[i] - uold[i]);
    prod *= vol / dt;

    // edge dissipation of the flux G = W phidelta(U) with weight a = E/W
    std::vector<double> g(static_cast<size_t>(n)), a(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        g[static_cast<size_t>(i)] = w[static_cast<size_t>(i)] * phi.phi_delta(unew[i]).value;
        a[static_cast<size_t>(i)] = e[static_cast<size_t>(i)] / w[static_cast<size_t>(i)];
    }
    double diss = 0.0;
    auto edge = [&](int i, int j, double h) {
        const double ga = i >= 0 ? g[static_cast<size_t>(i)] : 0.0;
        const double gb = j >= 0 ? g[static_cast<size_t>(j)] : 0.0;
        const double aa = i >= 0 ? a[static_cast<size_t>(i)] : a[static_cast<size_t>(j)];
        const double ab = j >= 0 ? a[static_cast<size_t>(j)] : a[static_cast<size_t>(i)];
        const double d = (gb - ga) / h;
        diss += 0.5 * (aa + ab) * d * d;
    };
    if (grid.dim() == 1) {
        for (int i = 0; i <= n; ++i) edge(i - 1 >= 0 ? i - 1 : -1, i < n ? i : -1, grid.hx());
    } else {
        const int nx = grid.nx(), ny = grid.ny();
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix <= nx; ++ix)
                edge(ix > 0 ? (ix - 1) + nx * iy : -1, ix < nx ? ix + nx * iy : -1, grid.hx());
        for (int ix = 0; ix < nx; ++ix)
            for (int iy = 0; iy <= ny; ++iy)
                edge(iy > 0 ? ix + nx * (iy - 1) : -1, iy < ny ? ix + nx * iy : -1, grid.hy());
    }
    diss *= vol;
    (void)psi;
    EnergyAccount acc;
    acc.dissipation = diss * dt;
    acc.source = std::abs(prod + diss) * dt;
    return acc;
}

StepDiag make_diag(const Field& u, double t, const PsiTable& psi, double m) {
    StepDiag d;
    d.t = t;
    d.l1 = norm_l1(u);
    d.lmp1 = norm_lp(u, m + 1.0);
    d.linf = norm_linf(u);
    d.hdual = norm_hdual(u);
    double en = 0.0;
    for (int i = 0; i < u.size(); ++i) en += psi(u[i]);
    d.psi_energy = en * u.grid->cell_volume();
    return d;
}

void check_window(const SignalPath& z, double T) {
    if (z.t0() > 1e-9 || z.t1() < T - 1e-9)
        throw SolverError(SolverError::Code::window, "signal window does not cover [0, T]");
}

int step_count(double T, double dt) {
    const int n = static_cast<int>(std::lround(T / dt));
    if (n < 1 || std::abs(n * dt - T) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("solver: T must be a whole number of dt steps");
    return n;
}

enum class Scheme { transformed, rough, direct };

Trajectory run_scheme(Scheme scheme, const Field& init, const SignalPath& z,
                      const SolverConfig& cfg, const CoefficientSet& coeffs, double T) {
    if (cfg.theta != 1.0)
        throw std::invalid_argument("solver: only backward Euler (theta = 1) is implemented");
    check_window(z, T);
    if (!init.all_finite())
        throw SolverError(SolverError::Code::non_finite, "initial condition contains NaN/Inf");
    if (scheme == Scheme::direct && !z.is_bounded_variation())
        throw SolverError(SolverError::Code::not_bounded_variation,
                          "direct discretization requires a bounded-variation signal");
    const Grid& grid = *init.grid;
    const double delta = cfg.resolved_delta(grid);
    const PhiSpec phi(cfg.m, delta);
    const PsiTable psi(phi);
    Workspace ws(init.grid);
    const int nsteps = step_count(T, cfg.dt);
    const int n = grid.size();

    Trajectory traj;
    traj.label = scheme == Scheme::transformed ? StateLabel::transformed_y : StateLabel::untransformed_x;
    traj.m = cfg.m;
    traj.delta = delta;
    traj.times.push_back(0.0);
    traj.fields.push_back(init);
    traj.diags.push_back(make_diag(init, 0.0, psi, cfg.m));

    Field state = init;
    std::vector<double> e(static_cast<size_t>(n), 1.0), w(static_cast<size_t>(n), 1.0),
        mcoef(static_cast<size_t>(n), 0.0);
    double diss_cum = 0.0, src_cum = 0.0;

    for (int j = 0; j < nsteps; ++j) {
        const double t = j * cfg.dt, tn = (j + 1) * cfg.dt;
        StepDiag sd;
        Field next(init.grid);
        try {
            ImplicitSystem sys{&grid, &phi, cfg.dt, &e, &w, nullptr, &state};
            if (scheme == Scheme::transformed) {
                const auto zt = path_values_at(z, tn);
                const Field mu = coeffs.mu_only(zt.data());
                for (int i = 0; i < n; ++i) {
                    e[static_cast<size_t>(i)] = std::exp(mu[i]);
                    w[static_cast<size_t>(i)] = std::exp(-cfg.m * mu[i]);
                }
                next = implicit_solve(sys, ws, cfg, &sd);
                const auto acc = energy_update(grid, phi, e, w, next, state, cfg.dt, psi);
                diss_cum += acc.dissipation;
                src_cum += acc.source;
            } else if (scheme == Scheme::rough) {
                // step-local transformation: mu rebased at the left endpoint
                std::vector<double> dz(static_cast<size_t>(z.dimension()));
                for (int k = 0; k < z.dimension(); ++k)
                    dz[static_cast<size_t>(k)] = z.value_at(tn, k) - z.value_at(t, k);
                const Field mu = coeffs.mu_only(dz.data());
                for (int i = 0; i < n; ++i) {
                    e[static_cast<size_t>(i)] = std::exp(mu[i]);
                    w[static_cast<size_t>(i)] = std::exp(-cfg.m * mu[i]);
                }
                const Field ytil = implicit_solve(sys, ws, cfg, &sd);
                const auto acc = energy_update(grid, phi, e, w, ytil, state, cfg.dt, psi);
                diss_cum += acc.dissipation;
                src_cum += acc.source;
                for (int i = 0; i < n; ++i) next[i] = std::exp(-mu[i]) * ytil[i];
            } else {
                std::vector<double> dz(static_cast<size_t>(z.dimension()));
                for (int k = 0; k < z.dimension(); ++k)
                    dz[static_cast<size_t>(k)] = z.value_at(tn, k) - z.value_at(t, k);
                const Field mu = coeffs.mu_only(dz.data());
                for (int i = 0; i < n; ++i) {
                    e[static_cast<size_t>(i)] = 1.0;
                    w[static_cast<size_t>(i)] = 1.0;
                    mcoef[static_cast<size_t>(i)] = -mu[i]; // sum_k f_k dz_k
                }
                sys.m = &mcoef;
                next = implicit_solve(sys, ws, cfg, &sd);
                const auto acc = energy_update(grid, phi, e, w, next, state, cfg.dt, psi);
                diss_cum += acc.dissipation;
                src_cum += acc.source;
            }
        } catch (SolverError& err) {
            throw SolverError(err.code(), err.what(), j);
        }
        if (!next.all_finite())
            throw SolverError(SolverError::Code::non_finite, "state became non-finite", j);
        state = std::move(next);
        StepDiag full = make_diag(state, tn, psi, cfg.m);
        full.newton_iters = sd.newton_iters;
        full.residual = sd.residual;
        full.picard = sd.picard;
        full.dissipation_cum = diss_cum;
        full.source_cum = src_cum;
        traj.diags.push_back(full);
        if ((j + 1) % cfg.store_every == 0 || j + 1 == nsteps) {
            traj.times.push_back(tn);
            traj.fields.push_back(state);
        }
    }
    return traj;
}

} // namespace

Field step_transformed(const Field& y, double t, const SignalPath& z, const SolverConfig& cfg,
                       const CoefficientSet& coeffs, StepDiag* diag) {
    if (t + cfg.dt > z.t1() + 1e-9 || t < z.t0() - 1e-9)
        throw SolverError(SolverError::Code::window, "step leaves the signal window");
    const Grid& grid = *y.grid;
    const PhiSpec phi(cfg.m, cfg.resolved_delta(grid));
    Workspace ws(y.grid);
    const int n = grid.size();
    const auto zt = path_values_at(z, t + cfg.dt);
    const Field mu = coeffs.mu_only(zt.data());
    std::vector<double> e(static_cast<size_t>(n)), w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        e[static_cast<size_t>(i)] = std::exp(mu[i]);
        w[static_cast<size_t>(i)] = std::exp(-cfg.m * mu[i]);
    }
    ImplicitSystem sys{&grid, &phi, cfg.dt, &e, &w, nullptr, &y};
    StepDiag local;
    Field out = implicit_solve(sys, ws, cfg, diag ? diag : &local);
    if (!out.all_finite())
        throw SolverError(SolverError::Code::non_finite, "step produced NaN/Inf");
    return out;
}

Trajectory solve_transformed(const Field& y0, const SignalPath& z, const SolverConfig& cfg,
                             const CoefficientSet& coeffs, double T) {
    return run_scheme(Scheme::transformed, y0, z, cfg, coeffs, T);
}

Trajectory solve_rough(const Field& x0, const SignalPath& z, const SolverConfig& cfg,
                       const CoefficientSet& coeffs, double T) {
    return run_scheme(Scheme::rough, x0, z, cfg, coeffs, T);
}

Trajectory solve_direct_bv(const Field& x0, const SignalPath& z, const SolverConfig& cfg,
                           const CoefficientSet& coeffs, double T) {
    return run_scheme(Scheme::direct, x0, z, cfg, coeffs, T);
}

LimitSolution limit_solution(const Field& x0, const std::vector<double>& clamp_levels,
                             const SignalPath& z, const SolverConfig& cfg,
                             const CoefficientSet& coeffs, double T) {
    if (clamp_levels.empty()) throw std::invalid_argument("limit_solution: need clamp levels");
    for (size_t i = 1; i < clamp_levels.size(); ++i)
        if (!(clamp_levels[i] > clamp_levels[i - 1]))
            throw std::invalid_argument("limit_solution: clamp levels must increase");

    LimitSolution out;
    out.levels = clamp_levels;
    Trajectory prev;
    for (size_t li = 0; li < clamp_levels.size(); ++li) {
        const double level = clamp_levels[li];
        Field clamped = x0;
        for (double& v : clamped.v) v = std::min(level, std::max(-level, v));
        Trajectory traj = solve_rough(clamped, z, cfg, coeffs, T);
        if (li > 0) {
            double sup = 0.0;
            for (size_t j = 0; j < traj.fields.size(); ++j)
                sup = std::max(sup, norm_l1(traj.fields[j] - prev.fields[j]));
            out.cauchy_increments.push_back(sup);
        }
        prev = std::move(traj);
    }
    out.error_estimate = out.cauchy_increments.empty() ? 0.0 : out.cauchy_increments.back();
    out.trajectory = std::move(prev);
    return out;
}

TestFunction::SpaceEval TestFunction::space(const Grid& g, int node) const {
    const double lx = g.bx() - g.ax();
    const double wx = kx * M_PI / lx;
    const double x = g.node_x(node);
    SpaceEval e{};
    if (g.dim() == 1) {
        e.chi = std::sin(wx * (x - g.ax()));
        e.gx = wx * std::cos(wx * (x - g.ax()));
        e.lap = -wx * wx * e.chi;
        return e;
    }
    const double ly = g.by() - g.ay();
    const double wy = ky * M_PI / ly;
    const double y = g.node_y(node);
    const double sx = std::sin(wx * (x - g.ax())), sy = std::sin(wy * (y - g.ay()));
    e.chi = sx * sy;
    e.gx = wx * std::cos(wx * (x - g.ax())) * sy;
    e.gy = wy * sx * std::cos(wy * (y - g.ay()));
    e.lap = -(wx * wx + wy * wy) * e.chi;
    return e;
}

double very_weak_residual(const Trajectory& traj, const TestFunction& eta,
                          const CoefficientSet& coeffs, const SignalPath& z, double m) {
    const Grid& g = *traj.fields.front().grid;
    const int n = g.size();
    const size_t nt = traj.times.size();
    if (nt < 2) throw std::invalid_argument("very_weak_residual: trajectory too short");

    double lhs_time = 0.0, rhs = 0.0;
    for (size_t j = 0; j < nt; ++j) {
        const double t = traj.times[j];
        double wt = 0.0;
        if (j > 0) wt += 0.5 * (traj.times[j] - traj.times[j - 1]);
        if (j + 1 < nt) wt += 0.5 * (traj.times[j + 1] - traj.times[j]);

        const auto zt = path_values_at(z, t);
        const auto mu = coeffs.mu_field(zt.data());
        const Field& st = traj.fields[j];
        const double psi = eta.psi(t), dpsi = eta.dpsi(t);
        for (int i = 0; i < n; ++i) {
            const auto sp = eta.space(g, i);
            const double y = traj.label == StateLabel::transformed_y ? st[i]
                                                                     : std::exp(mu.mu[i]) * st[i];
            const double wq = g.weight(i);
            lhs_time += wt * wq * y * dpsi * sp.chi;
            // Lap(e^mu eta) = e^mu (psi lap chi + 2 psi grad mu . grad chi
            //                        + psi chi (|grad mu|^2 + lap mu))
            const double grad2 = mu.grad_x[i] * mu.grad_x[i] + mu.grad_y[i] * mu.grad_y[i];
            const double lap_emu_eta =
                std::exp(mu.mu[i]) * (psi * sp.lap +
                                      2.0 * psi * (mu.grad_x[i] * sp.gx + mu.grad_y[i] * sp.gy) +
                                      psi * sp.chi * (grad2 + mu.lap[i]));
            rhs += wt * wq * phi(std::exp(-mu.mu[i]) * y, m) * lap_emu_eta;
        }
    }

    double lhs_init = 0.0;
    {
        const auto z0 = path_values_at(z, traj.times.front());
        const auto mu0 = coeffs.mu_field(z0.data());
        const Field& s0 = traj.fields.front();
        const double psi0 = eta.psi(traj.times.front());
        for (int i = 0; i < n; ++i) {
            const double y0 = traj.label == StateLabel::transformed_y
                                  ? s0[i]
                                  : std::exp(mu0.mu[i]) * s0[i];
            lhs_init += g.weight(i) * y0 * psi0 * eta.space(g, i).chi;
        }
    }
    return std::abs(-lhs_time - lhs_init - rhs);
}

} // namespace rpme
