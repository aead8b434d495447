#include "rpme/bounds.hpp"

#include "rpme/operators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace rpme {

int Partition::piece_of(double t) const {
    if (t < taus.front() - 1e-12 || t > taus.back() + 1e-9)
        throw std::out_of_range("Partition: t outside [0, T]");
    for (int i = pieces() - 1; i >= 0; --i)
        if (t >= taus[static_cast<size_t>(i)] - 1e-12) return i;
    return 0;
}

namespace {

struct RunningStats {
    double mu_min = 0.0, mu_max = 0.0, grad_sup = 0.0, lap_sup = 0.0;
    void absorb(const CoefficientSet::IncrementStats& s) {
        mu_min = std::min(mu_min, s.mu_min);
        mu_max = std::max(mu_max, s.mu_max);
        grad_sup = std::max(grad_sup, s.grad_sup);
        lap_sup = std::max(lap_sup, s.lap_sup);
    }
};

// shared greedy scanner; ok(stats) decides whether the current piece may
// still include the scanned sample
Partition scan_partition(const SignalPath& z, const CoefficientSet& coeffs, double T,
                         const std::function<bool(const RunningStats&)>& ok) {
    if (z.t0() > 1e-9 || z.t1() < T - 1e-9)
        throw std::invalid_argument("choose_partition: window does not cover [0, T]");
    const double dt = z.dt();
    const double gamma_min = 4.0 * dt;
    const int j0 = static_cast<int>(std::lround(-z.t0() / dt));
    const int jt = j0 + static_cast<int>(std::lround(T / dt));

    Partition part;
    part.taus.push_back(0.0);
    std::vector<double> dz(static_cast<size_t>(z.dimension()));
    int jtau = j0;
    RunningStats stats;
    for (int j = j0 + 1; j <= jt; ++j) {
        z.increment(jtau, j, dz.data());
        RunningStats trial = stats;
        trial.absorb(coeffs.increment_stats(dz.data()));
        const double gap = (j - jtau) * dt;
        const bool fits = ok(trial) && gap <= 1.0 + 1e-12;
        if (fits) {
            stats = trial;
            if (j == jt) part.taus.push_back(T);
            continue;
        }
        // cut at the previous sample
        const int jcut = j - 1;
        if (jcut == jtau || (jcut - jtau) * dt < gamma_min)
            throw PartitionError("choose_partition: signal too rough for this grid "
                                 "(forced gap under 4 dt)");
        part.taus.push_back((jcut - j0) * dt);
        jtau = jcut;
        stats = RunningStats{};
        --j; // re-scan the sample against the fresh piece
    }
    if (part.taus.back() < T) part.taus.push_back(T);
    part.gamma = T;
    for (size_t i = 1; i < part.taus.size(); ++i)
        part.gamma = std::min(part.gamma, part.taus[i] - part.taus[i - 1]);
    return part;
}

std::vector<double> path_at(const SignalPath& z, double t) {
    std::vector<double> v(static_cast<size_t>(z.dimension()));
    for (int k = 0; k < z.dimension(); ++k) v[static_cast<size_t>(k)] = z.value_at(t, k);
    return v;
}

double c4_of(const Grid& grid, double R) {
    double c4 = R * R;
    for (int i = 0; i < grid.size(); ++i) c4 = std::min(c4, R * R - grid.node_r2(i));
    if (!(c4 > 0.0))
        throw std::invalid_argument("bounds: R does not strictly enclose the grid (C4 <= 0)");
    return c4;
}

double inf_exp_mu0(const CoefficientSet& coeffs, const SignalPath& z) {
    const auto z0 = path_at(z, 0.0);
    const auto mu = coeffs.mu_closure(z0.data());
    double lo = mu.empty() ? 0.0 : mu.front();
    for (double v : mu) lo = std::min(lo, v);
    return std::exp(lo);
}

void fill_piece_factors(PiecewiseBound::Mode, const Partition& part, const CoefficientSet& coeffs,
                        const SignalPath& z, std::vector<std::vector<double>>& out) {
    const int n = coeffs.grid()->size();
    out.clear();
    for (int i = 0; i < part.pieces(); ++i) {
        const auto zt = path_at(z, part.taus[static_cast<size_t>(i)]);
        const Field mu = coeffs.mu_only(zt.data());
        std::vector<double> f(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) f[static_cast<size_t>(k)] = std::exp(mu[k]);
        out.push_back(std::move(f));
    }
}

} // namespace

Partition choose_partition(const SignalPath& z, const CoefficientSet& coeffs, double m, double R,
                           double T) {
    if (!(m > 0.0) || m == 1.0) throw std::invalid_argument("choose_partition: need m > 0, m != 1");
    const double p = m - 1.0;
    const int d = coeffs.grid()->dim();
    auto ok = [&](const RunningStats& s) {
        // proof-side sufficient inequality, normalized so both conditions cut at 1/2
        const double inf_emp = std::exp(p * (p > 0 ? s.mu_min : s.mu_max));   // inf e^{(m-1) dmu}
        const double inf_enp = std::exp(-p * (p > 0 ? s.mu_max : s.mu_min));  // inf e^{(1-m) dmu}
        const double g = 4.0 * m * R * s.grad_sup +
                         R * R * (m * m * s.grad_sup * s.grad_sup + m * s.lap_sup);
        const double q1 = inf_enp * (2.0 * d - g) / (2.0 * d);
        return q1 >= 0.5 && inf_emp >= 0.5;
    };
    return scan_partition(z, coeffs, T, ok);
}

double supersolution_amplitude(double m, double R, int dim) {
    return std::pow(std::pow(R, 2.0 / m) / ((m - 1.0) * dim), m / (m - 1.0));
}

double fast_amplitude(double m, double R, int dim) {
    return std::pow(std::pow(R, 2.0 / m) / ((1.0 - m) * dim), m / (m - 1.0));
}

double PiecewiseBound::time_factor(int piece, double t) const {
    const double tau = partition_.taus[static_cast<size_t>(piece)];
    const double sigma = sigmas_[static_cast<size_t>(piece)];
    if (mode_ == Mode::degenerate) {
        const double base = t - tau + sigma;
        if (base <= 0.0) return std::numeric_limits<double>::infinity();
        return std::pow(base, -1.0 / (m_ - 1.0));
    }
    const double base = sigma - t;
    if (base <= 0.0) throw std::logic_error("fast bound: sigma ordering violated");
    return std::pow(base, 1.0 / (1.0 - m_));
}

double PiecewiseBound::evaluate(double t, int node) const {
    if (t < -1e-12) throw std::out_of_range("PiecewiseBound: t < 0");
    const int piece = partition_.piece_of(t);
    const double tf = time_factor(piece, t);
    if (std::isinf(tf)) return tf;
    const double space = std::pow(r_ * r_ - grid_->node_r2(node), 1.0 / m_);
    return std::pow(a_, 1.0 / m_) * tf * space * exp_mu_tau_[static_cast<size_t>(piece)][static_cast<size_t>(node)];
}

double PiecewiseBound::evaluate_x(double t, int node) const {
    const double k = evaluate(t, node);
    if (std::isinf(k)) return k;
    double mu = 0.0;
    for (int c = 0; c < z_.dimension(); ++c)
        mu -= coeffs_.f(c)[static_cast<size_t>(node)] * z_.value_at(t, c);
    return std::exp(-mu) * k;
}

double PiecewiseBound::sup_at(double t, bool x_side) const {
    double s = 0.0;
    for (int i = 0; i < grid_->size(); ++i)
        s = std::max(s, x_side ? evaluate_x(t, i) : evaluate(t, i));
    return s;
}

double PiecewiseBound::max_value() const {
    double s = 0.0;
    for (int p = 0; p < partition_.pieces(); ++p)
        for (int i = 0; i < grid_->size(); ++i)
            s = std::max(s, evaluate(partition_.taus[static_cast<size_t>(p)], i));
    return s;
}

double PiecewiseBound::min_value() const {
    double s = std::numeric_limits<double>::infinity();
    for (int p = 0; p < partition_.pieces(); ++p) {
        // within a piece the time factor decreases, so the right endpoint is minimal
        const double tend = partition_.taus[static_cast<size_t>(p + 1)];
        const double tau = partition_.taus[static_cast<size_t>(p)];
        const double sigma = sigmas_[static_cast<size_t>(p)];
        double tf;
        if (mode_ == Mode::degenerate) {
            tf = std::pow(tend - tau + sigma, -1.0 / (m_ - 1.0));
        } else {
            tf = std::pow(sigma - tend, 1.0 / (1.0 - m_));
        }
        for (int i = 0; i < grid_->size(); ++i) {
            const double space = std::pow(r_ * r_ - grid_->node_r2(i), 1.0 / m_);
            s = std::min(s, std::pow(a_, 1.0 / m_) * tf * space *
                                exp_mu_tau_[static_cast<size_t>(p)][static_cast<size_t>(i)]);
        }
    }
    return s;
}

double PiecewiseBound::time_derivative(double t, int node) const {
    const int piece = partition_.piece_of(t);
    const double tau = partition_.taus[static_cast<size_t>(piece)];
    const double sigma = sigmas_[static_cast<size_t>(piece)];
    const double space = std::pow(r_ * r_ - grid_->node_r2(node), 1.0 / m_);
    const double amp = std::pow(a_, 1.0 / m_) *
                       exp_mu_tau_[static_cast<size_t>(piece)][static_cast<size_t>(node)] * space;
    if (mode_ == Mode::degenerate) {
        const double base = t - tau + sigma;
        return amp * (-1.0 / (m_ - 1.0)) * std::pow(base, -1.0 / (m_ - 1.0) - 1.0);
    }
    const double base = sigma - t;
    return amp * (-1.0 / (1.0 - m_)) * std::pow(base, 1.0 / (1.0 - m_) - 1.0);
}

PiecewiseBound build_supersolution(double sigma0, const Partition& partition,
                                   const CoefficientSet& coeffs, const SignalPath& z, double m,
                                   double R) {
    if (!(m > 1.0)) throw std::invalid_argument("build_supersolution: degenerate mode needs m > 1");
    if (!(sigma0 >= 0.0)) throw std::invalid_argument("build_supersolution: sigma0 must be >= 0");
    PiecewiseBound b(coeffs, z);
    b.mode_ = PiecewiseBound::Mode::degenerate;
    b.m_ = m;
    b.r_ = R;
    b.grid_ = coeffs.grid();
    b.c4_ = c4_of(*b.grid_, R);
    b.a_ = supersolution_amplitude(m, R, b.grid_->dim());
    b.partition_ = partition;
    b.sigmas_.resize(static_cast<size_t>(partition.pieces()));
    double sigma = std::isinf(sigma0) ? 1e300 : sigma0;
    for (int i = 0; i < partition.pieces(); ++i) {
        b.sigmas_[static_cast<size_t>(i)] = sigma;
        sigma = 0.5 * (sigma + partition.gamma);
    }
    fill_piece_factors(b.mode_, partition, coeffs, z, b.exp_mu_tau_);
    return b;
}

double sigma0_for(double y0_sup, const Partition& partition, const CoefficientSet& coeffs,
                  const SignalPath& z, double m, double R) {
    (void)partition;
    if (!(y0_sup >= 0.0)) throw std::invalid_argument("sigma0_for: Y0 sup must be >= 0");
    if (y0_sup == 0.0) return std::numeric_limits<double>::infinity();
    const double a = supersolution_amplitude(m, R, coeffs.grid()->dim());
    const double c4 = c4_of(*coeffs.grid(), R);
    const double amp = std::pow(a, 1.0 / m) * std::pow(c4, 1.0 / m) * inf_exp_mu0(coeffs, z);
    return std::pow(amp / y0_sup, m - 1.0);
}

PiecewiseBound uniform_bound_U(const Partition& partition, const CoefficientSet& coeffs,
                               const SignalPath& z, double m, double R) {
    return build_supersolution(0.0, partition, coeffs, z, m, R);
}

double delta0_for(const PiecewiseBound& bound) {
    if (!bound.finite_at_zero())
        throw std::invalid_argument("delta0_for: bound must be finite (sigma0 > 0)");
    const double lo = bound.min_value();
    const double hi = bound.max_value();
    if (!(lo > 0.0)) throw std::logic_error("delta0_for: bound minimum not positive");
    return std::min(lo, 1.0 / hi);
}

PiecewiseBound fast_diffusion_bound(double y0_sup, const Partition& partition,
                                    const CoefficientSet& coeffs, const SignalPath& z, double m,
                                    double R) {
    if (!(m > 0.0 && m < 1.0))
        throw std::invalid_argument("fast_diffusion_bound: needs 0 < m < 1");
    PiecewiseBound b(coeffs, z);
    b.mode_ = PiecewiseBound::Mode::fast;
    b.m_ = m;
    b.r_ = R;
    b.grid_ = coeffs.grid();
    b.c4_ = c4_of(*b.grid_, R);
    b.a_ = fast_amplitude(m, R, b.grid_->dim());
    b.partition_ = partition;

    const double amp = std::pow(b.a_, 1.0 / m) * std::pow(b.c4_, 1.0 / m) * inf_exp_mu0(coeffs, z);
    double sigma0 = y0_sup > 0.0 ? std::pow(y0_sup / amp, 1.0 - m) : 0.0;
    sigma0 = std::max(sigma0, 1.000001 * partition.taus[1]);
    // raise sigma0 until sigma_i > tau_{i+1} holds along the recursion
    for (int attempt = 0; attempt < 200; ++attempt) {
        bool valid = true;
        double sigma = sigma0;
        b.sigmas_.assign(static_cast<size_t>(partition.pieces()), 0.0);
        for (int i = 0; i < partition.pieces(); ++i) {
            if (sigma <= partition.taus[static_cast<size_t>(i + 1)]) {
                valid = false;
                break;
            }
            b.sigmas_[static_cast<size_t>(i)] = sigma;
            sigma = 2.0 * sigma + partition.taus[static_cast<size_t>(i + 1)];
        }
        if (valid) {
            fill_piece_factors(b.mode_, partition, coeffs, z, b.exp_mu_tau_);
            return b;
        }
        sigma0 *= 1.5;
    }
    throw std::logic_error("fast_diffusion_bound: sigma ordering could not be satisfied");
}

double estimate_contraction_constant(const GridPtr& grid, const CoefficientSet& coeffs,
                                     const SignalPath& z, double m, double T) {
    (void)m;
    // phi solves -Lap phi = 1 with boundary value 1
    Field ones(grid, 1.0);
    Field w = inverse_laplacian(ones);
    Field phi_w = w;
    for (double& v : phi_w.v) v += 1.0;

    // C1 norm of phi over the closure, with the boundary value 1
    double sup_phi = 1.0, sup_grad = 0.0;
    const int n = grid->size();
    if (grid->dim() == 1) {
        for (int i = 0; i < n; ++i) {
            sup_phi = std::max(sup_phi, phi_w[i]);
            const double left = i > 0 ? phi_w[i - 1] : 1.0;
            const double right = i < n - 1 ? phi_w[i + 1] : 1.0;
            sup_grad = std::max(sup_grad, std::abs(right - left) / (2.0 * grid->hx()));
        }
    } else {
        for (int iy = 0; iy < grid->ny(); ++iy) {
            for (int ix = 0; ix < grid->nx(); ++ix) {
                const int i = ix + grid->nx() * iy;
                sup_phi = std::max(sup_phi, phi_w[i]);
                const double l = ix > 0 ? phi_w[i - 1] : 1.0;
                const double r = ix < grid->nx() - 1 ? phi_w[i + 1] : 1.0;
                const double d = iy > 0 ? phi_w[i - grid->nx()] : 1.0;
                const double u = iy < grid->ny() - 1 ? phi_w[i + grid->nx()] : 1.0;
                const double gx = (r - l) / (2.0 * grid->hx());
                const double gy = (u - d) / (2.0 * grid->hy());
                sup_grad = std::max(sup_grad, std::sqrt(gx * gx + gy * gy));
            }
        }
    }
    const double phi_c1 = sup_phi + sup_grad;

    // the L1 lemma's own partition condition
    auto ok = [&](const RunningStats& s) {
        const double inf_e = std::exp(s.mu_min);
        const double g1 = s.grad_sup + s.grad_sup * s.grad_sup + s.lap_sup;
        return inf_e * (1.0 - 2.0 * phi_c1 * g1) >= 0.5;
    };
    const Partition part = scan_partition(z, coeffs, T, ok);

    // eta = phi e^{-mu_{tau_i}} over the closure; boundary phi = 1
    double sup_eta = 0.0, inf_eta = std::numeric_limits<double>::infinity();
    const auto& closure = grid->closure_points();
    for (int p = 0; p < part.pieces(); ++p) {
        const auto zt = path_at(z, part.taus[static_cast<size_t>(p)]);
        const auto mu_c = coeffs.mu_closure(zt.data());
        const Field mu_i = coeffs.mu_only(zt.data());
        for (int i = 0; i < n; ++i) {
            const double eta = phi_w[i] * std::exp(-mu_i[i]);
            sup_eta = std::max(sup_eta, eta);
            inf_eta = std::min(inf_eta, eta);
        }
        for (size_t c = 0; c < closure.size(); ++c) {
            // boundary ring carries phi = 1 exactly
            const bool on_boundary =
                grid->dim() == 1
                    ? (c == 0 || c + 1 == closure.size())
                    : (c % static_cast<size_t>(grid->nx() + 2) == 0 ||
                       c % static_cast<size_t>(grid->nx() + 2) == static_cast<size_t>(grid->nx() + 1) ||
                       c < static_cast<size_t>(grid->nx() + 2) ||
                       c >= closure.size() - static_cast<size_t>(grid->nx() + 2));
            if (!on_boundary) continue;
            const double eta = std::exp(-mu_c[c]);
            sup_eta = std::max(sup_eta, eta);
            inf_eta = std::min(inf_eta, eta);
        }
    }
    return sup_eta / inf_eta;
}

} // namespace rpme
