#include "rpme/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rpme {

double phi(double r, double m) {
    if (!(m > 0.0)) throw std::invalid_argument("phi: m must be positive");
    if (r == 0.0) return 0.0;
    return r > 0.0 ? std::pow(r, m) : -std::pow(-r, m);
}

namespace {

// quintic smoothstep and the rightmost quintic Hermite basis element
inline double step5(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
inline double basis5(double u) { return u * u * u * (-4.0 + u * (7.0 - 3.0 * u)); }
// their antiderivatives
inline double step5_int(double u) { return u * u * u * u * (2.5 + u * (-3.0 + u)); }
inline double basis5_int(double u) { return u * u * u * u * (-1.0 + u * (1.4 - 0.5 * u)); }
// derivative-space bump on the outer blend and its antiderivative
inline double bump3(double u) { return u * (1.0 - u) * (1.0 - u); }
inline double bump3_int(double u) { return u * u * (0.5 + u * (-2.0 / 3.0 + 0.25 * u)); }

} // namespace

PhiSpec::PhiSpec(double m, double delta) : m_(m), delta_(delta) {
    if (!(m > 0.0) || m == 1.0) throw std::invalid_argument("PhiSpec: m must be positive and != 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("PhiSpec: delta must be in (0,1)");

    const double dm1 = std::pow(delta, m - 1.0);
    inner_hi_ = m * dm1;
    curv_in_ = m * (m - 1.0) * dm1;
    // Integral-matching slope at zero: guarantees Phi^delta(delta) = delta^m.
    alpha_ = dm1 * (2.0 - m + m * (m - 1.0) / 5.0);
    slope_out_ = m * std::pow(delta, 1.0 - m);
    bump_out_ = m * (m - 1.0) * std::pow(delta, 1.0 - m);
    val_outer_ = std::pow(1.0 / delta, m) + slope_out_ / delta + (bump_out_ / delta) * bump3_int(1.0);

    // measure C1, C2 on a dense scan of the three nontrivial pieces
    double gmin = std::min({alpha_, inner_hi_, slope_out_});
    double gmax = std::max({alpha_, inner_hi_, slope_out_});
    double dgmax = 0.0;
    const int probes = 4001;
    auto scan = [&](double lo, double hi) {
        const double step = (hi - lo) / (probes - 1);
        double prev = deriv_at(lo);
        for (int i = 1; i < probes; ++i) {
            const double g = deriv_at(lo + i * step);
            gmin = std::min(gmin, g);
            gmax = std::max(gmax, g);
            // odd symmetry turns any negative slope into a positive one at -r
            dgmax = std::max(dgmax, std::abs(g - prev) / step);
            prev = g;
        }
    };
    scan(0.0, delta);
    scan(delta, 1.0 / delta);
    scan(1.0 / delta, 2.0 / delta);
    c1_ = gmin;
    c2_ = std::max(gmax, dgmax);
    if (!(c1_ > 0.0))
        throw std::invalid_argument("PhiSpec: constructed spline is not strictly increasing");
}

double PhiSpec::deriv_at(double a) const {
    if (a <= delta_) {
        const double u = a / delta_;
        return alpha_ + (inner_hi_ - alpha_) * step5(u) + curv_in_ * basis5(u);
    }
    if (a <= 1.0 / delta_) return m_ * std::pow(a, m_ - 1.0);
    if (a <= 2.0 / delta_) {
        const double u = (a - 1.0 / delta_) * delta_;
        return slope_out_ + bump_out_ * bump3(u);
    }
    return slope_out_;
}

double PhiSpec::value_at(double a) const {
    if (a <= delta_) {
        const double u = a / delta_;
        return alpha_ * a + (inner_hi_ - alpha_) * delta_ * step5_int(u) +
               curv_in_ * delta_ * basis5_int(u);
    }
    if (a <= 1.0 / delta_) return std::pow(a, m_);
    if (a <= 2.0 / delta_) {
        const double u = (a - 1.0 / delta_) * delta_;
        return std::pow(1.0 / delta_, m_) + slope_out_ * (a - 1.0 / delta_) +
               (bump_out_ / delta_) * bump3_int(u);
    }
    return val_outer_ + slope_out_ * (a - 2.0 / delta_);
}

PhiSpec::Eval PhiSpec::phi_delta(double r) const {
    const double a = std::abs(r);
    Eval e{value_at(a), deriv_at(a)};
    if (r < 0.0) e.value = -e.value;
    return e;
}

namespace {

double adaptive_simpson(const PhiSpec& spec, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    const double mid = 0.5 * (a + b);
    const double lm = 0.5 * (a + mid), rm = 0.5 * (mid + b);
    const double flm = spec.phi_delta(lm).value, frm = spec.phi_delta(rm).value;
    const double left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(spec, a, mid, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(spec, mid, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double PhiSpec::psi_delta(double r) const {
    const double b = std::abs(r);
    if (b == 0.0) return 0.0;
    const double fa = 0.0;
    const double fb = phi_delta(b).value;
    const double fm = phi_delta(0.5 * b).value;
    const double whole = b / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(*this, 0.0, b, fa, fm, fb, whole, 1e-10, 40);
}

} // namespace rpme
