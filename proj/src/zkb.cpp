#include "rpme/zkb.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>

namespace rpme {

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
    const double mid = 0.5 * (a + b);
    const double flm = f(0.5 * (a + mid)), frm = f(0.5 * (mid + b));
    const double left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, mid, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, mid, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// C from the mass normalization, cached per (m, mass)
double zkb_constant(double m, double mass) {
    static std::mutex mutex;
    static std::map<std::pair<double, double>, double> cache;
    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_pair(m, mass);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    const double alpha = 1.0 / (m + 1.0);
    const double kappa = alpha * (m - 1.0) / (2.0 * m);
    const double expnt = 1.0 / (m - 1.0);
    const double shape = adaptive_simpson(
        [expnt](double s) { return std::pow(std::max(0.0, 1.0 - s * s), expnt); }, -1.0, 1.0,
        1e-12);
    // mass = C^(1/(m-1) + 1/2) kappa^(-1/2) * shape
    const double c = std::pow(mass * std::sqrt(kappa) / shape, 1.0 / (expnt + 0.5));
    cache[key] = c;
    return c;
}

} // namespace

double zkb_profile(double t, double x, double m, double mass) {
    if (!(m > 1.0)) throw std::invalid_argument("zkb_profile: requires m > 1");
    if (!(t > 0.0)) throw std::invalid_argument("zkb_profile: requires t > 0");
    const double alpha = 1.0 / (m + 1.0);
    const double kappa = alpha * (m - 1.0) / (2.0 * m);
    const double c = zkb_constant(m, mass);
    const double ta = std::pow(t, -alpha);
    const double arg = c - kappa * x * x * std::pow(t, -2.0 * alpha);
    if (arg <= 0.0) return 0.0;
    return ta * std::pow(arg, 1.0 / (m - 1.0));
}

double zkb_support_radius(double t, double m, double mass) {
    const double alpha = 1.0 / (m + 1.0);
    const double kappa = alpha * (m - 1.0) / (2.0 * m);
    const double c = zkb_constant(m, mass);
    return std::sqrt(c / kappa) * std::pow(t, alpha);
}

Field zkb_field(const GridPtr& grid, double t, double m, double mass) {
    if (grid->dim() != 1) throw std::invalid_argument("zkb_field: 1D only");
    Field f(grid);
    for (int i = 0; i < f.size(); ++i) f[i] = zkb_profile(t, grid->node_x(i), m, mass);
    return f;
}

} // namespace rpme
