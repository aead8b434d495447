#include "rpme/coefficients.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rpme {

CoefficientTerm::Eval CoefficientTerm::eval(double x, double y, int dim) const {
    Eval e{0.0, 0.0, 0.0, 0.0};
    switch (shape) {
        case Shape::constant: {
            e.f = amp;
            return e;
        }
        case Shape::sine:
        case Shape::cosine: {
            const bool sin_shape = shape == Shape::sine;
            const double px = sin_shape ? std::sin(wx * x) : std::cos(wx * x);
            const double dpx = wx * (sin_shape ? std::cos(wx * x) : -std::sin(wx * x));
            if (dim == 1) {
                e.f = amp * px;
                e.gx = amp * dpx;
                e.lap = -amp * wx * wx * px;
            } else {
                const double py = sin_shape ? std::sin(wy * y) : std::cos(wy * y);
                const double dpy = wy * (sin_shape ? std::cos(wy * y) : -std::sin(wy * y));
                e.f = amp * px * py;
                e.gx = amp * dpx * py;
                e.gy = amp * px * dpy;
                e.lap = -amp * (wx * wx + wy * wy) * px * py;
            }
            return e;
        }
        case Shape::gaussian: {
            const double ux = (x - cx) / sx;
            double g = amp * std::exp(-0.5 * ux * ux);
            double gx = -ux / sx * g;
            double lap = (ux * ux - 1.0) / (sx * sx) * g;
            if (dim == 1) {
                e.f = g;
                e.gx = gx;
                e.lap = lap;
                return e;
            }
            const double uy = (y - cy) / sy;
            const double py = std::exp(-0.5 * uy * uy);
            e.f = g * py;
            e.gx = gx * py;
            e.gy = -uy / sy * e.f;
            e.lap = lap * py + g * py * (uy * uy - 1.0) / (sy * sy);
            return e;
        }
    }
    throw std::logic_error("CoefficientTerm: unknown shape");
}

CoefficientTerm CoefficientTerm::parse(const std::string& text) {
    std::istringstream in(text);
    std::string name;
    in >> name;
    CoefficientTerm t;
    if (name == "const") {
        t.shape = Shape::constant;
        if (!(in >> t.amp)) throw std::invalid_argument("coefficient: 'const' needs an amplitude");
        return t;
    }
    if (name == "sin" || name == "cos") {
        t.shape = name == "sin" ? Shape::sine : Shape::cosine;
        if (!(in >> t.amp >> t.wx))
            throw std::invalid_argument("coefficient: '" + name + "' needs amp and frequency");
        if (!(in >> t.wy)) t.wy = t.wx;
        return t;
    }
    if (name == "gauss") {
        t.shape = Shape::gaussian;
        if (!(in >> t.amp >> t.cx >> t.sx))
            throw std::invalid_argument("coefficient: 'gauss' needs amp, center, width");
        if (!(in >> t.cy >> t.sy)) {
            t.cy = t.cx;
            t.sy = t.sx;
        }
        if (!(t.sx > 0.0 && t.sy > 0.0))
            throw std::invalid_argument("coefficient: gaussian width must be positive");
        return t;
    }
    throw std::invalid_argument("coefficient: unknown shape '" + name + "'");
}

std::string CoefficientTerm::describe() const {
    std::ostringstream os;
    switch (shape) {
        case Shape::constant: os << "const " << amp; break;
        case Shape::sine: os << "sin " << amp << " " << wx << " " << wy; break;
        case Shape::cosine: os << "cos " << amp << " " << wx << " " << wy; break;
        case Shape::gaussian:
            os << "gauss " << amp << " " << cx << " " << sx << " " << cy << " " << sy;
            break;
    }
    return os.str();
}

CoefficientSet::CoefficientSet(GridPtr grid, std::vector<CoefficientTerm> terms)
    : grid_(std::move(grid)), terms_(std::move(terms)) {
    if (terms_.empty()) throw std::invalid_argument("CoefficientSet: need at least one term");
    const int n = grid_->size();
    const auto& closure = grid_->closure_points();
    const int dim = grid_->dim();
    for (const auto& term : terms_) {
        std::vector<double> f(n), gx(n), gy(n), lp(n);
        for (int i = 0; i < n; ++i) {
            const auto e = term.eval(grid_->node_x(i), grid_->node_y(i), dim);
            f[static_cast<size_t>(i)] = e.f;
            gx[static_cast<size_t>(i)] = e.gx;
            gy[static_cast<size_t>(i)] = e.gy;
            lp[static_cast<size_t>(i)] = e.lap;
        }
        f_.push_back(std::move(f));
        gx_.push_back(std::move(gx));
        gy_.push_back(std::move(gy));
        lap_.push_back(std::move(lp));

        std::vector<double> cf(closure.size()), cgx(closure.size()), cgy(closure.size()),
            clp(closure.size());
        for (size_t i = 0; i < closure.size(); ++i) {
            const auto e = term.eval(closure[i].x, closure[i].y, dim);
            cf[i] = e.f;
            cgx[i] = e.gx;
            cgy[i] = e.gy;
            clp[i] = e.lap;
        }
        cf_.push_back(std::move(cf));
        cgx_.push_back(std::move(cgx));
        cgy_.push_back(std::move(cgy));
        clap_.push_back(std::move(clp));
    }
}

CoefficientSet::MuFields CoefficientSet::mu_field(const double* z) const {
    MuFields out{Field(grid_), Field(grid_), Field(grid_), Field(grid_)};
    const int n = grid_->size();
    for (size_t k = 0; k < terms_.size(); ++k) {
        const double zk = z[k];
        if (zk == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            out.mu[i] -= f_[k][static_cast<size_t>(i)] * zk;
            out.grad_x[i] -= gx_[k][static_cast<size_t>(i)] * zk;
            out.grad_y[i] -= gy_[k][static_cast<size_t>(i)] * zk;
            out.lap[i] -= lap_[k][static_cast<size_t>(i)] * zk;
        }
    }
    return out;
}

Field CoefficientSet::mu_only(const double* z) const {
    Field mu(grid_);
    const int n = grid_->size();
    for (size_t k = 0; k < terms_.size(); ++k) {
        const double zk = z[k];
        if (zk == 0.0) continue;
        for (int i = 0; i < n; ++i) mu[i] -= f_[k][static_cast<size_t>(i)] * zk;
    }
    return mu;
}

std::vector<double> CoefficientSet::mu_closure(const double* z) const {
    std::vector<double> mu(grid_->closure_points().size(), 0.0);
    for (size_t k = 0; k < terms_.size(); ++k) {
        const double zk = z[k];
        if (zk == 0.0) continue;
        for (size_t i = 0; i < mu.size(); ++i) mu[i] -= cf_[k][i] * zk;
    }
    return mu;
}

CoefficientSet::IncrementStats CoefficientSet::increment_stats(const double* dz) const {
    IncrementStats s{0.0, 0.0, 0.0, 0.0};
    const size_t npts = grid_->closure_points().size();
    bool first = true;
    for (size_t i = 0; i < npts; ++i) {
        double mu = 0.0, gx = 0.0, gy = 0.0, lp = 0.0;
        for (size_t k = 0; k < terms_.size(); ++k) {
            mu -= cf_[k][i] * dz[k];
            gx -= cgx_[k][i] * dz[k];
            gy -= cgy_[k][i] * dz[k];
            lp -= clap_[k][i] * dz[k];
        }
        if (first || mu < s.mu_min) s.mu_min = mu;
        if (first || mu > s.mu_max) s.mu_max = mu;
        s.grad_sup = std::max(s.grad_sup, std::sqrt(gx * gx + gy * gy));
        s.lap_sup = std::max(s.lap_sup, std::abs(lp));
        first = false;
    }
    return s;
}

} // namespace rpme
