#include "rpme/grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <mutex>

namespace rpme {

struct Grid::PoissonSolver {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

Grid::~Grid() = default;

namespace {

Eigen::SparseMatrix<double> neg_laplacian_matrix(const Grid& g) {
    const int n = g.size();
    Eigen::SparseMatrix<double> A(n, n);
    std::vector<Eigen::Triplet<double>> trip;
    const double cx = 1.0 / (g.hx() * g.hx());
    if (g.dim() == 1) {
        trip.reserve(static_cast<size_t>(3 * n));
        for (int i = 0; i < n; ++i) {
            trip.emplace_back(i, i, 2.0 * cx);
            if (i > 0) trip.emplace_back(i, i - 1, -cx);
            if (i < n - 1) trip.emplace_back(i, i + 1, -cx);
        }
    } else {
        const double cy = 1.0 / (g.hy() * g.hy());
        trip.reserve(static_cast<size_t>(5 * n));
        for (int iy = 0; iy < g.ny(); ++iy) {
            for (int ix = 0; ix < g.nx(); ++ix) {
                const int i = ix + g.nx() * iy;
                trip.emplace_back(i, i, 2.0 * cx + 2.0 * cy);
                if (ix > 0) trip.emplace_back(i, i - 1, -cx);
                if (ix < g.nx() - 1) trip.emplace_back(i, i + 1, -cx);
                if (iy > 0) trip.emplace_back(i, i - g.nx(), -cy);
                if (iy < g.ny() - 1) trip.emplace_back(i, i + g.nx(), -cy);
            }
        }
    }
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

} // namespace

std::shared_ptr<const Grid> Grid::interval(double a, double b, int n, double radius_factor) {
    if (!(a < b) || n < 2) throw std::invalid_argument("Grid::interval: need a < b and n >= 2");
    auto g = std::shared_ptr<Grid>(new Grid());
    g->dim_ = 1;
    g->nx_ = n;
    g->ax_ = a;
    g->bx_ = b;
    g->hx_ = (b - a) / (n + 1);
    g->finish_setup(radius_factor);
    return g;
}

std::shared_ptr<const Grid> Grid::rectangle(double ax, double bx, int nx, double ay, double by,
                                            int ny, double radius_factor) {
    if (!(ax < bx) || !(ay < by) || nx < 2 || ny < 2)
        throw std::invalid_argument("Grid::rectangle: need nonempty extents and n >= 2 per axis");
    auto g = std::shared_ptr<Grid>(new Grid());
    g->dim_ = 2;
    g->nx_ = nx;
    g->ny_ = ny;
    g->ax_ = ax;
    g->bx_ = bx;
    g->ay_ = ay;
    g->by_ = by;
    g->hx_ = (bx - ax) / (nx + 1);
    g->hy_ = (by - ay) / (ny + 1);
    g->finish_setup(radius_factor);
    return g;
}

void Grid::finish_setup(double radius_factor) {
    if (radius_factor <= 1.0)
        throw std::invalid_argument("Grid: radius factor must exceed 1 so that C4 > 0");
    // closure lattice: every lattice point including the boundary ring
    if (dim_ == 1) {
        closure_.reserve(static_cast<size_t>(nx_ + 2));
        for (int i = 0; i <= nx_ + 1; ++i) closure_.push_back({ax_ + hx_ * i, 0.0});
    } else {
        closure_.reserve(static_cast<size_t>((nx_ + 2) * (ny_ + 2)));
        for (int iy = 0; iy <= ny_ + 1; ++iy)
            for (int ix = 0; ix <= nx_ + 1; ++ix)
                closure_.push_back({ax_ + hx_ * ix, ay_ + hy_ * iy});
    }
    double far2 = 0.0;
    for (const auto& p : closure_) far2 = std::max(far2, p.x * p.x + p.y * p.y);
    radius_ = radius_factor * std::sqrt(far2);
    double c4 = radius_ * radius_;
    for (int i = 0; i < size(); ++i) c4 = std::min(c4, radius_ * radius_ - node_r2(i));
    c4_ = c4;
    assert(c4_ > 0.0);
    poisson_once_ = std::make_shared<std::once_flag>();
}

double Grid::volume() const {
    return dim_ == 1 ? bx_ - ax_ : (bx_ - ax_) * (by_ - ay_);
}

double Grid::node_r2(int i) const {
    const double x = node_x(i), y = node_y(i);
    return x * x + y * y;
}

double Grid::weight(int i) const {
    if (dim_ == 1) {
        const int ix = i;
        const double wx = (ix == 0 || ix == nx_ - 1) ? 1.5 * hx_ : hx_;
        return nx_ == 1 ? bx_ - ax_ : wx;
    }
    const int ix = i % nx_, iy = i / nx_;
    const double wx = (ix == 0 || ix == nx_ - 1) ? 1.5 * hx_ : hx_;
    const double wy = (iy == 0 || iy == ny_ - 1) ? 1.5 * hy_ : hy_;
    return wx * wy;
}

void Grid::poisson_solve(const double* rhs, double* out) const {
    auto flag = std::static_pointer_cast<std::once_flag>(poisson_once_);
    std::call_once(*flag, [this] {
        auto solver = std::make_unique<PoissonSolver>();
        solver->ldlt.compute(neg_laplacian_matrix(*this));
        if (solver->ldlt.info() != Eigen::Success)
            throw std::runtime_error("Grid: Dirichlet Laplacian factorization failed");
        poisson_ = std::move(solver);
    });
    Eigen::Map<const Eigen::VectorXd> b(rhs, size());
    Eigen::VectorXd x = poisson_->ldlt.solve(b);
    for (int i = 0; i < size(); ++i) out[i] = x[i];
}

bool Field::all_finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

Field operator+(const Field& a, const Field& b) {
    assert(a.size() == b.size());
    Field r = a;
    for (int i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

Field operator-(const Field& a, const Field& b) {
    assert(a.size() == b.size());
    Field r = a;
    for (int i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

Field operator*(double s, const Field& a) {
    Field r = a;
    for (double& x : r.v) x *= s;
    return r;
}

} // namespace rpme
