#pragma once

#include <cassert>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

namespace rpme {

/// Uniform Dirichlet discretization of an interval (a,b) or a rectangle
/// (ax,bx) x (ay,by). Fields live on interior nodes only; the boundary value
/// is implicitly zero. Grids are immutable and shared between fields.
class Grid {
  public:
    static std::shared_ptr<const Grid> interval(double a, double b, int n,
                                                double radius_factor = 1.05);
    static std::shared_ptr<const Grid> rectangle(double ax, double bx, int nx,
                                                 double ay, double by, int ny,
                                                 double radius_factor = 1.05);

    int dim() const { return dim_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int size() const { return dim_ == 1 ? nx_ : nx_ * ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double ax() const { return ax_; }
    double bx() const { return bx_; }
    double ay() const { return ay_; }
    double by() const { return by_; }
    double volume() const;
    /// h^d, the uniform cell volume used by the discrete Dirichlet forms.
    double cell_volume() const { return dim_ == 1 ? hx_ : hx_ * hy_; }

    // interior node coordinates, flat index i = ix + nx*iy
    double node_x(int i) const { return ax_ + hx_ * (dim_ == 1 ? i + 1 : i % nx_ + 1); }
    double node_y(int i) const { return dim_ == 1 ? 0.0 : ay_ + hy_ * (i / nx_ + 1); }
    double node_r2(int i) const;

    /// Quadrature weight of node i. End cells absorb the boundary half-cells
    /// so the weights are positive and sum exactly to |O|.
    double weight(int i) const;

    /// Radius of a ball around the origin strictly enclosing all nodes.
    double enclosing_radius() const { return radius_; }
    /// C4 = min over interior nodes of R^2 - |xi|^2 (> 0 by construction).
    double c4() const { return c4_; }

    /// Lattice of interior plus boundary points, for sup/inf scans over the
    /// closure of O. Row-major, includes the boundary ring.
    struct ClosurePoint { double x, y; };
    const std::vector<ClosurePoint>& closure_points() const { return closure_; }

    /// Solves -Laplacian_h v = rhs with zero Dirichlet boundary using a
    /// cached direct factorization. Thread-safe.
    void poisson_solve(const double* rhs, double* out) const;

    ~Grid();

  private:
    Grid() = default;
    void finish_setup(double radius_factor);

    int dim_ = 1, nx_ = 0, ny_ = 0;
    double ax_ = 0, bx_ = 0, ay_ = 0, by_ = 0;
    double hx_ = 0, hy_ = 0;
    double radius_ = 0, c4_ = 0;
    std::vector<ClosurePoint> closure_;
    struct PoissonSolver;
    mutable std::unique_ptr<PoissonSolver> poisson_;
    mutable std::shared_ptr<void> poisson_once_; // std::once_flag holder
};

using GridPtr = std::shared_ptr<const Grid>;

/// Values on the interior nodes of a grid at one instant.
struct Field {
    GridPtr grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(GridPtr g, double fill = 0.0)
        : grid(std::move(g)), v(static_cast<size_t>(grid->size()), fill) {}

    int size() const { return static_cast<int>(v.size()); }
    double& operator[](int i) { return v[static_cast<size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<size_t>(i)]; }

    bool all_finite() const;
};

// elementwise helpers used throughout the solver
Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);

} // namespace rpme
