#pragma once

#include "rpme/grid.hpp"

#include <string>
#include <vector>

namespace rpme {

/// One closed-form noise coefficient f_k with analytic gradient and
/// Laplacian. Shapes: "const a", "sin a w [wy]", "cos a w [wy]",
/// "gauss a cx sx [cy sy]" (products across axes in 2D).
struct CoefficientTerm {
    enum class Shape { constant, sine, cosine, gaussian };

    Shape shape = Shape::constant;
    double amp = 1.0;
    double wx = 0.0, wy = 0.0; // frequencies (sine/cosine)
    double cx = 0.0, cy = 0.0; // centers (gaussian)
    double sx = 1.0, sy = 1.0; // widths (gaussian)

    struct Eval {
        double f, gx, gy, lap;
    };
    Eval eval(double x, double y, int dim) const;

    static CoefficientTerm parse(const std::string& text);
    std::string describe() const;
};

/// The registry of f_k sampled on a grid, with gradients and Laplacians
/// taken from the closed forms rather than differenced.
class CoefficientSet {
  public:
    CoefficientSet(GridPtr grid, std::vector<CoefficientTerm> terms);

    const GridPtr& grid() const { return grid_; }
    int dimension() const { return static_cast<int>(terms_.size()); }
    const std::vector<CoefficientTerm>& terms() const { return terms_; }

    struct MuFields {
        Field mu, grad_x, grad_y, lap;
    };
    /// mu = -sum_k f_k z_k with analytic derivative combinations.
    MuFields mu_field(const double* z) const;
    Field mu_only(const double* z) const;

    /// mu over the closure lattice (interior plus boundary ring).
    std::vector<double> mu_closure(const double* z) const;

    /// Extremes of mu_delta = -sum f_k dz_k and of its derivatives over the
    /// closure, for the partition scanners.
    struct IncrementStats {
        double mu_min, mu_max;   // range of mu_delta over the closure
        double grad_sup;         // sup |grad mu_delta| (Euclidean)
        double lap_sup;          // sup |lap mu_delta|
    };
    IncrementStats increment_stats(const double* dz) const;

    // per-term interior samples
    const std::vector<double>& f(int k) const { return f_[static_cast<size_t>(k)]; }

  private:
    GridPtr grid_;
    std::vector<CoefficientTerm> terms_;
    // interior samples, one vector per term
    std::vector<std::vector<double>> f_, gx_, gy_, lap_;
    // closure samples, one vector per term
    std::vector<std::vector<double>> cf_, cgx_, cgy_, clap_;
};

} // namespace rpme
