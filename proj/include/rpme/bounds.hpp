#pragma once

#include "rpme/coefficients.hpp"
#include "rpme/grid.hpp"
#include "rpme/signal.hpp"

#include <stdexcept>
#include <vector>

namespace rpme {

class PartitionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Time partition 0 = tau_0 < ... < tau_L = T with gaps below 1. gamma is
/// the smallest gap; the sigma recursions use it as the uniform lower bound.
struct Partition {
    std::vector<double> taus;
    double gamma = 0.0;

    int pieces() const { return static_cast<int>(taus.size()) - 1; }
    int piece_of(double t) const;
};

/// Greedy left-to-right scan on the signal's sample grid: a piece is
/// extended while both smallness conditions on mu_t - mu_tau (value,
/// gradient and Laplacian sups over the closure) keep their lower bound 1/2
/// and the gap stays below 1. Throws PartitionError when a forced cut would
/// produce a gap under gamma_min = 4 dt.
Partition choose_partition(const SignalPath& z, const CoefficientSet& coeffs, double m, double R,
                           double T);

/// Piecewise-in-time supersolution
///   K_i(t, xi) = A^(1/m) tf_i(t) (R^2 - |xi|^2)^(1/m) e^{mu_{tau_i}(xi)}
/// with tf_i(t) = (t - tau_i + sigma_i)^(-1/(m-1)) in degenerate mode and
/// (sigma_i - t)^(1/(1-m)) in fast mode.
class PiecewiseBound {
  public:
    enum class Mode { degenerate, fast };

    Mode mode() const { return mode_; }
    double m() const { return m_; }
    double amplitude() const { return a_; } // the constant A
    double radius() const { return r_; }
    double c4() const { return c4_; }
    const Partition& partition() const { return partition_; }
    const std::vector<double>& sigmas() const { return sigmas_; }

    /// K at (t, interior node); Y-side bound. +inf at t = 0 when sigma_0 = 0.
    double evaluate(double t, int node) const;
    /// e^{-mu_t} K, the bound satisfied by the untransformed state X.
    double evaluate_x(double t, int node) const;

    double sup_at(double t, bool x_side = false) const;
    /// Extremes over the whole (t, node) lattice; per piece the time factor
    /// is monotone so only piece endpoints are scanned.
    double max_value() const;
    double min_value() const;

    bool finite_at_zero() const { return mode_ == Mode::fast || sigmas_.front() > 0.0; }

    /// analytic d/dt of K at (t, node), for the supersolution-defect checks
    double time_derivative(double t, int node) const;

    friend PiecewiseBound build_supersolution(double, const Partition&, const CoefficientSet&,
                                              const SignalPath&, double, double);
    friend PiecewiseBound fast_diffusion_bound(double, const Partition&, const CoefficientSet&,
                                               const SignalPath&, double, double);

  private:
    Mode mode_ = Mode::degenerate;
    double m_ = 2.0, a_ = 1.0, r_ = 1.0, c4_ = 0.0;
    Partition partition_;
    std::vector<double> sigmas_;
    std::vector<std::vector<double>> exp_mu_tau_; // [piece][node]
    GridPtr grid_;
    CoefficientSet coeffs_;
    SignalPath z_;

    PiecewiseBound(CoefficientSet coeffs, SignalPath z)
        : coeffs_(std::move(coeffs)), z_(std::move(z)) {}
    double time_factor(int piece, double t) const;
};

/// A from A^((m-1)/m) = R^(2/m) / ((m-1) d), the degenerate-mode constant.
double supersolution_amplitude(double m, double R, int dim);
/// Fast mode: A^((m-1)/m) = R^(2/m) / ((1-m) d).
double fast_amplitude(double m, double R, int dim);

/// K^(sigma0) for m > 1 with sigma_{i+1} = (sigma_i + gamma)/2.
PiecewiseBound build_supersolution(double sigma0, const Partition& partition,
                                   const CoefficientSet& coeffs, const SignalPath& z, double m,
                                   double R);

/// Largest sigma0 with K_0(0) >= Y0_sup everywhere (conservative product of
/// separate infima); +inf sentinel when Y0_sup = 0.
double sigma0_for(double y0_sup, const Partition& partition, const CoefficientSet& coeffs,
                  const SignalPath& z, double m, double R);

/// The initial-condition-independent bound U = K^(0) (infinite at t = 0).
PiecewiseBound uniform_bound_U(const Partition& partition, const CoefficientSet& coeffs,
                               const SignalPath& z, double m, double R);

/// Largest delta with K inside [delta, 1/delta]; the solver's delta must
/// stay below it for Phi^delta = Phi along the bound.
double delta0_for(const PiecewiseBound& bound);

/// Fast-diffusion (0 < m < 1) bound with sigma_{i+1} = 2 sigma_i + tau_{i+1}
/// and minimal sigma_0 such that K_0(0) >= Y0_sup and the sigma ordering
/// holds. Finite at t = 0; no initial-condition-free version exists.
PiecewiseBound fast_diffusion_bound(double y0_sup, const Partition& partition,
                                    const CoefficientSet& coeffs, const SignalPath& z, double m,
                                    double R);

/// Weight-ratio bound sup eta / inf eta for the L1 contraction estimate,
/// with eta = phi e^{-mu_{tau_i}}, phi solving -Lap phi = 1, phi = 1 on the
/// boundary, and the partition given by the L1 lemma's own condition.
double estimate_contraction_constant(const GridPtr& grid, const CoefficientSet& coeffs,
                                     const SignalPath& z, double m, double T);

} // namespace rpme
