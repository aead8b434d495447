#pragma once

#include "rpme/coefficients.hpp"
#include "rpme/grid.hpp"
#include "rpme/nonlinearity.hpp"
#include "rpme/signal.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace rpme {

struct SolverConfig {
    double m = 2.0;
    /// implicitness; only backward Euler (theta = 1) is implemented
    double theta = 1.0;
    /// Regularization width for Phi^delta; 0 selects the delta-h coupling
    /// h^(2/(m+1)).
    double delta = 0.0;
    double dt = 1e-3;
    double newton_tol = 1e-10;
    int newton_max = 50;
    /// Fields are stored every store_every steps (diagnostics every step).
    int store_every = 1;

    double resolved_delta(const Grid& grid) const;
};

class SolverError : public std::runtime_error {
  public:
    enum class Code { newton_diverged, non_finite, not_bounded_variation, window };

    SolverError(Code code, const std::string& what, int step = -1)
        : std::runtime_error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what),
          code_(code), step_(step) {}

    Code code() const { return code_; }
    int step() const { return step_; }

  private:
    Code code_;
    int step_;
};

enum class StateLabel { transformed_y, untransformed_x };

/// Per-step monitored quantities, recorded for every time step.
struct StepDiag {
    double t = 0.0;
    double l1 = 0.0, lmp1 = 0.0, linf = 0.0, hdual = 0.0;
    double psi_energy = 0.0;      // int Psi^delta(state)
    double dissipation_cum = 0.0; // cumulative edge dissipation
    double source_cum = 0.0;      // cumulative |mu-variation source|
    double residual = 0.0;        // converged nonlinear residual
    int newton_iters = 0;
    bool picard = false;
};

struct Trajectory {
    StateLabel label = StateLabel::transformed_y;
    double m = 2.0;
    double delta = 0.0;
    std::vector<double> times;  // stored snapshot times
    std::vector<Field> fields;  // snapshots, aligned with times
    std::vector<StepDiag> diags; // one per step, including the initial state

    const Field& final() const { return fields.back(); }
    double final_time() const { return times.back(); }
    int stored() const { return static_cast<int>(fields.size()); }
};

/// One backward-Euler step of the transformed equation
///   (Y' - Y)/dt = e^{mu(t+dt)} Lap_h( Phi(e^{-mu(t+dt)}) Phi^delta(Y') )
/// by damped Newton with the exact Phi^delta derivative in the Jacobian.
Field step_transformed(const Field& y, double t, const SignalPath& z, const SolverConfig& cfg,
                       const CoefficientSet& coeffs, StepDiag* diag = nullptr);

/// Time integration of the transformed equation on [0, T]; the path window
/// must cover [0, T].
Trajectory solve_transformed(const Field& y0, const SignalPath& z, const SolverConfig& cfg,
                             const CoefficientSet& coeffs, double T);

/// Solution X of the rough equation. Each step rebases the exponential
/// transformation at its own left endpoint, so the one-step map depends only
/// on the signal increment; restarting at any step time reproduces the run
/// exactly, which is what the cocycle checks rely on.
Trajectory solve_rough(const Field& x0, const SignalPath& z, const SolverConfig& cfg,
                       const CoefficientSet& coeffs, double T);

/// Direct backward-Euler discretization of the untransformed equation for
/// signals of bounded variation:
///   (X' - X)/dt = Lap_h Phi^delta(X') + B(X') (z_{t+dt} - z_t)/dt.
Trajectory solve_direct_bv(const Field& x0, const SignalPath& z, const SolverConfig& cfg,
                           const CoefficientSet& coeffs, double T);

struct LimitSolution {
    std::vector<double> levels;
    std::vector<double> cauchy_increments; // sup_t L1 distance between consecutive levels
    double error_estimate = 0.0;           // final Cauchy increment
    Trajectory trajectory;                 // finest level
};

/// Limit-solution construction: clamp the initial condition at each level,
/// solve, and report the L1 Cauchy increments between consecutive levels.
LimitSolution limit_solution(const Field& x0, const std::vector<double>& clamp_levels,
                             const SignalPath& z, const SolverConfig& cfg,
                             const CoefficientSet& coeffs, double T);

/// Separable space-time test function (T - t) * chi(xi) with chi a product
/// of first-axis sine modes, vanishing at t = T and on the boundary.
struct TestFunction {
    double T = 1.0;
    int kx = 1, ky = 1;

    double psi(double t) const { return T - t; }
    double dpsi(double) const { return -1.0; }
    struct SpaceEval {
        double chi, gx, gy, lap;
    };
    SpaceEval space(const Grid& g, int node) const;
};

/// Quadrature evaluation of the very weak formulation defect
/// | -int Y dpsi chi - int Y0 eta_0 - int Phi(e^{-mu} Y) Lap(e^{mu} eta) |
/// on a stored trajectory, using Phi (not Phi^delta).
double very_weak_residual(const Trajectory& traj, const TestFunction& eta,
                          const CoefficientSet& coeffs, const SignalPath& z, double m);

} // namespace rpme
