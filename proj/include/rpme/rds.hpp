#pragma once

#include "rpme/bounds.hpp"
#include "rpme/coefficients.hpp"
#include "rpme/signal.hpp"
#include "rpme/solver.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace rpme {

/// Cocycle evaluation over one fixed long noise path omega. Every window is
/// cut out of the single stored path, so all pullback times share one omega.
/// Solved segments are cached by (start, duration, initial-state hash).
class CocycleRun {
  public:
    CocycleRun(SignalPath omega, std::shared_ptr<const CoefficientSet> coeffs, SolverConfig cfg);

    const SignalPath& omega() const { return omega_; }
    const CoefficientSet& coeffs() const { return *coeffs_; }
    const SolverConfig& config() const { return cfg_; }
    const GridPtr& grid() const { return coeffs_->grid(); }

    /// phi(duration, theta_start omega) x: solve on [start, start + duration].
    Field cocycle(double duration, double start, const Field& x) const;

  private:
    SignalPath omega_;
    std::shared_ptr<const CoefficientSet> coeffs_;
    SolverConfig cfg_;

    struct CacheKey {
        long start_steps;
        long duration_steps;
        uint64_t state_hash;
        bool operator<(const CacheKey& o) const {
            if (start_steps != o.start_steps) return start_steps < o.start_steps;
            if (duration_steps != o.duration_steps) return duration_steps < o.duration_steps;
            return state_hash < o.state_hash;
        }
    };
    mutable std::mutex mutex_;
    mutable std::map<CacheKey, Field> cache_;
};

struct PullbackReport {
    std::vector<double> times;                // pullback times t_n, increasing
    std::vector<std::vector<Field>> images;   // [time][ic]: phi(t_n, theta_{-t_n} omega) x_j
    std::vector<double> diam_l1, diam_l2, diam_linf;
    std::vector<double> sup_norm;             // max image sup-norm per time
    std::vector<double> max_adjacent_diff;    // equicontinuity surrogate per time
};

/// Images of an initial-condition bundle under the pullback flow from -t_n
/// to 0, with pairwise diameters in L1/L2/Linf.
PullbackReport pullback(const CocycleRun& run, const std::vector<Field>& bundle,
                        const std::vector<double>& times, int threads = 0);

struct AbsorptionResult {
    double time = 0.0;
    bool checked = false; // only pullback times >= 1 are checked
    bool absorbed = false;
    double bound = 0.0;  // ||U_1(theta_{-1} omega)||_inf
    double margin = 0.0; // bound - max image sup-norm
};

/// Checks every image at t_n >= 1 against the absorbing radius
/// ||U_1(theta_{-1} omega)||_inf, U built on the window [-1, 0] of omega.
std::vector<AbsorptionResult> absorption_check(const PullbackReport& report,
                                               const CocycleRun& run, double tol = 1e-2);

struct DiameterCurve {
    std::vector<double> times;
    std::vector<double> diam_l1, diam_linf;
    double log_slope = 0.0; // least-squares d log(diam_l1) / d log(t), reporting only
};

/// Diameter decay curve with a fitted log-log slope (no rate is claimed).
DiameterCurve attractor_diameter_curve(const PullbackReport& report);

} // namespace rpme
