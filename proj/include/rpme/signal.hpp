#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rpme {

enum class SignalKind {
    brownian,
    fbm,
    piecewise_linear_of,
    mollified_of,
    constant_zero,
    custom,
};

const char* to_string(SignalKind k);

/// Noise law for sample_path. Brownian motion is fBm with H = 1/2; the two
/// kinds share one generator so their outputs agree in law.
struct NoiseModel {
    SignalKind kind = SignalKind::brownian;
    double hurst = 0.5;
    int dimension = 1;

    static NoiseModel brownian(int dim = 1) { return {SignalKind::brownian, 0.5, dim}; }
    static NoiseModel fbm(double hurst, int dim = 1) { return {SignalKind::fbm, hurst, dim}; }
};

/// A sampled continuous driving path z : [t0,t1] -> R^N on a uniform grid.
/// Stochastic paths are pinned to z = 0 at time 0 whenever 0 lies in the
/// window. Immutable after construction.
class SignalPath {
  public:
    /// Exact Gaussian synthesis of fBm/Brownian increments by circulant
    /// embedding of the increment covariance (full covariance factorization
    /// for very short grids). Deterministic in (model, window, dt, seed).
    static SignalPath sample(const NoiseModel& model, double t0, double t1, double dt,
                             uint64_t seed);
    static SignalPath zero(int dim, double t0, double t1, double dt);
    /// Deterministic path from samples; kind = custom (treated as smooth/BV).
    static SignalPath from_samples(double t0, double dt, int dim, std::vector<double> values);

    double t0() const { return t0_; }
    double t1() const { return t1_; }
    double dt() const { return dt_; }
    int dimension() const { return dim_; }
    int samples() const { return n_; }
    SignalKind kind() const { return kind_; }
    uint64_t seed() const { return seed_; }
    /// level for piecewise_linear_of, eps for mollified_of, else 0.
    double parent_param() const { return param_; }

    double sample_time(int j) const { return t0_ + dt_ * j; }
    /// Shifted paths subtract the sample at the base index lazily, so that
    /// composing shifts is exact: the window-group property holds bit-wise.
    double value(int j, int k) const {
        const double raw = values_[static_cast<size_t>(j) * dim_ + k];
        return base_ < 0 ? raw : raw - values_[static_cast<size_t>(base_) * dim_ + k];
    }
    /// Linear interpolation between samples; exact at sample times.
    double value_at(double t, int k) const;
    void increment(int j0, int j1, double* out) const; // z(t_j1) - z(t_j0), one per component

    /// The path t -> z(t+s) - z(s), i.e. the same omega seen from time s.
    /// s must be a sample time of the window.
    SignalPath shift(double s) const;

    /// Piecewise-linear interpolant on the dyadic mesh with 2^level cells,
    /// resampled on the original grid.
    SignalPath piecewise_linear(int level) const;

    /// Convolution with a compactly supported smooth bump of width eps,
    /// extended by reflection at the endpoints. Requires eps >= 2 dt.
    SignalPath mollify(double eps) const;

    /// sup over sampled pairs |t-s| <= h of the max-component increment.
    double modulus_of_continuity(double h) const;

    /// Max over shared sample times (same grid required) of |z - other|_inf.
    double sup_distance(const SignalPath& other) const;

    /// Sum over steps of the max-component absolute increment.
    double total_variation() const;
    bool is_bounded_variation() const;

    void to_csv(std::ostream& os) const;
    static SignalPath from_csv(std::istream& is);

  private:
    SignalPath() = default;

    double t0_ = 0, t1_ = 0, dt_ = 0;
    int dim_ = 1, n_ = 0;
    std::vector<double> values_; // raw samples, sample-major: values_[j*dim + k]
    int base_ = -1;              // raw index subtracted from every sample, -1 = none
    SignalKind kind_ = SignalKind::custom;
    uint64_t seed_ = 0;
    double param_ = 0;
};

/// Exact fBm covariance Cov(z_s, z_t) = (|s|^2H + |t|^2H - |t-s|^2H) / 2.
double fbm_covariance(double s, double t, double hurst);

uint64_t mix_seed(uint64_t seed, uint64_t stream);

} // namespace rpme
