#include "rpme/signal.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rpme {

const char* to_string(SignalKind k) {
    switch (k) {
        case SignalKind::brownian: return "brownian";
        case SignalKind::fbm: return "fbm";
        case SignalKind::piecewise_linear_of: return "piecewise_linear_of";
        case SignalKind::mollified_of: return "mollified_of";
        case SignalKind::constant_zero: return "constant_zero";
        case SignalKind::custom: return "custom";
    }
    return "?";
}

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    // splitmix64 over the combined state
    uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double fbm_covariance(double s, double t, double hurst) {
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(std::abs(s), h2) + std::pow(std::abs(t), h2) -
                  std::pow(std::abs(t - s), h2));
}

namespace {

std::mutex& fft_mutex() {
    static std::mutex m;
    return m;
}

void fft_inplace(std::vector<std::complex<double>>& a, int sign) {
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fft_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(a.size()),
                                reinterpret_cast<fftw_complex*>(a.data()),
                                reinterpret_cast<fftw_complex*>(a.data()), sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fft_mutex());
        fftw_destroy_plan(plan);
    }
}

// autocovariance of fGn increments on a grid with spacing dt
double fgn_cov(int lag, double dt, double hurst) {
    const double h2 = 2.0 * hurst;
    const double k = std::abs(lag);
    return 0.5 * std::pow(dt, h2) *
           (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) + std::pow(std::abs(k - 1.0), h2));
}

struct EmbeddingKey {
    double hurst, dt;
    int m;
    bool operator<(const EmbeddingKey& o) const {
        if (hurst != o.hurst) return hurst < o.hurst;
        if (dt != o.dt) return dt < o.dt;
        return m < o.m;
    }
};

// sqrt(lambda / M) for the circulant embedding of size M, cached per law
std::shared_ptr<const std::vector<double>> embedding_scales(double hurst, double dt, int m_size) {
    static std::mutex mutex;
    static std::map<EmbeddingKey, std::shared_ptr<const std::vector<double>>> cache;
    const EmbeddingKey key{hurst, dt, m_size};
    {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    std::vector<std::complex<double>> row(static_cast<size_t>(m_size));
    for (int j = 0; j <= m_size / 2; ++j) row[static_cast<size_t>(j)] = fgn_cov(j, dt, hurst);
    for (int j = m_size / 2 + 1; j < m_size; ++j)
        row[static_cast<size_t>(j)] = fgn_cov(m_size - j, dt, hurst);
    fft_inplace(row, FFTW_FORWARD);
    auto scales = std::make_shared<std::vector<double>>(static_cast<size_t>(m_size));
    double lmax = 0.0;
    for (const auto& c : row) lmax = std::max(lmax, c.real());
    for (int j = 0; j < m_size; ++j) {
        double lambda = row[static_cast<size_t>(j)].real();
        if (lambda < -1e-9 * lmax)
            throw std::runtime_error("fBm embedding: negative circulant eigenvalue");
        (*scales)[static_cast<size_t>(j)] = std::sqrt(std::max(lambda, 0.0) / m_size);
    }
    std::lock_guard<std::mutex> lock(mutex);
    cache[key] = scales;
    return scales;
}

// exact fGn sample of length n_inc for one component
void sample_fgn(double hurst, double dt, int n_inc, std::mt19937_64& rng, double* out) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (n_inc <= 16) {
        // full covariance factorization on tiny grids
        Eigen::MatrixXd cov(n_inc, n_inc);
        for (int i = 0; i < n_inc; ++i)
            for (int j = 0; j < n_inc; ++j) cov(i, j) = fgn_cov(i - j, dt, hurst);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw std::runtime_error("fGn covariance not SPD");
        Eigen::VectorXd xi(n_inc);
        for (int i = 0; i < n_inc; ++i) xi[i] = gauss(rng);
        Eigen::VectorXd w = llt.matrixL() * xi;
        for (int i = 0; i < n_inc; ++i) out[i] = w[i];
        return;
    }
    int m_size = 1;
    while (m_size < 2 * (n_inc - 1)) m_size *= 2;
    auto scales = embedding_scales(hurst, dt, m_size);
    std::vector<std::complex<double>> xi(static_cast<size_t>(m_size));
    for (int j = 0; j < m_size; ++j) {
        const double a = gauss(rng);
        const double b = gauss(rng);
        xi[static_cast<size_t>(j)] = std::complex<double>(a, b) * (*scales)[static_cast<size_t>(j)];
    }
    fft_inplace(xi, FFTW_BACKWARD);
    for (int i = 0; i < n_inc; ++i) out[i] = xi[static_cast<size_t>(i)].real();
}

int sample_count(double t0, double t1, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("SignalPath: dt must be positive");
    if (!(t0 < t1)) throw std::invalid_argument("SignalPath: need t0 < t1");
    const int n = static_cast<int>(std::lround((t1 - t0) / dt)) + 1;
    if (n < 2 || std::abs((n - 1) * dt - (t1 - t0)) > 1e-9 * std::max(1.0, t1 - t0))
        throw std::invalid_argument("SignalPath: window is not a whole number of dt steps");
    return n;
}

} // namespace

SignalPath SignalPath::sample(const NoiseModel& model, double t0, double t1, double dt,
                              uint64_t seed) {
    if (model.kind == SignalKind::fbm && !(model.hurst > 0.0 && model.hurst < 1.0))
        throw std::invalid_argument("sample_path: Hurst parameter must lie in (0,1)");
    if (model.dimension < 1) throw std::invalid_argument("sample_path: dimension must be >= 1");
    const double hurst = model.kind == SignalKind::brownian ? 0.5 : model.hurst;

    SignalPath p;
    p.t0_ = t0;
    p.t1_ = t1;
    p.dt_ = dt;
    p.dim_ = model.dimension;
    p.n_ = sample_count(t0, t1, dt);
    p.kind_ = model.kind;
    p.seed_ = seed;
    p.values_.assign(static_cast<size_t>(p.n_) * p.dim_, 0.0);

    std::vector<double> inc(static_cast<size_t>(p.n_ - 1));
    for (int k = 0; k < p.dim_; ++k) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<uint64_t>(k)));
        sample_fgn(hurst, dt, p.n_ - 1, rng, inc.data());
        double acc = 0.0;
        for (int j = 1; j < p.n_; ++j) {
            acc += inc[static_cast<size_t>(j - 1)];
            p.values_[static_cast<size_t>(j) * p.dim_ + k] = acc;
        }
    }

    // pin the value at time 0 to zero when 0 lies in the window
    const double j0_real = -t0 / dt;
    const int j0 = static_cast<int>(std::lround(j0_real));
    if (j0 >= 0 && j0 < p.n_ && std::abs(j0_real - j0) < 1e-6) {
        for (int k = 0; k < p.dim_; ++k) {
            const double base = p.values_[static_cast<size_t>(j0) * p.dim_ + k];
            for (int j = 0; j < p.n_; ++j) p.values_[static_cast<size_t>(j) * p.dim_ + k] -= base;
        }
    }
    return p;
}

SignalPath SignalPath::zero(int dim, double t0, double t1, double dt) {
    SignalPath p;
    p.t0_ = t0;
    p.t1_ = t1;
    p.dt_ = dt;
    p.dim_ = dim;
    p.n_ = sample_count(t0, t1, dt);
    p.kind_ = SignalKind::constant_zero;
    p.values_.assign(static_cast<size_t>(p.n_) * dim, 0.0);
    return p;
}

SignalPath SignalPath::from_samples(double t0, double dt, int dim, std::vector<double> values) {
    if (dim < 1 || values.size() % static_cast<size_t>(dim) != 0 ||
        values.size() < 2 * static_cast<size_t>(dim))
        throw std::invalid_argument("SignalPath::from_samples: bad shape");
    SignalPath p;
    p.t0_ = t0;
    p.dt_ = dt;
    p.dim_ = dim;
    p.n_ = static_cast<int>(values.size() / static_cast<size_t>(dim));
    p.t1_ = t0 + dt * (p.n_ - 1);
    p.kind_ = SignalKind::custom;
    p.values_ = std::move(values);
    return p;
}

double SignalPath::value_at(double t, int k) const {
    const double x = (t - t0_) / dt_;
    if (x < -1e-9 || x > n_ - 1 + 1e-9)
        throw std::out_of_range("SignalPath::value_at: t outside sampled window");
    const int j = std::min(n_ - 2, std::max(0, static_cast<int>(std::floor(x))));
    const double lam = x - j;
    if (lam <= 1e-12) return value(j, k);
    if (lam >= 1.0 - 1e-12) return value(j + 1, k);
    return (1.0 - lam) * value(j, k) + lam * value(j + 1, k);
}

void SignalPath::increment(int j0, int j1, double* out) const {
    for (int k = 0; k < dim_; ++k) out[k] = value(j1, k) - value(j0, k);
}

SignalPath SignalPath::shift(double s) const {
    const double j_real = (s - t0_) / dt_;
    const int j = static_cast<int>(std::lround(j_real));
    if (std::abs(j_real - j) > 1e-6)
        throw std::invalid_argument("SignalPath::shift: s must be a sample time");
    if (j < 0 || j >= n_) throw std::out_of_range("SignalPath::shift: window out of range");
    // share the raw buffer and move the base: z(t+s) - z(s) sample-exact,
    // and shifting back recovers the original bit-wise
    SignalPath p = *this;
    p.t0_ = t0_ - s;
    p.t1_ = t1_ - s;
    p.base_ = j;
    return p;
}

SignalPath SignalPath::piecewise_linear(int level) const {
    if (level < 0) throw std::invalid_argument("piecewise_linear: level must be >= 0");
    const double cells = std::pow(2.0, level);
    const double mesh = (t1_ - t0_) / cells;
    if (mesh < dt_ * (1.0 - 1e-9))
        throw std::invalid_argument("piecewise_linear: level finer than the sample grid");
    SignalPath p = *this;
    p.kind_ = SignalKind::piecewise_linear_of;
    p.param_ = level;
    p.base_ = -1;
    const int ncells = static_cast<int>(std::lround(cells));
    // knot values from the parent, then linear resampling on the parent grid
    std::vector<double> knots(static_cast<size_t>(ncells + 1) * dim_);
    for (int i = 0; i <= ncells; ++i) {
        const double t = i == ncells ? t1_ : t0_ + mesh * i;
        for (int k = 0; k < dim_; ++k) knots[static_cast<size_t>(i) * dim_ + k] = value_at(t, k);
    }
    for (int j = 0; j < n_; ++j) {
        const double x = (sample_time(j) - t0_) / mesh;
        const int c = std::min(ncells - 1, std::max(0, static_cast<int>(std::floor(x))));
        const double lam = std::min(1.0, std::max(0.0, x - c));
        for (int k = 0; k < dim_; ++k) {
            const double a = knots[static_cast<size_t>(c) * dim_ + k];
            const double b = knots[static_cast<size_t>(c + 1) * dim_ + k];
            p.values_[static_cast<size_t>(j) * dim_ + k] = (1.0 - lam) * a + lam * b;
        }
    }
    return p;
}

SignalPath SignalPath::mollify(double eps) const {
    if (!(eps >= 2.0 * dt_)) throw std::invalid_argument("mollify: eps must be at least 2 dt");
    const int half = static_cast<int>(std::floor(eps / dt_ * (1.0 - 1e-12)));
    std::vector<double> w(static_cast<size_t>(2 * half + 1));
    double total = 0.0;
    for (int k = -half; k <= half; ++k) {
        const double u = k * dt_ / eps;
        const double val = std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
        w[static_cast<size_t>(k + half)] = val;
        total += val;
    }
    for (double& x : w) x /= total;

    SignalPath p = *this;
    p.kind_ = SignalKind::mollified_of;
    p.param_ = eps;
    p.base_ = -1;
    // point-symmetric (odd) reflection through the endpoint values keeps the
    // increment structure across the window edges, so the mollified signal
    // carries no systematic endpoint bias
    auto extended = [this](int i, int k) {
        if (i < 0) return 2.0 * value(0, k) - value(std::min(n_ - 1, -i), k);
        if (i > n_ - 1) return 2.0 * value(n_ - 1, k) - value(std::max(0, 2 * (n_ - 1) - i), k);
        return value(i, k);
    };
    for (int j = 0; j < n_; ++j) {
        for (int k = 0; k < dim_; ++k) {
            double acc = 0.0;
            for (int l = -half; l <= half; ++l)
                acc += w[static_cast<size_t>(l + half)] * extended(j - l, k);
            p.values_[static_cast<size_t>(j) * dim_ + k] = acc;
        }
    }
    return p;
}

double SignalPath::modulus_of_continuity(double h) const {
    if (!(h > 0.0) || h > (t1_ - t0_) * (1.0 + 1e-9))
        throw std::invalid_argument("modulus_of_continuity: need 0 < h <= t1 - t0");
    const int lag_max = std::max(1, static_cast<int>(std::floor(h / dt_ * (1.0 + 1e-9))));
    double sup = 0.0;
    for (int j = 0; j < n_; ++j) {
        const int top = std::min(n_ - 1, j + lag_max);
        for (int l = j + 1; l <= top; ++l)
            for (int k = 0; k < dim_; ++k) sup = std::max(sup, std::abs(value(l, k) - value(j, k)));
    }
    return sup;
}

double SignalPath::sup_distance(const SignalPath& other) const {
    if (other.n_ != n_ || other.dim_ != dim_ || std::abs(other.dt_ - dt_) > 1e-12)
        throw std::invalid_argument("sup_distance: paths live on different grids");
    double sup = 0.0;
    for (int j = 0; j < n_; ++j)
        for (int k = 0; k < dim_; ++k) sup = std::max(sup, std::abs(value(j, k) - other.value(j, k)));
    return sup;
}

double SignalPath::total_variation() const {
    double tv = 0.0;
    for (int j = 0; j + 1 < n_; ++j) {
        double step = 0.0;
        for (int k = 0; k < dim_; ++k) step = std::max(step, std::abs(value(j + 1, k) - value(j, k)));
        tv += step;
    }
    return tv;
}

bool SignalPath::is_bounded_variation() const {
    switch (kind_) {
        case SignalKind::piecewise_linear_of:
        case SignalKind::mollified_of:
        case SignalKind::constant_zero:
        case SignalKind::custom: return true;
        case SignalKind::brownian:
        case SignalKind::fbm: return false;
    }
    return false;
}

void SignalPath::to_csv(std::ostream& os) const {
    os << "t";
    for (int k = 1; k <= dim_; ++k) os << ",z" << k;
    os << "\n";
    char buf[32];
    for (int j = 0; j < n_; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", sample_time(j));
        os << buf;
        for (int k = 0; k < dim_; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", value(j, k));
            os << ',' << buf;
        }
        os << "\n";
    }
}

SignalPath SignalPath::from_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("SignalPath::from_csv: empty input");
    int dim = 0;
    for (char c : line)
        if (c == ',') ++dim;
    if (dim < 1) throw std::runtime_error("SignalPath::from_csv: bad header");
    std::vector<double> times, values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) break;
        times.push_back(std::stod(cell));
        for (int k = 0; k < dim; ++k) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("SignalPath::from_csv: short row");
            values.push_back(std::stod(cell));
        }
    }
    if (times.size() < 2) throw std::runtime_error("SignalPath::from_csv: need at least 2 samples");
    const double dt = times[1] - times[0];
    for (size_t j = 1; j < times.size(); ++j)
        if (std::abs(times[j] - times[j - 1] - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw std::runtime_error("SignalPath::from_csv: nonuniform sampling");
    return from_samples(times.front(), dt, dim, std::move(values));
}

} // namespace rpme
