#include "rpme/rds.hpp"

#include "rpme/operators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <functional>
#include <thread>

namespace rpme {

namespace {

uint64_t hash_bytes(const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = 1469598103934665603ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

void run_parallel(int jobs, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, jobs));
    if (threads == 1) {
        for (int i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= jobs) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace

CocycleRun::CocycleRun(SignalPath omega, std::shared_ptr<const CoefficientSet> coeffs,
                       SolverConfig cfg)
    : omega_(std::move(omega)), coeffs_(std::move(coeffs)), cfg_(std::move(cfg)) {}

Field CocycleRun::cocycle(double duration, double start, const Field& x) const {
    if (duration < 0.0) throw std::invalid_argument("cocycle: negative duration");
    if (start < omega_.t0() - 1e-9 || start + duration > omega_.t1() + 1e-9)
        throw SolverError(SolverError::Code::window, "cocycle: window leaves omega");
    if (duration == 0.0) return x;

    const CacheKey key{std::lround((start - omega_.t0()) / omega_.dt()),
                       std::lround(duration / cfg_.dt),
                       hash_bytes(x.v.data(), x.v.size() * sizeof(double))};
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    const SignalPath window = omega_.shift(start);
    Trajectory traj = solve_rough(x, window, cfg_, *coeffs_, duration);
    Field out = traj.final();
    {
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.emplace(key, out);
    }
    return out;
}

PullbackReport pullback(const CocycleRun& run, const std::vector<Field>& bundle,
                        const std::vector<double>& times, int threads) {
    for (size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("pullback: times must be strictly increasing");
    if (!times.empty() && -times.back() < run.omega().t0() - 1e-9)
        throw std::invalid_argument("pullback: largest time exceeds the sampled omega window");

    PullbackReport rep;
    rep.times = times;
    rep.images.assign(times.size(), std::vector<Field>(bundle.size()));
    const int jobs = static_cast<int>(times.size() * bundle.size());
    run_parallel(jobs, threads, [&](int job) {
        const size_t ti = static_cast<size_t>(job) / bundle.size();
        const size_t bi = static_cast<size_t>(job) % bundle.size();
        rep.images[ti][bi] = run.cocycle(times[ti], -times[ti], bundle[bi]);
    });

    for (size_t ti = 0; ti < times.size(); ++ti) {
        double d1 = 0.0, d2 = 0.0, dinf = 0.0, sup = 0.0, adj = 0.0;
        const auto& row = rep.images[ti];
        for (size_t a = 0; a < row.size(); ++a) {
            sup = std::max(sup, norm_linf(row[a]));
            for (size_t b = a + 1; b < row.size(); ++b) {
                const Field diff = row[a] - row[b];
                d1 = std::max(d1, norm_l1(diff));
                d2 = std::max(d2, norm_l2(diff));
                dinf = std::max(dinf, norm_linf(diff));
            }
            const Field& u = row[a];
            const Grid& g = *u.grid;
            if (g.dim() == 1) {
                for (int i = 0; i + 1 < g.size(); ++i) adj = std::max(adj, std::abs(u[i + 1] - u[i]));
            } else {
                for (int iy = 0; iy < g.ny(); ++iy)
                    for (int ix = 0; ix + 1 < g.nx(); ++ix) {
                        const int i = ix + g.nx() * iy;
                        adj = std::max(adj, std::abs(u[i + 1] - u[i]));
                    }
                for (int iy = 0; iy + 1 < g.ny(); ++iy)
                    for (int ix = 0; ix < g.nx(); ++ix) {
                        const int i = ix + g.nx() * iy;
                        adj = std::max(adj, std::abs(u[i + g.nx()] - u[i]));
                    }
            }
        }
        rep.diam_l1.push_back(d1);
        rep.diam_l2.push_back(d2);
        rep.diam_linf.push_back(dinf);
        rep.sup_norm.push_back(sup);
        rep.max_adjacent_diff.push_back(adj);
    }
    return rep;
}

std::vector<AbsorptionResult> absorption_check(const PullbackReport& report, const CocycleRun& run,
                                               double tol) {
    bool any = false;
    for (double t : report.times) any = any || t >= 1.0 - 1e-9;
    if (!any) throw std::invalid_argument("absorption_check: needs a pullback time >= 1");

    // F(omega) radius: sup over nodes of U at relative time 1 on the window
    // [-1, 0] of omega, in untransformed variables
    const SignalPath window = run.omega().shift(-1.0);
    const double R = run.grid()->enclosing_radius();
    const Partition part =
        choose_partition(window, run.coeffs(), run.config().m, R, 1.0);
    const PiecewiseBound u_bound = uniform_bound_U(part, run.coeffs(), window, run.config().m, R);
    const double radius = u_bound.sup_at(1.0, /*x_side=*/true);

    std::vector<AbsorptionResult> results;
    for (size_t ti = 0; ti < report.times.size(); ++ti) {
        AbsorptionResult r;
        r.time = report.times[ti];
        r.bound = radius;
        if (r.time >= 1.0 - 1e-9) {
            r.checked = true;
            r.margin = radius * (1.0 + tol) - report.sup_norm[ti];
            r.absorbed = r.margin >= 0.0;
        }
        results.push_back(r);
    }
    return results;
}

DiameterCurve attractor_diameter_curve(const PullbackReport& report) {
    if (report.times.size() < 3)
        throw std::invalid_argument("attractor_diameter_curve: need at least 3 pullback times");
    DiameterCurve c;
    c.times = report.times;
    c.diam_l1 = report.diam_l1;
    c.diam_linf = report.diam_linf;
    // least-squares slope of log d vs log t over the entries with d > 0
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int k = 0;
    for (size_t i = 0; i < c.times.size(); ++i) {
        if (!(c.diam_l1[i] > 0.0)) continue;
        const double x = std::log(c.times[i]), y = std::log(c.diam_l1[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++k;
    }
    if (k >= 2 && sxx * k - sx * sx > 0) c.log_slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    return c;
}

} // namespace rpme
