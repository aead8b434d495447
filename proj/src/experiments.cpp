#include "rpme/experiments.hpp"

#include "rpme/bounds.hpp"
#include "rpme/operators.hpp"
#include "rpme/rds.hpp"
#include "rpme/zkb.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <fstream>
#include <iostream>
#include <thread>

namespace rpme {

namespace {

namespace fs = std::filesystem;

double wall_seconds(const std::function<void()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void run_parallel(int jobs, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, jobs));
    if (threads == 1) {
        for (int i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
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
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

void write_field_csv(const std::string& path, const Field& f) {
    std::ofstream os(path);
    const Grid& g = *f.grid;
    os << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
    char buf[96];
    for (int i = 0; i < f.size(); ++i) {
        if (g.dim() == 1)
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", g.node_x(i), f[i]);
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.node_x(i), g.node_y(i), f[i]);
        os << buf;
    }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream os(path);
    const Grid& g = *traj.fields.front().grid;
    os << (g.dim() == 1 ? "t,x,value\n" : "t,x,y,value\n");
    char buf[120];
    for (size_t j = 0; j < traj.times.size(); ++j) {
        for (int i = 0; i < traj.fields[j].size(); ++i) {
            if (g.dim() == 1)
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", traj.times[j], g.node_x(i),
                              traj.fields[j][i]);
            else
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", traj.times[j],
                              g.node_x(i), g.node_y(i), traj.fields[j][i]);
            os << buf;
        }
    }
}

json diagnostics_json(const Trajectory& traj) {
    json out;
    out["label"] = traj.label == StateLabel::transformed_y ? "Y" : "X";
    out["m"] = traj.m;
    out["delta"] = traj.delta;
    json steps = json::array();
    for (const auto& d : traj.diags) {
        steps.push_back({{"t", d.t},
                         {"l1", d.l1},
                         {"lmp1", d.lmp1},
                         {"linf", d.linf},
                         {"hdual", d.hdual},
                         {"psi_energy", d.psi_energy},
                         {"dissipation_cum", d.dissipation_cum},
                         {"source_cum", d.source_cum},
                         {"newton_iters", d.newton_iters},
                         {"residual", d.residual}});
    }
    out["steps"] = std::move(steps);
    return out;
}

struct SuiteContext {
    const ExperimentConfig& cfg;
    std::string out_dir;
    int threads;

    void write_json(const std::string& name, const json& j) const {
        if (out_dir.empty()) return;
        std::ofstream os(fs::path(out_dir) / name);
        os << j.dump(2) << "\n";
    }
    void write_field(const std::string& name, const Field& f) const {
        if (out_dir.empty()) return;
        write_field_csv((fs::path(out_dir) / name).string(), f);
    }
    void write_trajectory(const std::string& name, const Trajectory& t) const {
        if (out_dir.empty()) return;
        write_trajectory_csv((fs::path(out_dir) / name).string(), t);
    }
};

// ---------------------------------------------------------------------------
// oracle: deterministic ZKB benchmark (criterion 1) plus profile checks
// ---------------------------------------------------------------------------
ExperimentResult suite_oracle(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "oracle";
    const auto& cfg = ctx.cfg;

    const double m = cfg.get("model.m", 2.0);
    const double mass = cfg.get("ic.mass", 1.0);
    const double t_start = cfg.get("ic.zkb_time", 0.1);
    const double t_end = cfg.get("model.t_end", 0.5);
    const int n = cfg.get("grid.n", 800);
    const double dt = cfg.get("model.dt", 2.5e-4);

    GridPtr grid = Grid::interval(cfg.get("grid.a", -4.0), cfg.get("grid.b", 4.0), n,
                                  cfg.get("grid.radius_factor", 1.05));
    // support must stay inside the domain through the run
    const double support_end = zkb_support_radius(t_end + 0.1, m, mass);
    res.add(Assertion::le("zkb support radius through run", support_end,
                          std::min(-grid->ax(), grid->bx()), "derived tolerance"));

    // mass conservation of the profile at two times
    for (double tq : {0.1, 0.5}) {
        GridPtr fine = Grid::interval(-zkb_support_radius(tq, m, mass) * 1.01,
                                      zkb_support_radius(tq, m, mass) * 1.01, 4001);
        const double mq = integrate(zkb_field(fine, tq, m, mass));
        res.add(Assertion::le("zkb mass quadrature error t=" + std::to_string(tq),
                              std::abs(mq - mass), 1e-6, "derived tolerance"));
    }

    SolverConfig scfg = cfg.solver_config(*grid);
    scfg.m = m;
    scfg.dt = dt;
    scfg.store_every = cfg.get("model.store_every", 40);
    const double T = t_end - t_start;
    SignalPath z = SignalPath::zero(1, 0.0, T, dt);
    CoefficientSet coeffs(grid, cfg.coefficient_terms());

    Field ic = zkb_field(grid, t_start, m, mass);
    Trajectory traj;
    const double runtime = wall_seconds([&] { traj = solve_rough(ic, z, scfg, coeffs, T); });

    const Field exact = zkb_field(grid, t_end, m, mass);
    const double l1_err = norm_l1(traj.final() - exact) / mass;
    res.add(Assertion::le("zkb L1 relative error at t_end", l1_err, cfg.get("tol.l1", 0.02),
                          "derived tolerance", 1));
    Assertion rt = Assertion::le("runtime seconds", runtime, 60.0, "derived tolerance", 1);
    rt.volatile_measure = true;
    res.add(rt);

    ctx.write_field("solution.csv", traj.final());
    ctx.write_field("exact.csv", exact);
    ctx.write_trajectory("trajectory.csv", traj);
    ctx.write_json("error.json", json{{"l1_relative_error", l1_err},
                                      {"n", n},
                                      {"dt", dt},
                                      {"delta", traj.delta}});
    ctx.write_json("diagnostics.json", diagnostics_json(traj));
    res.extra["l1_relative_error"] = l1_err;
    return res;
}

using SuiteFn = ExperimentResult (*)(const SuiteContext&);

struct SuiteEntry {
    const char* name;
    const char* blurb;
    SuiteFn fn;
};

ExperimentResult suite_self_convergence(const SuiteContext&);
ExperimentResult suite_bounds(const SuiteContext&);
ExperimentResult suite_comparison(const SuiteContext&);
ExperimentResult suite_contraction(const SuiteContext&);
ExperimentResult suite_wong_zakai(const SuiteContext&);
ExperimentResult suite_cocycle(const SuiteContext&);
ExperimentResult suite_attractor(const SuiteContext&);
ExperimentResult suite_fbm(const SuiteContext&);
ExperimentResult suite_residual(const SuiteContext&);

double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int k = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++k;
    }
    if (k < 2) return 0.0;
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

// interpolate a Dirichlet field onto another grid (piecewise linear in x)
double interp_field_1d(const Field& f, double x) {
    const Grid& g = *f.grid;
    const double pos = (x - g.ax()) / g.hx() - 1.0; // node index coordinate
    if (pos <= -1.0 || pos >= g.nx()) return 0.0;
    const int i = static_cast<int>(std::floor(pos));
    const double lam = pos - i;
    const double a = i < 0 ? 0.0 : f[i];
    const double b = i + 1 >= g.nx() ? 0.0 : f[i + 1];
    return (1.0 - lam) * a + lam * b;
}

int criterion_filter(const ExperimentConfig& cfg) { return cfg.get("filter.criterion", 0); }

// ---------------------------------------------------------------------------
// self-convergence: L1 order against a fine reference (criterion 2)
// ---------------------------------------------------------------------------
ExperimentResult suite_self_convergence(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "self-convergence";
    const auto& cfg = ctx.cfg;
    const double m = cfg.get("model.m", 2.0);
    const double mass = cfg.get("ic.mass", 1.0);
    const double t_start = cfg.get("ic.zkb_time", 0.1);
    const double T = cfg.get("model.t_end", 0.5) - t_start;
    const double dt = cfg.get("model.dt", 2.5e-4);
    const std::vector<int> sizes = {100, 200, 400, 800};
    const int n_ref = 1600;

    const SignalPath z = SignalPath::zero(1, 0.0, T, dt);
    std::vector<Field> finals(sizes.size() + 1);
    std::vector<int> all_sizes = sizes;
    all_sizes.push_back(n_ref);
    run_parallel(static_cast<int>(all_sizes.size()), ctx.threads, [&](int j) {
        GridPtr g = Grid::interval(cfg.get("grid.a", -4.0), cfg.get("grid.b", 4.0),
                                   all_sizes[static_cast<size_t>(j)]);
        CoefficientSet coeffs(g, cfg.coefficient_terms());
        SolverConfig scfg = cfg.solver_config(*g);
        scfg.m = m;
        scfg.dt = dt;
        scfg.store_every = 1 << 20;
        finals[static_cast<size_t>(j)] =
            solve_rough(zkb_field(g, t_start, m, mass), z, scfg, coeffs, T).final();
    });

    const Field& ref = finals.back();
    std::vector<double> hs, errs;
    json curve = json::array();
    for (size_t j = 0; j < sizes.size(); ++j) {
        const Field& sol = finals[j];
        Field ref_on_coarse(sol.grid);
        for (int i = 0; i < sol.size(); ++i)
            ref_on_coarse[i] = interp_field_1d(ref, sol.grid->node_x(i));
        const double err = norm_l1(sol - ref_on_coarse);
        hs.push_back(sol.grid->hx());
        errs.push_back(err);
        curve.push_back({{"n", sizes[j]}, {"h", sol.grid->hx()}, {"l1_error", err}});
    }
    const double order = fit_log_slope(hs, errs);
    res.add(Assertion::ge("observed L1 order vs n=1600 reference", order, 0.8,
                          "derived tolerance", 2));
    res.extra["errors"] = curve;
    res.extra["order"] = order;
    ctx.write_json("convergence.json", res.extra);
    return res;
}

// ---------------------------------------------------------------------------
// bounds: uniform supersolution (criterion 3) and fast diffusion (criterion 12)
// ---------------------------------------------------------------------------
ExperimentResult suite_bounds(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "bounds";
    const auto& cfg = ctx.cfg;
    const int filter = criterion_filter(cfg);
    const uint64_t seed = cfg.get_seed(20240);

    if (filter == 0 || filter == 3) {
        const double m = cfg.get("model.m", 2.0);
        const double T = cfg.get("model.T", 1.0);
        GridPtr g = Grid::interval(cfg.get("grid.a", -4.0), cfg.get("grid.b", 4.0),
                                   cfg.get("grid.n", 120));
        CoefficientSet coeffs(g, cfg.coefficient_terms());
        const double R = g->enclosing_radius();
        const int n_paths = cfg.get("mc.paths", 10);
        const int n_ics = cfg.get("mc.ics", 50);
        const double dt = cfg.get("model.dt", 1e-3);
        const double path_dt = cfg.get("noise.path_dt", 1e-5);

        std::vector<SignalPath> paths;
        std::vector<PiecewiseBound> ubounds;
        std::vector<double> delta_caps;
        for (int p = 0; p < n_paths; ++p) {
            paths.push_back(SignalPath::sample(NoiseModel::brownian(), 0.0, T, path_dt,
                                               mix_seed(seed, 100 + p)));
            const Partition part = choose_partition(paths.back(), coeffs, m, R, T);
            ubounds.push_back(uniform_bound_U(part, coeffs, paths.back(), m, R));
            // a solver delta compatible with the supersolution argument
            const double sigma0 = sigma0_for(1.0, part, coeffs, paths.back(), m, R);
            const auto k = build_supersolution(sigma0, part, coeffs, paths.back(), m, R);
            delta_caps.push_back(delta0_for(k));
        }

        std::vector<double> worst(static_cast<size_t>(n_paths * n_ics), -1e300);
        run_parallel(n_paths * n_ics, ctx.threads, [&](int job) {
            const int p = job % n_paths;
            const int ic = job / n_paths;
            SolverConfig scfg = cfg.solver_config(*g);
            scfg.m = m;
            scfg.dt = dt;
            scfg.store_every = 20;
            scfg.delta = std::min(scfg.resolved_delta(*g), 0.99 * delta_caps[static_cast<size_t>(p)]);
            Field x0 = make_initial_condition(g, "fourier", 0.2 + 0.8 * (ic % 5) / 4.0,
                                              mix_seed(seed, 1000 + ic), m);
            auto traj = solve_rough(x0, paths[static_cast<size_t>(p)], scfg, coeffs, T);
            double w = -1e300;
            for (size_t j = 0; j < traj.times.size(); ++j) {
                const double t = traj.times[j];
                if (t < 0.05) continue;
                double sup_u = 0.0, margin = -1e300;
                for (int i = 0; i < g->size(); ++i) {
                    const double u = ubounds[static_cast<size_t>(p)].evaluate_x(t, i);
                    sup_u = std::max(sup_u, u);
                    margin = std::max(margin, traj.fields[j][i] - u);
                }
                w = std::max(w, margin / sup_u);
            }
            worst[static_cast<size_t>(job)] = w;
        });
        double w = -1e300;
        for (double v : worst) w = std::max(w, v);
        res.add(Assertion::le("max (X - U)/||U||inf over runs and t >= 0.05", w, 1e-2,
                              "paper formula", 3));
        res.extra["uniform_bound_margin"] = w;
        if (!ctx.out_dir.empty()) {
            // U of the first path on a (t, node) lattice, for plotting
            std::ofstream os(fs::path(ctx.out_dir) / "uniform_bound.csv");
            os << "t,x,U\n";
            char buf[96];
            for (int q = 1; q <= 50; ++q) {
                const double t = T * q / 50.0;
                for (int i = 0; i < g->size(); ++i) {
                    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", t, g->node_x(i),
                                  ubounds.front().evaluate_x(t, i));
                    os << buf;
                }
            }
        }
    }

    if (filter == 0 || filter == 12) {
        const double m = cfg.get("fast.m", 0.5);
        const double T = cfg.get("fast.T", 0.5);
        GridPtr g = Grid::interval(-2.0, 2.0, cfg.get("fast.n", 100));
        CoefficientTerm t = CoefficientTerm::parse(cfg.get("fast.f1", "sin 0.15 0.78539816339744828"));
        CoefficientSet coeffs(g, {t});
        const double R = g->enclosing_radius();
        const auto z = SignalPath::sample(NoiseModel::brownian(), 0.0, T, 2.5e-4,
                                          mix_seed(seed, 7));
        const Partition part = choose_partition(z, coeffs, m, R, T);
        Field x0 = make_initial_condition(g, "bump", 0.5, 1, m);
        const auto k = fast_diffusion_bound(norm_linf(x0), part, coeffs, z, m, R);

        SolverConfig scfg;
        scfg.m = m;
        scfg.dt = 1e-3;
        scfg.store_every = 10;
        auto traj = solve_rough(x0, z, scfg, coeffs, T);
        double kmax = 0.0, margin = -1e300;
        for (size_t j = 0; j < traj.times.size(); ++j)
            for (int i = 0; i < g->size(); ++i) {
                const double kb = k.evaluate_x(traj.times[j], i);
                kmax = std::max(kmax, kb);
                margin = std::max(margin, traj.fields[j][i] - kb);
            }
        res.add(Assertion::le("fast diffusion: max (X - K) vs 1e-2 ||K||inf", margin,
                              1e-2 * kmax, "paper formula", 12));
        res.extra["fast_margin"] = margin;
        res.extra["fast_bound_sup"] = kmax;
    }
    return res;
}

// ---------------------------------------------------------------------------
// comparison: ordered initial data stays ordered (criterion 4)
// ---------------------------------------------------------------------------
ExperimentResult suite_comparison(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "comparison";
    const auto& cfg = ctx.cfg;
    const double m = cfg.get("model.m", 2.0);
    const double T = cfg.get("model.T", 1.0);
    GridPtr g = Grid::interval(cfg.get("grid.a", -4.0), cfg.get("grid.b", 4.0),
                               cfg.get("grid.n", 120));
    CoefficientSet coeffs(g, cfg.coefficient_terms());
    const uint64_t seed = cfg.get_seed(4242);
    const int n_pairs = cfg.get("mc.pairs", 100);
    const int n_paths = cfg.get("mc.paths", 10);

    std::vector<SignalPath> paths;
    for (int p = 0; p < n_paths; ++p)
        paths.push_back(
            SignalPath::sample(NoiseModel::brownian(), 0.0, T, 1e-3, mix_seed(seed, 100 + p)));

    std::vector<double> min_gap(static_cast<size_t>(n_pairs), 1e300);
    run_parallel(n_pairs, ctx.threads, [&](int pair) {
        SolverConfig scfg = cfg.solver_config(*g);
        scfg.m = m;
        scfg.dt = 1e-3;
        scfg.store_every = 25;
        const SignalPath& z = paths[static_cast<size_t>(pair % n_paths)];
        std::mt19937_64 rng(mix_seed(seed, 500 + pair));
        std::uniform_real_distribution<double> uni(0.05, 0.6);
        Field lo = make_initial_condition(g, "fourier", uni(rng), mix_seed(seed, 900 + pair), m);
        Field hi = lo;
        Field bump = make_initial_condition(g, "bump", uni(rng), 0, m);
        for (int i = 0; i < g->size(); ++i) hi[i] += bump[i];
        auto tlo = solve_rough(lo, z, scfg, coeffs, T);
        auto thi = solve_rough(hi, z, scfg, coeffs, T);
        double worst = 1e300;
        for (size_t j = 0; j < tlo.times.size(); ++j)
            for (int i = 0; i < g->size(); ++i)
                worst = std::min(worst, thi.fields[j][i] - tlo.fields[j][i]);
        min_gap[static_cast<size_t>(pair)] = worst;
    });
    double worst = 1e300;
    for (double v : min_gap) worst = std::min(worst, v);
    res.add(Assertion::ge("min over pairs/nodes/times of X2 - X1", worst, -1e-8,
                          "derived tolerance", 4));
    res.extra["min_gap"] = worst;
    return res;
}

// ---------------------------------------------------------------------------
// contraction: measured L1 ratios against the estimated constant (criterion 5)
// ---------------------------------------------------------------------------
ExperimentResult suite_contraction(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "contraction";
    const auto& cfg = ctx.cfg;
    const double m = cfg.get("model.m", 2.0);
    const double T = cfg.get("model.T", 1.0);
    GridPtr g = Grid::interval(cfg.get("grid.a", -4.0), cfg.get("grid.b", 4.0),
                               cfg.get("grid.n", 120));
    CoefficientSet coeffs(g, cfg.coefficient_terms());
    const uint64_t seed = cfg.get_seed(5151);
    const int n_pairs = cfg.get("mc.pairs", 100);
    const int n_paths = cfg.get("mc.paths", 10);
    const double path_dt = cfg.get("noise.path_dt", 1e-5);

    std::vector<SignalPath> paths;
    std::vector<double> constants;
    for (int p = 0; p < n_paths; ++p) {
        paths.push_back(SignalPath::sample(NoiseModel::brownian(), 0.0, T, path_dt,
                                           mix_seed(seed, 100 + p)));
        constants.push_back(estimate_contraction_constant(g, coeffs, paths.back(), m, T));
    }

    std::vector<double> two_sided(static_cast<size_t>(n_pairs)), one_sided(static_cast<size_t>(n_pairs));
    run_parallel(n_pairs, ctx.threads, [&](int pair) {
        SolverConfig scfg = cfg.solver_config(*g);
        scfg.m = m;
        scfg.dt = 1e-3;
        scfg.store_every = 25;
        const int p = pair % n_paths;
        const SignalPath& z = paths[static_cast<size_t>(p)];
        Field a = make_initial_condition(g, "fourier", 0.5, mix_seed(seed, 700 + pair), m);
        Field b = make_initial_condition(g, "fourier", 0.45, mix_seed(seed, 800 + pair), m);
        auto ta = solve_rough(a, z, scfg, coeffs, T);
        auto tb = solve_rough(b, z, scfg, coeffs, T);
        const double d0 = norm_l1(a - b);
        double pos0 = 0.0;
        for (int i = 0; i < g->size(); ++i)
            pos0 += g->weight(i) * std::max(0.0, a[i] - b[i]);
        double rt = 0.0, rp = 0.0;
        for (size_t j = 0; j < ta.times.size(); ++j) {
            const Field diff = ta.fields[j] - tb.fields[j];
            rt = std::max(rt, norm_l1(diff) / d0);
            double pos = 0.0;
            for (int i = 0; i < g->size(); ++i) pos += g->weight(i) * std::max(0.0, diff[i]);
            rp = std::max(rp, pos / pos0);
        }
        // normalized by the per-path constant so one number summarizes all pairs
        two_sided[static_cast<size_t>(pair)] = rt / constants[static_cast<size_t>(p)];
        one_sided[static_cast<size_t>(pair)] = rp / constants[static_cast<size_t>(p)];
    });
    double worst2 = 0.0, worst1 = 0.0;
    for (int i = 0; i < n_pairs; ++i) {
        worst2 = std::max(worst2, two_sided[static_cast<size_t>(i)]);
        worst1 = std::max(worst1, one_sided[static_cast<size_t>(i)]);
    }
    res.add(Assertion::le("max pair ratio sup_t |X1-X2|_1 / |X1_0-X2_0|_1 over C", worst2, 1.0,
                          "paper formula", 5));
    res.add(Assertion::le("max pair one-sided ratio over C", worst1, 1.0, "paper formula", 5));
    json cs = json::array();
    for (double c : constants) cs.push_back(c);
    res.extra["constants"] = cs;
    res.extra["worst_two_sided"] = worst2;
    res.extra["worst_one_sided"] = worst1;
    return res;
}

// ---------------------------------------------------------------------------
// wong-zakai: convergence (6), sequence independence (7), transformation (8)
// ---------------------------------------------------------------------------
ExperimentResult suite_wong_zakai(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "wong-zakai";
    const auto& cfg = ctx.cfg;
    const int filter = criterion_filter(cfg);
    const double m = cfg.get("model.m", 2.0);
    const double T = cfg.get("model.T", 0.25);
    GridPtr g = Grid::interval(cfg.get("grid.a", -4.0), cfg.get("grid.b", 4.0),
                               cfg.get("grid.n", 200));
    CoefficientSet coeffs(g, cfg.coefficient_terms());
    const uint64_t seed = cfg.get_seed(1);
    const double path_dt = T / 4096.0; // resolves dyadic levels up to 12
    const SignalPath z = SignalPath::sample(NoiseModel::brownian(), 0.0, T, path_dt, seed);
    Field x0 = make_initial_condition(g, "bump", 1.0, 0, m);

    SolverConfig scfg = cfg.solver_config(*g);
    scfg.m = m;
    scfg.dt = T / 4096.0;
    scfg.store_every = 1 << 20;

    if (filter == 0 || filter == 6 || filter == 7) {
        const int ref_level = 10;
        std::vector<int> levels = {4, 5, 6, 7, 8, 9};
        std::vector<Field> finals(levels.size() + 2);
        run_parallel(static_cast<int>(levels.size()) + 2, ctx.threads, [&](int j) {
            if (j < static_cast<int>(levels.size())) {
                finals[static_cast<size_t>(j)] =
                    solve_rough(x0, z.piecewise_linear(levels[static_cast<size_t>(j)]), scfg,
                                coeffs, T)
                        .final();
            } else if (j == static_cast<int>(levels.size())) {
                finals[static_cast<size_t>(j)] =
                    solve_rough(x0, z.piecewise_linear(ref_level), scfg, coeffs, T).final();
            } else {
                finals[static_cast<size_t>(j)] =
                    solve_rough(x0, z.mollify(T / 256.0), scfg, coeffs, T).final();
            }
        });
        const Field& ref = finals[levels.size()];
        std::vector<double> dists;
        json curve = json::array();
        for (size_t j = 0; j < levels.size(); ++j) {
            dists.push_back(norm_hdual(finals[j] - ref));
            curve.push_back({{"level", levels[j]}, {"hdual_distance", dists.back()}});
        }
        res.extra["wz_distances"] = curve;
        if (filter == 0 || filter == 6) {
            int violations = 0;
            double worst_step = 0.0;
            for (size_t j = 1; j < dists.size(); ++j)
                if (dists[j] > dists[j - 1]) {
                    ++violations;
                    worst_step = std::max(worst_step, dists[j] / dists[j - 1] - 1.0);
                }
            res.add(Assertion::le("non-monotone steps in H-distance", violations, 1.0,
                                  "derived tolerance", 6));
            res.add(Assertion::le("largest non-monotone step", worst_step, 0.2,
                                  "derived tolerance", 6));
            res.add(Assertion::le("H-distance at level 9", dists.back(), 1e-3,
                                  "derived tolerance", 6));
        }
        if (filter == 0 || filter == 7) {
            // mollified with eps matched to the level-8 mesh vs level-8
            const double d_moll = norm_hdual(finals.back() - finals[4]);
            res.add(Assertion::le("mollified vs piecewise-linear level 8", d_moll,
                                  3.0 * dists[4], "derived tolerance", 7));
            res.extra["sequence_independence_distance"] = d_moll;
        }
    }

    if (filter == 0 || filter == 8) {
        // transformation equivalence under one joint refinement notch. The
        // scheme difference scales like dt * 2^level, so a notch quarters dt
        // while moving the level up one; the distance should then halve.
        auto distance_at = [&](int level, double dt) {
            SolverConfig c2 = scfg;
            c2.dt = dt;
            const SignalPath zb = z.piecewise_linear(level);
            const Field a = solve_rough(x0, zb, c2, coeffs, T).final();
            const Field b = solve_direct_bv(x0, zb, c2, coeffs, T).final();
            return norm_hdual(a - b);
        };
        const double d_coarse = distance_at(8, T / 1024.0);
        const double d_fine = distance_at(9, T / 4096.0);
        const double ratio = d_fine / d_coarse;
        res.add(Assertion::ge("transformation-equivalence refinement ratio (lower)", ratio, 0.375,
                              "derived tolerance", 8));
        res.add(Assertion::le("transformation-equivalence refinement ratio (upper)", ratio, 0.625,
                              "derived tolerance", 8));
        res.extra["equivalence_distance_coarse"] = d_coarse;
        res.extra["equivalence_distance_fine"] = d_fine;
    }
    return res;
}

// ---------------------------------------------------------------------------
// cocycle identity (criterion 9)
// ---------------------------------------------------------------------------
ExperimentResult suite_cocycle(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "cocycle";
    const auto& cfg = ctx.cfg;
    const double m = cfg.get("model.m", 2.0);
    GridPtr g = Grid::interval(-2.0, 2.0, cfg.get("grid.n", 100));
    auto coeffs = std::make_shared<CoefficientSet>(
        g, std::vector<CoefficientTerm>{
               CoefficientTerm::parse(cfg.get("coefficients.f1", "sin 0.15 1.5707963267948966"))});
    const uint64_t seed = cfg.get_seed(909);
    SolverConfig scfg;
    scfg.m = m;
    scfg.dt = 1e-3;

    const int trials = cfg.get("mc.trials", 20);
    std::vector<double> defects(static_cast<size_t>(trials));
    run_parallel(trials, ctx.threads, [&](int k) {
        const SignalPath omega =
            SignalPath::sample(NoiseModel::brownian(), 0.0, 2.0, scfg.dt, mix_seed(seed, 10 + k));
        CocycleRun run(omega, coeffs, scfg);
        std::mt19937_64 rng(mix_seed(seed, 900 + k));
        std::uniform_real_distribution<double> uni(0.1, 0.9);
        const double s = std::round(uni(rng) * 1000.0) / 1000.0;
        const double t = std::round(uni(rng) * 1000.0) / 1000.0;
        Field x = make_initial_condition(g, "fourier", 0.3 + 0.5 * uni(rng),
                                         mix_seed(seed, 400 + k), m);
        const Field one_leg = run.cocycle(s + t, 0.0, x);
        const Field two_leg = run.cocycle(t, s, run.cocycle(s, 0.0, x));
        defects[static_cast<size_t>(k)] = norm_l1(one_leg - two_leg);
    });
    double worst = 0.0;
    for (double d : defects) worst = std::max(worst, d);
    res.add(Assertion::le("max cocycle defect in L1 over 20 trials", worst, 1e-8,
                          "derived tolerance", 9));
    res.extra["worst_defect"] = worst;
    return res;
}

// ---------------------------------------------------------------------------
// attractor: absorption (criterion 10) and diameter contraction (criterion 11)
// ---------------------------------------------------------------------------
ExperimentResult suite_attractor(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "attractor";
    const auto& cfg = ctx.cfg;
    const int filter = criterion_filter(cfg);
    const double m = cfg.get("model.m", 2.0);
    GridPtr g = Grid::interval(-2.0, 2.0, cfg.get("grid.n", 64));
    auto coeffs = std::make_shared<CoefficientSet>(
        g, std::vector<CoefficientTerm>{
               CoefficientTerm::parse(cfg.get("coefficients.f1", "sin 0.1 1.5707963267948966"))});
    const uint64_t seed = cfg.get_seed(1111);
    SolverConfig scfg;
    scfg.m = m;
    scfg.dt = 2e-3;
    const double omega_dt = 5e-4;

    if (filter == 0 || filter == 10) {
        const int n_omega = cfg.get("mc.absorption_omegas", 3);
        double worst_excess = -1e300;
        for (int w = 0; w < n_omega; ++w) {
            const SignalPath omega = SignalPath::sample(NoiseModel::brownian(), -4.0, 0.5,
                                                        omega_dt, mix_seed(seed, 30 + w));
            CocycleRun run(omega, coeffs, scfg);
            std::vector<Field> bundle;
            for (double amp : {0.5, 10.0, 1000.0})
                bundle.push_back(make_initial_condition(g, "bump", amp, 0, m));
            bundle.push_back(make_initial_condition(g, "fourier", 800.0, mix_seed(seed, 77), m));
            auto rep = pullback(run, bundle, {1.0, 2.0, 4.0}, ctx.threads);
            auto checks = absorption_check(rep, run);
            for (const auto& c : checks) {
                if (!c.checked) continue;
                // margin already includes the (1 + 1e-2) inflation of the radius
                worst_excess = std::max(worst_excess, -c.margin / c.bound);
            }
        }
        res.add(Assertion::le("absorption: max sup-norm excess over (1+1e-2) U ball", worst_excess,
                              0.0, "paper formula", 10));
        res.extra["absorption_excess"] = worst_excess;
    }

    if (filter == 0 || filter == 11) {
        const int n_omega = cfg.get("mc.attractor_omegas", 10);
        const int n_ics = 8;
        json models = json::array();
        for (const auto& [label, model] :
             std::vector<std::pair<std::string, NoiseModel>>{{"brownian", NoiseModel::brownian()},
                                                             {"fbm_h03", NoiseModel::fbm(0.3)},
                                                             {"fbm_h07", NoiseModel::fbm(0.7)}}) {
            std::vector<int> hits(static_cast<size_t>(n_omega), 0);
            std::vector<double> d05(static_cast<size_t>(n_omega)), d4(static_cast<size_t>(n_omega));
            run_parallel(n_omega, ctx.threads, [&](int w) {
                const SignalPath omega = SignalPath::sample(model, -4.0, 0.25, omega_dt,
                                                            mix_seed(seed, 500 + w));
                CocycleRun run(omega, coeffs, scfg);
                std::vector<Field> bundle;
                for (int k = 0; k < n_ics; ++k)
                    bundle.push_back(make_initial_condition(g, "fourier", 1.0 + 0.4 * k,
                                                            mix_seed(seed, 900 + 10 * w + k), m));
                auto rep = pullback(run, bundle, {0.5, 1.0, 2.0, 4.0}, 1);
                d05[static_cast<size_t>(w)] = rep.diam_l1.front();
                d4[static_cast<size_t>(w)] = rep.diam_l1.back();
                hits[static_cast<size_t>(w)] =
                    rep.diam_l1.back() <= 0.5 * rep.diam_l1.front() ? 1 : 0;
            });
            int total = 0;
            json omegas = json::array();
            for (int w = 0; w < n_omega; ++w) {
                total += hits[static_cast<size_t>(w)];
                omegas.push_back({{"diam_t05", d05[static_cast<size_t>(w)]},
                                  {"diam_t4", d4[static_cast<size_t>(w)]}});
            }
            models.push_back({{"model", label}, {"contracted", total}, {"omegas", omegas}});
            res.add(Assertion::ge("diameter contraction count (" + label + ")",
                                  static_cast<double>(total), 9.0, "derived tolerance", 11));
        }
        res.extra["attractor"] = models;
        ctx.write_json("pullback.json", res.extra);
        if (!ctx.out_dir.empty()) {
            std::ofstream os(fs::path(ctx.out_dir) / "diameters.csv");
            os << "model,omega,diam_t05,diam_t4\n";
            for (const auto& mj : models) {
                int w = 0;
                for (const auto& oj : mj["omegas"]) {
                    os << mj["model"].get<std::string>() << "," << w++ << ","
                       << oj["diam_t05"].get<double>() << "," << oj["diam_t4"].get<double>()
                       << "\n";
                }
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// fbm generator covariance validation (criterion 13)
// ---------------------------------------------------------------------------
ExperimentResult suite_fbm(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "fbm";
    const auto& cfg = ctx.cfg;
    const int n_seeds = cfg.get("mc.seeds", 10000);
    const uint64_t seed = cfg.get_seed(1313);
    const double dt = 0.01;
    const std::vector<std::pair<double, double>> pairs = {
        {0.1, 0.1}, {0.1, 0.5}, {0.2, 0.9}, {0.3, 0.3}, {0.4, 0.7},
        {0.5, 0.5}, {0.5, 1.0}, {0.7, 0.8}, {0.9, 1.0}, {1.0, 1.0}};

    const double started = [] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
            .count();
    }();
    json all = json::array();
    double worst_sigmas = 0.0;
    for (double hurst : {0.3, 0.5, 0.7}) {
        std::vector<double> sum_st(pairs.size(), 0.0), sum_sq(pairs.size(), 0.0);
        std::mutex merge;
        run_parallel(ctx.threads <= 0 ? 2 : ctx.threads, ctx.threads, [&](int worker) {
            const int workers = ctx.threads <= 0 ? 2 : ctx.threads;
            std::vector<double> loc_st(pairs.size(), 0.0), loc_sq(pairs.size(), 0.0);
            for (int s = worker; s < n_seeds; s += workers) {
                const auto p =
                    SignalPath::sample(NoiseModel::fbm(hurst), 0.0, 1.0, dt, mix_seed(seed, s));
                for (size_t q = 0; q < pairs.size(); ++q) {
                    const double zs = p.value_at(pairs[q].first, 0);
                    const double zt = p.value_at(pairs[q].second, 0);
                    loc_st[q] += zs * zt;
                    loc_sq[q] += zs * zs * zt * zt;
                }
            }
            std::lock_guard<std::mutex> lock(merge);
            for (size_t q = 0; q < pairs.size(); ++q) {
                sum_st[q] += loc_st[q];
                sum_sq[q] += loc_sq[q];
            }
        });
        for (size_t q = 0; q < pairs.size(); ++q) {
            const double est = sum_st[q] / n_seeds;
            const double exact = fbm_covariance(pairs[q].first, pairs[q].second, hurst);
            const double var_est = sum_sq[q] / n_seeds - est * est;
            const double se = std::sqrt(std::max(var_est, 1e-14) / n_seeds);
            const double sigmas = std::abs(est - exact) / se;
            worst_sigmas = std::max(worst_sigmas, sigmas);
            all.push_back({{"hurst", hurst},
                           {"s", pairs[q].first},
                           {"t", pairs[q].second},
                           {"estimate", est},
                           {"exact", exact},
                           {"standard_errors", sigmas}});
        }
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count() -
        started;
    res.add(Assertion::le("max covariance deviation in standard errors", worst_sigmas, 4.0,
                          "paper formula", 13));
    Assertion rt = Assertion::le("runtime seconds", elapsed, 120.0, "derived tolerance", 13);
    rt.volatile_measure = true;
    res.add(rt);
    res.extra["covariance"] = all;
    ctx.write_json("fbm_covariance.json", res.extra);
    return res;
}

// ---------------------------------------------------------------------------
// residual decay of the very weak formulation (criterion 14)
// ---------------------------------------------------------------------------
ExperimentResult suite_residual(const SuiteContext& ctx) {
    ExperimentResult res;
    res.name = "residual";
    const auto& cfg = ctx.cfg;
    const double m = cfg.get("model.m", 2.0);
    const double mass = cfg.get("ic.mass", 1.0);
    const double t_start = cfg.get("ic.zkb_time", 0.1);
    const double T = cfg.get("model.t_end", 0.5) - t_start;
    const std::vector<std::pair<int, double>> ladder = {
        {100, 4e-3}, {200, 2e-3}, {400, 1e-3}, {800, 5e-4}};

    std::vector<std::vector<double>> residuals(ladder.size(),
                                               std::vector<double>(5, 0.0));
    run_parallel(static_cast<int>(ladder.size()), ctx.threads, [&](int j) {
        const auto [n, dt] = ladder[static_cast<size_t>(j)];
        GridPtr g = Grid::interval(cfg.get("grid.a", -4.0), cfg.get("grid.b", 4.0), n);
        CoefficientSet coeffs(g, cfg.coefficient_terms());
        SolverConfig scfg;
        scfg.m = m;
        scfg.dt = dt;
        scfg.store_every = 1;
        const SignalPath z = SignalPath::zero(1, 0.0, T, dt);
        auto traj = solve_transformed(zkb_field(g, t_start, m, mass), z, scfg, coeffs, T);
        for (int k = 1; k <= 5; ++k) {
            TestFunction eta{T, k, k};
            residuals[static_cast<size_t>(j)][static_cast<size_t>(k - 1)] =
                very_weak_residual(traj, eta, coeffs, z, m);
        }
    });

    std::vector<double> dts, maxres;
    json table = json::array();
    for (size_t j = 0; j < ladder.size(); ++j) {
        double worst = 0.0;
        json row;
        row["n"] = ladder[j].first;
        row["dt"] = ladder[j].second;
        json per = json::array();
        for (double r : residuals[j]) {
            worst = std::max(worst, r);
            per.push_back(r);
        }
        row["residuals"] = per;
        table.push_back(row);
        dts.push_back(ladder[j].second);
        maxres.push_back(worst);
    }
    const double slope = fit_log_slope(dts, maxres);
    res.add(Assertion::ge("log-log slope of the residual under joint refinement", slope, 0.8,
                          "derived tolerance", 14));
    res.extra["residuals"] = table;
    res.extra["slope"] = slope;
    ctx.write_json("residual.json", res.extra);
    return res;
}

const SuiteEntry kSuites[] = {
    {"oracle", "deterministic ZKB benchmark and profile checks", suite_oracle},
    {"self-convergence", "spatial self-convergence order against a fine reference",
     suite_self_convergence},
    {"bounds", "uniform supersolution domination and the fast-diffusion bound", suite_bounds},
    {"comparison", "order preservation for ordered initial data", suite_comparison},
    {"contraction", "L1 contraction against the estimated constant", suite_contraction},
    {"wong-zakai", "Wong-Zakai convergence, sequence independence, transformation equivalence",
     suite_wong_zakai},
    {"cocycle", "cocycle identity of the solution flow", suite_cocycle},
    {"attractor", "pullback absorption and attractor diameter contraction", suite_attractor},
    {"fbm", "fBm generator covariance validation", suite_fbm},
    {"residual", "very-weak-formulation residual decay under refinement", suite_residual},
};

} // namespace

std::vector<std::string> experiment_names() {
    std::vector<std::string> names;
    for (const auto& s : kSuites) names.push_back(s.name);
    return names;
}

std::string describe_experiment(const std::string& name) {
    for (const auto& s : kSuites)
        if (name == s.name) return s.blurb;
    throw ConfigError("unknown experiment '" + name + "'");
}

ExperimentResult run_suite(const std::string& name, const ExperimentConfig& cfg,
                           const std::string& out_dir, int threads) {
    if (!out_dir.empty()) fs::create_directories(out_dir);
    SuiteContext ctx{cfg, out_dir, threads};
    for (const auto& s : kSuites)
        if (name == s.name) return s.fn(ctx);
    throw ConfigError("unknown experiment '" + name + "'");
}

json summary_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
    json j;
    j["experiment"] = result.name;
    j["pass"] = result.pass;
    json cfg_echo;
    for (const auto& [k, v] : cfg.entries()) cfg_echo[k] = v;
    j["config"] = cfg_echo;
    json asserts = json::array();
    for (const auto& a : result.assertions) {
        json entry = {{"name", a.name},
                      {"measured", a.measured},
                      {"comparison", a.upper ? "<=" : ">="},
                      {"bound", a.bound},
                      {"provenance", a.provenance},
                      {"criterion", a.criterion},
                      {"pass", a.pass}};
        if (a.volatile_measure) entry.erase("measured");
        asserts.push_back(entry);
    }
    j["assertions"] = std::move(asserts);
    j["extra"] = result.extra;
    return j;
}

int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
    const std::string name = cfg.get("experiment", "");
    if (name.empty()) {
        std::cerr << "config error: missing 'experiment' key; valid names:";
        for (const auto& n : experiment_names()) std::cerr << " " << n;
        std::cerr << "\n";
        return 2;
    }
    bool known = false;
    for (const auto& s : kSuites) known = known || name == s.name;
    if (!known) {
        std::cerr << "config error: unknown experiment '" << name << "'; valid names:";
        for (const auto& n : experiment_names()) std::cerr << " " << n;
        std::cerr << "\n";
        return 2;
    }
    ExperimentResult result;
    try {
        result = run_suite(name, cfg, out_dir, threads);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    }
    const json summary = summary_json(cfg, result);
    if (!out_dir.empty()) {
        std::ofstream os(fs::path(out_dir) / "summary.json");
        os << summary.dump(2) << "\n";
    }
    for (const auto& a : result.assertions)
        std::cout << (a.pass ? "PASS " : "FAIL ") << result.name << ": " << a.name
                  << "  measured=" << a.measured << (a.upper ? " <= " : " >= ") << a.bound << "\n";
    return result.pass ? 0 : 1;
}

} // namespace rpme
