#include "rpme/config.hpp"

#include "rpme/zkb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace rpme {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unclosed section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.values_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

std::string ExperimentConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ExperimentConfig::get(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (trim(it->second.substr(pos)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("config value for '" + key + "' is not a number: " + it->second);
}

int ExperimentConfig::get(const std::string& key, int fallback) const {
    const double v = get(key, static_cast<double>(fallback));
    const int i = static_cast<int>(std::lround(v));
    if (std::abs(v - i) > 1e-9) throw ConfigError("config value for '" + key + "' is not an integer");
    return i;
}

uint64_t ExperimentConfig::get_seed(uint64_t fallback) const {
    auto it = values_.find("run.seed");
    if (it == values_.end()) it = values_.find("seed");
    if (it == values_.end()) return fallback;
    return static_cast<uint64_t>(std::stoull(it->second));
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

GridPtr ExperimentConfig::make_grid() const {
    const int dim = get("grid.dim", 1);
    const double rf = get("grid.radius_factor", 1.05);
    if (dim == 1)
        return Grid::interval(get("grid.a", -4.0), get("grid.b", 4.0), get("grid.n", 200), rf);
    if (dim == 2)
        return Grid::rectangle(get("grid.a", -1.0), get("grid.b", 1.0), get("grid.n", 40),
                               get("grid.c", -1.0), get("grid.d", 1.0), get("grid.ny", get("grid.n", 40)),
                               rf);
    throw ConfigError("grid.dim must be 1 or 2");
}

std::vector<CoefficientTerm> ExperimentConfig::coefficient_terms() const {
    std::vector<CoefficientTerm> terms;
    for (int k = 1;; ++k) {
        const std::string key = "coefficients.f" + std::to_string(k);
        if (!has(key)) break;
        try {
            terms.push_back(CoefficientTerm::parse(get(key, "")));
        } catch (const std::exception& e) {
            throw ConfigError(std::string(e.what()) + " (key " + key + ")");
        }
    }
    if (terms.empty()) terms.push_back(CoefficientTerm::parse("sin 0.5 " + std::to_string(M_PI / 4.0)));
    return terms;
}

NoiseModel ExperimentConfig::noise_model() const {
    const std::string kind = get("noise.kind", "brownian");
    const int dim = get("noise.dimension", 1);
    if (kind == "brownian") return NoiseModel::brownian(dim);
    if (kind == "fbm") return NoiseModel::fbm(get("noise.hurst", 0.5), dim);
    if (kind == "zero") {
        NoiseModel m;
        m.kind = SignalKind::constant_zero;
        m.dimension = dim;
        return m;
    }
    throw ConfigError("noise.kind must be brownian, fbm or zero");
}

SolverConfig ExperimentConfig::solver_config(const Grid& grid) const {
    SolverConfig cfg;
    cfg.m = get("model.m", 2.0);
    const std::string delta = get("model.delta", "auto");
    if (delta != "auto") {
        try {
            cfg.delta = std::stod(delta);
        } catch (const std::exception&) {
            throw ConfigError("model.delta must be a number or 'auto'");
        }
    }
    cfg.dt = get("model.dt", 1e-3);
    cfg.newton_tol = get("model.newton_tol", 1e-10);
    cfg.newton_max = get("model.newton_max", 50);
    cfg.store_every = get("model.store_every", 1);
    (void)grid;
    return cfg;
}

Field make_initial_condition(const GridPtr& grid, const std::string& kind, double amp,
                             uint64_t seed, double m, double zkb_time, double zkb_mass) {
    Field f(grid);
    const double cx = 0.5 * (grid->ax() + grid->bx());
    const double half_x = 0.5 * (grid->bx() - grid->ax());
    const double cy = grid->dim() == 2 ? 0.5 * (grid->ay() + grid->by()) : 0.0;
    const double half_y = grid->dim() == 2 ? 0.5 * (grid->by() - grid->ay()) : 1.0;

    auto bump1 = [](double r) { return std::abs(r) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0; };

    if (kind == "bump") {
        for (int i = 0; i < f.size(); ++i) {
            const double rx = (grid->node_x(i) - cx) / (0.6 * half_x);
            const double ry = grid->dim() == 2 ? (grid->node_y(i) - cy) / (0.6 * half_y) : 0.0;
            f[i] = amp * bump1(std::sqrt(rx * rx + ry * ry));
        }
        return f;
    }
    if (kind == "step") {
        for (int i = 0; i < f.size(); ++i) {
            const bool in_x = std::abs(grid->node_x(i) - cx) < half_x / 3.0;
            const bool in_y = grid->dim() == 1 || std::abs(grid->node_y(i) - cy) < half_y / 3.0;
            f[i] = in_x && in_y ? amp : 0.0;
        }
        return f;
    }
    if (kind == "twobump") {
        for (int i = 0; i < f.size(); ++i) {
            const double rl = (grid->node_x(i) - (cx - 0.5 * half_x)) / (0.35 * half_x);
            const double rr = (grid->node_x(i) - (cx + 0.5 * half_x)) / (0.35 * half_x);
            f[i] = amp * (bump1(rl) - bump1(rr));
        }
        return f;
    }
    if (kind == "zkb") {
        if (grid->dim() != 1) throw ConfigError("ic zkb: 1D only");
        for (int i = 0; i < f.size(); ++i)
            f[i] = amp * zkb_profile(zkb_time, grid->node_x(i), m, zkb_mass);
        return f;
    }
    if (kind == "fourier") {
        std::mt19937_64 rng(mix_seed(seed, 0xf0f0));
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        const int modes = 6;
        std::vector<double> ax(modes), ay(modes);
        for (int k = 0; k < modes; ++k) {
            ax[static_cast<size_t>(k)] = uni(rng);
            ay[static_cast<size_t>(k)] = uni(rng);
        }
        double sup = 0.0;
        for (int i = 0; i < f.size(); ++i) {
            double v = 0.0;
            for (int k = 1; k <= modes; ++k) {
                const double sx =
                    std::sin(k * M_PI * (grid->node_x(i) - grid->ax()) / (2.0 * half_x));
                double term = ax[static_cast<size_t>(k - 1)] * sx / k;
                if (grid->dim() == 2)
                    term *= std::sin(k * M_PI * (grid->node_y(i) - grid->ay()) / (2.0 * half_y));
                v += term;
            }
            f[i] = v;
            sup = std::max(sup, std::abs(v));
        }
        if (sup > 0.0)
            for (double& v : f.v) v *= amp / sup;
        return f;
    }
    if (kind == "spike") {
        int center = f.size() / 2;
        f[center] = amp;
        return f;
    }
    throw ConfigError("unknown initial condition kind: " + kind);
}

} // namespace rpme
