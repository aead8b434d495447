#pragma once

#include "rpme/coefficients.hpp"
#include "rpme/grid.hpp"
#include "rpme/signal.hpp"
#include "rpme/solver.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace rpme {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Flat key-value experiment configuration with sections:
///   experiment = oracle
///   [grid]
///   n = 800
/// Keys are addressed as "section.key"; keys before any section have no
/// prefix. Values are echoed verbatim into the run summary.
class ExperimentConfig {
  public:
    ExperimentConfig() = default;
    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    double get(const std::string& key, double fallback) const;
    int get(const std::string& key, int fallback) const;
    uint64_t get_seed(uint64_t fallback) const;

    void set(const std::string& key, const std::string& value);
    const std::map<std::string, std::string>& entries() const { return values_; }

    // assembled pieces with registry defaults
    GridPtr make_grid() const;
    std::vector<CoefficientTerm> coefficient_terms() const;
    NoiseModel noise_model() const;
    SolverConfig solver_config(const Grid& grid) const;

  private:
    std::map<std::string, std::string> values_;
};

/// Initial-condition registry: bump, step, twobump, zkb, fourier, spike.
Field make_initial_condition(const GridPtr& grid, const std::string& kind, double amp,
                             uint64_t seed, double m = 2.0, double zkb_time = 0.1,
                             double zkb_mass = 1.0);

} // namespace rpme
