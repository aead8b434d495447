#pragma once

#include "rpme/config.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace rpme {

using json = nlohmann::ordered_json;

/// One checked statement of a suite: measured value against a bound, with
/// the bound's provenance ("paper formula" or "derived tolerance") and the
/// acceptance-criterion number it belongs to (0 = auxiliary).
struct Assertion {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool upper = true; // true: measured <= bound, false: measured >= bound
    std::string provenance = "derived tolerance";
    int criterion = 0;
    bool pass = false;
    /// wall-clock measurements are excluded from artifacts so identical
    /// config+seed runs stay byte-identical
    bool volatile_measure = false;

    static Assertion le(std::string name, double measured, double bound, std::string provenance,
                        int criterion = 0) {
        Assertion a{std::move(name), measured, bound, true, std::move(provenance), criterion, false};
        a.pass = measured <= bound;
        return a;
    }
    static Assertion ge(std::string name, double measured, double bound, std::string provenance,
                        int criterion = 0) {
        Assertion a{std::move(name), measured, bound, false, std::move(provenance), criterion, false};
        a.pass = measured >= bound;
        return a;
    }
};

struct ExperimentResult {
    std::string name;
    std::vector<Assertion> assertions;
    json extra; // suite-specific curves and measurements
    bool pass = true;

    void add(Assertion a) {
        pass = pass && a.pass;
        assertions.push_back(std::move(a));
    }
};

std::vector<std::string> experiment_names();
std::string describe_experiment(const std::string& name);

/// Runs one named suite. Writes CSV/JSON artifacts plus summary.json into
/// out_dir when it is nonempty.
ExperimentResult run_suite(const std::string& name, const ExperimentConfig& cfg,
                           const std::string& out_dir, int threads = 0);

/// Full CLI entry: dispatch, artifact emission, exit status
/// (0 pass, 1 assertion failure, 2 config error, 3 solver failure).
int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int threads = 0);

json summary_json(const ExperimentConfig& cfg, const ExperimentResult& result);

} // namespace rpme
