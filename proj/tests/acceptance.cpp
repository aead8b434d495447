// Acceptance suite: runs every numbered criterion at its pinned tolerance and
// prints one pass/fail line per criterion.
//   acceptance                 run all criteria
//   acceptance --criterion N   run a single criterion
#include "rpme/experiments.hpp"

#include <cstdio>
#include <cstring>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace {

struct CriterionSpec {
    int number;
    const char* suite;
    const char* label;
};

const CriterionSpec kCriteria[] = {
    {1, "oracle", "deterministic ZKB oracle"},
    {2, "self-convergence", "spatial self-convergence order"},
    {3, "bounds", "uniform supersolution bound"},
    {4, "comparison", "comparison principle"},
    {5, "contraction", "L1 contraction"},
    {6, "wong-zakai", "Wong-Zakai convergence"},
    {7, "wong-zakai", "approximating-sequence independence"},
    {8, "wong-zakai", "transformation equivalence"},
    {9, "cocycle", "cocycle property"},
    {10, "attractor", "pullback absorption"},
    {11, "attractor", "attractor diameter contraction"},
    {12, "bounds", "fast-diffusion bound"},
    {13, "fbm", "fBm generator covariance"},
    {14, "residual", "very-weak residual decay"},
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    }

    std::set<std::string> suites;
    for (const auto& c : kCriteria)
        if (only == 0 || c.number == only) suites.insert(c.suite);

    std::map<std::string, rpme::ExperimentResult> results;
    bool hard_failure = false;
    for (const auto& suite : suites) {
        rpme::ExperimentConfig cfg;
        if (only != 0) cfg.set("filter.criterion", std::to_string(only));
        try {
            results[suite] = rpme::run_suite(suite, cfg, "");
        } catch (const std::exception& e) {
            std::cerr << "suite '" << suite << "' failed to run: " << e.what() << "\n";
            hard_failure = true;
        }
    }

    bool all_pass = !hard_failure;
    for (const auto& c : kCriteria) {
        if (only != 0 && c.number != only) continue;
        auto it = results.find(c.suite);
        if (it == results.end()) {
            std::printf("[%2d] FAIL %-38s (suite did not run)\n", c.number, c.label);
            all_pass = false;
            continue;
        }
        bool pass = true;
        std::string detail;
        int found = 0;
        for (const auto& a : it->second.assertions) {
            if (a.criterion != c.number) continue;
            ++found;
            pass = pass && a.pass;
            if (!a.pass || detail.empty()) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%s: %.4g %s %.4g", a.name.c_str(), a.measured,
                              a.upper ? "<=" : ">=", a.bound);
                detail = buf;
            }
        }
        if (found == 0) {
            pass = false;
            detail = "no assertion produced";
        }
        std::printf("[%2d] %s %-38s %s\n", c.number, pass ? "PASS" : "FAIL", c.label,
                    detail.c_str());
        all_pass = all_pass && pass;
    }
    return all_pass ? 0 : 1;
}
