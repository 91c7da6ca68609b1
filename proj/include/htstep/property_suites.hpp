#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace htstep {

struct SuiteReport {
    std::string name;
    long cases = 0;
    long failures = 0;
    std::vector<std::string> failure_notes;
    std::vector<std::pair<std::string, double>> metrics;

    bool passed() const { return cases > 0 && failures == 0; }
    void fail(std::string note);
    void metric(const std::string& key, double value);
};

/// truncation, quasi-optimality, projector, jacobian, consistency, prop5-equivalence,
/// dobo, perturbation
const std::vector<std::string>& suite_names();

/// Runs a named suite with `cases` random instances (0 selects the suite default).
/// Throws InputError for unknown names.
SuiteReport run_suite(const std::string& name, std::uint64_t seed, long cases = 0);

SuiteReport suite_truncation(std::uint64_t seed, long cases = 500);
SuiteReport suite_quasi_optimality(std::uint64_t seed, long cases = 200);
SuiteReport suite_projector(std::uint64_t seed, long cases = 20);
SuiteReport suite_jacobian(std::uint64_t seed, long cases = 100);
SuiteReport suite_consistency(std::uint64_t seed, long cases = 100);
SuiteReport suite_prop5_equivalence(std::uint64_t seed, long cases = 100);
SuiteReport suite_dobo(std::uint64_t seed, long cases = 20);
SuiteReport suite_perturbation(std::uint64_t seed, long cases = 20);

}  // namespace htstep
