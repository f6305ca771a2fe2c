#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dal::harness {

struct CheckRecord {
    std::string name;
    std::string params;
    double deviation;   // measured worst-case deviation
    double tolerance;   // pass iff deviation <= tolerance (or < for strict checks)
    bool passed;
    std::string note;
};

struct VerifyOptions {
    std::uint64_t seed = 7;
    int gradient_points = 1000;
    int posterior_count = 200;
    /// Mutation hook for testing the checker itself: "closed_form" perturbs
    /// the closed-form GCE minimizer, "schedule" shifts the DAL ramp.
    std::string inject_fault;
};

/// Runs the full suite of gradient, schedule and risk-minimization checks.
std::vector<CheckRecord> run_verification(const VerifyOptions& options = {});

/// One line per check: status, name, parameters, deviation, tolerance, note.
std::string format_report(const std::vector<CheckRecord>& records);

bool all_passed(const std::vector<CheckRecord>& records);

}  // namespace dal::harness
