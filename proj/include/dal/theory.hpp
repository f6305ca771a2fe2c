#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dal/losses.hpp"
#include "dal/prob.hpp"

namespace dal::theory {

/// Expected loss at one input under a class posterior.
struct PointwiseRisk {
    ProbVector posterior;
    loss::LossSpec spec;
};

/// Clean posterior, noisy posterior and classifier output at one input.
struct BoundSample {
    ProbVector clean_posterior;
    ProbVector noisy_posterior;
    ProbVector f_out;
};

/// Thrown when the simplex oracle fails to reach its stationarity tolerance.
class ConvergenceFailure : public std::runtime_error {
public:
    ConvergenceFailure(const std::string& what, ProbVector best, double residual)
        : std::runtime_error(what), best_(std::move(best)), residual_(residual) {}
    const ProbVector& best_iterate() const { return best_; }
    double residual() const { return residual_; }

private:
    ProbVector best_;
    double residual_;
};

double pointwise_risk(const PointwiseRisk& risk, const ProbVector& f);
std::vector<double> pointwise_risk_gradient(const PointwiseRisk& risk, const ProbVector& f);

/// Normalized (1/(1-q))-power of the posterior; 0 < q < 1.
ProbVector gce_minimizer_closed_form(const ProbVector& posterior, double q);

struct OracleOptions {
    double step = 0.1;
    /// Per-iteration cap on the log-space move of any coordinate.
    double max_log_step = 1.0;
    /// Start offset from each vertex, as mass spread over the other classes.
    double vertex_offset = 1e-3;
    /// Grid spacing of the dense certificate for k <= 3.
    double grid_resolution = 0.01;
};

struct OracleResult {
    ProbVector minimizer;
    double risk;
    double residual;     // inf-norm of f .* (g - <f, g>) at the minimizer
    int iterations;      // of the winning restart
    double grid_risk;    // NaN when no grid certificate was computed (k > 3)
};

/// Exponentiated-gradient mirror descent in log coordinates with restarts
/// from the centroid and from (a small offset of) every vertex. Returns the
/// lowest-risk stationary point. For k <= 3 the result is also checked
/// against a dense simplex grid; a better grid point seeds one more restart.
OracleResult minimize_risk_on_simplex_detailed(const PointwiseRisk& risk, double tol, int max_iters,
                                               const OracleOptions& options = {});

ProbVector minimize_risk_on_simplex(const PointwiseRisk& risk, double tol, int max_iters);

struct OneHotCheck {
    bool is_one_hot;
    ProbVector witness;
    std::size_t target;   // argmax of the posterior
    double deviation;     // L-inf distance from the one-hot target
};

/// Minimizes the GCE(q) + lambda * BS pointwise risk and reports whether the
/// minimizer sits within `tol` (L-inf) of the one-hot vector at the
/// posterior's argmax. Tied argmax -> DegenerateInputError.
OneHotCheck verify_onehot_minimizer(const ProbVector& posterior, double q, double lambda, double tol);

/// 1 - fraction of samples whose clean and noisy argmax agree and whose
/// classifier output at that class exceeds 1/2.
double bound_gap_estimate(std::span<const BoundSample> samples);

/// Fraction of outputs whose argmax (lowest index on ties) differs from the label.
double zero_one_risk(std::span<const ProbVector> f_outputs, std::span<const std::size_t> labels);

/// Risk gap between the classifier outputs and the Bayes rule argmax p(.|x),
/// measured with one label per sample drawn from its clean posterior.
double sampled_excess_zero_one_risk(std::span<const BoundSample> samples, std::uint64_t seed);

}  // namespace dal::theory
