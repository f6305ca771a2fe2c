#include "dal/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dal/errors.hpp"
#include "dal/random.hpp"

namespace dal::theory {

using loss::LossKind;
using loss::LossSpec;

namespace {

void check_dims(const PointwiseRisk& risk, const ProbVector& f) {
    if (risk.posterior.size() != f.size() || risk.spec.k != f.size())
        throw DimensionMismatch("pointwise risk: posterior, spec and f must share the class count");
}

std::vector<double> log_of(const ProbVector& p) {
    std::vector<double> u(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) u[i] = std::log(p[i]);
    return u;
}

struct Descent {
    ProbVector f;
    double risk;
    double residual;
    int iterations;
};

// Exponentiated gradient from `start` (all entries > 0).
Descent descend(const PointwiseRisk& risk, const ProbVector& start, double tol, int max_iters,
                const OracleOptions& opt) {
    std::vector<double> u = log_of(start);
    ProbVector f = start;
    double residual = std::numeric_limits<double>::infinity();
    int it = 0;
    for (;; ++it) {
        f = softmax(u);
        const auto g = pointwise_risk_gradient(risk, f);
        double gbar = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gbar += f[i] * g[i];
        residual = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) residual = std::max(residual, std::abs(f[i] * (g[i] - gbar)));
        if (residual < tol || it >= max_iters) break;
        double umax = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] -= std::clamp(opt.step * (g[i] - gbar), -opt.max_log_step, opt.max_log_step);
            umax = std::max(umax, u[i]);
        }
        for (double& v : u) v -= umax;
    }
    const double r = pointwise_risk(risk, f);
    return {f, r, residual, it};
}

ProbVector vertex_start(std::size_t k, std::size_t vertex, double offset) {
    std::vector<double> p(k, offset / static_cast<double>(k - 1));
    p[vertex] = 1.0 - offset;
    return ProbVector(std::move(p));
}

// Minimum of the risk over {i/M} grid points of the simplex, k in {2, 3}.
std::pair<double, ProbVector> grid_minimum(const PointwiseRisk& risk, double resolution) {
    const int m = static_cast<int>(std::lround(1.0 / resolution));
    const std::size_t k = risk.posterior.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_point;
    auto consider = [&](std::vector<double> p) {
        const double r = pointwise_risk(risk, ProbVector(p));
        if (r < best) {
            best = r;
            best_point = std::move(p);
        }
    };
    const double mm = m;
    if (k == 2) {
        for (int i = 0; i <= m; ++i) consider({i / mm, (m - i) / mm});
    } else {
        for (int i = 0; i <= m; ++i)
            for (int j = 0; i + j <= m; ++j) consider({i / mm, j / mm, (m - i - j) / mm});
    }
    return {best, ProbVector(std::move(best_point))};
}

}  // namespace

double pointwise_risk(const PointwiseRisk& risk, const ProbVector& f) {
    check_dims(risk, f);
    double r = 0.0;
    for (std::size_t y = 0; y < f.size(); ++y)
        if (risk.posterior[y] > 0.0) r += risk.posterior[y] * loss::loss_value(risk.spec, f, y);
    return r;
}

std::vector<double> pointwise_risk_gradient(const PointwiseRisk& risk, const ProbVector& f) {
    check_dims(risk, f);
    const auto& spec = risk.spec;
    const std::size_t k = f.size();
    std::vector<double> g(k, 0.0);
    switch (spec.kind) {
        case LossKind::CE:
        case LossKind::MAE:
        case LossKind::GCE:
        case LossKind::TCE:
        case LossKind::DAL:
            spec.validate();
            for (std::size_t y = 0; y < k; ++y) g[y] = risk.posterior[y] * loss::label_derivative(spec, f[y]);
            if (spec.kind == LossKind::DAL) {
                // The bootstrap term does not depend on the label, so it enters once.
                const std::size_t top = f.argmax();
                g[top] += spec.lambda / (spec.q * std::log(static_cast<double>(k))) * (-1.0 / clamp_prob(f[top]));
            }
            return g;
        case LossKind::JS:
        case LossKind::BS:
            for (std::size_t y = 0; y < k; ++y) {
                if (risk.posterior[y] == 0.0) continue;
                const auto gy = loss::loss_grad_prob(spec, f, y);
                for (std::size_t i = 0; i < k; ++i) g[i] += risk.posterior[y] * gy[i];
            }
            return g;
    }
    return g;
}

ProbVector gce_minimizer_closed_form(const ProbVector& posterior, double q) {
    if (!(q > 0.0 && q < 1.0)) throw ParameterDomainError("closed-form GCE minimizer requires 0 < q < 1");
    const double a = 1.0 / (1.0 - q);
    // Powers are taken in log space so that large exponents do not underflow
    // the leading entries.
    std::vector<double> logw(posterior.size());
    for (std::size_t i = 0; i < logw.size(); ++i)
        logw[i] = posterior[i] > 0.0 ? a * std::log(posterior[i]) : -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(logw.begin(), logw.end());
    double sum = 0.0;
    for (double& v : logw) {
        v = std::exp(v - top);
        sum += v;
    }
    for (double& v : logw) v /= sum;
    return ProbVector(std::move(logw));
}

OracleResult minimize_risk_on_simplex_detailed(const PointwiseRisk& risk, double tol, int max_iters,
                                               const OracleOptions& options) {
    if (!(tol > 0.0)) throw ParameterDomainError("simplex oracle: tol must be positive");
    if (max_iters < 1) throw ParameterDomainError("simplex oracle: max_iters must be positive");
    const std::size_t k = risk.posterior.size();
    check_dims(risk, ProbVector::uniform(k));

    std::vector<ProbVector> starts{ProbVector::uniform(k)};
    for (std::size_t v = 0; v < k; ++v) starts.push_back(vertex_start(k, v, options.vertex_offset));

    // Lowest risk wins; among near-equal risks prefer a converged run.
    auto better = [tol](const Descent& a, const Descent& b) {
        if (a.risk < b.risk - 1e-15) return true;
        if (a.risk > b.risk + 1e-15) return false;
        return a.residual < tol && b.residual >= tol;
    };

    Descent best = descend(risk, starts.front(), tol, max_iters, options);
    for (std::size_t s = 1; s < starts.size(); ++s) {
        Descent d = descend(risk, starts[s], tol, max_iters, options);
        if (better(d, best)) best = std::move(d);
    }

    double grid_risk = std::numeric_limits<double>::quiet_NaN();
    if (k <= 3) {
        auto [gr, gp] = grid_minimum(risk, options.grid_resolution);
        grid_risk = gr;
        if (gr < best.risk - tol) {
            std::vector<double> seed(k);
            for (std::size_t i = 0; i < k; ++i) seed[i] = (1.0 - 1e-6) * gp[i] + 1e-6 / static_cast<double>(k);
            Descent d = descend(risk, ProbVector(std::move(seed)), tol, max_iters, options);
            if (better(d, best)) best = std::move(d);
        }
    }

    if (best.residual >= tol)
        throw ConvergenceFailure("simplex oracle did not reach tolerance within max_iters", best.f, best.residual);
    if (k <= 3 && best.risk > grid_risk + tol)
        throw ConvergenceFailure("simplex oracle minimum exceeds the grid certificate", best.f, best.residual);
    return {best.f, best.risk, best.residual, best.iterations, grid_risk};
}

ProbVector minimize_risk_on_simplex(const PointwiseRisk& risk, double tol, int max_iters) {
    return minimize_risk_on_simplex_detailed(risk, tol, max_iters).minimizer;
}

OneHotCheck verify_onehot_minimizer(const ProbVector& posterior, double q, double lambda, double tol) {
    if (!(q > 1.0)) throw ParameterDomainError("one-hot check requires q > 1");
    if (!(lambda >= 0.0)) throw ParameterDomainError("one-hot check requires lambda >= 0");
    const std::size_t k = posterior.size();
    const std::size_t target = posterior.argmax();
    for (std::size_t i = 0; i < k; ++i)
        if (i != target && std::abs(posterior[i] - posterior[target]) <= 1e-12)
            throw DegenerateInputError("posterior argmax is tied; the minimizer is not unique");

    // DAL scales the bootstrap term by 1/(q log k); undo that to get GCE + lambda * BS.
    const double weight = lambda * q * std::log(static_cast<double>(k));
    const PointwiseRisk risk{posterior, LossSpec::dal(k, q, weight)};
    const ProbVector witness = minimize_risk_on_simplex(risk, 1e-10, 100000);

    double deviation = 0.0;
    for (std::size_t i = 0; i < k; ++i) deviation = std::max(deviation, std::abs(witness[i] - (i == target ? 1.0 : 0.0)));
    return {deviation <= tol, witness, target, deviation};
}

double bound_gap_estimate(std::span<const BoundSample> samples) {
    if (samples.empty()) throw InputValidationError("bound_gap_estimate: no samples");
    std::size_t good = 0;
    for (const auto& s : samples) {
        if (s.clean_posterior.size() != s.noisy_posterior.size() || s.f_out.size() != s.clean_posterior.size())
            throw DimensionMismatch("bound sample vectors differ in length");
        const std::size_t noisy_top = s.noisy_posterior.argmax();
        // The GCE+BS minimizer under the noisy posterior puts mass 1 on its argmax.
        if (s.clean_posterior.argmax() == noisy_top && s.f_out[noisy_top] > 1.0 - 0.5) ++good;
    }
    return 1.0 - static_cast<double>(good) / static_cast<double>(samples.size());
}

double zero_one_risk(std::span<const ProbVector> f_outputs, std::span<const std::size_t> labels) {
    if (f_outputs.size() != labels.size()) throw DimensionMismatch("zero_one_risk: outputs and labels differ in count");
    if (f_outputs.empty()) return 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= f_outputs[i].size()) throw DimensionMismatch("zero_one_risk: label outside class range");
        wrong += f_outputs[i].argmax() != labels[i] ? 1 : 0;
    }
    return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double sampled_excess_zero_one_risk(std::span<const BoundSample> samples, std::uint64_t seed) {
    if (samples.empty()) throw InputValidationError("excess risk: no samples");
    long long diff = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        Rng rng(derive_seed(seed, i));
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t y = s.clean_posterior.size() - 1;
        for (std::size_t c = 0; c < s.clean_posterior.size(); ++c) {
            acc += s.clean_posterior[c];
            if (u < acc) {
                y = c;
                break;
            }
        }
        diff += (s.f_out.argmax() != y ? 1 : 0) - (s.clean_posterior.argmax() != y ? 1 : 0);
    }
    return static_cast<double>(diff) / static_cast<double>(samples.size());
}

}  // namespace dal::theory
