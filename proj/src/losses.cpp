#include "dal/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "dal/errors.hpp"

namespace dal::loss {

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::CE: return "CE";
        case LossKind::MAE: return "MAE";
        case LossKind::GCE: return "GCE";
        case LossKind::TCE: return "TCE";
        case LossKind::JS: return "JS";
        case LossKind::BS: return "BS";
        case LossKind::DAL: return "DAL";
    }
    return "?";
}

LossKind loss_kind_from_string(std::string_view name) {
    std::string up(name);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    for (LossKind k : {LossKind::CE, LossKind::MAE, LossKind::GCE, LossKind::TCE, LossKind::JS, LossKind::BS,
                       LossKind::DAL})
        if (up == to_string(k)) return k;
    throw ConfigurationError("unknown loss kind '" + std::string(name) + "'");
}

void LossSpec::validate() const {
    if (k < 2) throw ParameterDomainError("loss: class count k must be >= 2");
    switch (kind) {
        case LossKind::GCE:
            if (!(q >= 0.0) || !std::isfinite(q)) throw ParameterDomainError("GCE requires q >= 0");
            break;
        case LossKind::DAL:
            if (!(q > 0.0) || !std::isfinite(q)) throw ParameterDomainError("DAL requires q > 0");
            if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterDomainError("DAL requires lambda >= 0");
            break;
        case LossKind::TCE:
            if (t_terms < 1) throw ParameterDomainError("TCE requires t >= 1");
            break;
        case LossKind::JS:
            if (!(pi1 > 0.0 && pi1 < 1.0)) throw ParameterDomainError("JS requires 0 < pi1 < 1");
            break;
        default: break;
    }
}

std::string LossSpec::label() const {
    std::ostringstream os;
    os << to_string(kind);
    switch (kind) {
        case LossKind::GCE: os << "(q=" << q << ")"; break;
        case LossKind::TCE: os << "(t=" << t_terms << ")"; break;
        case LossKind::JS: os << "(pi1=" << pi1 << ")"; break;
        case LossKind::DAL: os << "(q=" << q << ";lambda=" << lambda << ")"; break;
        default: break;
    }
    return os.str();
}

namespace {

void check_inputs(const LossSpec& spec, const ProbVector& f, std::size_t y) {
    spec.validate();
    if (f.size() != spec.k)
        throw DimensionMismatch("probability vector has " + std::to_string(f.size()) + " entries, spec expects " +
                                std::to_string(spec.k));
    if (y >= spec.k) throw InputValidationError("class index out of range");
}

double gce_value(double fy, double q) {
    if (q == 0.0) return -std::log(clamp_prob(fy));
    if (q == 1.0) return 1.0 - fy;
    // expm1 keeps the q -> 0 limit accurate.
    return -std::expm1(q * std::log(clamp_prob(fy))) / q;
}

double gce_dfy(double fy, double q) {
    if (q == 0.0) return -1.0 / clamp_prob(fy);
    return -std::pow(clamp_prob(fy), q - 1.0);
}

double tce_value(double fy, int t) {
    const double r = 1.0 - fy;
    double term = 1.0, sum = 0.0;
    for (int i = 1; i <= t; ++i) {
        term *= r;
        sum += term / i;
    }
    return sum;
}

double tce_dfy(double fy, int t) {
    const double r = 1.0 - fy;
    double term = 1.0, sum = 0.0;
    for (int i = 1; i <= t; ++i) {
        sum += term;
        term *= r;
    }
    return -sum;
}

double js_normalizer(double pi1) {
    const double w = 1.0 - pi1;
    return -w * std::log(w);
}

double js_value(std::span<const double> f, std::size_t y, double pi1) {
    const double w = 1.0 - pi1;
    const double fy = f[y];
    const double my = pi1 + w * fy;
    // Off-label entries have m_i = w f_i, so each contributes f_i log(1/w).
    double kl_pred = (1.0 - fy) * -std::log(w);
    if (fy > 0.0) kl_pred += fy * std::log(fy / my);
    return (pi1 * -std::log(my) + w * kl_pred) / js_normalizer(pi1);
}

std::vector<double> js_grad(std::span<const double> f, std::size_t y, double pi1) {
    const double w = 1.0 - pi1;
    const double z = js_normalizer(pi1);
    std::vector<double> g(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double fi = clamp_prob(f[i]);
        const double mi = (i == y ? pi1 : 0.0) + w * fi;
        double d = w * (std::log(fi / mi) + 1.0 - w * fi / mi);
        if (i == y) d -= pi1 * w / mi;
        g[i] = d / z;
    }
    return g;
}

double bs_value(const ProbVector& f) { return -std::log(clamp_prob(f.max())); }

double bs_scale(double q, double lambda, std::size_t k) { return lambda / (q * std::log(static_cast<double>(k))); }

}  // namespace

double loss_value(const LossSpec& spec, const ProbVector& f, std::size_t y) {
    check_inputs(spec, f, y);
    const double fy = f[y];
    switch (spec.kind) {
        case LossKind::CE: return -std::log(clamp_prob(fy));
        case LossKind::MAE: return 1.0 - fy;
        case LossKind::GCE: return gce_value(fy, spec.q);
        case LossKind::TCE: return tce_value(fy, spec.t_terms);
        case LossKind::JS: return js_value(f.values(), y, spec.pi1);
        case LossKind::BS: return bs_value(f);
        case LossKind::DAL: return gce_value(fy, spec.q) + bs_scale(spec.q, spec.lambda, spec.k) * bs_value(f);
    }
    return 0.0;
}

double label_derivative(const LossSpec& spec, double fy) {
    switch (spec.kind) {
        case LossKind::CE: return -1.0 / clamp_prob(fy);
        case LossKind::MAE: return -1.0;
        case LossKind::GCE:
        case LossKind::DAL: return gce_dfy(fy, spec.q);
        case LossKind::TCE: return tce_dfy(fy, spec.t_terms);
        default: throw ParameterDomainError("label_derivative: loss depends on more than f_y");
    }
}

std::vector<double> loss_grad_prob(const LossSpec& spec, const ProbVector& f, std::size_t y) {
    check_inputs(spec, f, y);
    std::vector<double> g(spec.k, 0.0);
    const double fy = f[y];
    switch (spec.kind) {
        case LossKind::CE: g[y] = -1.0 / clamp_prob(fy); break;
        case LossKind::MAE: g[y] = -1.0; break;
        case LossKind::GCE: g[y] = gce_dfy(fy, spec.q); break;
        case LossKind::TCE: g[y] = tce_dfy(fy, spec.t_terms); break;
        case LossKind::JS: g = js_grad(f.values(), y, spec.pi1); break;
        case LossKind::BS: {
            const std::size_t top = f.argmax();
            g[top] = -1.0 / clamp_prob(f[top]);
            break;
        }
        case LossKind::DAL: {
            g[y] = gce_dfy(fy, spec.q);
            const std::size_t top = f.argmax();
            g[top] += bs_scale(spec.q, spec.lambda, spec.k) * (-1.0 / clamp_prob(f[top]));
            break;
        }
    }
    return g;
}

ValueAndGrad loss_and_grad_logits(const LossSpec& spec, std::span<const double> logits, std::size_t y) {
    const ProbVector f = softmax(logits);
    ValueAndGrad out{loss_value(spec, f, y), {}};
    if (spec.kind == LossKind::CE) {
        out.grad = f.vec();
        out.grad[y] -= 1.0;
        return out;
    }
    std::vector<double> g = loss_grad_prob(spec, f, y);
    double fg = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) fg += f[i] * g[i];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = f[i] * (g[i] - fg);
    out.grad = std::move(g);
    return out;
}

std::vector<double> loss_grad_logits(const LossSpec& spec, std::span<const double> logits, std::size_t y) {
    return loss_and_grad_logits(spec, logits, y).grad;
}

double dal_loss(const ProbVector& f, std::size_t y, double q, double lambda, std::size_t k) {
    if (!(q > 0.0)) throw ParameterDomainError("dal_loss requires q > 0");
    return loss_value(LossSpec::dal(k, q, lambda), f, y);
}

std::vector<double> weight_curve(const LossSpec& spec, std::span<const double> grid) {
    spec.validate();
    if (spec.kind == LossKind::BS || spec.kind == LossKind::DAL)
        throw ParameterDomainError("weight_curve: " + std::string(to_string(spec.kind)) +
                                   " does not depend on f_y alone");
    const std::size_t k = spec.k;
    std::vector<double> out;
    out.reserve(grid.size());
    for (double fy : grid) {
        if (!(fy > 0.0 && fy < 1.0)) throw InputValidationError("weight_curve: grid values must lie in (0,1)");
        std::vector<double> f(k, (1.0 - fy) / static_cast<double>(k - 1));
        f[0] = fy;
        const ProbVector p(std::move(f));
        const auto g = loss_grad_prob(spec, p, 0);
        // Off-label components are equal for these losses; subtracting one
        // of them gives the derivative along the simplex.
        out.push_back(std::abs(g[0] - g[1]));
    }
    return out;
}

// ---------------------------------------------------------------------------

double ScheduleState::t0() const {
    if (q_e == q_s) {
        return q_s > 1.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    }
    return (1.0 - q_s) / (q_e - q_s) * static_cast<double>(T);
}

ScheduleValue ScheduleState::value() const {
    if (T <= 0) throw ParameterDomainError("schedule: T must be positive");
    if (t < 1 || t > T) throw ParameterDomainError("schedule: epoch outside [1, T]");
    if (!(q_e >= q_s)) throw ParameterDomainError("schedule: requires q_e >= q_s");
    if (!(lambda_e >= 0.0)) throw ParameterDomainError("schedule: requires lambda_e >= 0");

    const double q = q_s + (q_e - q_s) * static_cast<double>(t) / static_cast<double>(T);
    if (q_e <= 1.0) return {q, 0.0};
    const double start = t0();
    if (std::isinf(start)) return {q, lambda_e};
    const double tt = static_cast<double>(t);
    if (tt < start || start > T) return {q, 0.0};
    return {q, lambda_e * (tt - start) / (static_cast<double>(T) - start)};
}

ScheduleValue schedule_at(int t, int T, double q_s, double q_e, double lambda_e) {
    return ScheduleState{t, T, q_s, q_e, lambda_e}.value();
}

double dynamic_param(DynamicFamily family, int t, int T) {
    if (T <= 0) throw ParameterDomainError("dynamic_param: T must be positive");
    if (t < 1 || t > T) throw ParameterDomainError("dynamic_param: epoch outside [1, T]");
    const double s = static_cast<double>(t) / static_cast<double>(T);
    if (family == DynamicFamily::TCE)
        return std::round(kTceStartTerms + (kTceEndTerms - kTceStartTerms) * s);
    return std::clamp(s, kJsRampEpsilon, 1.0 - kJsRampEpsilon);
}

}  // namespace dal::loss
