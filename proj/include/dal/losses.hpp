#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dal/prob.hpp"

namespace dal::loss {

enum class LossKind { CE, MAE, GCE, TCE, JS, BS, DAL };

std::string_view to_string(LossKind kind);
/// Case-insensitive; throws ConfigurationError on unknown names.
LossKind loss_kind_from_string(std::string_view name);

/// A loss family together with its hyper-parameters.
///
/// Only the fields relevant to `kind` are consulted: `q` for GCE/DAL,
/// `t_terms` for TCE, `pi1` for JS and `lambda` for DAL. `k` is the class
/// count and must match the length of every probability vector passed in.
struct LossSpec {
    LossKind kind = LossKind::CE;
    double q = 0.7;
    int t_terms = 2;
    double pi1 = 0.5;
    double lambda = 0.0;
    std::size_t k = 2;

    static LossSpec ce(std::size_t k) { return {LossKind::CE, 0.7, 2, 0.5, 0.0, k}; }
    static LossSpec mae(std::size_t k) { return {LossKind::MAE, 0.7, 2, 0.5, 0.0, k}; }
    static LossSpec gce(std::size_t k, double q) { return {LossKind::GCE, q, 2, 0.5, 0.0, k}; }
    static LossSpec tce(std::size_t k, int t) { return {LossKind::TCE, 0.7, t, 0.5, 0.0, k}; }
    static LossSpec js(std::size_t k, double pi1) { return {LossKind::JS, 0.7, 2, pi1, 0.0, k}; }
    static LossSpec bs(std::size_t k) { return {LossKind::BS, 0.7, 2, 0.5, 0.0, k}; }
    static LossSpec dal(std::size_t k, double q, double lambda) { return {LossKind::DAL, q, 2, 0.5, lambda, k}; }

    /// Throws ParameterDomainError when a relevant parameter is out of domain.
    void validate() const;
    /// Short human-readable label, e.g. "GCE(q=0.7)".
    std::string label() const;

    friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

double loss_value(const LossSpec& spec, const ProbVector& f, std::size_t y);

/// dL/df_y for the losses that touch only the labelled entry (CE, MAE, GCE,
/// TCE) and for the GCE part of DAL. Throws for JS and BS.
double label_derivative(const LossSpec& spec, double fy);

/// Exact partial derivatives dL/df_i of the loss formula.
std::vector<double> loss_grad_prob(const LossSpec& spec, const ProbVector& f, std::size_t y);

/// Gradient with respect to pre-softmax logits: J^T * loss_grad_prob with
/// J_ij = f_i (delta_ij - f_j).
std::vector<double> loss_grad_logits(const LossSpec& spec, std::span<const double> logits, std::size_t y);

/// Loss value together with the logit gradient, sharing one softmax.
struct ValueAndGrad {
    double value;
    std::vector<double> grad;
};
ValueAndGrad loss_and_grad_logits(const LossSpec& spec, std::span<const double> logits, std::size_t y);

/// (1 - f_y^q)/q + lambda * (-log max_i f_i) / (q log k).
double dal_loss(const ProbVector& f, std::size_t y, double q, double lambda, std::size_t k);

/// |dL/df_y| along the simplex, for the losses that depend on f only through
/// f_y (CE, MAE, GCE, TCE, JS). Grid points must lie strictly inside (0,1).
std::vector<double> weight_curve(const LossSpec& spec, std::span<const double> grid);

// ---------------------------------------------------------------------------
// Dynamic schedule: q rises linearly from q_s to q_e over T epochs; the
// bootstrap weight ramps from 0 at the epoch where q crosses 1 up to lambda_e.

struct ScheduleValue {
    double q;
    double lambda;
};

struct ScheduleState {
    int t = 1;
    int T = 1;
    double q_s = 0.6;
    double q_e = 1.5;
    double lambda_e = 1.0;

    /// Real-valued epoch where q(t) = 1. +inf when q never reaches 1, -inf
    /// when q_s = q_e > 1.
    double t0() const;
    ScheduleValue value() const;
};

ScheduleValue schedule_at(int t, int T, double q_s, double q_e, double lambda_e);

enum class DynamicFamily { TCE, JS };

inline constexpr double kJsRampEpsilon = 1e-3;
inline constexpr int kTceStartTerms = 20;
inline constexpr int kTceEndTerms = 1;

/// TCE: truncation order rounded from a linear ramp 20 -> 1.
/// JS: pi1 ramped 0 -> 1 and clamped to [eps, 1 - eps].
double dynamic_param(DynamicFamily family, int t, int T);

}  // namespace dal::loss
