#include "dal/prob.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dal/errors.hpp"

namespace dal {

ProbVector::ProbVector(std::vector<double> entries) : p_(std::move(entries)) {
    if (p_.size() < 2) throw InputValidationError("ProbVector needs at least 2 entries");
    double sum = 0.0;
    for (double v : p_) {
        if (!std::isfinite(v)) throw InputValidationError("ProbVector entry is not finite");
        if (v < 0.0 || v > 1.0) throw InputValidationError("ProbVector entry outside [0,1]: " + std::to_string(v));
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw InputValidationError("ProbVector entries sum to " + std::to_string(sum));
}

ProbVector ProbVector::uniform(std::size_t k) {
    if (k < 2) throw InputValidationError("ProbVector needs at least 2 entries");
    return ProbVector(Unchecked{}, std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

ProbVector ProbVector::one_hot(std::size_t k, std::size_t index) {
    if (k < 2 || index >= k) throw InputValidationError("one_hot: bad class count or index");
    std::vector<double> v(k, 0.0);
    v[index] = 1.0;
    return ProbVector(Unchecked{}, std::move(v));
}

std::size_t ProbVector::argmax() const { return dal::argmax(p_); }

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

ProbVector softmax(std::span<const double> logits) {
    if (logits.size() < 2) throw InputValidationError("softmax needs at least 2 logits");
    for (double z : logits)
        if (!std::isfinite(z)) throw InputValidationError("softmax: non-finite logit");
    const double zmax = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - zmax);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return ProbVector(ProbVector::Unchecked{}, std::move(p));
}

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0); }

}  // namespace dal
