#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dal {

/// A point on the (k-1)-simplex: k >= 2 nonnegative entries summing to 1.
class ProbVector {
public:
    static constexpr double kSumTolerance = 1e-9;

    /// Validates the invariants; throws InputValidationError otherwise.
    explicit ProbVector(std::vector<double> entries);
    ProbVector(std::initializer_list<double> entries) : ProbVector(std::vector<double>(entries)) {}

    static ProbVector uniform(std::size_t k);
    static ProbVector one_hot(std::size_t k, std::size_t index);

    std::size_t size() const { return p_.size(); }
    double operator[](std::size_t i) const { return p_[i]; }
    std::span<const double> values() const { return p_; }
    const std::vector<double>& vec() const { return p_; }

    /// Index of the largest entry; ties go to the lowest index.
    std::size_t argmax() const;
    double max() const { return p_[argmax()]; }

    friend bool operator==(const ProbVector&, const ProbVector&) = default;

private:
    struct Unchecked {};
    ProbVector(Unchecked, std::vector<double> entries) : p_(std::move(entries)) {}
    friend ProbVector softmax(std::span<const double> logits);

    std::vector<double> p_;
};

/// Overflow-safe softmax (max-subtraction). Throws InputValidationError on non-finite logits.
ProbVector softmax(std::span<const double> logits);

/// Lowest index of the maximum entry.
std::size_t argmax(std::span<const double> v);

/// Probability floor used before logs and negative powers.
inline constexpr double kProbFloor = 1e-12;
double clamp_prob(double p);

}  // namespace dal
