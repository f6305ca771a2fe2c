#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dal::noise {

enum class NoiseKind { Symmetric, Asymmetric, Instance };

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

using ClassMap = std::vector<std::size_t>;

struct LabelNoiseSpec {
    NoiseKind kind = NoiseKind::Symmetric;
    double eta = 0.0;
    std::optional<ClassMap> class_map;  // asymmetric only
    std::uint64_t seed = 0;
};

struct CorruptionRecord {
    std::size_t clean_label;
    std::size_t observed_label;
    bool flipped;

    friend bool operator==(const CorruptionRecord&, const CorruptionRecord&) = default;
};

/// Each label is resampled uniformly over all k classes (own class included)
/// with probability eta, so the expected flip rate is eta (k-1)/k.
std::vector<CorruptionRecord> corrupt_symmetric(std::span<const std::size_t> labels, double eta, std::size_t k,
                                                std::uint64_t seed);

/// Each label y is replaced by class_map[y] with probability eta.
std::vector<CorruptionRecord> corrupt_asymmetric(std::span<const std::size_t> labels, double eta,
                                                 const ClassMap& class_map, std::uint64_t seed);

/// Feature-dependent flips. Per example: a flip rate r_i ~ N(eta, 0.1^2)
/// truncated to [0,1]; scores x_i W_{y_i} with one standard-normal d x k
/// projection per class on z-scored features; the own-class score is
/// masked, the rest are softmaxed and scaled by r_i, and y_i keeps 1 - r_i.
std::vector<CorruptionRecord> corrupt_instance(const Eigen::MatrixXd& features, std::span<const std::size_t> labels,
                                               double eta, std::size_t k, std::uint64_t seed);

inline constexpr double kInstanceRateStddev = 0.1;

/// Within each consecutive block of group_size classes, c -> next class in
/// the block, wrapping to the block start.
ClassMap make_cyclic_group_map(std::size_t k, std::size_t group_size);

/// Dispatches on spec.kind. Asymmetric without a class map is a ConfigurationError.
std::vector<CorruptionRecord> corrupt(const LabelNoiseSpec& spec, const Eigen::MatrixXd& features,
                                      std::span<const std::size_t> labels, std::size_t k);

double flip_fraction(std::span<const CorruptionRecord> records);

}  // namespace dal::noise
