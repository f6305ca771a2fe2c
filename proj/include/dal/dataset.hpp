#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dal/noise.hpp"

namespace dal::harness {

enum class DatasetKind { Blobs, Moons, Spirals };

std::string_view to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(std::string_view name);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::Blobs;
    std::size_t n_train = 2000;
    std::size_t n_test = 2000;
    std::size_t k = 4;
    std::size_t d = 2;
    // blobs
    double blob_spread = 1.0;       // per-coordinate std of each cluster
    double center_radius = 5.0;     // distance of every cluster centre from the origin
    std::size_t clusters_per_class = 1;
    // moons
    double moon_noise = 0.1;
    // spirals
    double spiral_turns = 1.0;
    double spiral_noise = 0.05;
    std::uint64_t seed = 0;

    /// Throws ConfigurationError on infeasible geometry.
    void validate() const;
};

struct LabeledData {
    Eigen::MatrixXd features;  // n x d
    std::vector<std::size_t> labels;
};

struct CleanSplit {
    LabeledData train;
    LabeledData test;
};

/// Deterministic given spec.seed. Train and test share the geometry (cluster
/// centres) and use disjoint random streams.
CleanSplit make_dataset(const DatasetSpec& spec);

/// Noisy training set plus a clean test set.
struct NoisyDataset {
    Eigen::MatrixXd features;                        // n x d
    std::vector<noise::CorruptionRecord> records;    // one per training row
    Eigen::MatrixXd test_features;                   // m x d
    std::vector<std::size_t> test_labels;            // never corrupted
    std::size_t k = 0;

    std::size_t size() const { return records.size(); }
};

NoisyDataset make_noisy_dataset(const CleanSplit& clean, const noise::LabelNoiseSpec& noise, std::size_t k);

}  // namespace dal::harness
