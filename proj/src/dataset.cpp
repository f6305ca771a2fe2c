#include "dal/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "dal/errors.hpp"
#include "dal/random.hpp"

namespace dal::harness {

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::Blobs: return "blobs";
        case DatasetKind::Moons: return "moons";
        case DatasetKind::Spirals: return "spirals";
    }
    return "?";
}

DatasetKind dataset_kind_from_string(std::string_view name) {
    std::string low(name);
    std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
    for (DatasetKind k : {DatasetKind::Blobs, DatasetKind::Moons, DatasetKind::Spirals})
        if (low == to_string(k)) return k;
    throw ConfigurationError("unknown dataset kind '" + std::string(name) + "'");
}

void DatasetSpec::validate() const {
    if (n_train == 0 || n_test == 0) throw ConfigurationError("dataset: n_train and n_test must be positive");
    if (k < 2) throw ConfigurationError("dataset: k must be >= 2");
    if (d == 0) throw ConfigurationError("dataset: d must be positive");
    switch (kind) {
        case DatasetKind::Blobs:
            if (clusters_per_class == 0) throw ConfigurationError("blobs: clusters_per_class must be positive");
            if (!(blob_spread >= 0.0) || !(center_radius > 0.0))
                throw ConfigurationError("blobs: spread must be >= 0 and centre radius > 0");
            break;
        case DatasetKind::Moons:
            if (k != 2 || d != 2) throw ConfigurationError("moons: requires k = 2 and d = 2");
            if (!(moon_noise >= 0.0)) throw ConfigurationError("moons: noise must be >= 0");
            break;
        case DatasetKind::Spirals:
            if (d != 2) throw ConfigurationError("spirals: requires d = 2");
            if (!(spiral_turns > 0.0) || !(spiral_noise >= 0.0))
                throw ConfigurationError("spirals: turns must be > 0 and noise >= 0");
            break;
    }
}

namespace {

constexpr std::uint64_t kGeometryStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kTestStream = 3;

// Centre j belongs to class j % k, so clusters of different classes interleave.
Eigen::MatrixXd blob_centers(const DatasetSpec& spec) {
    const std::size_t m = spec.k * spec.clusters_per_class;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(spec.d));
    if (spec.d == 1) {
        for (std::size_t j = 0; j < m; ++j)
            c(static_cast<Eigen::Index>(j), 0) = -spec.center_radius + 2.0 * spec.center_radius * j / (m - 1.0);
    } else if (spec.d == 2) {
        for (std::size_t j = 0; j < m; ++j) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
            c(static_cast<Eigen::Index>(j), 0) = spec.center_radius * std::cos(a);
            c(static_cast<Eigen::Index>(j), 1) = spec.center_radius * std::sin(a);
        }
    } else {
        Rng rng(derive_seed(spec.seed, kGeometryStream));
        for (Eigen::Index j = 0; j < c.rows(); ++j) {
            for (Eigen::Index i = 0; i < c.cols(); ++i) c(j, i) = rng.normal();
            c.row(j) *= spec.center_radius / c.row(j).norm();
        }
    }
    return c;
}

std::vector<std::size_t> balanced_labels(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> y(n);
    const auto perm = rng.permutation(n);
    for (std::size_t i = 0; i < n; ++i) y[perm[i]] = i % k;
    return y;
}

LabeledData sample_blobs(const DatasetSpec& spec, const Eigen::MatrixXd& centers, std::size_t n, Rng& rng) {
    LabeledData out;
    out.labels = balanced_labels(n, spec.k, rng);
    out.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.d));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t sub = spec.clusters_per_class > 1 ? rng.below(spec.clusters_per_class) : 0;
        const auto row = static_cast<Eigen::Index>(i);
        const auto center = static_cast<Eigen::Index>(sub * spec.k + out.labels[i]);
        for (Eigen::Index j = 0; j < out.features.cols(); ++j)
            out.features(row, j) = centers(center, j) + spec.blob_spread * rng.normal();
    }
    return out;
}

LabeledData sample_moons(const DatasetSpec& spec, std::size_t n, Rng& rng) {
    LabeledData out;
    out.features.resize(static_cast<Eigen::Index>(n), 2);
    out.labels.resize(n);
    const std::size_t n_upper = n - n / 2;
    const auto perm = rng.permutation(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t row = perm[i];
        const std::size_t y = i < n_upper ? 0 : 1;
        const double t = std::numbers::pi * rng.uniform();
        double x0, x1;
        if (y == 0) {
            x0 = std::cos(t);
            x1 = std::sin(t);
        } else {
            x0 = 1.0 - std::cos(t);
            x1 = 0.5 - std::sin(t);
        }
        out.labels[row] = y;
        out.features(static_cast<Eigen::Index>(row), 0) = x0 + spec.moon_noise * rng.normal();
        out.features(static_cast<Eigen::Index>(row), 1) = x1 + spec.moon_noise * rng.normal();
    }
    return out;
}

LabeledData sample_spirals(const DatasetSpec& spec, std::size_t n, Rng& rng) {
    LabeledData out;
    out.labels = balanced_labels(n, spec.k, rng);
    out.features.resize(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = rng.uniform();
        const double a = 2.0 * std::numbers::pi *
                         (spec.spiral_turns * r + static_cast<double>(out.labels[i]) / static_cast<double>(spec.k));
        out.features(static_cast<Eigen::Index>(i), 0) = r * std::cos(a) + spec.spiral_noise * rng.normal();
        out.features(static_cast<Eigen::Index>(i), 1) = r * std::sin(a) + spec.spiral_noise * rng.normal();
    }
    return out;
}

}  // namespace

CleanSplit make_dataset(const DatasetSpec& spec) {
    spec.validate();
    Rng train_rng(derive_seed(spec.seed, kTrainStream));
    Rng test_rng(derive_seed(spec.seed, kTestStream));
    switch (spec.kind) {
        case DatasetKind::Blobs: {
            const Eigen::MatrixXd centers = blob_centers(spec);
            return {sample_blobs(spec, centers, spec.n_train, train_rng),
                    sample_blobs(spec, centers, spec.n_test, test_rng)};
        }
        case DatasetKind::Moons:
            return {sample_moons(spec, spec.n_train, train_rng), sample_moons(spec, spec.n_test, test_rng)};
        case DatasetKind::Spirals:
            return {sample_spirals(spec, spec.n_train, train_rng), sample_spirals(spec, spec.n_test, test_rng)};
    }
    return {};
}

NoisyDataset make_noisy_dataset(const CleanSplit& clean, const noise::LabelNoiseSpec& noise, std::size_t k) {
    NoisyDataset out;
    out.features = clean.train.features;
    out.records = noise::corrupt(noise, clean.train.features, clean.train.labels, k);
    out.test_features = clean.test.features;
    out.test_labels = clean.test.labels;
    out.k = k;
    return out;
}

}  // namespace dal::harness
