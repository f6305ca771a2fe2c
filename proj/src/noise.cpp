#include "dal/noise.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "dal/errors.hpp"
#include "dal/random.hpp"

namespace dal::noise {

std::string_view to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Symmetric: return "symmetric";
        case NoiseKind::Asymmetric: return "asymmetric";
        case NoiseKind::Instance: return "instance";
    }
    return "?";
}

NoiseKind noise_kind_from_string(std::string_view name) {
    std::string low(name);
    std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
    for (NoiseKind k : {NoiseKind::Symmetric, NoiseKind::Asymmetric, NoiseKind::Instance})
        if (low == to_string(k)) return k;
    throw ConfigurationError("unknown noise kind '" + std::string(name) + "'");
}

namespace {

// Substream tags keep the per-example streams of different generators apart.
constexpr std::uint64_t kProjectionStream = 0xffffffffffff0001ULL;

void check_eta(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterDomainError("noise rate eta must lie in [0,1]");
}

void check_labels(std::span<const std::size_t> labels, std::size_t k) {
    for (std::size_t y : labels)
        if (y >= k) throw InputValidationError("label " + std::to_string(y) + " outside [0, k)");
}

CorruptionRecord make_record(std::size_t clean, std::size_t observed) { return {clean, observed, clean != observed}; }

}  // namespace

std::vector<CorruptionRecord> corrupt_symmetric(std::span<const std::size_t> labels, double eta, std::size_t k,
                                                std::uint64_t seed) {
    check_eta(eta);
    if (k < 2) throw ConfigurationError("symmetric noise needs k >= 2");
    check_labels(labels, k);
    std::vector<CorruptionRecord> out;
    out.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Rng rng(derive_seed(seed, i));
        std::size_t observed = labels[i];
        if (rng.bernoulli(eta)) observed = rng.below(k);
        out.push_back(make_record(labels[i], observed));
    }
    return out;
}

std::vector<CorruptionRecord> corrupt_asymmetric(std::span<const std::size_t> labels, double eta,
                                                 const ClassMap& class_map, std::uint64_t seed) {
    check_eta(eta);
    const std::size_t k = class_map.size();
    if (k < 2) throw ConfigurationError("asymmetric noise needs a class map over k >= 2 classes");
    for (std::size_t c : class_map)
        if (c >= k) throw ConfigurationError("class map target outside [0, k)");
    for (std::size_t y : labels)
        if (y >= k) throw ConfigurationError("class map is not defined on label " + std::to_string(y));
    std::vector<CorruptionRecord> out;
    out.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Rng rng(derive_seed(seed, i));
        const std::size_t observed = rng.bernoulli(eta) ? class_map[labels[i]] : labels[i];
        out.push_back(make_record(labels[i], observed));
    }
    return out;
}

std::vector<CorruptionRecord> corrupt_instance(const Eigen::MatrixXd& features, std::span<const std::size_t> labels,
                                               double eta, std::size_t k, std::uint64_t seed) {
    check_eta(eta);
    const auto n = static_cast<std::size_t>(features.rows());
    const auto d = static_cast<std::size_t>(features.cols());
    if (d == 0) throw ConfigurationError("instance noise needs at least one feature dimension");
    if (k < 2) throw ConfigurationError("instance noise needs k >= 2");
    if (labels.size() != n) throw DimensionMismatch("features and labels disagree on example count");
    if (!features.allFinite()) throw InputValidationError("instance noise: non-finite features");
    check_labels(labels, k);

    // z-score each feature column; constant columns are centred only.
    Eigen::MatrixXd z = features;
    if (n > 0) {
        const Eigen::RowVectorXd mean = z.colwise().mean();
        z.rowwise() -= mean;
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n));
            if (sd > 0.0) z.col(j) /= sd;
        }
    }

    std::vector<Eigen::MatrixXd> projection(k, Eigen::MatrixXd(d, k));
    Rng wrng(derive_seed(seed, kProjectionStream));
    for (auto& w : projection)
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = wrng.normal();

    std::vector<CorruptionRecord> out;
    out.reserve(n);
    std::vector<double> prob(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = labels[i];
        Rng rng(derive_seed(seed, i));
        // eta = 0 means no noise at all rather than a truncated N(0, 0.1^2) rate.
        double rate = 0.0;
        if (eta > 0.0) {
            do {
                rate = rng.normal(eta, kInstanceRateStddev);
            } while (rate < 0.0 || rate > 1.0);
        }

        const Eigen::RowVectorXd scores = z.row(static_cast<Eigen::Index>(i)) * projection[y];
        double smax = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != y) smax = std::max(smax, scores(static_cast<Eigen::Index>(c)));
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            prob[c] = c == y ? 0.0 : std::exp(scores(static_cast<Eigen::Index>(c)) - smax);
            sum += prob[c];
        }
        for (std::size_t c = 0; c < k; ++c) prob[c] = c == y ? 1.0 - rate : rate * prob[c] / sum;

        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t observed = y;
        for (std::size_t c = 0; c < k; ++c) {
            acc += prob[c];
            if (u < acc) {
                observed = c;
                break;
            }
        }
        out.push_back(make_record(y, observed));
    }
    return out;
}

ClassMap make_cyclic_group_map(std::size_t k, std::size_t group_size) {
    if (group_size == 0 || k == 0 || k % group_size != 0)
        throw ConfigurationError("cyclic group map: group size must divide k");
    ClassMap map(k);
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t start = c - c % group_size;
        map[c] = start + (c - start + 1) % group_size;
    }
    return map;
}

std::vector<CorruptionRecord> corrupt(const LabelNoiseSpec& spec, const Eigen::MatrixXd& features,
                                      std::span<const std::size_t> labels, std::size_t k) {
    switch (spec.kind) {
        case NoiseKind::Symmetric: return corrupt_symmetric(labels, spec.eta, k, spec.seed);
        case NoiseKind::Asymmetric:
            if (!spec.class_map) throw ConfigurationError("asymmetric noise requires a class map");
            if (spec.class_map->size() != k) throw ConfigurationError("class map size differs from class count");
            return corrupt_asymmetric(labels, spec.eta, *spec.class_map, spec.seed);
        case NoiseKind::Instance: return corrupt_instance(features, labels, spec.eta, k, spec.seed);
    }
    return {};
}

double flip_fraction(std::span<const CorruptionRecord> records) {
    if (records.empty()) return 0.0;
    std::size_t flips = 0;
    for (const auto& r : records) flips += r.flipped ? 1 : 0;
    return static_cast<double>(flips) / static_cast<double>(records.size());
}

}  // namespace dal::noise
