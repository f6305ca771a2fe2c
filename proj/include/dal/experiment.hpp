#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dal/dataset.hpp"
#include "dal/noise.hpp"
#include "dal/trainer.hpp"

namespace dal::harness {

/// Environment variable that re-roots relative output directories.
inline constexpr const char* kOutputRootEnv = "DAL_LAB_OUTPUT_ROOT";

struct ExperimentConfig {
    DatasetSpec dataset;
    noise::LabelNoiseSpec noise;
    std::optional<std::size_t> noise_group_size;  // asymmetric: build a cyclic map when no explicit map is given
    train::LossSchedule loss = train::LossSchedule::dal(0.6);
    std::vector<std::size_t> hidden{64, 64};
    std::uint64_t model_seed = 0;
    train::OptimizerConfig optimizer;
    double holdout_fraction = 0.0;  // unstratified validation split taken from the noisy training set
    std::string output_dir = "runs/default";
    std::uint64_t seed = 0;

    /// Parses a JSON document. Missing fields take defaults; component seeds
    /// that are not given are derived from the top-level seed.
    static ExperimentConfig from_json(const nlohmann::json& doc);
    static ExperimentConfig load(const std::filesystem::path& path);
    /// Fully materialized configuration (every default written out).
    nlohmann::json to_json() const;

    std::vector<std::size_t> layer_dims() const;
    /// Throws ConfigurationError / ParameterDomainError on malformed configs.
    void validate() const;
};

struct RunArtifact {
    std::vector<train::EpochMetrics> metrics;
    nlohmann::json summary;
    std::filesystem::path metrics_csv;
    std::filesystem::path summary_json;
};

/// Exact column order of the metrics CSV.
inline constexpr const char* kMetricsHeader =
    "epoch,q,lambda,lr,mean_train_loss,train_acc_clean,train_acc_noisy,test_acc";

std::string metrics_csv(const std::vector<train::EpochMetrics>& metrics);

/// Shortest round-trip decimal representation ('.' separator, locale independent).
std::string format_number(double v);

/// Resolves output_dir against $DAL_LAB_OUTPUT_ROOT when it is relative.
std::filesystem::path resolve_output_dir(const std::string& output_dir);

/// Writes `content` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Builds data, trains, writes metrics.csv and summary.json into the output
/// directory. On divergence the partial metrics are flushed before the
/// TrainingFailure propagates. When `write_files` is false nothing is written.
RunArtifact run_experiment(const ExperimentConfig& config, bool write_files = true);

/// Parameters accepted by sweep(). `q` sets the exponent of a static GCE loss.
inline constexpr const char* kSweepParams[] = {"q_s", "q_e", "lambda_e", "eta", "lr0", "q"};

ExperimentConfig with_parameter(const ExperimentConfig& base, const std::string& param, double value);

struct SweepRow {
    double value;
    double final_test_acc;
    double best_test_acc;
};

struct SweepReport {
    std::string param;
    std::vector<SweepRow> rows;
    /// max - min of final test accuracy across the sweep.
    double final_spread() const;
    std::string to_csv() const;
};

/// One experiment per value with all seeds held fixed. Members run on up to
/// `max_parallel` threads (0 = hardware concurrency) and write into
/// <output_dir>/<param>=<value>/; the report goes to <output_dir>/sweep.csv.
SweepReport sweep(const ExperimentConfig& base, const std::string& param, const std::vector<double>& values,
                  bool write_files = true, unsigned max_parallel = 0);

/// Parses "CE", "MAE", "GCE:q=0.7", "TCE:t=2", "JS:pi1=0.5", "BS",
/// "DAL:q=1.5:lambda=1".
loss::LossSpec parse_loss_spec(const std::string& text, std::size_t k);

/// CSV of the f_y grid i/resolution, 0 < i < resolution, against the
/// gradient-coefficient magnitude of each loss.
std::string curves_csv(const std::vector<loss::LossSpec>& specs, int resolution);

}  // namespace dal::harness
