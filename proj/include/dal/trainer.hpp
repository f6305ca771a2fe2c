#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dal/dataset.hpp"
#include "dal/losses.hpp"
#include "dal/mlp.hpp"

namespace dal::train {

enum class LrSchedule { Constant, Cosine };

struct OptimizerConfig {
    double lr0 = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t batch_size = 128;
    int epochs = 150;
    LrSchedule lr_schedule = LrSchedule::Cosine;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Which loss is minimized at each epoch.
struct LossSchedule {
    enum class Mode {
        Static,      // `fixed` every epoch
        Dal,         // GCE(q(t)) + lambda(t) BS with the linear q / lambda ramps
        DynamicTce,  // TCE with t decreasing 20 -> 1
        DynamicJs,   // JS with pi1 increasing 0 -> 1
    };
    Mode mode = Mode::Static;
    loss::LossSpec fixed = loss::LossSpec::ce(2);
    double q_s = 0.6;
    double q_e = 1.5;
    double lambda_e = 1.0;

    static LossSchedule constant(const loss::LossSpec& spec) { return {Mode::Static, spec, 0.6, 1.5, 1.0}; }
    static LossSchedule dal(double q_s, double q_e = 1.5, double lambda_e = 1.0) {
        return {Mode::Dal, loss::LossSpec::ce(2), q_s, q_e, lambda_e};
    }
    static LossSchedule dynamic_tce() { return {Mode::DynamicTce, loss::LossSpec::ce(2), 0.6, 1.5, 1.0}; }
    static LossSchedule dynamic_js() { return {Mode::DynamicJs, loss::LossSpec::ce(2), 0.6, 1.5, 1.0}; }

    /// Loss used during epoch t of T for k classes.
    loss::LossSpec at(int t, int T, std::size_t k) const;
    void validate(std::size_t k) const;
};

/// The interpolation parameter reported in the `q` column: q for GCE/DAL,
/// 0 for CE, 1 for MAE, t for TCE, pi1 for JS, 0 for BS.
double reported_q(const loss::LossSpec& spec);

struct EpochMetrics {
    int epoch = 0;
    double q_used = 0.0;
    double lambda_used = 0.0;
    double train_acc_clean = 0.0;  // unflipped rows, against their (correct) labels
    double train_acc_noisy = 0.0;  // flipped rows, against the observed labels
    double test_acc = 0.0;
    double mean_train_loss = 0.0;
    double lr = 0.0;

    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

class TrainingFailure : public std::runtime_error {
public:
    TrainingFailure(const std::string& what, int epoch, std::vector<EpochMetrics> history)
        : std::runtime_error(what), epoch_(epoch), history_(std::move(history)) {}
    int epoch() const { return epoch_; }
    const std::vector<EpochMetrics>& history() const { return history_; }

private:
    int epoch_;
    std::vector<EpochMetrics> history_;
};

/// Fraction of rows of `features` whose predicted class equals `labels`.
double accuracy(const MLPModel& model, const Eigen::MatrixXd& features, const std::vector<std::size_t>& labels);

/// Minibatch SGD over T epochs. The loss schedule is sampled once per epoch
/// (before the epoch's updates); rows are reshuffled each epoch with a
/// permutation derived from (seed, epoch); the final partial batch is kept.
/// Metrics are measured on the model after the epoch's last update.
std::vector<EpochMetrics> train(MLPModel& model, const harness::NoisyDataset& data, const LossSchedule& schedule,
                                const OptimizerConfig& config);

}  // namespace dal::train
