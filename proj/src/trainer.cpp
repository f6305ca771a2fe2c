#include "dal/trainer.hpp"

#include <cmath>

#include "dal/errors.hpp"
#include "dal/random.hpp"

namespace dal::train {

using loss::LossKind;
using loss::LossSpec;

void OptimizerConfig::validate() const {
    if (!(lr0 > 0.0)) throw ConfigurationError("optimizer: lr0 must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigurationError("optimizer: momentum must lie in [0,1)");
    if (!(weight_decay >= 0.0)) throw ConfigurationError("optimizer: weight_decay must be >= 0");
    if (batch_size == 0) throw ConfigurationError("optimizer: batch_size must be positive");
    if (epochs < 0) throw ConfigurationError("optimizer: epochs must be >= 0");
}

LossSpec LossSchedule::at(int t, int T, std::size_t k) const {
    switch (mode) {
        case Mode::Static: {
            LossSpec s = fixed;
            s.k = k;
            return s;
        }
        case Mode::Dal: {
            const auto v = loss::schedule_at(t, T, q_s, q_e, lambda_e);
            return LossSpec::dal(k, v.q, v.lambda);
        }
        case Mode::DynamicTce:
            return LossSpec::tce(k, static_cast<int>(loss::dynamic_param(loss::DynamicFamily::TCE, t, T)));
        case Mode::DynamicJs: return LossSpec::js(k, loss::dynamic_param(loss::DynamicFamily::JS, t, T));
    }
    return fixed;
}

void LossSchedule::validate(std::size_t k) const {
    if (mode == Mode::Static) {
        LossSpec s = fixed;
        s.k = k;
        s.validate();
    } else if (mode == Mode::Dal) {
        if (!(q_s > 0.0)) throw ParameterDomainError("DAL schedule requires q_s > 0");
        if (!(q_e >= q_s)) throw ParameterDomainError("DAL schedule requires q_e >= q_s");
        if (!(lambda_e >= 0.0)) throw ParameterDomainError("DAL schedule requires lambda_e >= 0");
    }
}

double reported_q(const LossSpec& spec) {
    switch (spec.kind) {
        case LossKind::GCE:
        case LossKind::DAL: return spec.q;
        case LossKind::MAE: return 1.0;
        case LossKind::TCE: return spec.t_terms;
        case LossKind::JS: return spec.pi1;
        default: return 0.0;
    }
}

namespace {

std::vector<std::size_t> predict(const MLPModel& model, const Eigen::MatrixXd& features) {
    std::vector<std::size_t> out(static_cast<std::size_t>(features.rows()));
    if (features.rows() == 0) return out;
    const BatchCache cache = forward_batch(model, features.transpose());
    for (Eigen::Index j = 0; j < cache.logits.cols(); ++j) {
        Eigen::Index best = 0;
        // maxCoeff's tie order is unspecified; scan for the lowest index.
        for (Eigen::Index c = 1; c < cache.logits.rows(); ++c)
            if (cache.logits(c, j) > cache.logits(best, j)) best = c;
        out[static_cast<std::size_t>(j)] = static_cast<std::size_t>(best);
    }
    return out;
}

double fraction(std::size_t hits, std::size_t total) {
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

double accuracy(const MLPModel& model, const Eigen::MatrixXd& features, const std::vector<std::size_t>& labels) {
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw DimensionMismatch("accuracy: features and labels differ in count");
    const auto pred = predict(model, features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
    return fraction(hits, labels.size());
}

std::vector<EpochMetrics> train(MLPModel& model, const harness::NoisyDataset& data, const LossSchedule& schedule,
                                const OptimizerConfig& config) {
    config.validate();
    const std::size_t n = data.size();
    const std::size_t k = model.num_classes();
    if (n == 0) throw ConfigurationError("train: empty training set");
    if (static_cast<std::size_t>(data.features.rows()) != n ||
        static_cast<std::size_t>(data.features.cols()) != model.input_dim())
        throw DimensionMismatch("train: feature matrix does not match records or model input");
    if (data.k != k) throw DimensionMismatch("train: dataset class count differs from the model output");
    schedule.validate(k);

    const int T = config.epochs;
    std::vector<EpochMetrics> history;
    history.reserve(static_cast<std::size_t>(T));
    ParamGrads velocity = ParamGrads::zeros_like(model);
    const auto d = static_cast<Eigen::Index>(model.input_dim());

    for (int t = 1; t <= T; ++t) {
        const LossSpec spec = schedule.at(t, T, k);
        const double lr = config.lr_schedule == LrSchedule::Cosine ? cosine_lr(t, T, config.lr0) : config.lr0;
        Rng shuffle(derive_seed(config.seed, static_cast<std::uint64_t>(t)));
        const auto order = shuffle.permutation(n);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            const auto b = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd inputs(d, b);
            for (Eigen::Index j = 0; j < b; ++j)
                inputs.col(j) = data.features.row(static_cast<Eigen::Index>(order[start + j])).transpose();

            const BatchCache cache = forward_batch(model, inputs);
            Eigen::MatrixXd grad(cache.logits.rows(), b);
            double batch_loss = 0.0;
            for (Eigen::Index j = 0; j < b; ++j) {
                const std::size_t y = data.records[order[start + j]].observed_label;
                const std::span<const double> z(cache.logits.col(j).data(), k);
                for (double v : z)
                    if (!std::isfinite(v))
                        throw TrainingFailure("non-finite logits at epoch " + std::to_string(t), t, history);
                const auto vg = loss::loss_and_grad_logits(spec, z, y);
                batch_loss += vg.value;
                for (std::size_t c = 0; c < k; ++c)
                    grad(static_cast<Eigen::Index>(c), j) = vg.grad[c] / static_cast<double>(b);
            }
            if (!std::isfinite(batch_loss))
                throw TrainingFailure("non-finite loss at epoch " + std::to_string(t), t, history);
            loss_sum += batch_loss;
            sgd_step(model, backward_batch(model, cache, grad), velocity, lr, config.momentum, config.weight_decay);
        }

        EpochMetrics m;
        m.epoch = t;
        m.q_used = reported_q(spec);
        m.lambda_used = spec.kind == LossKind::DAL ? spec.lambda : 0.0;
        m.lr = lr;
        m.mean_train_loss = loss_sum / static_cast<double>(n);

        const auto pred = predict(model, data.features);
        std::size_t clean_hits = 0, clean_total = 0, noisy_hits = 0, noisy_total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& r = data.records[i];
            const bool hit = pred[i] == r.observed_label;
            if (r.flipped) {
                ++noisy_total;
                noisy_hits += hit ? 1 : 0;
            } else {
                ++clean_total;
                clean_hits += hit ? 1 : 0;
            }
        }
        m.train_acc_clean = fraction(clean_hits, clean_total);
        m.train_acc_noisy = fraction(noisy_hits, noisy_total);
        m.test_acc = accuracy(model, data.test_features, data.test_labels);
        history.push_back(m);
    }
    return history;
}

}  // namespace dal::train
