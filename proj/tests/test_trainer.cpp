#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dal/dataset.hpp"
#include "dal/errors.hpp"
#include "dal/mlp.hpp"
#include "dal/random.hpp"
#include "dal/trainer.hpp"

using namespace dal;
using namespace dal::train;

TEST(Model, ParameterCounts) {
    EXPECT_EQ(init_model({2, 4}, 1).parameter_count(), 12u);
    EXPECT_EQ(init_model({2, 16, 3}, 1).parameter_count(), 99u);
    EXPECT_EQ(init_model({2, 64, 64, 4}, 1).parameter_count(), 4612u);
}

TEST(Model, InitIsDeterministicAndBounded) {
    const auto a = init_model({5, 7, 3}, 9);
    const auto b = init_model({5, 7, 3}, 9);
    const auto c = init_model({5, 7, 3}, 10);
    for (std::size_t l = 0; l < a.num_layers(); ++l) {
        EXPECT_EQ(a.weights[l], b.weights[l]);
        EXPECT_TRUE(a.biases[l].isZero());
        const double bound = std::sqrt(6.0 / static_cast<double>(a.layer_dims[l] + a.layer_dims[l + 1]));
        EXPECT_LE(a.weights[l].cwiseAbs().maxCoeff(), bound);
    }
    EXPECT_NE(a.weights[0], c.weights[0]);
    EXPECT_THROW(init_model({3}, 1), ConfigurationError);
}

TEST(Model, ZeroWeightsGiveUniformOutput) {
    auto m = init_model({3, 5, 4}, 1);
    for (auto& w : m.weights) w.setZero();
    const std::vector<double> x{1.0, -2.0, 3.0};
    const auto out = forward(m, x);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(out.probs[i], 0.25);
    EXPECT_THROW(forward(m, std::vector<double>{1.0}), DimensionMismatch);
}

TEST(Model, ZeroUpstreamGradientGivesZeroGradients) {
    const auto m = init_model({2, 6, 3}, 2);
    const std::vector<double> x{0.3, -0.7};
    const std::vector<double> g(3, 0.0);
    const auto grads = backward(m, x, g);
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
        EXPECT_TRUE(grads.weights[l].isZero());
        EXPECT_TRUE(grads.biases[l].isZero());
    }
}

TEST(Model, BatchBackwardIsSumOfSingles) {
    const auto m = init_model({3, 8, 2}, 4);
    Rng rng(1);
    Eigen::MatrixXd x(3, 5), g(2, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    const auto batch = backward_batch(m, forward_batch(m, x), g);
    ParamGrads sum = ParamGrads::zeros_like(m);
    for (Eigen::Index j = 0; j < 5; ++j) {
        const std::vector<double> xj(x.col(j).data(), x.col(j).data() + 3);
        const std::vector<double> gj(g.col(j).data(), g.col(j).data() + 2);
        sum += backward(m, xj, gj);
    }
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
        EXPECT_LT((batch.weights[l] - sum.weights[l]).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((batch.biases[l] - sum.biases[l]).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Sgd, PlainStepAndNoOp) {
    auto m = init_model({2, 3}, 3);
    const auto w0 = m.weights[0];
    ParamGrads g = ParamGrads::zeros_like(m);
    ParamGrads v = ParamGrads::zeros_like(m);
    sgd_step(m, g, v, 0.1, 0.9, 0.0);
    EXPECT_EQ(m.weights[0], w0);
    g.weights[0].setConstant(2.0);
    sgd_step(m, g, v, 0.1, 0.0, 0.0);
    EXPECT_LT((m.weights[0] - (w0.array() - 0.2).matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sgd, MomentumAccumulates) {
    auto m = init_model({2, 3}, 3);
    const auto w0 = m.weights[0];
    ParamGrads g = ParamGrads::zeros_like(m);
    g.weights[0].setConstant(1.0);
    ParamGrads v = ParamGrads::zeros_like(m);
    sgd_step(m, g, v, 0.01, 0.9, 0.0);
    sgd_step(m, g, v, 0.01, 0.9, 0.0);
    EXPECT_LT(((w0 - m.weights[0]).array() - 0.029).abs().maxCoeff(), 1e-15);
}

TEST(Sgd, DecayTouchesWeightsOnly) {
    auto m = init_model({2, 3}, 3);
    m.biases[0].setConstant(1.0);
    const auto w0 = m.weights[0];
    ParamGrads g = ParamGrads::zeros_like(m);
    ParamGrads v = ParamGrads::zeros_like(m);
    sgd_step(m, g, v, 0.1, 0.0, 0.5);
    EXPECT_LT((m.weights[0] - 0.95 * w0).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_TRUE((m.biases[0].array() == 1.0).all());
}

TEST(CosineLr, Endpoints) {
    EXPECT_DOUBLE_EQ(cosine_lr(1, 150, 0.01), 0.01);
    EXPECT_NEAR(cosine_lr(76, 150, 0.01), 0.005, 1e-15);
    EXPECT_GT(cosine_lr(150, 150, 0.01), 0.0);
    EXPECT_THROW(cosine_lr(0, 150, 0.01), ParameterDomainError);
}

namespace {

harness::NoisyDataset separable_blobs(std::size_t n, double eta, std::uint64_t seed) {
    harness::DatasetSpec spec;
    spec.k = 2;
    spec.n_train = n;
    spec.n_test = n;
    spec.center_radius = 4.0;
    spec.blob_spread = 0.5;
    spec.seed = seed;
    noise::LabelNoiseSpec ns;
    ns.eta = eta;
    ns.seed = seed + 1;
    return harness::make_noisy_dataset(harness::make_dataset(spec), ns, 2);
}

}  // namespace

TEST(Train, ZeroEpochsGiveEmptyHistory) {
    auto m = init_model({2, 8, 2}, 1);
    OptimizerConfig cfg;
    cfg.epochs = 0;
    EXPECT_TRUE(train::train(m, separable_blobs(100, 0.0, 1), LossSchedule::constant(loss::LossSpec::ce(2)), cfg).empty());
}

TEST(Train, SeparableDataIsLearned) {
    auto m = init_model({2, 16, 2}, 1);
    OptimizerConfig cfg;
    cfg.epochs = 50;
    cfg.seed = 5;
    const auto h = train::train(m, separable_blobs(400, 0.0, 3), LossSchedule::constant(loss::LossSpec::ce(2)), cfg);
    ASSERT_EQ(h.size(), 50u);
    EXPECT_GE(h.back().test_acc, 0.99);
    EXPECT_EQ(h.back().train_acc_noisy, 0.0);
    EXPECT_EQ(h.front().lr, 0.01);
}

TEST(Train, Deterministic) {
    OptimizerConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 8;
    const auto data = separable_blobs(300, 0.3, 4);
    auto a = init_model({2, 16, 2}, 2);
    auto b = init_model({2, 16, 2}, 2);
    EXPECT_EQ(train::train(a, data, LossSchedule::dal(0.6), cfg), train::train(b, data, LossSchedule::dal(0.6), cfg));
}

TEST(Train, ScheduleColumns) {
    OptimizerConfig cfg;
    cfg.epochs = 150;
    cfg.batch_size = 512;
    auto m = init_model({2, 4, 2}, 2);
    const auto h = train::train(m, separable_blobs(64, 0.0, 4), LossSchedule::dal(0.6), cfg);
    EXPECT_NEAR(h[74].q_used, 1.05, 1e-12);
    EXPECT_NEAR(h[74].lambda_used, 0.1, 1e-12);
    EXPECT_EQ(h[10].lambda_used, 0.0);
    m = init_model({2, 4, 2}, 2);
    const auto t = train::train(m, separable_blobs(64, 0.0, 4), LossSchedule::dynamic_tce(), cfg);
    EXPECT_EQ(t.front().q_used, 20.0);
    EXPECT_EQ(t.back().q_used, 1.0);
}

TEST(Train, DivergenceRaisesWithHistory) {
    OptimizerConfig cfg;
    cfg.epochs = 20;
    cfg.lr0 = 1e300;
    cfg.momentum = 0.0;
    cfg.lr_schedule = LrSchedule::Constant;
    auto m = init_model({2, 16, 2}, 1);
    const auto data = separable_blobs(200, 0.0, 1);
    try {
        train::train(m, data, LossSchedule::constant(loss::LossSpec::ce(2)), cfg);
        FAIL() << "expected TrainingFailure";
    } catch (const TrainingFailure& e) {
        EXPECT_EQ(e.history().size(), static_cast<std::size_t>(e.epoch() - 1));
    }
}

TEST(Train, RejectsMismatchedModel) {
    auto m = init_model({3, 4, 2}, 1);
    OptimizerConfig cfg;
    cfg.epochs = 1;
    EXPECT_THROW(train::train(m, separable_blobs(10, 0.0, 1), LossSchedule::dal(0.6), cfg), DimensionMismatch);
}
