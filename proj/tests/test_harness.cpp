#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dal/dataset.hpp"
#include "dal/errors.hpp"
#include "dal/experiment.hpp"
#include "dal/mlp.hpp"

using namespace dal;
using namespace dal::harness;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dal_lab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

ExperimentConfig small_config(const std::string& out, json loss = {{"kind", "DAL"}, {"q_s", 0.6}}) {
    return ExperimentConfig::from_json({{"seed", 3},
                                        {"output_dir", out},
                                        {"dataset", {{"kind", "blobs"}, {"n_train", 300}, {"n_test", 200}, {"k", 3}}},
                                        {"noise", {{"kind", "symmetric"}, {"eta", 0.3}}},
                                        {"loss", loss},
                                        {"model", {{"hidden", {16}}}},
                                        {"optimizer", {{"epochs", 12}, {"batch_size", 32}}}});
}

}  // namespace

TEST(Dataset, BlobsAreBalancedAndDeterministic) {
    DatasetSpec spec;
    spec.n_train = 2002;
    spec.seed = 9;
    const auto a = make_dataset(spec);
    const auto b = make_dataset(spec);
    EXPECT_EQ(a.train.features, b.train.features);
    EXPECT_EQ(a.test.labels, b.test.labels);
    std::vector<int> counts(4, 0);
    for (auto y : a.train.labels) ++counts[y];
    for (int c : counts) EXPECT_LE(std::abs(c - 2002 / 4), 1);
    EXPECT_NE(a.train.features.row(0), a.test.features.row(0));
}

TEST(Dataset, MoonsExactlyBalanced) {
    DatasetSpec spec;
    spec.kind = DatasetKind::Moons;
    spec.k = 2;
    spec.n_train = 1000;
    const auto d = make_dataset(spec);
    std::size_t ones = 0;
    for (auto y : d.train.labels) ones += y;
    EXPECT_EQ(ones, 500u);
    spec.k = 3;
    EXPECT_THROW(make_dataset(spec), ConfigurationError);
}

TEST(Dataset, SpiralsNeedTwoDimensions) {
    DatasetSpec spec;
    spec.kind = DatasetKind::Spirals;
    spec.k = 3;
    spec.n_train = 300;
    EXPECT_EQ(make_dataset(spec).train.features.cols(), 2);
    spec.d = 3;
    EXPECT_THROW(make_dataset(spec), ConfigurationError);
}

TEST(Dataset, LinearProbeSeparatesBlobs) {
    DatasetSpec spec;
    spec.seed = 4;
    noise::LabelNoiseSpec clean;
    const auto data = make_noisy_dataset(make_dataset(spec), clean, spec.k);
    auto model = train::init_model({2, 4}, 1);
    train::OptimizerConfig cfg;
    cfg.epochs = 1;
    cfg.lr0 = 0.1;
    cfg.batch_size = 32;
    const auto h = train::train(model, data, train::LossSchedule::constant(loss::LossSpec::ce(4)), cfg);
    EXPECT_GT(h.back().test_acc, 0.95);
}

TEST(Dataset, TestLabelsNeverCorrupted) {
    DatasetSpec spec;
    noise::LabelNoiseSpec ns;
    ns.eta = 1.0;
    const auto clean = make_dataset(spec);
    const auto noisy = make_noisy_dataset(clean, ns, spec.k);
    EXPECT_EQ(noisy.test_labels, clean.test.labels);
    EXPECT_GT(noise::flip_fraction(noisy.records), 0.5);
}

TEST(Config, DefaultsAndMaterialization) {
    const auto c = ExperimentConfig::from_json(json::object());
    EXPECT_EQ(c.dataset.n_train, 2000u);
    EXPECT_EQ(c.dataset.k, 4u);
    EXPECT_EQ(c.layer_dims(), (std::vector<std::size_t>{2, 64, 64, 4}));
    EXPECT_EQ(c.optimizer.epochs, 150);
    EXPECT_EQ(c.loss.q_e, 1.5);
    EXPECT_EQ(c.loss.lambda_e, 1.0);
    const auto round = ExperimentConfig::from_json(c.to_json());
    EXPECT_EQ(round.to_json(), c.to_json());
}

TEST(Config, Errors) {
    EXPECT_THROW(ExperimentConfig::from_json(json::array()), ConfigurationError);
    EXPECT_THROW(ExperimentConfig::from_json({{"loss", {{"kind", "hinge"}}}}), ConfigurationError);
    EXPECT_THROW(ExperimentConfig::from_json({{"dataset", {{"n_train", "many"}}}}), ConfigurationError);
    EXPECT_THROW(ExperimentConfig::from_json({{"noise", {{"kind", "asymmetric"}, {"eta", 0.2}}}}), ConfigurationError);
    EXPECT_THROW(ExperimentConfig::from_json({{"loss", {{"kind", "GCE"}, {"q", -1.0}}}}), ParameterDomainError);
    EXPECT_THROW(ExperimentConfig::load("/nonexistent/config.json"), ConfigurationError);
}

TEST(Run, WritesSchemaAndSummary) {
    const auto dir = scratch("run");
    const auto art = run_experiment(small_config(dir.string()));
    const std::string csv = slurp(dir / "metrics.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kMetricsHeader);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    const json summary = json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary.at("status"), "ok");
    EXPECT_EQ(summary.at("final_test_acc").get<double>(), art.metrics.back().test_acc);
    EXPECT_TRUE(summary.contains("best_test_acc"));
    EXPECT_TRUE(summary.contains("wall_time_seconds"));
    EXPECT_EQ(summary.at("config").at("optimizer").at("epochs"), 12);
    EXPECT_FALSE(fs::exists(dir / "metrics.csv.tmp"));
}

TEST(Run, ByteIdenticalReruns) {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    run_experiment(small_config(a.string()));
    run_experiment(small_config(b.string()));
    EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

TEST(Run, StaticDegeneration) {
    const auto a = scratch("degen_dal"), b = scratch("degen_gce");
    run_experiment(small_config(a.string(), {{"kind", "DAL"}, {"q_s", 0.7}, {"q_e", 0.7}, {"lambda_e", 0.0}}));
    run_experiment(small_config(b.string(), {{"kind", "GCE"}, {"q", 0.7}}));
    EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
}

TEST(Run, HoldoutReportsValidationAccuracy) {
    auto c = small_config("unused");
    c.holdout_fraction = 0.1;
    const auto art = run_experiment(c, false);
    EXPECT_TRUE(art.summary.contains("val_acc"));
}

TEST(Run, OutputRootOverride) {
    const auto root = scratch("root");
    ::setenv(kOutputRootEnv, root.c_str(), 1);
    EXPECT_EQ(resolve_output_dir("runs/x"), root / "runs/x");
    EXPECT_EQ(resolve_output_dir("/abs/x"), fs::path("/abs/x"));
    ::unsetenv(kOutputRootEnv);
    EXPECT_EQ(resolve_output_dir("runs/x"), fs::path("runs/x"));
}

TEST(Run, DivergenceFlushesPartialMetrics) {
    const auto dir = scratch("diverge");
    auto c = small_config(dir.string(), {{"kind", "CE"}});
    c.optimizer.lr0 = 1e300;
    c.optimizer.momentum = 0.0;
    EXPECT_THROW(run_experiment(c), train::TrainingFailure);
    const json summary = json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary.at("status"), "failed");
    EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
}

TEST(Sweep, SingleValueEqualsRun) {
    const auto dir = scratch("sweep1");
    const auto base = small_config(dir.string());
    const auto report = sweep(base, "q_s", {0.6});
    const auto direct = run_experiment(with_parameter(base, "q_s", 0.6), false);
    ASSERT_EQ(report.rows.size(), 1u);
    EXPECT_EQ(report.rows[0].final_test_acc, direct.metrics.back().test_acc);
    EXPECT_TRUE(fs::exists(dir / "q_s=0.6" / "metrics.csv"));
    EXPECT_EQ(slurp(dir / "sweep.csv").substr(0, 34), "value,final_test_acc,best_test_acc");
}

TEST(Sweep, ParallelMatchesSerial) {
    const auto base = small_config("unused");
    const auto par = sweep(base, "eta", {0.0, 0.2, 0.4}, false, 3);
    const auto ser = sweep(base, "eta", {0.0, 0.2, 0.4}, false, 1);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(par.rows[i].final_test_acc, ser.rows[i].final_test_acc);
}

TEST(Sweep, Errors) {
    const auto base = small_config("unused");
    EXPECT_THROW(sweep(base, "q_s", {}), ConfigurationError);
    EXPECT_THROW(with_parameter(base, "momentum", 0.5), ConfigurationError);
    EXPECT_THROW(with_parameter(base, "q", 0.5), ConfigurationError);
}

TEST(Curves, Csv) {
    const std::string csv = curves_csv({loss::LossSpec::ce(10), loss::LossSpec::gce(10, 1.0)}, 10);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "f_y,CE,GCE(q=1)");
    std::getline(in, line);
    EXPECT_EQ(line, "0.1,10,1");
    int rows = 1;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(line.substr(line.rfind(',')), ",1");
    }
    EXPECT_EQ(rows, 9);
    EXPECT_THROW(curves_csv({loss::LossSpec::ce(2)}, 9), ConfigurationError);
}

TEST(Curves, ParseLossSpec) {
    EXPECT_EQ(parse_loss_spec("GCE:q=0.3", 4), loss::LossSpec::gce(4, 0.3));
    EXPECT_EQ(parse_loss_spec("TCE:t=6", 4), loss::LossSpec::tce(4, 6));
    EXPECT_EQ(parse_loss_spec("JS:pi1=0.9", 4), loss::LossSpec::js(4, 0.9));
    EXPECT_EQ(parse_loss_spec("DAL:q=1.2:lambda=0.5", 4), loss::LossSpec::dal(4, 1.2, 0.5));
    EXPECT_THROW(parse_loss_spec("GCE:q=abc", 4), ConfigurationError);
    EXPECT_THROW(parse_loss_spec("GCE:r=1", 4), ConfigurationError);
}

TEST(Numbers, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(10.0), "10");
    EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}
