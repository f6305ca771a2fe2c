#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dal/errors.hpp"
#include "dal/experiment.hpp"
#include "dal/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw dal::ConfigurationError("--values: cannot parse '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw dal::ConfigurationError("--values: empty list");
    return out;
}

int cmd_run(const std::string& config_path) {
    const auto config = dal::harness::ExperimentConfig::load(config_path);
    const auto artifact = dal::harness::run_experiment(config);
    std::cout << artifact.summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& param, const std::string& values) {
    const auto config = dal::harness::ExperimentConfig::load(config_path);
    const auto report = dal::harness::sweep(config, param, parse_values(values));
    std::cout << report.to_csv();
    std::cerr << "final_test_acc spread: " << dal::harness::format_number(report.final_spread()) << '\n';
    return kExitOk;
}

int cmd_curves(const std::string& losses, int resolution, std::size_t k) {
    std::vector<dal::loss::LossSpec> specs;
    for (const auto& item : split(losses, ','))
        specs.push_back(dal::harness::parse_loss_spec(item, k));
    if (specs.empty()) throw dal::ConfigurationError("--losses: empty list");
    std::cout << dal::harness::curves_csv(specs, resolution);
    return kExitOk;
}

int cmd_verify(const std::string& fault) {
    dal::harness::VerifyOptions opt;
    opt.inject_fault = fault;
    const auto records = dal::harness::run_verification(opt);
    std::cout << dal::harness::format_report(records);
    const bool ok = dal::harness::all_passed(records);
    std::cout << (ok ? "all checks passed" : "verification FAILED") << '\n';
    return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noise-robust loss laboratory: training runs, sweeps, loss curves and self-checks"};
    app.require_subcommand(1);

    std::string config_path, param, values, losses = "CE,MAE,GCE:q=0.7", fault;
    int resolution = 100;
    std::size_t k = 10;

    auto* run = app.add_subcommand("run", "Train one configuration and write metrics.csv and summary.json");
    run->add_option("--config", config_path, "Experiment JSON")->required();

    auto* sw = app.add_subcommand("sweep", "Run one experiment per parameter value");
    sw->add_option("--config", config_path, "Experiment JSON template")->required();
    sw->add_option("--param", param, "q_s, q_e, lambda_e, eta, lr0 or q")->required();
    sw->add_option("--values", values, "Comma separated values")->required();

    auto* cv = app.add_subcommand("curves", "Emit |dL/df_y| against f_y as CSV");
    cv->add_option("--losses", losses, "Loss specs, e.g. CE,GCE:q=0.7,TCE:t=2,JS:pi1=0.5");
    cv->add_option("--resolution", resolution, "Grid step 1/resolution, at least 10");
    cv->add_option("--k", k, "Class count");

    auto* vf = app.add_subcommand("verify", "Run gradient, schedule and theory checks");
    vf->add_option("--inject-fault", fault, "Deliberately break a component")
        ->check(CLI::IsMember({"closed_form", "schedule"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config_path);
        if (*sw) return cmd_sweep(config_path, param, values);
        if (*cv) return cmd_curves(losses, resolution, k);
        if (*vf) return cmd_verify(fault);
    } catch (const dal::train::TrainingFailure& e) {
        std::cerr << "training failed: " << e.what() << '\n';
        return kExitFailure;
    } catch (const dal::ConfigurationError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}
