#include "dal/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "dal/errors.hpp"
#include "dal/random.hpp"

namespace dal::harness {

namespace fs = std::filesystem;
using nlohmann::json;
using train::LossSchedule;

namespace {

// Seed streams for components whose seed is not given explicitly.
constexpr std::uint64_t kDatasetSeedStream = 101;
constexpr std::uint64_t kNoiseSeedStream = 102;
constexpr std::uint64_t kModelSeedStream = 103;
constexpr std::uint64_t kShuffleSeedStream = 104;
constexpr std::uint64_t kHoldoutSeedStream = 105;

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
    return obj.at(key).get<T>();
}

std::uint64_t seed_or_derived(const json& obj, std::uint64_t master, std::uint64_t stream) {
    if (obj.is_object() && obj.contains("seed")) return obj.at("seed").get<std::uint64_t>();
    return derive_seed(master, stream);
}

json loss_to_json(const LossSchedule& s) {
    switch (s.mode) {
        case LossSchedule::Mode::Dal:
            return {{"kind", "DAL"}, {"q_s", s.q_s}, {"q_e", s.q_e}, {"lambda_e", s.lambda_e}};
        case LossSchedule::Mode::DynamicTce: return {{"kind", "TCE"}, {"dynamic", true}};
        case LossSchedule::Mode::DynamicJs: return {{"kind", "JS"}, {"dynamic", true}};
        case LossSchedule::Mode::Static: break;
    }
    const auto& f = s.fixed;
    json j{{"kind", std::string(loss::to_string(f.kind))}};
    switch (f.kind) {
        case loss::LossKind::GCE: j["q"] = f.q; break;
        case loss::LossKind::TCE: j["t"] = f.t_terms; break;
        case loss::LossKind::JS: j["pi1"] = f.pi1; break;
        default: break;
    }
    return j;
}

LossSchedule loss_from_json(const json& j, std::size_t k) {
    if (j.is_null()) return LossSchedule::dal(0.6);
    const auto kind = loss::loss_kind_from_string(j.at("kind").get<std::string>());
    const bool dynamic = get_or(j, "dynamic", false);
    switch (kind) {
        case loss::LossKind::DAL:
            return LossSchedule::dal(get_or(j, "q_s", 0.6), get_or(j, "q_e", 1.5), get_or(j, "lambda_e", 1.0));
        case loss::LossKind::TCE:
            if (dynamic) return LossSchedule::dynamic_tce();
            return LossSchedule::constant(loss::LossSpec::tce(k, get_or(j, "t", 2)));
        case loss::LossKind::JS:
            if (dynamic) return LossSchedule::dynamic_js();
            return LossSchedule::constant(loss::LossSpec::js(k, get_or(j, "pi1", 0.5)));
        case loss::LossKind::GCE: return LossSchedule::constant(loss::LossSpec::gce(k, get_or(j, "q", 0.7)));
        case loss::LossKind::CE: return LossSchedule::constant(loss::LossSpec::ce(k));
        case loss::LossKind::MAE: return LossSchedule::constant(loss::LossSpec::mae(k));
        case loss::LossKind::BS: return LossSchedule::constant(loss::LossSpec::bs(k));
    }
    return LossSchedule::dal(0.6);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigurationError("experiment config must be a JSON object");
    try {
        ExperimentConfig c;
        c.seed = get_or<std::uint64_t>(doc, "seed", 0);
        c.output_dir = get_or<std::string>(doc, "output_dir", "runs/default");
        c.holdout_fraction = get_or(doc, "holdout_fraction", 0.0);

        const json ds = doc.value("dataset", json::object());
        c.dataset.kind = dataset_kind_from_string(get_or<std::string>(ds, "kind", "blobs"));
        c.dataset.n_train = get_or<std::size_t>(ds, "n_train", 2000);
        c.dataset.n_test = get_or<std::size_t>(ds, "n_test", 2000);
        const bool moons = c.dataset.kind == DatasetKind::Moons;
        c.dataset.k = get_or<std::size_t>(ds, "k", moons ? 2 : 4);
        c.dataset.d = get_or<std::size_t>(ds, "d", 2);
        c.dataset.blob_spread = get_or(ds, "blob_spread", c.dataset.blob_spread);
        c.dataset.center_radius = get_or(ds, "center_radius", c.dataset.center_radius);
        c.dataset.clusters_per_class = get_or<std::size_t>(ds, "clusters_per_class", 1);
        c.dataset.moon_noise = get_or(ds, "moon_noise", c.dataset.moon_noise);
        c.dataset.spiral_turns = get_or(ds, "spiral_turns", c.dataset.spiral_turns);
        c.dataset.spiral_noise = get_or(ds, "spiral_noise", c.dataset.spiral_noise);
        c.dataset.seed = seed_or_derived(ds, c.seed, kDatasetSeedStream);

        const json nz = doc.value("noise", json::object());
        c.noise.kind = noise::noise_kind_from_string(get_or<std::string>(nz, "kind", "symmetric"));
        c.noise.eta = get_or(nz, "eta", 0.0);
        if (nz.contains("class_map")) c.noise.class_map = nz.at("class_map").get<noise::ClassMap>();
        if (nz.contains("group_size")) c.noise_group_size = nz.at("group_size").get<std::size_t>();
        c.noise.seed = seed_or_derived(nz, c.seed, kNoiseSeedStream);

        c.loss = loss_from_json(doc.value("loss", json()), c.dataset.k);

        const json model = doc.value("model", json::object());
        c.hidden = get_or<std::vector<std::size_t>>(model, "hidden", {64, 64});
        c.model_seed = seed_or_derived(model, c.seed, kModelSeedStream);

        const json opt = doc.value("optimizer", json::object());
        c.optimizer.lr0 = get_or(opt, "lr0", 0.01);
        c.optimizer.momentum = get_or(opt, "momentum", 0.9);
        c.optimizer.weight_decay = get_or(opt, "weight_decay", 1e-4);
        c.optimizer.batch_size = get_or<std::size_t>(opt, "batch_size", 128);
        c.optimizer.epochs = get_or(opt, "epochs", 150);
        const std::string sched = get_or<std::string>(opt, "lr_schedule", "cosine");
        if (sched == "cosine") c.optimizer.lr_schedule = train::LrSchedule::Cosine;
        else if (sched == "constant") c.optimizer.lr_schedule = train::LrSchedule::Constant;
        else throw ConfigurationError("unknown lr_schedule '" + sched + "'");
        c.optimizer.seed = seed_or_derived(opt, c.seed, kShuffleSeedStream);

        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed experiment config: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigurationError("cannot parse " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

json ExperimentConfig::to_json() const {
    json nz{{"kind", std::string(noise::to_string(noise.kind))}, {"eta", noise.eta}, {"seed", noise.seed}};
    if (noise.class_map) nz["class_map"] = *noise.class_map;
    if (noise_group_size) nz["group_size"] = *noise_group_size;
    return {
        {"seed", seed},
        {"output_dir", output_dir},
        {"holdout_fraction", holdout_fraction},
        {"dataset",
         {{"kind", std::string(harness::to_string(dataset.kind))},
          {"n_train", dataset.n_train},
          {"n_test", dataset.n_test},
          {"k", dataset.k},
          {"d", dataset.d},
          {"blob_spread", dataset.blob_spread},
          {"center_radius", dataset.center_radius},
          {"clusters_per_class", dataset.clusters_per_class},
          {"moon_noise", dataset.moon_noise},
          {"spiral_turns", dataset.spiral_turns},
          {"spiral_noise", dataset.spiral_noise},
          {"seed", dataset.seed}}},
        {"noise", nz},
        {"loss", loss_to_json(loss)},
        {"model", {{"hidden", hidden}, {"seed", model_seed}}},
        {"optimizer",
         {{"lr0", optimizer.lr0},
          {"momentum", optimizer.momentum},
          {"weight_decay", optimizer.weight_decay},
          {"batch_size", optimizer.batch_size},
          {"epochs", optimizer.epochs},
          {"lr_schedule", optimizer.lr_schedule == train::LrSchedule::Cosine ? "cosine" : "constant"},
          {"seed", optimizer.seed}}},
    };
}

std::vector<std::size_t> ExperimentConfig::layer_dims() const {
    std::vector<std::size_t> dims{dataset.d};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(dataset.k);
    return dims;
}

void ExperimentConfig::validate() const {
    dataset.validate();
    if (!(noise.eta >= 0.0 && noise.eta <= 1.0)) throw ParameterDomainError("noise: eta must lie in [0,1]");
    if (noise.kind == noise::NoiseKind::Asymmetric) {
        if (!noise.class_map && !noise_group_size)
            throw ConfigurationError("asymmetric noise needs class_map or group_size");
        if (noise.class_map && noise.class_map->size() != dataset.k)
            throw ConfigurationError("class_map must define a target for every class");
        if (!noise.class_map && *noise_group_size > 0 && dataset.k % *noise_group_size != 0)
            throw ConfigurationError("group_size must divide k");
    }
    loss.validate(dataset.k);
    optimizer.validate();
    for (std::size_t h : hidden)
        if (h == 0) throw ConfigurationError("hidden layer sizes must be positive");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        throw ConfigurationError("holdout_fraction must lie in [0,1)");
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string metrics_csv(const std::vector<train::EpochMetrics>& metrics) {
    std::string out = kMetricsHeader;
    out += '\n';
    for (const auto& m : metrics) {
        out += std::to_string(m.epoch);
        for (double v : {m.q_used, m.lambda_used, m.lr, m.mean_train_loss, m.train_acc_clean, m.train_acc_noisy,
                         m.test_acc}) {
            out += ',';
            out += format_number(v);
        }
        out += '\n';
    }
    return out;
}

fs::path resolve_output_dir(const std::string& output_dir) {
    fs::path p(output_dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / p;
    }
    return p;
}

void write_atomic(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create " + path.parent_path().string() + ": " + ec.message());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

struct PreparedData {
    NoisyDataset train;
    Eigen::MatrixXd holdout_features;
    std::vector<std::size_t> holdout_labels;  // observed (noisy) labels
};

PreparedData prepare(const ExperimentConfig& c) {
    noise::LabelNoiseSpec ns = c.noise;
    if (ns.kind == noise::NoiseKind::Asymmetric && !ns.class_map)
        ns.class_map = noise::make_cyclic_group_map(c.dataset.k, *c.noise_group_size);
    NoisyDataset full = make_noisy_dataset(make_dataset(c.dataset), ns, c.dataset.k);
    PreparedData out;
    const auto n = full.size();
    const auto n_hold = static_cast<std::size_t>(c.holdout_fraction * static_cast<double>(n));
    if (n_hold == 0) {
        out.train = std::move(full);
        return out;
    }
    if (n_hold >= n) throw ConfigurationError("holdout leaves no training rows");
    Rng rng(derive_seed(c.seed, kHoldoutSeedStream));
    auto perm = rng.permutation(n);
    std::vector<std::size_t> hold(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::vector<std::size_t> keep(perm.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.end());
    std::sort(hold.begin(), hold.end());
    std::sort(keep.begin(), keep.end());
    const auto d = full.features.cols();
    out.train.k = full.k;
    out.train.test_features = full.test_features;
    out.train.test_labels = full.test_labels;
    out.train.features.resize(static_cast<Eigen::Index>(keep.size()), d);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.train.features.row(static_cast<Eigen::Index>(i)) = full.features.row(static_cast<Eigen::Index>(keep[i]));
        out.train.records.push_back(full.records[keep[i]]);
    }
    out.holdout_features.resize(static_cast<Eigen::Index>(hold.size()), d);
    for (std::size_t i = 0; i < hold.size(); ++i) {
        out.holdout_features.row(static_cast<Eigen::Index>(i)) = full.features.row(static_cast<Eigen::Index>(hold[i]));
        out.holdout_labels.push_back(full.records[hold[i]].observed_label);
    }
    return out;
}

json build_summary(const ExperimentConfig& c, const std::vector<train::EpochMetrics>& metrics,
                   const PreparedData& data, double seconds, const std::string& status) {
    json s{{"status", status}, {"epochs_completed", metrics.size()}, {"wall_time_seconds", seconds}};
    s["realized_noise_rate"] = noise::flip_fraction(data.train.records);
    if (!metrics.empty()) {
        const auto best = std::max_element(metrics.begin(), metrics.end(),
                                           [](const auto& a, const auto& b) { return a.test_acc < b.test_acc; });
        s["final_test_acc"] = metrics.back().test_acc;
        s["best_test_acc"] = best->test_acc;
        s["best_epoch"] = best->epoch;
        s["final_train_acc_clean"] = metrics.back().train_acc_clean;
        s["final_train_acc_noisy"] = metrics.back().train_acc_noisy;
    }
    s["config"] = c.to_json();
    return s;
}

}  // namespace

RunArtifact run_experiment(const ExperimentConfig& config, bool write_files) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const PreparedData data = prepare(config);
    train::MLPModel model = train::init_model(config.layer_dims(), config.model_seed);

    RunArtifact art;
    const fs::path dir = resolve_output_dir(config.output_dir);
    art.metrics_csv = dir / "metrics.csv";
    art.summary_json = dir / "summary.json";
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    try {
        art.metrics = train::train(model, data.train, config.loss, config.optimizer);
    } catch (const train::TrainingFailure& e) {
        if (write_files) {
            json summary = build_summary(config, e.history(), data, elapsed(), "failed");
            summary["error"] = e.what();
            summary["failed_epoch"] = e.epoch();
            write_atomic(art.metrics_csv, metrics_csv(e.history()));
            write_atomic(art.summary_json, summary.dump(2) + "\n");
        }
        throw;
    }

    art.summary = build_summary(config, art.metrics, data, elapsed(), "ok");
    if (data.holdout_labels.size() > 0)
        art.summary["val_acc"] = train::accuracy(model, data.holdout_features, data.holdout_labels);
    if (write_files) {
        write_atomic(art.metrics_csv, metrics_csv(art.metrics));
        write_atomic(art.summary_json, art.summary.dump(2) + "\n");
    }
    return art;
}

// ---------------------------------------------------------------------------

ExperimentConfig with_parameter(const ExperimentConfig& base, const std::string& param, double value) {
    ExperimentConfig c = base;
    const bool dal = c.loss.mode == LossSchedule::Mode::Dal;
    if (param == "q_s" || param == "q_e" || param == "lambda_e") {
        if (!dal) throw ConfigurationError("sweep parameter '" + param + "' requires a DAL loss");
        (param == "q_s" ? c.loss.q_s : param == "q_e" ? c.loss.q_e : c.loss.lambda_e) = value;
    } else if (param == "eta") {
        c.noise.eta = value;
    } else if (param == "lr0") {
        c.optimizer.lr0 = value;
    } else if (param == "q") {
        if (c.loss.mode != LossSchedule::Mode::Static || c.loss.fixed.kind != loss::LossKind::GCE)
            throw ConfigurationError("sweep parameter 'q' requires a static GCE loss");
        c.loss.fixed.q = value;
    } else {
        throw ConfigurationError("unknown sweep parameter '" + param + "'");
    }
    c.output_dir = (fs::path(base.output_dir) / (param + "=" + format_number(value))).string();
    c.validate();
    return c;
}

double SweepReport::final_spread() const {
    if (rows.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.final_test_acc < b.final_test_acc;
    });
    return hi->final_test_acc - lo->final_test_acc;
}

std::string SweepReport::to_csv() const {
    std::string out = "value,final_test_acc,best_test_acc\n";
    for (const auto& r : rows)
        out += format_number(r.value) + "," + format_number(r.final_test_acc) + "," + format_number(r.best_test_acc) +
               "\n";
    return out;
}

SweepReport sweep(const ExperimentConfig& base, const std::string& param, const std::vector<double>& values,
                  bool write_files, unsigned max_parallel) {
    if (values.empty()) throw ConfigurationError("sweep: empty value list");
    std::vector<ExperimentConfig> configs;
    for (double v : values) configs.push_back(with_parameter(base, param, v));

    unsigned workers = max_parallel ? max_parallel : std::max(1u, std::thread::hardware_concurrency());
    std::vector<RunArtifact> results(configs.size());
    for (std::size_t start = 0; start < configs.size(); start += workers) {
        std::vector<std::future<RunArtifact>> futures;
        const std::size_t end = std::min(configs.size(), start + workers);
        for (std::size_t i = start; i < end; ++i)
            futures.push_back(std::async(std::launch::async, [&, i] { return run_experiment(configs[i], write_files); }));
        for (std::size_t i = start; i < end; ++i) results[i] = futures[i - start].get();
    }

    SweepReport report{param, {}};
    for (std::size_t i = 0; i < values.size(); ++i)
        report.rows.push_back({values[i], results[i].summary.at("final_test_acc").get<double>(),
                               results[i].summary.at("best_test_acc").get<double>()});
    if (write_files) write_atomic(resolve_output_dir(base.output_dir) / "sweep.csv", report.to_csv());
    return report;
}

// ---------------------------------------------------------------------------

loss::LossSpec parse_loss_spec(const std::string& text, std::size_t k) {
    std::stringstream ss(text);
    std::string part;
    std::getline(ss, part, ':');
    loss::LossSpec spec;
    spec.kind = loss::loss_kind_from_string(part);
    spec.k = k;
    if (spec.kind == loss::LossKind::DAL) spec.q = 1.5;
    while (std::getline(ss, part, ':')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw ConfigurationError("loss parameter '" + part + "' lacks '='");
        const std::string key = part.substr(0, eq);
        const std::string val = part.substr(eq + 1);
        double x;
        const auto res = std::from_chars(val.data(), val.data() + val.size(), x);
        if (res.ec != std::errc{} || res.ptr != val.data() + val.size())
            throw ConfigurationError("bad number '" + val + "' in loss spec '" + text + "'");
        if (key == "q") spec.q = x;
        else if (key == "t") spec.t_terms = static_cast<int>(x);
        else if (key == "pi1") spec.pi1 = x;
        else if (key == "lambda") spec.lambda = x;
        else throw ConfigurationError("unknown loss parameter '" + key + "'");
    }
    spec.validate();
    return spec;
}

std::string curves_csv(const std::vector<loss::LossSpec>& specs, int resolution) {
    if (resolution < 10) throw ConfigurationError("curves: resolution must be >= 10");
    std::vector<double> grid;
    for (int i = 1; i < resolution; ++i) grid.push_back(static_cast<double>(i) / resolution);
    std::vector<std::vector<double>> cols;
    std::string out = "f_y";
    for (const auto& s : specs) {
        cols.push_back(loss::weight_curve(s, grid));
        out += "," + s.label();
    }
    out += '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out += format_number(grid[i]);
        for (const auto& c : cols) out += "," + format_number(c[i]);
        out += '\n';
    }
    return out;
}

}  // namespace dal::harness
