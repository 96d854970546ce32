#include "tsadv/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tsadv/checkpoint.hpp"
#include "tsadv/io_csv.hpp"
#include "tsadv/rul.hpp"

namespace tsadv {

using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("malformed JSON in '" + path + "': " + e.what());
    }
    return j;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

WindowMode window_mode_from_string(const std::string& s) {
    if (s == "next-step") return WindowMode::next_step;
    if (s == "sequence") return WindowMode::sequence;
    throw Error("unknown window mode '" + s + "' (expected next-step or sequence)");
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["version"] = c.version;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["dataset"] = {{"kind", c.dataset.kind},
                    {"path", c.dataset.path},
                    {"model_filter", c.dataset.model_filter},
                    {"seasonal",
                     {{"n_samples", c.dataset.seasonal.n_samples},
                      {"n_features", c.dataset.seasonal.n_features},
                      {"period", c.dataset.seasonal.period},
                      {"amplitude", c.dataset.seasonal.amplitude},
                      {"noise_sigma", c.dataset.seasonal.noise_sigma}}},
                    {"degradation",
                     {{"n_serials", c.dataset.degradation.n_serials},
                      {"min_life_days", c.dataset.degradation.min_life_days},
                      {"max_life_days", c.dataset.degradation.max_life_days},
                      {"n_features", c.dataset.degradation.n_features},
                      {"noise_sigma", c.dataset.degradation.noise_sigma},
                      {"drift_scale", c.dataset.degradation.drift_scale}}}};
    j["preprocess"] = {{"resample_daily", c.preprocess.resample_daily},
                       {"normalize_lo", c.preprocess.normalize_lo},
                       {"normalize_hi", c.preprocess.normalize_hi},
                       {"target_scale", c.preprocess.target_scale},
                       {"select_top_m", c.preprocess.select_top_m},
                       {"min_coverage", c.preprocess.min_coverage}};
    j["windowing"] = {{"lookback", c.windowing.lookback},
                      {"mode", to_string(c.windowing.mode)},
                      {"horizon", c.windowing.horizon}};
    j["model"] = {{"kind", to_string(c.model.kind)},
                  {"hidden", c.model.hidden},
                  {"dense", c.model.dense},
                  {"dropout", c.model.dropout}};
    j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
    j["cv_folds"] = c.cv_folds;
    j["train"] = {{"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"learning_rate", c.train.learning_rate}};
    if (c.train.clip_threshold)
        j["train"]["clip"] = *c.train.clip_threshold;
    else
        j["train"]["clip"] = nullptr;
    if (c.train.patience)
        j["train"]["patience"] = *c.train.patience;
    else
        j["train"]["patience"] = nullptr;
    j["attack"] = {{"grid", c.attack.grid}, {"alpha", c.attack.alpha}, {"clamp", c.attack.clamp}};
    json daat = json::array();
    for (auto k : c.defense.daat_kinds) daat.push_back(to_string(k));
    json lpat = json::array();
    for (const auto& e : c.defense.lpat) {
        json entry = {{"kind", to_string(e.kind)}, {"alpha", e.alpha}};
        if (e.schedule.kind == LpatSchedule::Kind::deterministic) {
            entry["schedule"] = "deterministic";
            entry["epsilon"] = e.schedule.fixed_epsilon;
        } else {
            entry["schedule"] = "stochastic";
            entry["epsilon_lo"] = e.schedule.epsilon_lo;
            entry["epsilon_hi"] = e.schedule.epsilon_hi;
        }
        lpat.push_back(entry);
    }
    j["defense"] = {{"daat_kinds", daat}, {"lpat", lpat}};
    j["sweep_lookbacks"] = c.sweep_lookbacks;
    return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed config JSON: ") + e.what());
    }

    ExperimentConfig c;
    c.version = j.value("version", 1);
    if (c.version != 1)
        throw Error("config version " + std::to_string(c.version) + " not supported (expected 1)");
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = j.value("output_dir", std::string("runs/out"));

    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        c.dataset.kind = d.value("kind", c.dataset.kind);
        c.dataset.path = d.value("path", std::string());
        c.dataset.model_filter = d.value("model_filter", std::string());
        if (d.contains("seasonal")) {
            const auto& s = d["seasonal"];
            c.dataset.seasonal.n_samples = s.value("n_samples", c.dataset.seasonal.n_samples);
            c.dataset.seasonal.n_features = s.value("n_features", c.dataset.seasonal.n_features);
            c.dataset.seasonal.period = s.value("period", c.dataset.seasonal.period);
            c.dataset.seasonal.amplitude = s.value("amplitude", c.dataset.seasonal.amplitude);
            c.dataset.seasonal.noise_sigma = s.value("noise_sigma", c.dataset.seasonal.noise_sigma);
        }
        if (d.contains("degradation")) {
            const auto& g = d["degradation"];
            auto& p = c.dataset.degradation;
            p.n_serials = g.value("n_serials", p.n_serials);
            p.min_life_days = g.value("min_life_days", p.min_life_days);
            p.max_life_days = g.value("max_life_days", p.max_life_days);
            p.n_features = g.value("n_features", p.n_features);
            p.noise_sigma = g.value("noise_sigma", p.noise_sigma);
            p.drift_scale = g.value("drift_scale", p.drift_scale);
        }
    }
    if (j.contains("preprocess")) {
        const auto& p = j["preprocess"];
        c.preprocess.resample_daily = p.value("resample_daily", c.preprocess.resample_daily);
        c.preprocess.normalize_lo = p.value("normalize_lo", c.preprocess.normalize_lo);
        c.preprocess.normalize_hi = p.value("normalize_hi", c.preprocess.normalize_hi);
        c.preprocess.target_scale = p.value("target_scale", c.preprocess.target_scale);
        c.preprocess.select_top_m = p.value("select_top_m", c.preprocess.select_top_m);
        c.preprocess.min_coverage = p.value("min_coverage", c.preprocess.min_coverage);
    }
    if (j.contains("windowing")) {
        const auto& w = j["windowing"];
        c.windowing.lookback = w.value("lookback", c.windowing.lookback);
        c.windowing.mode = window_mode_from_string(w.value("mode", std::string("next-step")));
        c.windowing.horizon = w.value("horizon", c.windowing.horizon);
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        c.model.kind = model_kind_from_string(m.value("kind", std::string("vanilla")));
        c.model.hidden = m.value("hidden", c.model.hidden);
        c.model.dense = m.value("dense", c.model.dense);
        c.model.dropout = m.value("dropout", c.model.dropout);
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        c.split.train = s.value("train", c.split.train);
        c.split.val = s.value("val", c.split.val);
        c.split.test = s.value("test", c.split.test);
    }
    c.cv_folds = j.value("cv_folds", std::size_t{0});
    if (j.contains("train")) {
        const auto& t = j["train"];
        c.train.epochs = t.value("epochs", c.train.epochs);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        if (t.contains("clip") && !t["clip"].is_null())
            c.train.clip_threshold = t["clip"].get<double>();
        if (t.contains("patience") && !t["patience"].is_null())
            c.train.patience = t["patience"].get<std::size_t>();
    }
    c.train.seed = c.seed;  // one seed drives every stream
    if (j.contains("attack")) {
        const auto& a = j["attack"];
        c.attack.grid = a.value("grid", std::vector<double>{});
        c.attack.alpha = a.value("alpha", c.attack.alpha);
        c.attack.clamp = a.value("clamp", c.attack.clamp);
    }
    if (j.contains("defense")) {
        const auto& d = j["defense"];
        for (const auto& k : d.value("daat_kinds", std::vector<std::string>{}))
            c.defense.daat_kinds.push_back(attack_kind_from_string(k));
        if (d.contains("lpat")) {
            for (const auto& e : d["lpat"]) {
                LpatEntry entry;
                entry.kind = attack_kind_from_string(e.value("kind", std::string("fgsm")));
                const std::string sched = e.value("schedule", std::string("deterministic"));
                if (sched == "deterministic") {
                    entry.schedule = LpatSchedule::deterministic(e.value("epsilon", 0.0));
                } else if (sched == "stochastic") {
                    entry.schedule = LpatSchedule::stochastic(e.value("epsilon_lo", 0.0),
                                                              e.value("epsilon_hi", 0.0));
                } else {
                    throw Error("unknown LPAT schedule '" + sched + "'");
                }
                entry.alpha = e.value("alpha", entry.alpha);
                c.defense.lpat.push_back(entry);
            }
        }
    }
    c.sweep_lookbacks = j.value("sweep_lookbacks", std::vector<std::size_t>{});

    c.canonical_json = config_to_json(c).dump();
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

void ExperimentConfig::validate() const {
    const std::string& kind = dataset.kind;
    const bool csv_kind =
        kind == "electricity-csv" || kind == "hdd-csv" || kind == "hdd-csv-dir";
    const bool synth_kind = kind == "synthetic-seasonal" || kind == "synthetic-degradation";
    if (!csv_kind && !synth_kind) throw Error("config: unknown dataset kind '" + kind + "'");
    if (csv_kind) {
        if (dataset.path.empty()) throw Error("config: dataset kind '" + kind + "' needs a path");
        if (!std::filesystem::exists(dataset.path))
            throw Error("config: dataset path '" + dataset.path + "' does not exist");
    } else if (!dataset.path.empty()) {
        throw Error("config: dataset kind '" + kind + "' must not carry a path");
    }

    const bool sequence_data = kind == "hdd-csv" || kind == "hdd-csv-dir" ||
                               kind == "synthetic-degradation";
    if (sequence_data != (windowing.mode == WindowMode::sequence))
        throw Error("config: dataset kind '" + kind + "' requires window mode " +
                    std::string(sequence_data ? "sequence" : "next-step"));
    if ((model.kind == ModelKind::encoder_decoder_lstm) !=
        (windowing.mode == WindowMode::sequence))
        throw Error("config: encoder-decoder models pair with sequence windows, vanilla with "
                    "next-step");
    if (windowing.lookback == 0) throw Error("config: lookback must be positive");
    if (windowing.mode == WindowMode::sequence && windowing.lookback != windowing.horizon)
        throw Error("config: sequence mode uses lookback == horizon (got " +
                    std::to_string(windowing.lookback) + " vs " +
                    std::to_string(windowing.horizon) + ")");
    if (preprocess.target_scale != "unit" && preprocess.target_scale != "raw")
        throw Error("config: target_scale must be 'unit' or 'raw'");
    if (!(preprocess.normalize_hi > preprocess.normalize_lo))
        throw Error("config: normalize_hi must exceed normalize_lo");
    for (std::size_t i = 1; i < attack.grid.size(); ++i)
        if (!(attack.grid[i] > attack.grid[i - 1]))
            throw Error("config: attack grid must be strictly increasing");
    for (double eps : attack.grid)
        if (!(eps > 0.0)) throw Error("config: attack grid epsilons must be positive");
    if (!(attack.alpha > 0.0)) throw Error("config: attack alpha must be positive");
    for (const auto& e : defense.lpat) {
        LpatConfig probe{e.kind, e.schedule, e.alpha};
        probe.validate();
    }
    if (train.epochs < 1 || train.batch_size < 1)
        throw Error("config: train.epochs and train.batch_size must be >= 1");
}

std::uint64_t ExperimentConfig::content_hash() const { return fnv1a(canonical_json); }

namespace {

SeriesFrame preprocess_electricity_like(SeriesFrame frame, const ExperimentConfig& cfg) {
    frame = impute_column_mean(frame);
    if (cfg.preprocess.resample_daily) frame = resample_daily_mean(frame);
    if (frame.target.empty()) {
        // UCI naming: the predicted column is the first power reading
        frame.target = frame.columns.front();
    }
    if (cfg.preprocess.select_top_m > 0)
        frame = select_features(frame, cfg.preprocess.select_top_m);
    return minmax_normalize(frame, cfg.preprocess.normalize_lo, cfg.preprocess.normalize_hi);
}

SeriesFrame preprocess_hdd_like(DriveLog log, const ExperimentConfig& cfg) {
    log = drop_sparse(log, cfg.preprocess.min_coverage);
    SeriesFrame frame = build_rul_frame(log, cfg.windowing.horizon);
    std::vector<std::string> feature_cols;
    for (const auto& name : frame.columns)
        if (name != frame.target) feature_cols.push_back(name);
    frame = minmax_normalize(frame, feature_cols, cfg.preprocess.normalize_lo,
                             cfg.preprocess.normalize_hi);
    if (cfg.preprocess.target_scale == "unit")
        frame = minmax_normalize(frame, {frame.target}, 0.0, 1.0);
    return frame;
}

}  // namespace

BuiltData build_dataset(const ExperimentConfig& cfg) {
    return build_dataset(cfg, cfg.windowing.lookback);
}

BuiltData build_dataset(const ExperimentConfig& cfg, std::size_t lookback) {
    BuiltData data;
    const std::string& kind = cfg.dataset.kind;
    if (kind == "electricity-csv") {
        data.frame = preprocess_electricity_like(load_electricity(cfg.dataset.path), cfg);
    } else if (kind == "synthetic-seasonal") {
        data.frame = preprocess_electricity_like(synth_seasonal(cfg.dataset.seasonal, cfg.seed), cfg);
    } else if (kind == "hdd-csv") {
        data.frame =
            preprocess_hdd_like(load_hdd_csv(cfg.dataset.path, cfg.dataset.model_filter), cfg);
    } else if (kind == "hdd-csv-dir") {
        data.frame =
            preprocess_hdd_like(load_hdd_dir(cfg.dataset.path, cfg.dataset.model_filter), cfg);
    } else if (kind == "synthetic-degradation") {
        data.frame = preprocess_hdd_like(synth_degradation(cfg.dataset.degradation, cfg.seed), cfg);
    } else {
        throw Error("build_dataset: unknown dataset kind '" + kind + "'");
    }

    data.all = make_windows(data.frame, lookback, cfg.windowing.mode);
    const SplitRanges ranges = train_val_test_split(data.all.size(), cfg.split.train,
                                                    cfg.split.val, cfg.split.test);
    data.train = data.all.slice(0, ranges.train_end, "train");
    data.val = data.all.slice(ranges.train_end, ranges.val_end, "val");
    data.test = data.all.slice(ranges.val_end, ranges.n, "test");
    data.data_hash = data.all.content_hash();
    return data;
}

ExperimentRunner::ExperimentRunner(ExperimentConfig cfg)
    : cfg_(std::move(cfg)), out_(cfg_.output_dir) {
    std::filesystem::create_directories(out_ / "stages");
    std::filesystem::create_directories(out_ / "checkpoints");
    std::filesystem::create_directories(out_ / "plots");
    std::filesystem::create_directories(out_ / "tables");
    std::filesystem::create_directories(out_ / "attacks");
}

namespace {

class StageTimer {
public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

ModelDescriptor make_descriptor(const ExperimentConfig& cfg, const BuiltData& data,
                                std::size_t lookback) {
    ModelDescriptor desc;
    desc.kind = cfg.model.kind;
    desc.input_size = data.train.feature_names.size();
    desc.hidden_size = cfg.model.hidden;
    desc.dense_size = cfg.model.dense;
    desc.lookback = lookback;
    desc.dropout_rate = cfg.model.dropout;
    desc.init_seed = cfg.seed;
    return desc;
}

json history_to_json(const TrainResult& h) {
    return {{"train_rmse", h.train_rmse},
            {"val_rmse", h.val_rmse},
            {"epochs_run", h.epochs_run},
            {"early_stopped", h.early_stopped},
            {"skipped_batches", h.skipped_batches},
            {"total_batches", h.total_batches}};
}

AttackConfig grid_attack_config(const ExperimentConfig& cfg, AttackKind kind, double eps) {
    AttackConfig a;
    a.kind = kind;
    a.epsilon = eps;
    a.alpha = std::min(cfg.attack.alpha, eps);
    a.clamp_to_range = cfg.attack.clamp;
    a.clamp_lo = cfg.preprocess.normalize_lo;
    a.clamp_hi = cfg.preprocess.normalize_hi;
    return a;
}

}  // namespace

void ExperimentRunner::stage_train() {
    StageTimer timer;
    BuiltData data = build_dataset(cfg_);
    json out;
    out["dataset_hash"] = data.data_hash;
    out["config_hash"] = cfg_.content_hash();
    out["window_count"] = data.all.size();
    out["feature_count"] = data.train.feature_names.size();
    out["splits"] = {{"train", data.train.size()}, {"val", data.val.size()},
                     {"test", data.test.size()}};

    ModelDescriptor desc = make_descriptor(cfg_, data, cfg_.windowing.lookback);

    if (cfg_.cv_folds >= 2) {
        const std::size_t region = data.train.size() + data.val.size();
        FoldPlan plan = walk_forward_splits(region, cfg_.cv_folds);
        json folds = json::array();
        double train_sum = 0.0, val_sum = 0.0;
        for (std::size_t i = 0; i < plan.folds.size(); ++i) {
            const Fold& fold = plan.folds[i];
            WindowedDataset fold_train =
                data.all.slice(fold.train_begin, fold.train_end, "cv-train");
            WindowedDataset fold_val = data.all.slice(fold.val_begin, fold.val_end, "cv-val");
            auto model = make_model(desc, stream_for(cfg_.seed, "cv-init", i));
            train(*model, fold_train, fold_val, cfg_.train);
            const double tr = evaluate(*model, fold_train);
            const double va = evaluate(*model, fold_val);
            train_sum += tr;
            val_sum += va;
            folds.push_back({{"fold", i},
                             {"train_rows", fold.train_end - fold.train_begin},
                             {"val_rows", fold.val_end - fold.val_begin},
                             {"train_rmse", tr},
                             {"val_rmse", va}});
        }
        out["cv"] = {{"k", cfg_.cv_folds},
                     {"folds", folds},
                     {"mean_train_rmse", train_sum / static_cast<double>(plan.folds.size())},
                     {"mean_val_rmse", val_sum / static_cast<double>(plan.folds.size())}};
    }

    auto model = make_model(desc);
    TrainResult history = train(*model, data.train, data.val, cfg_.train);
    out["final"] = {{"train_rmse", evaluate(*model, data.train)},
                    {"val_rmse", data.val.empty() ? 0.0 : evaluate(*model, data.val)},
                    {"test_rmse", evaluate(*model, data.test)},
                    {"history", history_to_json(history)}};

    const auto ckpt = out_ / "checkpoints" / "baseline.ckpt";
    save_checkpoint(*model, ckpt.string());
    out["checkpoint"] = "checkpoints/baseline.ckpt";
    out["checkpoint_hash"] = file_hash(ckpt.string());

    CsvTable tvp;
    tvp.header = {"index", "truth", "prediction"};
    auto preds = predictions(*model, data.test);
    for (std::size_t i = 0; i < preds.size(); ++i)
        tvp.rows.push_back({std::to_string(i), format_double(preds[i].second),
                            format_double(preds[i].first)});
    write_csv((out_ / "plots" / "true_vs_predicted.csv").string(), tvp);

    out["wall_clock_seconds"] = timer.seconds();
    write_json_file(out_ / "stages" / "train.json", out);
}

void ExperimentRunner::stage_attack() {
    StageTimer timer;
    if (cfg_.attack.grid.empty()) throw Error("attack stage: config has an empty epsilon grid");
    BuiltData data = build_dataset(cfg_);

    const auto train_stage_path = out_ / "stages" / "train.json";
    if (!std::filesystem::exists(train_stage_path))
        throw Error("attack stage: run the train stage first (missing stages/train.json)");
    json train_stage = load_json_file(train_stage_path.string());
    if (train_stage.value("dataset_hash", std::uint64_t{0}) != data.data_hash)
        throw Error("attack stage: dataset hash mismatch with the train stage");

    auto model = load_checkpoint((out_ / "checkpoints" / "baseline.ckpt").string());
    const double clean_rmse = evaluate(*model, data.test);

    json out;
    out["dataset_hash"] = data.data_hash;
    out["clean_test_rmse"] = clean_rmse;
    json rows = json::array();

    CsvTable rmse_vs_eps;
    rmse_vs_eps.header = {"attack_type", "epsilon", "attack_rmse", "pct_increase"};

    for (AttackKind kind : {AttackKind::fgsm, AttackKind::bim}) {
        CsvTable overlay;
        overlay.header = {"epsilon", "sample", "feature", "clean_last", "perturbed_last"};
        for (std::size_t gi = 0; gi < cfg_.attack.grid.size(); ++gi) {
            const double eps = cfg_.attack.grid[gi];
            AttackConfig acfg = grid_attack_config(cfg_, kind, eps);
            AdversarialBatch batch = run_attack(*model, data.test, acfg);
            WindowedDataset poisoned = to_dataset(batch, data.test, "+poisoned");
            const double rmse = evaluate(*model, poisoned);
            const double pct = 100.0 * (rmse - clean_rmse) / clean_rmse;
            PerturbationStats stats = imperceptibility_report(batch);

            const std::string tag = to_string(kind) + "_eps" + std::to_string(gi);
            write_adversarial_csv(batch, (out_ / "attacks" / (tag + "_clean.csv")).string(),
                                  (out_ / "attacks" / (tag + "_perturbed.csv")).string());
            {
                std::ofstream sj(out_ / "attacks" / (tag + "_stats.json"));
                sj << imperceptibility_json(stats, acfg) << '\n';
            }

            rows.push_back({{"attack", to_string(kind)},
                            {"epsilon", eps},
                            {"iterations",
                             kind == AttackKind::bim ? bim_iterations(eps, acfg.alpha) : 1},
                            {"attack_rmse", rmse},
                            {"pct_increase", pct},
                            {"max_linf", stats.max_linf_overall}});
            rmse_vs_eps.rows.push_back({to_string(kind), format_double(eps),
                                        format_double(rmse), format_double(pct)});
            for (const auto& r : stats.rows)
                overlay.rows.push_back({format_double(eps), std::to_string(r.sample),
                                        std::to_string(r.feature), format_double(r.clean_last),
                                        format_double(r.perturbed_last)});
        }
        write_csv((out_ / "plots" / ("clean_vs_perturbed_" + to_string(kind) + ".csv")).string(),
                  overlay);
    }
    write_csv((out_ / "plots" / "rmse_vs_epsilon.csv").string(), rmse_vs_eps);

    out["grid"] = cfg_.attack.grid;
    out["alpha"] = cfg_.attack.alpha;
    out["results"] = rows;
    out["wall_clock_seconds"] = timer.seconds();
    write_json_file(out_ / "stages" / "attack.json", out);
}

void ExperimentRunner::stage_defend() {
    StageTimer timer;
    if (cfg_.attack.grid.empty()) throw Error("defend stage: config has an empty epsilon grid");
    if (cfg_.defense.daat_kinds.empty() && cfg_.defense.lpat.empty())
        throw Error("defend stage: no defenses configured");
    BuiltData data = build_dataset(cfg_);

    const auto train_stage_path = out_ / "stages" / "train.json";
    if (!std::filesystem::exists(train_stage_path))
        throw Error("defend stage: run the train stage first (missing stages/train.json)");
    json train_stage = load_json_file(train_stage_path.string());
    if (train_stage.value("dataset_hash", std::uint64_t{0}) != data.data_hash)
        throw Error("defend stage: dataset hash mismatch with the train stage");

    auto baseline = load_checkpoint((out_ / "checkpoints" / "baseline.ckpt").string());

    json out;
    out["dataset_hash"] = data.data_hash;
    json daat_rows = json::array();
    json lpat_rows = json::array();
    json checkpoints = json::object();

    std::vector<std::unique_ptr<ForecastModel>> owned;
    std::vector<DefendedModelRef> defended;

    for (AttackKind kind : cfg_.defense.daat_kinds) {
        DaatConfig dcfg;
        dcfg.kind = kind;
        dcfg.epsilon_grid = cfg_.attack.grid;
        dcfg.alpha = cfg_.attack.alpha;
        DaatResult res = daat_train(data.train, data.val, data.test, *baseline, dcfg, cfg_.train);

        const std::string name = "daat_" + to_string(kind);
        const auto ckpt = out_ / "checkpoints" / (name + ".ckpt");
        save_checkpoint(*res.model, ckpt.string());
        checkpoints[name] = file_hash(ckpt.string());

        daat_rows.push_back({{"attack", to_string(kind)},
                             {"train_rmse", res.train_rmse},
                             {"val_rmse", res.val_rmse},
                             {"test_clean_rmse", res.test_clean_rmse},
                             {"test_poisoned_rmse", res.test_poisoned_rmse},
                             {"history", history_to_json(res.history)}});
        defended.emplace_back(kind, "daat", res.model.get());
        owned.push_back(std::move(res.model));
    }

    for (const auto& entry : cfg_.defense.lpat) {
        LpatConfig lcfg{entry.kind, entry.schedule, entry.alpha};
        LpatResult res = lpat_train(data.train, data.val, *baseline, lcfg, cfg_.train);
        const double test_rmse = evaluate(*res.model, data.test);

        const std::string name = "lpat_" + to_string(entry.kind) + "_" + lcfg.training_type();
        const auto ckpt = out_ / "checkpoints" / (name + ".ckpt");
        save_checkpoint(*res.model, ckpt.string());
        checkpoints[name] = file_hash(ckpt.string());

        json row = {{"attack", to_string(entry.kind)},
                    {"training_type", lcfg.training_type()},
                    {"train_rmse", res.train_rmse},
                    {"val_rmse", res.val_rmse},
                    {"test_rmse", test_rmse},
                    {"history", history_to_json(res.history)}};
        if (entry.schedule.kind == LpatSchedule::Kind::deterministic)
            row["epsilon"] = entry.schedule.fixed_epsilon;
        else
            row["epsilon_range"] = {entry.schedule.epsilon_lo, entry.schedule.epsilon_hi};
        lpat_rows.push_back(row);
        defended.emplace_back(entry.kind, lcfg.training_type(), res.model.get());
        owned.push_back(std::move(res.model));
    }

    DefenseReport report =
        defense_report(*baseline, defended, data.test, cfg_.attack.grid, cfg_.attack.alpha);
    json cells = json::array();
    for (const auto& cell : report.cells)
        cells.push_back({{"attack", to_string(cell.attack)},
                         {"training_type", cell.training_type},
                         {"epsilon", cell.epsilon},
                         {"attack_rmse", cell.attack_rmse},
                         {"defended_rmse", cell.defended_rmse},
                         {"pct_decrease", cell.pct_decrease}});

    CsvTable avd;
    avd.header = {"attack_type", "training_type", "epsilon", "attack_rmse", "defended_rmse"};
    CsvTable lines;
    lines.header = {"attack_type", "training_type", "epsilon", "pct_decrease"};
    for (const auto& cell : report.cells) {
        avd.rows.push_back({to_string(cell.attack), cell.training_type,
                            format_double(cell.epsilon), format_double(cell.attack_rmse),
                            format_double(cell.defended_rmse)});
        lines.rows.push_back({to_string(cell.attack), cell.training_type,
                              format_double(cell.epsilon), format_double(cell.pct_decrease)});
    }
    write_csv((out_ / "plots" / "attack_vs_defense.csv").string(), avd);
    write_csv((out_ / "plots" / "pct_decrease_lines.csv").string(), lines);

    out["daat"] = daat_rows;
    out["lpat"] = lpat_rows;
    out["defense_cells"] = cells;
    out["checkpoints"] = checkpoints;
    out["wall_clock_seconds"] = timer.seconds();
    write_json_file(out_ / "stages" / "defend.json", out);
}

void ExperimentRunner::stage_sweep() {
    StageTimer timer;
    std::vector<std::size_t> lookbacks = cfg_.sweep_lookbacks;
    if (lookbacks.empty()) lookbacks = {cfg_.windowing.lookback};

    json rows = json::array();
    CsvTable plot;
    plot.header = {"lookback", "train_rmse", "test_rmse"};
    for (std::size_t lb : lookbacks) {
        try {
            if (cfg_.windowing.mode == WindowMode::sequence && lb != cfg_.windowing.horizon)
                throw Error("sequence mode: lookback " + std::to_string(lb) +
                            " requires a matching horizon");
            BuiltData data = build_dataset(cfg_, lb);
            ModelDescriptor desc = make_descriptor(cfg_, data, lb);
            auto model = make_model(desc);
            train(*model, data.train, data.val, cfg_.train);
            const double tr = evaluate(*model, data.train);
            const double te = evaluate(*model, data.test);
            rows.push_back({{"lookback", lb}, {"train_rmse", tr}, {"test_rmse", te}});
            plot.rows.push_back({std::to_string(lb), format_double(tr), format_double(te)});
        } catch (const std::exception& e) {
            rows.push_back({{"lookback", lb}, {"error", e.what()}});
        }
    }
    write_csv((out_ / "plots" / "lookback_rmse.csv").string(), plot);

    json out;
    out["results"] = rows;
    out["wall_clock_seconds"] = timer.seconds();
    write_json_file(out_ / "stages" / "sweep.json", out);
}

void ExperimentRunner::stage_report() {
    const auto train_stage_path = out_ / "stages" / "train.json";
    if (!std::filesystem::exists(train_stage_path))
        throw Error("report stage: nothing to report (missing stages/train.json)");

    json report;
    report["config"] = json::parse(cfg_.canonical_json);
    report["config_hash"] = cfg_.content_hash();
    report["seed"] = cfg_.seed;
    json timings = json::object();
    json provenance = json::object();

    auto ingest = [&](const char* name) -> json {
        const auto path = out_ / "stages" / (std::string(name) + ".json");
        if (!std::filesystem::exists(path)) return json();
        json stage = load_json_file(path.string());
        if (stage.contains("wall_clock_seconds")) {
            timings[name] = stage["wall_clock_seconds"];
            stage.erase("wall_clock_seconds");
        }
        report["stages"][name] = stage;
        return stage;
    };

    json train_stage = ingest("train");
    json attack_stage = ingest("attack");
    json defend_stage = ingest("defend");
    ingest("sweep");

    provenance["dataset_hash"] = train_stage.value("dataset_hash", std::uint64_t{0});
    provenance["checkpoints"] = json::object();
    provenance["checkpoints"]["baseline"] = train_stage.value("checkpoint_hash", std::uint64_t{0});
    if (!defend_stage.is_null() && defend_stage.contains("checkpoints"))
        for (auto& [name, hash] : defend_stage["checkpoints"].items())
            provenance["checkpoints"][name] = hash;
    report["provenance"] = provenance;

    // tables/clean_rmse.csv (Table 1/2 layout)
    CsvTable clean;
    clean.header = {"experiment", "train_rmse", "val_rmse", "test_rmse"};
    if (train_stage.contains("cv")) {
        const auto& cv = train_stage["cv"];
        clean.rows.push_back({"using-" + std::to_string(cv["k"].get<std::size_t>()) + "-fold-cv",
                              format_double(cv["mean_train_rmse"].get<double>()),
                              format_double(cv["mean_val_rmse"].get<double>()), ""});
    }
    const auto& fin = train_stage["final"];
    clean.rows.push_back({"final", format_double(fin["train_rmse"].get<double>()),
                          format_double(fin["val_rmse"].get<double>()),
                          format_double(fin["test_rmse"].get<double>())});
    write_csv((out_ / "tables" / "clean_rmse.csv").string(), clean);

    // tables/attack_rmse.csv (Table 3/6 layout)
    if (!attack_stage.is_null()) {
        CsvTable tbl;
        tbl.header = {"attack_type", "epsilon", "attack_rmse", "pct_increase"};
        for (const auto& r : attack_stage["results"])
            tbl.rows.push_back({r["attack"].get<std::string>(),
                                format_double(r["epsilon"].get<double>()),
                                format_double(r["attack_rmse"].get<double>()),
                                format_double(r["pct_increase"].get<double>())});
        write_csv((out_ / "tables" / "attack_rmse.csv").string(), tbl);
    }

    if (!defend_stage.is_null()) {
        // tables/daat_rmse.csv (Table 4/7 layout)
        CsvTable daat;
        daat.header = {"attack_type", "rmse_metric", "value"};
        for (const auto& r : defend_stage["daat"]) {
            const std::string kind = r["attack"].get<std::string>();
            daat.rows.push_back({kind, "train", format_double(r["train_rmse"].get<double>())});
            daat.rows.push_back({kind, "validation", format_double(r["val_rmse"].get<double>())});
            daat.rows.push_back(
                {kind, "test_clean", format_double(r["test_clean_rmse"].get<double>())});
            daat.rows.push_back(
                {kind, "test_poisoned", format_double(r["test_poisoned_rmse"].get<double>())});
        }
        write_csv((out_ / "tables" / "daat_rmse.csv").string(), daat);

        // tables/lpat_rmse.csv (Table 5 layout)
        CsvTable lpat;
        lpat.header = {"attack_type", "training_type", "rmse_metric", "value"};
        for (const auto& r : defend_stage["lpat"]) {
            const std::string kind = r["attack"].get<std::string>();
            const std::string type = r["training_type"].get<std::string>();
            lpat.rows.push_back({kind, type, "train", format_double(r["train_rmse"].get<double>())});
            lpat.rows.push_back({kind, type, "test", format_double(r["test_rmse"].get<double>())});
        }
        write_csv((out_ / "tables" / "lpat_rmse.csv").string(), lpat);

        // tables/defense_pct_decrease.csv (Table 8/9 layout)
        CsvTable pct;
        pct.header = {"attack_type", "training_type", "epsilon", "attack_rmse", "defended_rmse",
                      "pct_decrease"};
        for (const auto& r : defend_stage["defense_cells"])
            pct.rows.push_back({r["attack"].get<std::string>(),
                                r["training_type"].get<std::string>(),
                                format_double(r["epsilon"].get<double>()),
                                format_double(r["attack_rmse"].get<double>()),
                                format_double(r["defended_rmse"].get<double>()),
                                format_double(r["pct_decrease"].get<double>())});
        write_csv((out_ / "tables" / "defense_pct_decrease.csv").string(), pct);
    }

    report["timings"] = timings;
    write_json_file(out_ / "report.json", report);
}

void ExperimentRunner::run_stage(const std::string& name) {
    const std::vector<std::string> all_stages = {"train", "attack", "defend", "report"};
    std::vector<std::string> stages;
    if (name == "all") {
        stages = all_stages;
    } else if (name == "train" || name == "attack" || name == "defend" || name == "sweep" ||
               name == "report") {
        stages = {name};
    } else {
        throw Error("unknown stage '" + name +
                    "' (expected train, attack, defend, sweep, report, or all)");
    }

    const auto marker = out_ / "INCOMPLETE.json";
    for (const auto& stage : stages) {
        write_json_file(marker, {{"stage", stage}, {"status", "running"}});
        try {
            if (stage == "train")
                stage_train();
            else if (stage == "attack")
                stage_attack();
            else if (stage == "defend")
                stage_defend();
            else if (stage == "sweep")
                stage_sweep();
            else
                stage_report();
        } catch (const std::exception& e) {
            write_json_file(marker,
                            {{"stage", stage}, {"status", "failed"}, {"error", e.what()}});
            throw Error("stage '" + stage + "': " + e.what());
        }
        std::filesystem::remove(marker);
    }
}

}  // namespace tsadv
