#pragma once

#include <filesystem>

#include "tsadv/defenses.hpp"
#include "tsadv/synth.hpp"

namespace tsadv {

struct DatasetConfig {
    /// electricity-csv | hdd-csv | hdd-csv-dir | synthetic-seasonal |
    /// synthetic-degradation
    std::string kind = "synthetic-seasonal";
    std::string path;          // csv kinds only
    std::string model_filter;  // hdd kinds, e.g. ST4000DM000
    SeasonalParams seasonal;
    DegradationParams degradation;
};

struct PreprocessConfig {
    bool resample_daily = false;
    double normalize_lo = 0.0;
    double normalize_hi = 1.0;
    std::string target_scale = "unit";  // sequence mode: unit | raw
    std::size_t select_top_m = 0;       // 0 = no feature selection
    double min_coverage = 0.99;         // hdd sparse-column threshold
};

struct WindowConfig {
    std::size_t lookback = 1;
    WindowMode mode = WindowMode::next_step;
    std::size_t horizon = 5;  // sequence mode: RUL labeling horizon
};

struct ModelConfig {
    ModelKind kind = ModelKind::vanilla_lstm;
    std::size_t hidden = 100;
    std::size_t dense = 100;
    double dropout = 0.1;
};

struct SplitConfig {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

struct AttackGridConfig {
    std::vector<double> grid;  // strictly increasing epsilons
    double alpha = 0.01;
    bool clamp = false;
};

struct LpatEntry {
    AttackKind kind = AttackKind::fgsm;
    LpatSchedule schedule;
    double alpha = 0.01;
};

struct DefenseConfig {
    std::vector<AttackKind> daat_kinds;
    std::vector<LpatEntry> lpat;
};

/// Parsed, validated form of the JSON experiment file (documented in the
/// README; `version` gates schema evolution).
struct ExperimentConfig {
    int version = 1;
    std::uint64_t seed = 0;
    std::string output_dir = "runs/out";
    DatasetConfig dataset;
    PreprocessConfig preprocess;
    WindowConfig windowing;
    ModelConfig model;
    SplitConfig split;
    std::size_t cv_folds = 0;  // 0 = no cross-validation
    TrainConfig train;
    AttackGridConfig attack;
    DefenseConfig defense;
    std::vector<std::size_t> sweep_lookbacks;

    std::string canonical_json;  // canonical echo used for the config hash

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_string(const std::string& text);
    void validate() const;
    std::uint64_t content_hash() const;
};

/// Deterministic dataset construction: ingest -> clean -> label ->
/// normalize -> window -> split, exactly as the configured pipeline
/// dictates. Every stage rebuilds this and cross-checks the content hash
/// recorded by the train stage.
struct BuiltData {
    SeriesFrame frame;  // post-preprocess frame
    WindowedDataset all;
    WindowedDataset train, val, test;
    std::uint64_t data_hash = 0;
};
BuiltData build_dataset(const ExperimentConfig& cfg);
/// Same pipeline with the look-back overridden (the sweep stage).
BuiltData build_dataset(const ExperimentConfig& cfg, std::size_t lookback);

/// Stage driver. Stages write their numeric results under
/// <output_dir>/stages/*.json, checkpoints under checkpoints/, plot series
/// under plots/; `report` assembles report.json and tables/*.csv. A failed
/// stage leaves an INCOMPLETE.json marker naming the stage and cause.
class ExperimentRunner {
public:
    explicit ExperimentRunner(ExperimentConfig cfg);

    /// name: train | attack | defend | sweep | report | all
    void run_stage(const std::string& name);

    const std::filesystem::path& out_dir() const { return out_; }
    const ExperimentConfig& config() const { return cfg_; }

private:
    void stage_train();
    void stage_attack();
    void stage_defend();
    void stage_sweep();
    void stage_report();

    ExperimentConfig cfg_;
    std::filesystem::path out_;
};

}  // namespace tsadv
