#pragma once

#include <optional>
#include <span>

#include "tsadv/model.hpp"
#include "tsadv/series.hpp"

namespace tsadv {

enum class AttackKind { fgsm, bim };

std::string to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& s);

struct AttackConfig {
    AttackKind kind = AttackKind::fgsm;
    double epsilon = 0.1;  // max per-component deviation, normalized units
    double alpha = 0.01;   // BIM step size
    std::optional<int> iterations;  // overrides the Eq.-style schedule
    /// Off by default: the attack equations carry no domain clamp. Enable to
    /// project adversarial inputs back into [clamp_lo, clamp_hi].
    bool clamp_to_range = false;
    double clamp_lo = 0.0;
    double clamp_hi = 1.0;

    void validate() const;
};

/// Clean/perturbed input pairs plus per-sample distances. The containment
/// invariant ||perturbed - clean||_inf <= epsilon + 1e-12 holds for every
/// sample of every attack.
struct AdversarialBatch {
    std::vector<Tensor> clean;
    std::vector<Tensor> perturbed;
    std::vector<Tensor> targets;
    std::vector<double> linf;  // per sample
    std::vector<double> l2;    // per sample
    AttackConfig config;
    std::vector<std::string> feature_names;

    std::size_t size() const { return clean.size(); }
};

/// Iteration count I = round(min(4 + eps/alpha, 1.25*eps/alpha)), floor 1;
/// ties round half away from zero.
int bim_iterations(double epsilon, double alpha);

/// d(MSE(f(window), target))/d(window), evaluation mode (dropout off).
Tensor input_gradient(const ForecastModel& model, const Tensor& window, const Tensor& target);

AdversarialBatch fgsm(const ForecastModel& model, std::span<const Tensor> inputs,
                      std::span<const Tensor> targets, double epsilon);
AdversarialBatch bim(const ForecastModel& model, std::span<const Tensor> inputs,
                     std::span<const Tensor> targets, double epsilon, double alpha,
                     std::optional<int> iterations = std::nullopt);

/// Applies cfg to every window of the dataset.
AdversarialBatch run_attack(const ForecastModel& model, const WindowedDataset& dataset,
                            const AttackConfig& cfg);

/// Perturbed copy of a dataset (targets shared with the source batch).
WindowedDataset to_dataset(const AdversarialBatch& batch, const WindowedDataset& source,
                           const std::string& split_suffix);

/// Distance summary: one row per (sample, feature) with the window's
/// L-inf/L2/mean-abs deviation and the last-step clean/perturbed values
/// (aligned overlay series for stride-1 windows), plus per-feature
/// aggregates.
struct PerturbationStats {
    struct Row {
        std::size_t sample = 0, feature = 0;
        double linf = 0.0, l2 = 0.0, mean_abs = 0.0;
        double clean_last = 0.0, perturbed_last = 0.0;
    };
    struct FeatureAggregate {
        double max_linf = 0.0, mean_linf = 0.0;
        double max_l2 = 0.0, mean_l2 = 0.0;
    };
    std::vector<Row> rows;                         // size = samples x features
    std::vector<FeatureAggregate> per_feature;
    double max_linf_overall = 0.0;
};
PerturbationStats imperceptibility_report(const AdversarialBatch& batch);

/// CSV pair (clean, perturbed): one row per sample, one column per
/// (timestep, feature) cell.
void write_adversarial_csv(const AdversarialBatch& batch, const std::string& clean_path,
                           const std::string& perturbed_path);
/// JSON stats block for the report module.
std::string imperceptibility_json(const PerturbationStats& stats, const AttackConfig& cfg);

}  // namespace tsadv
