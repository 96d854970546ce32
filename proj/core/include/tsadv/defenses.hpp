#pragma once

#include <memory>
#include <tuple>

#include "tsadv/attacks.hpp"
#include "tsadv/training.hpp"

namespace tsadv {

/// Data-augmentation adversarial training: retrain from scratch on the
/// clean set plus one adversarial copy per epsilon, all crafted against the
/// frozen pretrained baseline, targets kept clean.
struct DaatConfig {
    AttackKind kind = AttackKind::fgsm;
    std::vector<double> epsilon_grid;  // nonempty, strictly increasing
    double alpha = 0.01;

    void validate() const;
};

WindowedDataset daat_build(const WindowedDataset& train, const ForecastModel& baseline,
                           const DaatConfig& cfg);

struct DaatResult {
    std::unique_ptr<ForecastModel> model;
    TrainResult history;
    double train_rmse = 0.0;          // on the augmented training set
    double val_rmse = 0.0;            // clean validation set
    double test_clean_rmse = 0.0;     // clean test set
    double test_poisoned_rmse = 0.0;  // union of per-epsilon poisoned test copies
};

DaatResult daat_train(const WindowedDataset& train, const WindowedDataset& val,
                      const WindowedDataset& test, const ForecastModel& baseline,
                      const DaatConfig& cfg, const TrainConfig& train_cfg);

/// Layer-wise perturbation adversarial training: each batch runs two
/// rounds. Round 1 computes gradients at the current weights; every
/// parameter tensor is then moved by epsilon * sign(gradient) (FGSM mode)
/// or by the iterated alpha-step/epsilon-projected map (BIM mode); round 2's
/// gradients, evaluated at the perturbed weights, drive the Adam update of
/// the original weights. epsilon is fixed (deterministic) or drawn uniform
/// per batch (stochastic).
struct LpatSchedule {
    enum class Kind { deterministic, stochastic };
    Kind kind = Kind::deterministic;
    double fixed_epsilon = 0.0;
    double epsilon_lo = 0.0;
    double epsilon_hi = 0.0;

    static LpatSchedule deterministic(double epsilon);
    static LpatSchedule stochastic(double lo, double hi);
    void validate() const;
};

struct LpatConfig {
    AttackKind kind = AttackKind::fgsm;
    LpatSchedule schedule;
    double alpha = 0.01;

    void validate() const;
    std::string training_type() const;  // "dlpat" / "slpat"
};

/// WeightPerturber implementing the LPAT map; exposed so tests can replay
/// single batches.
class LpatPerturber final : public WeightPerturber {
public:
    explicit LpatPerturber(const LpatConfig& cfg);
    void perturb(std::vector<Tensor>& params, const std::vector<Tensor>& round1_grads,
                 const BatchEval& eval, RngStream eps_rng) override;

private:
    LpatConfig cfg_;
};

struct LpatResult {
    std::unique_ptr<ForecastModel> model;
    TrainResult history;
    double train_rmse = 0.0;  // clean training set, eval mode
    double val_rmse = 0.0;
};

/// Trains a fresh model (baseline's architecture, fresh init) under the
/// two-round scheme.
LpatResult lpat_train(const WindowedDataset& train, const WindowedDataset& val,
                      const ForecastModel& reference, const LpatConfig& cfg,
                      const TrainConfig& train_cfg);

/// %decrease table: for every (defense, epsilon), poisoned test sets are
/// crafted once against the baseline and evaluated on baseline and defended
/// models alike. %decrease = 100*(attack_rmse - defended_rmse)/attack_rmse;
/// negative cells are legal and reported.
struct DefenseCell {
    AttackKind attack = AttackKind::fgsm;
    std::string training_type;
    double epsilon = 0.0;
    double attack_rmse = 0.0;
    double defended_rmse = 0.0;
    double pct_decrease = 0.0;
};

struct DefenseReport {
    std::vector<DefenseCell> cells;

    double mean_pct_decrease(AttackKind kind, const std::string& training_type) const;
};

using DefendedModelRef = std::tuple<AttackKind, std::string, const ForecastModel*>;

DefenseReport defense_report(const ForecastModel& baseline,
                             const std::vector<DefendedModelRef>& defended,
                             const WindowedDataset& test, std::span<const double> epsilon_grid,
                             double alpha);

}  // namespace tsadv
