#include "tsadv/defenses.hpp"

#include <algorithm>
#include <cmath>

#include "tsadv/io_csv.hpp"

namespace tsadv {

void DaatConfig::validate() const {
    if (epsilon_grid.empty()) throw Error("DaatConfig: epsilon grid is empty");
    for (std::size_t i = 1; i < epsilon_grid.size(); ++i)
        if (!(epsilon_grid[i] > epsilon_grid[i - 1]))
            throw Error("DaatConfig: epsilon grid must be strictly increasing");
    if (!(alpha > 0.0)) throw Error("DaatConfig: alpha must be positive");
}

WindowedDataset daat_build(const WindowedDataset& train, const ForecastModel& baseline,
                           const DaatConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw Error("daat_build: training set is empty");

    WindowedDataset out = train;
    out.split_name = train.split_name + "+daat-" + to_string(cfg.kind);
    for (double eps : cfg.epsilon_grid) {
        if (eps == 0.0) {
            // degenerate grid entry duplicates the clean data
            for (std::size_t i = 0; i < train.size(); ++i) {
                out.inputs.push_back(train.inputs[i].clone());
                out.targets.push_back(train.targets[i]);
            }
            continue;
        }
        AttackConfig attack_cfg;
        attack_cfg.kind = cfg.kind;
        attack_cfg.epsilon = eps;
        attack_cfg.alpha = std::min(cfg.alpha, eps);
        AdversarialBatch batch = run_attack(baseline, train, attack_cfg);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            out.inputs.push_back(batch.perturbed[i]);
            out.targets.push_back(train.targets[i]);  // targets stay clean
        }
    }
    return out;
}

namespace {

WindowedDataset poisoned_union(const ForecastModel& baseline, const WindowedDataset& test,
                               AttackKind kind, std::span<const double> grid, double alpha) {
    WindowedDataset out = test;
    out.inputs.clear();
    out.targets.clear();
    out.split_name = test.split_name + "+poisoned-" + to_string(kind);
    for (double eps : grid) {
        AttackConfig cfg;
        cfg.kind = kind;
        cfg.epsilon = eps;
        cfg.alpha = std::min(alpha, eps);
        AdversarialBatch batch = run_attack(baseline, test, cfg);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            out.inputs.push_back(batch.perturbed[i]);
            out.targets.push_back(test.targets[i]);
        }
    }
    return out;
}

}  // namespace

DaatResult daat_train(const WindowedDataset& train_set, const WindowedDataset& val,
                      const WindowedDataset& test, const ForecastModel& baseline,
                      const DaatConfig& cfg, const TrainConfig& train_cfg) {
    WindowedDataset augmented = daat_build(train_set, baseline, cfg);

    ModelDescriptor desc = baseline.descriptor();
    DaatResult result;
    result.model = make_model(
        desc, stream_for(train_cfg.seed, "daat-init").derive(to_string(cfg.kind)));
    result.history = train(*result.model, augmented, val, train_cfg);

    result.train_rmse = evaluate(*result.model, augmented);
    result.val_rmse = val.empty() ? 0.0 : evaluate(*result.model, val);
    result.test_clean_rmse = evaluate(*result.model, test);
    WindowedDataset poisoned =
        poisoned_union(baseline, test, cfg.kind, cfg.epsilon_grid, cfg.alpha);
    result.test_poisoned_rmse = evaluate(*result.model, poisoned);
    return result;
}

LpatSchedule LpatSchedule::deterministic(double epsilon) {
    LpatSchedule s;
    s.kind = Kind::deterministic;
    s.fixed_epsilon = epsilon;
    return s;
}

LpatSchedule LpatSchedule::stochastic(double lo, double hi) {
    LpatSchedule s;
    s.kind = Kind::stochastic;
    s.epsilon_lo = lo;
    s.epsilon_hi = hi;
    return s;
}

void LpatSchedule::validate() const {
    if (kind == Kind::deterministic) {
        if (fixed_epsilon < 0.0) throw Error("LpatSchedule: epsilon must be >= 0");
    } else {
        if (!(epsilon_lo > 0.0) || !(epsilon_hi > epsilon_lo))
            throw Error("LpatSchedule: stochastic range requires 0 < lo < hi");
    }
}

void LpatConfig::validate() const {
    schedule.validate();
    if (!(alpha > 0.0)) throw Error("LpatConfig: alpha must be positive");
}

std::string LpatConfig::training_type() const {
    return schedule.kind == LpatSchedule::Kind::deterministic ? "dlpat" : "slpat";
}

LpatPerturber::LpatPerturber(const LpatConfig& cfg) : cfg_(cfg) { cfg.validate(); }

void LpatPerturber::perturb(std::vector<Tensor>& params, const std::vector<Tensor>& round1_grads,
                            const BatchEval& eval, RngStream eps_rng) {
    const double eps = cfg_.schedule.kind == LpatSchedule::Kind::deterministic
                           ? cfg_.schedule.fixed_epsilon
                           : eps_rng.uniform(cfg_.schedule.epsilon_lo, cfg_.schedule.epsilon_hi);
    if (eps == 0.0) return;  // exact no-op: training degenerates to vanilla

    const bool single_step = cfg_.kind == AttackKind::fgsm;
    const double alpha = std::min(cfg_.alpha, eps);
    const double step = single_step ? eps : alpha;
    const int iters = single_step ? 1 : bim_iterations(eps, alpha);

    std::vector<std::vector<double>> origin;
    origin.reserve(params.size());
    for (const auto& p : params) origin.emplace_back(p.data().begin(), p.data().end());

    auto sign_of = [](double g) { return (g > 0.0) ? 1.0 : (g < 0.0 ? -1.0 : 0.0); };
    for (int it = 0; it < iters; ++it) {
        std::vector<Tensor> fresh;
        const std::vector<Tensor>* grads = &round1_grads;
        if (it > 0) {
            auto [loss, g] = eval();
            if (g.empty() || !std::isfinite(loss)) break;  // round 2 handles the fallout
            fresh = std::move(g);
            grads = &fresh;
        }
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            auto w = params[pi].mutable_data();
            auto gv = (*grads)[pi].data();
            const auto& o = origin[pi];
            for (std::size_t j = 0; j < w.size(); ++j) {
                double v = w[j] + step * sign_of(gv[j]);
                w[j] = std::min(o[j] + eps, std::max(o[j] - eps, v));
            }
        }
    }
}

LpatResult lpat_train(const WindowedDataset& train_set, const WindowedDataset& val,
                      const ForecastModel& reference, const LpatConfig& cfg,
                      const TrainConfig& train_cfg) {
    cfg.validate();
    LpatResult result;
    result.model = make_model(reference.descriptor(),
                              stream_for(train_cfg.seed, "lpat-init")
                                  .derive(to_string(cfg.kind))
                                  .derive(cfg.training_type()));
    LpatPerturber perturber(cfg);
    result.history = train_loop(*result.model, train_set, val, train_cfg, &perturber);
    result.train_rmse = evaluate(*result.model, train_set);
    result.val_rmse = val.empty() ? 0.0 : evaluate(*result.model, val);
    return result;
}

double DefenseReport::mean_pct_decrease(AttackKind kind, const std::string& training_type) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& cell : cells)
        if (cell.attack == kind && cell.training_type == training_type) {
            sum += cell.pct_decrease;
            ++n;
        }
    if (n == 0) throw Error("DefenseReport: no cells for " + to_string(kind) + "/" + training_type);
    return sum / static_cast<double>(n);
}

DefenseReport defense_report(const ForecastModel& baseline,
                             const std::vector<DefendedModelRef>& defended,
                             const WindowedDataset& test, std::span<const double> epsilon_grid,
                             double alpha) {
    if (test.empty()) throw Error("defense_report: test set is empty");
    if (epsilon_grid.empty()) throw Error("defense_report: epsilon grid is empty");

    DefenseReport report;
    std::vector<std::string> missing;
    for (AttackKind kind : {AttackKind::fgsm, AttackKind::bim}) {
        bool kind_used = false;
        for (const auto& [k, name, model] : defended) kind_used = kind_used || k == kind;
        if (!kind_used) continue;
        for (double eps : epsilon_grid) {
            AttackConfig cfg;
            cfg.kind = kind;
            cfg.epsilon = eps;
            cfg.alpha = std::min(alpha, eps);
            AdversarialBatch batch = run_attack(baseline, test, cfg);
            WindowedDataset poisoned = to_dataset(batch, test, "+eps" + format_double(eps));
            const double attack_rmse = evaluate(baseline, poisoned);
            for (const auto& [k, name, model] : defended) {
                if (k != kind) continue;
                const double defended_rmse = evaluate(*model, poisoned);
                if (!std::isfinite(attack_rmse) || !std::isfinite(defended_rmse)) {
                    missing.push_back(to_string(kind) + "/" + name + "@eps=" +
                                      format_double(eps));
                    continue;
                }
                DefenseCell cell;
                cell.attack = kind;
                cell.training_type = name;
                cell.epsilon = eps;
                cell.attack_rmse = attack_rmse;
                cell.defended_rmse = defended_rmse;
                cell.pct_decrease = 100.0 * (attack_rmse - defended_rmse) / attack_rmse;
                report.cells.push_back(cell);
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "defense_report: missing cells:";
        for (const auto& m : missing) msg += " " + m;
        throw Error(msg);
    }
    return report;
}

}  // namespace tsadv
