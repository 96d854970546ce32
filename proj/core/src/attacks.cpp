#include "tsadv/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tsadv/io_csv.hpp"

namespace tsadv {

std::string to_string(AttackKind kind) {
    return kind == AttackKind::fgsm ? "fgsm" : "bim";
}

AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "fgsm" || s == "FGSM") return AttackKind::fgsm;
    if (s == "bim" || s == "BIM") return AttackKind::bim;
    throw Error("unknown attack kind '" + s + "'");
}

void AttackConfig::validate() const {
    if (!(epsilon > 0.0)) throw Error("AttackConfig: epsilon must be positive");
    if (!(alpha > 0.0)) throw Error("AttackConfig: alpha must be positive");
    if (kind == AttackKind::bim && alpha > epsilon)
        throw Error("AttackConfig: BIM step alpha must not exceed epsilon");
    if (iterations && *iterations < 1) throw Error("AttackConfig: iteration override must be >= 1");
    if (clamp_to_range && !(clamp_hi > clamp_lo))
        throw Error("AttackConfig: clamp range is empty");
}

int bim_iterations(double epsilon, double alpha) {
    if (!(epsilon > 0.0) || !(alpha > 0.0))
        throw Error("bim_iterations: epsilon and alpha must be positive");
    const double ratio = epsilon / alpha;
    const double raw = std::min(4.0 + ratio, 1.25 * ratio);
    const long rounded = std::lround(raw);
    return static_cast<int>(std::max(1L, rounded));
}

Tensor input_gradient(const ForecastModel& model, const Tensor& window, const Tensor& target) {
    Tensor probe = window.clone();
    probe.set_requires_grad(true);
    Tape tape;
    Tensor pred = model.forward(probe, ForwardMode::eval());
    Tensor loss = mse(pred, target);
    Gradients grads = tape.backward(loss);
    return grads.at(probe);
}

namespace {

inline double sign_of(double g) { return (g > 0.0) ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

void record_distances(AdversarialBatch& batch) {
    batch.linf.clear();
    batch.l2.clear();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto cv = batch.clean[i].data();
        auto pv = batch.perturbed[i].data();
        double linf = 0.0, sq = 0.0;
        for (std::size_t j = 0; j < cv.size(); ++j) {
            const double d = std::abs(pv[j] - cv[j]);
            linf = std::max(linf, d);
            sq += d * d;
        }
        batch.linf.push_back(linf);
        batch.l2.push_back(std::sqrt(sq));
    }
}

AdversarialBatch attack_impl(const ForecastModel& model, std::span<const Tensor> inputs,
                             std::span<const Tensor> targets, const AttackConfig& cfg) {
    cfg.validate();
    if (inputs.size() != targets.size())
        throw Error("attack: input/target count mismatch");
    AdversarialBatch batch;
    batch.config = cfg;
    batch.clean.assign(inputs.begin(), inputs.end());
    batch.targets.assign(targets.begin(), targets.end());
    batch.perturbed.reserve(inputs.size());

    const double eps = cfg.epsilon;
    const bool single_step = cfg.kind == AttackKind::fgsm;
    const double step = single_step ? eps : cfg.alpha;
    const int iters = single_step ? 1
                                  : (cfg.iterations ? *cfg.iterations
                                                    : bim_iterations(eps, cfg.alpha));

    for (std::size_t s = 0; s < inputs.size(); ++s) {
        const Tensor& x = inputs[s];
        Tensor adv = x.clone();
        adv.set_requires_grad(false);
        auto xv = x.data();
        for (int it = 0; it < iters; ++it) {
            Tensor grad = input_gradient(model, adv, targets[s]);
            auto gv = grad.data();
            auto av = adv.mutable_data();
            for (std::size_t j = 0; j < av.size(); ++j) {
                double v = av[j] + step * sign_of(gv[j]);
                // per-iteration projection into the epsilon-ball (Eq. 4 form)
                v = std::min(xv[j] + eps, std::max(xv[j] - eps, v));
                if (cfg.clamp_to_range) v = std::min(cfg.clamp_hi, std::max(cfg.clamp_lo, v));
                av[j] = v;
            }
        }
        batch.perturbed.push_back(adv);
    }
    record_distances(batch);
    return batch;
}

}  // namespace

AdversarialBatch fgsm(const ForecastModel& model, std::span<const Tensor> inputs,
                      std::span<const Tensor> targets, double epsilon) {
    AttackConfig cfg;
    cfg.kind = AttackKind::fgsm;
    cfg.epsilon = epsilon;
    return attack_impl(model, inputs, targets, cfg);
}

AdversarialBatch bim(const ForecastModel& model, std::span<const Tensor> inputs,
                     std::span<const Tensor> targets, double epsilon, double alpha,
                     std::optional<int> iterations) {
    AttackConfig cfg;
    cfg.kind = AttackKind::bim;
    cfg.epsilon = epsilon;
    cfg.alpha = alpha;
    cfg.iterations = iterations;
    return attack_impl(model, inputs, targets, cfg);
}

AdversarialBatch run_attack(const ForecastModel& model, const WindowedDataset& dataset,
                            const AttackConfig& cfg) {
    if (dataset.empty()) throw Error("run_attack: dataset is empty");
    AdversarialBatch batch = attack_impl(model, dataset.inputs, dataset.targets, cfg);
    batch.feature_names = dataset.feature_names;
    return batch;
}

WindowedDataset to_dataset(const AdversarialBatch& batch, const WindowedDataset& source,
                           const std::string& split_suffix) {
    if (batch.size() != source.size())
        throw Error("to_dataset: batch/dataset size mismatch");
    WindowedDataset out = source;
    out.inputs = batch.perturbed;
    out.split_name = source.split_name + split_suffix;
    return out;
}

PerturbationStats imperceptibility_report(const AdversarialBatch& batch) {
    if (batch.size() == 0) throw Error("imperceptibility_report: empty batch");
    const std::size_t features = batch.clean.front().cols();
    const std::size_t steps = batch.clean.front().rows();
    PerturbationStats stats;
    stats.per_feature.assign(features, {});
    std::vector<double> linf_sum(features, 0.0), l2_sum(features, 0.0);

    for (std::size_t s = 0; s < batch.size(); ++s) {
        const Tensor& c = batch.clean[s];
        const Tensor& p = batch.perturbed[s];
        for (std::size_t f = 0; f < features; ++f) {
            PerturbationStats::Row row;
            row.sample = s;
            row.feature = f;
            double sq = 0.0, abs_sum = 0.0;
            for (std::size_t t = 0; t < steps; ++t) {
                const double d = std::abs(p.at(t, f) - c.at(t, f));
                row.linf = std::max(row.linf, d);
                sq += d * d;
                abs_sum += d;
            }
            row.l2 = std::sqrt(sq);
            row.mean_abs = abs_sum / static_cast<double>(steps);
            row.clean_last = c.at(steps - 1, f);
            row.perturbed_last = p.at(steps - 1, f);
            stats.rows.push_back(row);

            auto& agg = stats.per_feature[f];
            agg.max_linf = std::max(agg.max_linf, row.linf);
            agg.max_l2 = std::max(agg.max_l2, row.l2);
            linf_sum[f] += row.linf;
            l2_sum[f] += row.l2;
            stats.max_linf_overall = std::max(stats.max_linf_overall, row.linf);
        }
    }
    for (std::size_t f = 0; f < features; ++f) {
        stats.per_feature[f].mean_linf = linf_sum[f] / static_cast<double>(batch.size());
        stats.per_feature[f].mean_l2 = l2_sum[f] / static_cast<double>(batch.size());
    }
    return stats;
}

void write_adversarial_csv(const AdversarialBatch& batch, const std::string& clean_path,
                           const std::string& perturbed_path) {
    auto write_side = [&](const std::vector<Tensor>& side, const std::string& path) {
        std::ofstream out(path);
        if (!out) throw Error("write_adversarial_csv: cannot open '" + path + "'");
        if (batch.size() == 0) throw Error("write_adversarial_csv: empty batch");
        const std::size_t steps = side.front().rows();
        const std::size_t features = side.front().cols();
        out << "sample";
        for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t f = 0; f < features; ++f) {
                const std::string name = f < batch.feature_names.size()
                                             ? batch.feature_names[f]
                                             : "f" + std::to_string(f);
                out << ",t" << t << "_" << name;
            }
        out << '\n';
        for (std::size_t s = 0; s < side.size(); ++s) {
            out << s;
            for (double v : side[s].data()) out << ',' << format_double(v);
            out << '\n';
        }
    };
    write_side(batch.clean, clean_path);
    write_side(batch.perturbed, perturbed_path);
}

std::string imperceptibility_json(const PerturbationStats& stats, const AttackConfig& cfg) {
    nlohmann::json j;
    j["attack"] = to_string(cfg.kind);
    j["epsilon"] = cfg.epsilon;
    j["alpha"] = cfg.alpha;
    j["max_linf_overall"] = stats.max_linf_overall;
    j["per_feature"] = nlohmann::json::array();
    for (std::size_t f = 0; f < stats.per_feature.size(); ++f) {
        const auto& agg = stats.per_feature[f];
        j["per_feature"].push_back({{"feature", f},
                                    {"max_linf", agg.max_linf},
                                    {"mean_linf", agg.mean_linf},
                                    {"max_l2", agg.max_l2},
                                    {"mean_l2", agg.mean_l2}});
    }
    j["rows"] = stats.rows.size();
    return j.dump(2);
}

}  // namespace tsadv
