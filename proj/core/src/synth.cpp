#include "tsadv/synth.hpp"

#include <cmath>
#include <numbers>

namespace tsadv {

SeriesFrame synth_seasonal(const SeasonalParams& p, std::uint64_t seed) {
    if (p.n_samples == 0 || p.n_features == 0 || p.period == 0)
        throw Error("synth_seasonal: sizes must be positive");
    if (p.noise_sigma < 0.0) throw Error("synth_seasonal: noise sigma must be >= 0");

    RngStream phase_rng = stream_for(seed, "seasonal-phases");
    RngStream noise_rng = stream_for(seed, "seasonal-noise");

    SeriesFrame frame;
    frame.source_id = "synthetic-seasonal";
    frame.target = "target";
    frame.columns.push_back("target");
    std::vector<double> shifts, weights;
    for (std::size_t f = 1; f < p.n_features; ++f) {
        frame.columns.push_back("feature_" + std::to_string(f));
        shifts.push_back(phase_rng.uniform(0.0, 1.0));
        weights.push_back(phase_rng.uniform(0.5, 1.0));
    }
    frame.values.assign(p.n_features, {});

    constexpr std::int64_t kDay = 24 * 60 * 60;
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t t = 0; t < p.n_samples; ++t) {
        frame.timestamps.push_back(static_cast<std::int64_t>(t) * kDay);
        // phase from (t mod period) keeps sigma=0 series exactly periodic
        const double phase =
            static_cast<double>(t % p.period) / static_cast<double>(p.period);
        const double base = std::sin(two_pi * phase) + 0.5 * std::sin(2.0 * two_pi * phase);
        double target = 0.5 + p.amplitude * base;
        if (p.noise_sigma > 0.0) target += p.noise_sigma * noise_rng.normal();
        frame.values[0].push_back(target);
        for (std::size_t f = 1; f < p.n_features; ++f) {
            const double fphase = phase + shifts[f - 1];
            double v = 0.5 + p.amplitude * weights[f - 1] * std::sin(two_pi * fphase);
            if (p.noise_sigma > 0.0) v += p.noise_sigma * noise_rng.normal();
            frame.values[f].push_back(v);
        }
    }
    frame.validate();
    return frame;
}

DriveLog synth_degradation(const DegradationParams& p, std::uint64_t seed) {
    if (p.n_serials == 0 || p.n_features == 0)
        throw Error("synth_degradation: sizes must be positive");
    if (p.min_life_days < 2 || p.max_life_days < p.min_life_days)
        throw Error("synth_degradation: life range invalid");

    DriveLog log;
    log.model = "SYNTH0001";
    for (std::size_t f = 0; f < p.n_features; ++f)
        log.feature_names.push_back("smart_" + std::to_string(1 + 4 * f) + "_raw");
    log.features.assign(p.n_features, {});

    RngStream life_rng = stream_for(seed, "degradation-life");
    const std::int64_t base_date = days_from_civil(2022, 1, 1);

    for (std::size_t s = 0; s < p.n_serials; ++s) {
        char name[24];
        std::snprintf(name, sizeof(name), "SN%06zu", s);
        log.serial_names.push_back(name);
        const std::size_t life =
            p.min_life_days + static_cast<std::size_t>(life_rng.uniform_index(
                                  p.max_life_days - p.min_life_days + 1));
        RngStream serial_rng = stream_for(seed, "degradation-serial", s);
        std::vector<double> baseline(p.n_features), slope(p.n_features);
        for (std::size_t f = 0; f < p.n_features; ++f) {
            baseline[f] = serial_rng.uniform(50.0, 150.0);
            slope[f] = p.drift_scale * serial_rng.uniform(0.5, 1.5) *
                       (f % 2 == 0 ? 1.0 : -1.0);
        }
        const double onset = 0.7 * static_cast<double>(life);
        for (std::size_t day = 0; day < life; ++day) {
            log.serial_ids.push_back(static_cast<std::uint32_t>(s));
            log.dates.push_back(base_date + static_cast<std::int64_t>(day));
            log.capacity_bytes.push_back(4.0e12);
            log.failure.push_back(day + 1 == life ? 1 : 0);
            const double past_onset = std::max(0.0, static_cast<double>(day) - onset);
            for (std::size_t f = 0; f < p.n_features; ++f) {
                double v = baseline[f] + slope[f] * past_onset;
                if (p.noise_sigma > 0.0) v += p.noise_sigma * serial_rng.normal();
                log.features[f].push_back(v);
            }
        }
    }
    log.validate();
    return log;
}

}  // namespace tsadv
