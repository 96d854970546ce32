#pragma once

#include "tsadv/io_csv.hpp"
#include "tsadv/rng.hpp"
#include "tsadv/series.hpp"

namespace tsadv {

/// Desk-scale stand-in for the electricity data: a strictly periodic target
/// with phase-shifted companion features plus optional Gaussian noise. With
/// noise_sigma == 0 the series is exactly periodic (values depend only on
/// t mod period). Deterministic given the seed.
struct SeasonalParams {
    std::size_t n_samples = 600;
    std::size_t n_features = 4;  // including the target column
    std::size_t period = 24;
    double amplitude = 0.3;
    double noise_sigma = 0.02;
};
SeriesFrame synth_seasonal(const SeasonalParams& params, std::uint64_t seed);

/// Desk-scale stand-in for the SMART logs: per-serial daily readings that
/// drift as the failure day approaches; the failure flag is set on each
/// serial's final day. Deterministic given the seed.
struct DegradationParams {
    std::size_t n_serials = 100;
    std::size_t min_life_days = 30;
    std::size_t max_life_days = 90;  // failure day drawn uniformly per serial
    std::size_t n_features = 5;
    double noise_sigma = 1.0;
    double drift_scale = 2.0;
};
DriveLog synth_degradation(const DegradationParams& params, std::uint64_t seed);

}  // namespace tsadv
