#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsadv/tensor.hpp"

namespace tsadv {

/// Per-column min-max normalization record, kept so values can be mapped
/// back to original units. v' = lo + (hi-lo)*(v-min)/(max-min).
struct NormParams {
    double col_min = 0.0;
    double col_max = 0.0;
    double lo = 0.0;
    double hi = 1.0;
};

double normalize_value(const NormParams& p, double v);
double denormalize_value(const NormParams& p, double v);

/// Timestamp-indexed multivariate series, column-major. Missing cells are
/// NaN until imputation. `segments` marks contiguous row ranges that windows
/// must not cross (one range per drive serial for RUL frames); when empty
/// the whole frame is a single segment. Timestamps are strictly increasing
/// within each segment.
struct SeriesFrame {
    std::vector<std::int64_t> timestamps;     // seconds since epoch
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  // values[c][r]
    std::string target;
    std::vector<NormParams> norm;             // per column once normalized
    std::vector<std::pair<std::size_t, std::size_t>> segments;  // [begin, end)
    std::string source_id;

    std::size_t rows() const { return timestamps.size(); }
    std::size_t n_columns() const { return columns.size(); }
    std::size_t column_index(const std::string& name) const;
    const std::vector<double>& column(const std::string& name) const;
    std::vector<std::pair<std::size_t, std::size_t>> effective_segments() const;
    std::size_t missing_count() const;
    /// Checks column lengths, target presence, and per-segment timestamp
    /// monotonicity; throws Error on violation.
    void validate() const;
};

/// Replaces every NaN cell with the arithmetic mean of that column's
/// observed values. A column with no observed value is an error.
SeriesFrame impute_column_mean(const SeriesFrame& frame);

/// One row per calendar day (UTC), each cell the mean of that day's rows.
SeriesFrame resample_daily_mean(const SeriesFrame& frame);

/// Min-max normalization of every column (or the named subset) into
/// [lo, hi], storing inversion parameters. Constant columns map to lo and
/// are reported through `warnings` when provided.
SeriesFrame minmax_normalize(const SeriesFrame& frame, double lo, double hi,
                             std::vector<std::string>* warnings = nullptr);
SeriesFrame minmax_normalize(const SeriesFrame& frame, const std::vector<std::string>& cols,
                             double lo, double hi, std::vector<std::string>* warnings = nullptr);

/// Pearson correlation, {F,F}, diagonal exactly 1. Zero-variance columns
/// correlate 0 with everything (warning emitted when collector provided).
Tensor correlation_matrix(const SeriesFrame& frame, std::vector<std::string>* warnings = nullptr);

/// Keeps the top_m columns ranked by |corr with target| (the target itself
/// always ranks first). Column order of the original frame is preserved.
SeriesFrame select_features(const SeriesFrame& frame, std::size_t top_m);

enum class WindowMode { next_step, sequence };

std::string to_string(WindowMode m);

/// Supervised pairs cut from a frame with stride 1, never crossing segment
/// boundaries. next_step: inputs are rows t-L..t-1 over all columns
/// (including the target's past values), target is the target column at t.
/// sequence: inputs are rows t..t+L-1 over the non-target columns, targets
/// are the target values of those same rows (shape {1,L}).
struct WindowedDataset {
    std::vector<Tensor> inputs;   // {L,F}
    std::vector<Tensor> targets;  // {1,1} or {1,L}
    std::size_t lookback = 0;
    WindowMode mode = WindowMode::next_step;
    std::vector<std::string> feature_names;
    std::string source_id;
    std::string split_name;

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }
    std::size_t feature_count() const { return feature_names.size(); }
    WindowedDataset slice(std::size_t begin, std::size_t end, const std::string& split) const;
    /// Deep copy of all tensors (fresh identities).
    WindowedDataset clone_data() const;
    /// Content hash over inputs and targets, for provenance records.
    std::uint64_t content_hash() const;
};

WindowedDataset make_windows(const SeriesFrame& frame, std::size_t lookback, WindowMode mode);

/// Expanding-window temporal cross-validation: samples are cut into k+1
/// contiguous blocks of equal size (remainder joins the last block); fold i
/// trains on blocks 0..i and validates on block i+1.
struct Fold {
    std::size_t train_begin = 0, train_end = 0;
    std::size_t val_begin = 0, val_end = 0;
};
struct FoldPlan {
    std::size_t n_samples = 0;
    std::size_t k = 0;
    std::vector<Fold> folds;
};
FoldPlan walk_forward_splits(std::size_t n_samples, std::size_t k);

/// Contiguous temporal split; fractions must sum to 1 and every split must
/// be nonempty. Returns [0,train_end), [train_end,val_end), [val_end,n).
struct SplitRanges {
    std::size_t train_end = 0;
    std::size_t val_end = 0;
    std::size_t n = 0;
};
SplitRanges train_val_test_split(std::size_t n, double train_frac, double val_frac,
                                 double test_frac);

}  // namespace tsadv
