#include "tsadv/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>

namespace tsadv {

double normalize_value(const NormParams& p, double v) {
    if (p.col_max == p.col_min) return p.lo;
    return p.lo + (p.hi - p.lo) * (v - p.col_min) / (p.col_max - p.col_min);
}

double denormalize_value(const NormParams& p, double v) {
    if (p.hi == p.lo) return p.col_min;
    return p.col_min + (p.col_max - p.col_min) * (v - p.lo) / (p.hi - p.lo);
}

std::size_t SeriesFrame::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw Error("SeriesFrame: no column named '" + name + "'");
}

const std::vector<double>& SeriesFrame::column(const std::string& name) const {
    return values[column_index(name)];
}

std::vector<std::pair<std::size_t, std::size_t>> SeriesFrame::effective_segments() const {
    if (!segments.empty()) return segments;
    return {{0, rows()}};
}

std::size_t SeriesFrame::missing_count() const {
    std::size_t n = 0;
    for (const auto& col : values)
        for (double v : col)
            if (std::isnan(v)) ++n;
    return n;
}

void SeriesFrame::validate() const {
    for (std::size_t c = 0; c < values.size(); ++c)
        if (values[c].size() != rows())
            throw Error("SeriesFrame: column '" + columns[c] + "' length " +
                        std::to_string(values[c].size()) + " != " + std::to_string(rows()));
    if (columns.size() != values.size())
        throw Error("SeriesFrame: column name/value count mismatch");
    if (!target.empty()) column_index(target);
    for (auto [b, e] : effective_segments()) {
        if (b > e || e > rows()) throw Error("SeriesFrame: segment out of range");
        for (std::size_t r = b + 1; r < e; ++r)
            if (timestamps[r] <= timestamps[r - 1])
                throw Error("SeriesFrame: timestamps not strictly increasing at row " +
                            std::to_string(r));
    }
}

SeriesFrame impute_column_mean(const SeriesFrame& frame) {
    SeriesFrame out = frame;
    for (std::size_t c = 0; c < out.values.size(); ++c) {
        auto& col = out.values[c];
        double sum = 0.0;
        std::size_t count = 0;
        for (double v : col)
            if (!std::isnan(v)) {
                sum += v;
                ++count;
            }
        if (count == 0)
            throw Error("impute_column_mean: column '" + out.columns[c] + "' has no observed values");
        if (count == col.size()) continue;  // untouched, bitwise
        const double mean = sum / static_cast<double>(count);
        for (double& v : col)
            if (std::isnan(v)) v = mean;
    }
    return out;
}

SeriesFrame resample_daily_mean(const SeriesFrame& frame) {
    if (!frame.segments.empty() && frame.segments.size() != 1)
        throw Error("resample_daily_mean: segmented frames are not supported");
    SeriesFrame out;
    out.columns = frame.columns;
    out.target = frame.target;
    out.source_id = frame.source_id;
    out.values.assign(frame.values.size(), {});

    // ordered map keeps calendar order even if input rows were unsorted
    std::map<std::int64_t, std::pair<std::vector<double>, std::vector<std::size_t>>> days;
    constexpr std::int64_t kDay = 24 * 60 * 60;
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        std::int64_t ts = frame.timestamps[r];
        std::int64_t day = ts >= 0 ? ts / kDay : (ts - kDay + 1) / kDay;
        auto& [sums, counts] = days[day];
        if (sums.empty()) {
            sums.assign(frame.values.size(), 0.0);
            counts.assign(frame.values.size(), 0);
        }
        for (std::size_t c = 0; c < frame.values.size(); ++c) {
            double v = frame.values[c][r];
            if (std::isnan(v)) continue;
            sums[c] += v;
            counts[c] += 1;
        }
    }
    for (const auto& [day, agg] : days) {
        out.timestamps.push_back(day * kDay);
        const auto& [sums, counts] = agg;
        for (std::size_t c = 0; c < out.values.size(); ++c)
            out.values[c].push_back(counts[c] > 0 ? sums[c] / static_cast<double>(counts[c])
                                                  : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

namespace {

SeriesFrame normalize_impl(const SeriesFrame& frame, const std::vector<std::size_t>& col_idx,
                           double lo, double hi, std::vector<std::string>* warnings) {
    if (!(hi > lo)) throw Error("minmax_normalize: hi must exceed lo");
    SeriesFrame out = frame;
    if (out.norm.empty()) out.norm.assign(out.values.size(), NormParams{});
    for (std::size_t c : col_idx) {
        auto& col = out.values[c];
        double mn = std::numeric_limits<double>::infinity();
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : col) {
            if (std::isnan(v)) throw Error("minmax_normalize: column '" + out.columns[c] +
                                           "' contains missing values; impute first");
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        NormParams p{mn, mx, lo, hi};
        if (mx == mn) {
            if (warnings)
                warnings->push_back("constant column '" + out.columns[c] + "' mapped to " +
                                    std::to_string(lo));
            for (double& v : col) v = lo;
        } else {
            for (double& v : col) v = normalize_value(p, v);
        }
        out.norm[c] = p;
    }
    return out;
}

}  // namespace

SeriesFrame minmax_normalize(const SeriesFrame& frame, double lo, double hi,
                             std::vector<std::string>* warnings) {
    std::vector<std::size_t> all(frame.values.size());
    std::iota(all.begin(), all.end(), 0);
    return normalize_impl(frame, all, lo, hi, warnings);
}

SeriesFrame minmax_normalize(const SeriesFrame& frame, const std::vector<std::string>& cols,
                             double lo, double hi, std::vector<std::string>* warnings) {
    std::vector<std::size_t> idx;
    idx.reserve(cols.size());
    for (const auto& name : cols) idx.push_back(frame.column_index(name));
    return normalize_impl(frame, idx, lo, hi, warnings);
}

Tensor correlation_matrix(const SeriesFrame& frame, std::vector<std::string>* warnings) {
    const std::size_t f = frame.n_columns();
    const std::size_t n = frame.rows();
    if (n < 2) throw Error("correlation_matrix: need at least 2 samples");
    std::vector<double> means(f, 0.0), sds(f, 0.0);
    for (std::size_t c = 0; c < f; ++c) {
        double s = 0.0;
        for (double v : frame.values[c]) {
            if (std::isnan(v)) throw Error("correlation_matrix: column '" + frame.columns[c] +
                                           "' contains missing values");
            s += v;
        }
        means[c] = s / static_cast<double>(n);
        double ss = 0.0;
        for (double v : frame.values[c]) ss += (v - means[c]) * (v - means[c]);
        sds[c] = std::sqrt(ss);
        if (sds[c] == 0.0 && warnings)
            warnings->push_back("zero-variance column '" + frame.columns[c] +
                                "': correlations set to 0");
    }
    std::vector<double> corr(f * f, 0.0);
    for (std::size_t a = 0; a < f; ++a) {
        corr[a * f + a] = 1.0;
        for (std::size_t b = a + 1; b < f; ++b) {
            double num = 0.0;
            for (std::size_t r = 0; r < n; ++r)
                num += (frame.values[a][r] - means[a]) * (frame.values[b][r] - means[b]);
            double val = (sds[a] == 0.0 || sds[b] == 0.0) ? 0.0 : num / (sds[a] * sds[b]);
            corr[a * f + b] = val;
            corr[b * f + a] = val;
        }
    }
    return Tensor::from_data({f, f}, std::move(corr));
}

SeriesFrame select_features(const SeriesFrame& frame, std::size_t top_m) {
    if (top_m == 0 || top_m > frame.n_columns())
        throw Error("select_features: top_m must be in [1, column count]");
    if (frame.target.empty()) throw Error("select_features: frame has no target column");
    Tensor corr = correlation_matrix(frame);
    const std::size_t f = frame.n_columns();
    const std::size_t t = frame.column_index(frame.target);
    std::vector<std::size_t> order(f);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(corr.at(t, a)) > std::abs(corr.at(t, b));
    });
    std::vector<bool> keep(f, false);
    for (std::size_t i = 0; i < top_m; ++i) keep[order[i]] = true;
    keep[t] = true;  // target column always survives

    SeriesFrame out;
    out.timestamps = frame.timestamps;
    out.target = frame.target;
    out.segments = frame.segments;
    out.source_id = frame.source_id;
    for (std::size_t c = 0; c < f; ++c) {
        if (!keep[c]) continue;
        out.columns.push_back(frame.columns[c]);
        out.values.push_back(frame.values[c]);
        if (!frame.norm.empty()) out.norm.push_back(frame.norm[c]);
    }
    return out;
}

std::string to_string(WindowMode m) {
    return m == WindowMode::next_step ? "next-step" : "sequence";
}

WindowedDataset WindowedDataset::slice(std::size_t begin, std::size_t end,
                                       const std::string& split) const {
    if (begin > end || end > size()) throw Error("WindowedDataset::slice: range out of bounds");
    WindowedDataset out;
    out.inputs.assign(inputs.begin() + begin, inputs.begin() + end);
    out.targets.assign(targets.begin() + begin, targets.begin() + end);
    out.lookback = lookback;
    out.mode = mode;
    out.feature_names = feature_names;
    out.source_id = source_id;
    out.split_name = split;
    return out;
}

WindowedDataset WindowedDataset::clone_data() const {
    WindowedDataset out = *this;
    for (auto& t : out.inputs) t = t.clone();
    for (auto& t : out.targets) t = t.clone();
    return out;
}

std::uint64_t WindowedDataset::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const Tensor& t) {
        for (double v : t.data()) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xff;
                h *= 0x100000001b3ULL;
            }
        }
    };
    for (const auto& t : inputs) feed(t);
    for (const auto& t : targets) feed(t);
    return h;
}

WindowedDataset make_windows(const SeriesFrame& frame, std::size_t lookback, WindowMode mode) {
    if (lookback == 0) throw Error("make_windows: look-back must be positive");
    frame.validate();
    if (frame.target.empty()) throw Error("make_windows: frame has no target column");
    const std::size_t target_col = frame.column_index(frame.target);

    WindowedDataset out;
    out.lookback = lookback;
    out.mode = mode;
    out.source_id = frame.source_id;

    std::vector<std::size_t> feat_idx;
    for (std::size_t c = 0; c < frame.n_columns(); ++c) {
        if (mode == WindowMode::sequence && c == target_col) continue;
        feat_idx.push_back(c);
        out.feature_names.push_back(frame.columns[c]);
    }
    if (feat_idx.empty()) throw Error("make_windows: no feature columns");
    const std::size_t f = feat_idx.size();

    auto cut_input = [&](std::size_t first_row) {
        std::vector<double> w(lookback * f);
        for (std::size_t i = 0; i < lookback; ++i)
            for (std::size_t j = 0; j < f; ++j)
                w[i * f + j] = frame.values[feat_idx[j]][first_row + i];
        return Tensor::from_data({lookback, f}, std::move(w));
    };

    for (auto [b, e] : frame.effective_segments()) {
        const std::size_t len = e - b;
        if (mode == WindowMode::next_step) {
            if (len < lookback + 1) continue;
            for (std::size_t t = b + lookback; t < e; ++t) {
                out.inputs.push_back(cut_input(t - lookback));
                out.targets.push_back(
                    Tensor::from_data({1, 1}, {frame.values[target_col][t]}));
            }
        } else {
            if (len < lookback) continue;
            for (std::size_t t = b; t + lookback <= e; ++t) {
                out.inputs.push_back(cut_input(t));
                std::vector<double> y(lookback);
                for (std::size_t i = 0; i < lookback; ++i)
                    y[i] = frame.values[target_col][t + i];
                out.targets.push_back(Tensor::from_data({1, lookback}, std::move(y)));
            }
        }
    }
    if (out.inputs.empty())
        throw Error("make_windows: frame too short for look-back " + std::to_string(lookback));
    return out;
}

FoldPlan walk_forward_splits(std::size_t n_samples, std::size_t k) {
    if (k < 2) throw Error("walk_forward_splits: need k >= 2 folds");
    if (n_samples < k + 1)
        throw Error("walk_forward_splits: " + std::to_string(n_samples) +
                    " samples cannot fill " + std::to_string(k + 1) + " blocks");
    FoldPlan plan;
    plan.n_samples = n_samples;
    plan.k = k;
    const std::size_t block = n_samples / (k + 1);
    for (std::size_t i = 0; i < k; ++i) {
        Fold fold;
        fold.train_begin = 0;
        fold.train_end = (i + 1) * block;
        fold.val_begin = fold.train_end;
        fold.val_end = (i + 2 == k + 1) ? n_samples : (i + 2) * block;
        plan.folds.push_back(fold);
    }
    return plan;
}

SplitRanges train_val_test_split(std::size_t n, double train_frac, double val_frac,
                                 double test_frac) {
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw Error("train_val_test_split: fractions must sum to 1");
    SplitRanges r;
    r.n = n;
    r.train_end = static_cast<std::size_t>(train_frac * static_cast<double>(n));
    r.val_end = static_cast<std::size_t>((train_frac + val_frac) * static_cast<double>(n));
    if (r.train_end == 0 || r.val_end <= r.train_end || r.val_end >= n)
        throw Error("train_val_test_split: a split is empty for n = " + std::to_string(n));
    return r;
}

}  // namespace tsadv
