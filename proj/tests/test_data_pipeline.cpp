#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tsadv/io_csv.hpp"
#include "tsadv/rng.hpp"
#include "tsadv/rul.hpp"
#include "tsadv/series.hpp"
#include "tsadv/synth.hpp"

using namespace tsadv;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "tsadv-tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

SeriesFrame tiny_frame(std::vector<double> target, std::string target_name = "t") {
    SeriesFrame f;
    f.target = target_name;
    f.columns = {target_name};
    for (std::size_t i = 0; i < target.size(); ++i)
        f.timestamps.push_back(static_cast<std::int64_t>(i) * 86400);
    f.values = {std::move(target)};
    return f;
}

}  // namespace

TEST_CASE("electricity loader parses the UCI dialect") {
    auto path = temp_file("elec.csv");
    {
        std::ofstream out(path);
        out << "Date;Time;Global_active_power;Global_reactive_power;Voltage;Global_intensity;"
               "Sub_metering_1;Sub_metering_2;Sub_metering_3\n";
        out << "16/12/2006;17:24:00;4.216;0.418;234.840;18.400;0.000;1.000;17.000\n";
        out << "16/12/2006;17:25:00;?;0.436;233.630;23.000;0.000;1.000;16.000\n";
    }
    SeriesFrame f = load_electricity(path.string());
    CHECK(f.rows() == 2);
    CHECK(f.n_columns() == 7);
    CHECK(f.columns[0] == "Global_active_power");
    CHECK(f.timestamps[0] == days_from_civil(2006, 12, 16) * 86400 + 17 * 3600 + 24 * 60);
    CHECK(f.values[0][0] == 4.216);
    CHECK(f.values[6][0] == 17.0);
    CHECK(std::isnan(f.values[0][1]));  // "?" becomes a missing marker
    CHECK(f.missing_count() == 1);

    SeriesFrame imputed = impute_column_mean(f);
    CHECK(imputed.missing_count() == 0);
    CHECK(imputed.values[0][1] == 4.216);  // mean of the single observed value
}

TEST_CASE("electricity loader error paths") {
    auto empty = temp_file("empty.csv");
    std::ofstream(empty.string()).close();
    CHECK_THROWS_AS(load_electricity(empty.string()), Error);

    auto bad = temp_file("bad.csv");
    {
        std::ofstream out(bad);
        out << "Date;Time;A\n";
        out << "01/01/2020;00:00:00;1.0;extra\n";
    }
    CHECK_THROWS_WITH_AS(load_electricity(bad.string()),
                         "load_electricity: line 2: expected 3 fields, got 4", Error);

    auto malformed = temp_file("malformed.csv");
    {
        std::ofstream out(malformed);
        out << "Date;Time;A\n";
        out << "01/01/2020;00:00:00;oops\n";
    }
    CHECK_THROWS_AS(load_electricity(malformed.string()), Error);
    CHECK_THROWS_AS(load_electricity("/nonexistent/never.csv"), Error);
}

TEST_CASE("impute_column_mean") {
    SeriesFrame f = tiny_frame({1.0, std::nan(""), 3.0});
    SeriesFrame imputed = impute_column_mean(f);
    CHECK(imputed.values[0] == std::vector<double>{1.0, 2.0, 3.0});

    // untouched column stays bitwise identical
    SeriesFrame clean = tiny_frame({0.25, 0.5, 0.75});
    CHECK(impute_column_mean(clean).values[0] == clean.values[0]);

    SeriesFrame all_missing = tiny_frame({std::nan(""), std::nan("")});
    CHECK_THROWS_WITH_AS(impute_column_mean(all_missing),
                         "impute_column_mean: column 't' has no observed values", Error);

    // observed-mean preservation (integers are exact)
    SeriesFrame mixed = tiny_frame({2.0, std::nan(""), 4.0, 6.0, std::nan("")});
    SeriesFrame fixed = impute_column_mean(mixed);
    double sum = 0.0;
    for (double v : fixed.values[0]) sum += v;
    CHECK(sum / 5.0 == 4.0);
}

TEST_CASE("resample_daily_mean") {
    SeriesFrame f;
    f.columns = {"a"};
    f.target = "a";
    f.timestamps = {0, 60, 86400 + 10};
    f.values = {{2.0, 4.0, 9.0}};
    SeriesFrame daily = resample_daily_mean(f);
    CHECK(daily.rows() == 2);
    CHECK(daily.values[0][0] == 3.0);
    CHECK(daily.values[0][1] == 9.0);
    CHECK(daily.timestamps[0] == 0);
    CHECK(daily.timestamps[1] == 86400);
}

TEST_CASE("minmax normalization and round-trip inversion") {
    SeriesFrame f = tiny_frame({0.0, 5.0, 10.0});
    SeriesFrame n = minmax_normalize(f, 0.0, 1.0);
    CHECK(n.values[0] == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(n.norm[0].col_min == 0.0);
    CHECK(n.norm[0].col_max == 10.0);

    std::vector<std::string> warnings;
    SeriesFrame constant = tiny_frame({7.0, 7.0});
    SeriesFrame cn = minmax_normalize(constant, 0.0, 1.0, &warnings);
    CHECK(cn.values[0] == std::vector<double>{0.0, 0.0});
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("constant column 't'") != std::string::npos);

    RngStream rng(13, "norm");
    std::vector<double> raw(257);
    for (auto& v : raw) v = rng.uniform(-40.0, 90.0);
    SeriesFrame r = tiny_frame(raw);
    SeriesFrame rn = minmax_normalize(r, 0.0, 255.0);
    for (std::size_t i = 0; i < raw.size(); ++i)
        CHECK(std::abs(denormalize_value(rn.norm[0], rn.values[0][i]) - raw[i]) < 1e-12);

    CHECK_THROWS_AS(minmax_normalize(f, 1.0, 1.0), Error);
}

TEST_CASE("label_rul matches the date-arithmetic description") {
    DegradationParams p;
    p.n_serials = 1;
    p.min_life_days = 10;
    p.max_life_days = 10;
    DriveLog log = synth_degradation(p, 42);
    REQUIRE(log.rows() == 10);
    // failure on the serial's last day (index 9); horizon 5 labels days 4..8
    auto labels = label_rul(log, 5);
    REQUIRE(labels.size() == 5);
    const std::int64_t failure_date = log.dates[9];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CHECK(labels[i].rul == static_cast<double>(5 - i));
        CHECK(labels[i].date == failure_date - (5 - static_cast<std::int64_t>(i)));
    }
}

TEST_CASE("label_rul: no failure, no labels; double failure is an error") {
    DegradationParams p;
    p.n_serials = 1;
    p.min_life_days = 8;
    p.max_life_days = 8;
    DriveLog log = synth_degradation(p, 7);
    log.failure[log.rows() - 1] = 0;  // healthy serial
    CHECK(label_rul(log, 5).empty());

    DriveLog twice = synth_degradation(p, 7);
    twice.failure[3] = 1;
    CHECK_THROWS_AS(label_rul(twice, 5), Error);
}

TEST_CASE("label_rul equals the brute-force oracle on a synthetic fleet") {
    DegradationParams p;
    p.n_serials = 100;
    p.min_life_days = 12;
    p.max_life_days = 60;
    DriveLog log = synth_degradation(p, 2024);
    for (std::size_t horizon : {5u, 15u, 25u}) {
        auto labels = label_rul(log, horizon);
        // oracle: failure date per serial, then direct date subtraction
        std::vector<std::int64_t> failure_date(log.serial_count(), -1);
        for (std::size_t r = 0; r < log.rows(); ++r)
            if (log.failure[r]) failure_date[log.serial_ids[r]] = log.dates[r];
        std::size_t expected = 0;
        for (std::size_t r = 0; r < log.rows(); ++r) {
            const std::int64_t fd = failure_date[log.serial_ids[r]];
            if (fd < 0) continue;
            const std::int64_t left = fd - log.dates[r];
            if (left >= 1 && left <= static_cast<std::int64_t>(horizon)) ++expected;
        }
        CHECK(labels.size() == expected);
        for (const auto& l : labels)
            CHECK(l.rul == static_cast<double>(failure_date[l.serial_id] - l.date));
    }
}

TEST_CASE("make_windows: next-step example and counting oracle") {
    SeriesFrame f = tiny_frame({1, 2, 3, 4, 5});
    WindowedDataset ds = make_windows(f, 2, WindowMode::next_step);
    REQUIRE(ds.size() == 3);  // len - L
    CHECK(ds.inputs[0].at(0, 0) == 1.0);
    CHECK(ds.inputs[0].at(1, 0) == 2.0);
    CHECK(ds.targets[0].value() == 3.0);
    CHECK(ds.targets[2].value() == 5.0);

    for (std::size_t len : {5u, 9u, 23u}) {
        for (std::size_t lb : {1u, 3u, 7u}) {
            if (len < lb + 1) continue;
            std::vector<double> v(len);
            for (std::size_t i = 0; i < len; ++i) v[i] = static_cast<double>(i);
            CHECK(make_windows(tiny_frame(v), lb, WindowMode::next_step).size() == len - lb);
        }
    }
    CHECK_THROWS_AS(make_windows(tiny_frame({1, 2}), 2, WindowMode::next_step), Error);
    CHECK_THROWS_AS(make_windows(tiny_frame({1, 2, 3}), 0, WindowMode::next_step), Error);
}

TEST_CASE("make_windows: no-leakage ordering invariant") {
    // values encode the row index, so window contents expose their rows
    std::vector<double> v(40);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    WindowedDataset ds = make_windows(tiny_frame(v), 5, WindowMode::next_step);
    for (std::size_t w = 0; w < ds.size(); ++w) {
        const double target_row = ds.targets[w].value();
        for (std::size_t t = 0; t < 5; ++t) CHECK(ds.inputs[w].at(t, 0) < target_row);
    }
}

TEST_CASE("make_windows: sequence mode respects serial segments") {
    SeriesFrame f;
    f.columns = {"feat", "rul"};
    f.target = "rul";
    // two serials: rows 0..5 and 6..11, feature value encodes global row index
    for (std::size_t i = 0; i < 12; ++i) {
        f.timestamps.push_back(static_cast<std::int64_t>(i % 6) * 86400);
    }
    f.values.resize(2);
    for (std::size_t i = 0; i < 12; ++i) {
        f.values[0].push_back(static_cast<double>(i));
        f.values[1].push_back(static_cast<double>(6 - (i % 6)));
    }
    f.segments = {{0, 6}, {6, 12}};
    WindowedDataset ds = make_windows(f, 4, WindowMode::sequence);
    CHECK(ds.size() == 6);  // (6-4+1) per segment
    CHECK(ds.feature_names == std::vector<std::string>{"feat"});  // target excluded
    for (std::size_t w = 0; w < ds.size(); ++w) {
        CHECK(ds.targets[w].shape() == std::vector<std::size_t>{1, 4});
        const double first = ds.inputs[w].at(0, 0);
        const double last = ds.inputs[w].at(3, 0);
        CHECK(last - first == 3.0);  // contiguous rows
        // never straddles the 5/6 boundary
        CHECK((last < 6.0 || first >= 6.0));
    }
}

TEST_CASE("walk_forward_splits: enumeration oracle and invariants") {
    FoldPlan plan = walk_forward_splits(12, 3);
    REQUIRE(plan.folds.size() == 3);
    CHECK(plan.folds[0].train_begin == 0);
    CHECK(plan.folds[0].train_end == 3);
    CHECK(plan.folds[0].val_begin == 3);
    CHECK(plan.folds[0].val_end == 6);
    CHECK(plan.folds[1].train_end == 6);
    CHECK(plan.folds[1].val_end == 9);
    CHECK(plan.folds[2].train_end == 9);
    CHECK(plan.folds[2].val_end == 12);

    for (std::size_t n : {12u, 37u, 100u, 1400u}) {
        for (std::size_t k : {2u, 3u, 5u, 10u}) {
            if (n < k + 1) continue;
            FoldPlan p = walk_forward_splits(n, k);
            REQUIRE(p.folds.size() == k);
            const std::size_t block = n / (k + 1);  // oracle block arithmetic
            std::size_t prev_train = 0;
            for (std::size_t i = 0; i < k; ++i) {
                const auto& fold = p.folds[i];
                CHECK(fold.train_begin == 0);
                CHECK(fold.train_end == (i + 1) * block);
                CHECK(fold.val_begin == fold.train_end);
                CHECK(fold.val_end == (i + 1 == k ? n : (i + 2) * block));
                CHECK(fold.train_end > prev_train);  // expanding train window
                CHECK(fold.train_end <= fold.val_begin);  // temporal order
                prev_train = fold.train_end;
            }
        }
    }
    CHECK_THROWS_AS(walk_forward_splits(3, 3), Error);
    CHECK_THROWS_AS(walk_forward_splits(100, 1), Error);
}

TEST_CASE("train_val_test_split") {
    SplitRanges r = train_val_test_split(100, 0.8, 0.1, 0.1);
    CHECK(r.train_end == 80);
    CHECK(r.val_end == 90);
    CHECK(r.n == 100);

    SplitRanges s = train_val_test_split(10, 0.6, 0.2, 0.2);
    CHECK(s.train_end == 6);
    CHECK(s.val_end == 8);

    CHECK_THROWS_AS(train_val_test_split(100, 0.8, 0.1, 0.2), Error);
    CHECK_THROWS_AS(train_val_test_split(2, 0.8, 0.1, 0.1), Error);
}

TEST_CASE("correlation matrix and feature selection") {
    SeriesFrame f;
    f.columns = {"target", "double", "noise", "negated", "flat"};
    f.target = "target";
    RngStream rng(21, "corr");
    std::vector<double> t(64);
    for (auto& v : t) v = rng.uniform(0.0, 1.0);
    std::vector<double> noise(64);
    for (auto& v : noise) v = rng.uniform(0.0, 1.0);
    std::vector<double> doubled(64), negated(64);
    for (std::size_t i = 0; i < 64; ++i) {
        doubled[i] = 2.0 * t[i] + 1.0;
        negated[i] = -t[i];
        f.timestamps.push_back(static_cast<std::int64_t>(i));
    }
    f.values = {t, doubled, noise, negated, std::vector<double>(64, 3.0)};

    std::vector<std::string> warnings;
    Tensor corr = correlation_matrix(f, &warnings);
    CHECK(corr.at(0, 0) == 1.0);
    CHECK(corr.at(1, 1) == 1.0);
    CHECK(corr.at(0, 1) == doctest::Approx(1.0));
    CHECK(corr.at(0, 3) == doctest::Approx(-1.0));
    CHECK(std::abs(corr.at(0, 2)) < 0.5);
    CHECK(corr.at(0, 4) == 0.0);  // zero variance
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("flat") != std::string::npos);

    SeriesFrame selected = select_features(f, 3);
    CHECK(selected.columns == std::vector<std::string>{"target", "double", "negated"});
    CHECK_THROWS_AS(select_features(f, 0), Error);
    CHECK_THROWS_AS(select_features(f, 99), Error);
}

TEST_CASE("synthetic seasonal series") {
    SeasonalParams p;
    p.n_samples = 96;
    p.period = 24;
    p.noise_sigma = 0.0;
    SeriesFrame noiseless = synth_seasonal(p, 5);
    for (std::size_t c = 0; c < noiseless.n_columns(); ++c)
        for (std::size_t t = 0; t + p.period < p.n_samples; ++t)
            CHECK(noiseless.values[c][t] == noiseless.values[c][t + p.period]);  // exact

    p.noise_sigma = 0.05;
    SeriesFrame a = synth_seasonal(p, 5);
    SeriesFrame b = synth_seasonal(p, 5);
    CHECK(a.values == b.values);  // bitwise
    SeriesFrame c = synth_seasonal(p, 6);
    CHECK(a.values != c.values);
    CHECK_THROWS_AS(synth_seasonal(SeasonalParams{.n_samples = 0}, 1), Error);
}

TEST_CASE("synthetic degradation log") {
    DegradationParams p;
    p.n_serials = 3;
    DriveLog log = synth_degradation(p, 17);
    std::size_t failures = 0;
    for (auto fl : log.failure) failures += fl;
    CHECK(failures == 3);
    CHECK(log.serial_count() == 3);

    DriveLog again = synth_degradation(p, 17);
    CHECK(log.features == again.features);
    CHECK(log.dates == again.dates);
    CHECK_THROWS_AS(synth_degradation(DegradationParams{.min_life_days = 1}, 1), Error);
}

TEST_CASE("electricity CSV round-trip") {
    SeasonalParams p;
    p.n_samples = 48;
    p.n_features = 3;
    SeriesFrame frame = synth_seasonal(p, 77);
    frame.values[1][5] = std::nan("");  // keep a missing marker in the cycle
    auto path = temp_file("roundtrip.csv");
    write_electricity_csv(frame, path.string());
    SeriesFrame back = load_electricity(path.string());
    REQUIRE(back.rows() == frame.rows());
    CHECK(back.columns == frame.columns);
    CHECK(back.timestamps == frame.timestamps);
    for (std::size_t c = 0; c < frame.n_columns(); ++c)
        for (std::size_t r = 0; r < frame.rows(); ++r) {
            if (std::isnan(frame.values[c][r]))
                CHECK(std::isnan(back.values[c][r]));
            else
                CHECK(back.values[c][r] == frame.values[c][r]);  // %.17g round-trips
        }
}

TEST_CASE("hdd CSV round-trip and model filter") {
    DegradationParams p;
    p.n_serials = 4;
    p.min_life_days = 6;
    p.max_life_days = 12;
    DriveLog log = synth_degradation(p, 31);
    auto path = temp_file("hdd.csv");
    write_hdd_csv(log, path.string());

    DriveLog back = load_hdd_csv(path.string(), "SYNTH0001");
    REQUIRE(back.rows() == log.rows());
    CHECK(back.feature_names == log.feature_names);
    CHECK(back.features == log.features);
    CHECK(back.dates == log.dates);
    CHECK(back.failure == log.failure);

    DriveLog filtered = load_hdd_csv(path.string(), "OTHER");
    CHECK(filtered.rows() == 0);

    auto dir = temp_file("hdd-dir");
    std::filesystem::create_directories(dir);
    write_hdd_csv(log, (dir / "2022-01-01.csv").string());
    DriveLog merged = load_hdd_dir(dir.string(), "SYNTH0001");
    CHECK(merged.rows() == log.rows());
}

TEST_CASE("hdd directory loader merges per-day files into per-serial runs") {
    auto dir = temp_file("hdd-days");
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    // Backblaze layout: one file per day, every serial in each file
    auto write_day = [&](const std::string& name, const std::string& date, double v) {
        std::ofstream out(dir / name);
        out << "date,serial_number,model,capacity_bytes,failure,smart_1_raw\n";
        out << date << ",SNB,M1,1000,0," << v + 1 << "\n";
        out << date << ",SNA,M1,1000,0," << v << "\n";
    };
    write_day("2022-01-02.csv", "2022-01-02", 20.0);
    write_day("2022-01-01.csv", "2022-01-01", 10.0);

    DriveLog log = load_hdd_dir(dir.string(), "M1");
    REQUIRE(log.rows() == 4);
    // grouped by serial, dates ascending inside each group
    for (std::size_t r = 1; r < log.rows(); ++r) {
        if (log.serial_ids[r] == log.serial_ids[r - 1])
            CHECK(log.dates[r] > log.dates[r - 1]);
        else
            CHECK(log.serial_ids[r] > log.serial_ids[r - 1]);
    }
    const auto sna = std::find(log.serial_names.begin(), log.serial_names.end(), "SNA");
    REQUIRE(sna != log.serial_names.end());
    CHECK(load_hdd_dir(dir.string(), "OTHER").rows() == 0);

    // column-set drift across files is an error
    {
        std::ofstream out(dir / "2022-01-03.csv");
        out << "date,serial_number,model,capacity_bytes,failure,smart_9_raw\n";
        out << "2022-01-03,SNA,M1,1000,0,1\n";
    }
    CHECK_THROWS_AS(load_hdd_dir(dir.string(), "M1"), Error);
}

TEST_CASE("drop_sparse: coverage filter then row drops") {
    DegradationParams p;
    p.n_serials = 2;
    p.min_life_days = 10;
    p.max_life_days = 10;
    DriveLog log = synth_degradation(p, 3);
    // feature 0: one missing row (95% coverage); feature 1: mostly missing
    log.features[0][4] = std::nan("");
    for (std::size_t r = 0; r < log.rows(); r += 2) log.features[1][r] = std::nan("");

    DriveLog cleaned = drop_sparse(log, 0.9);
    CHECK(cleaned.feature_names.size() == log.feature_names.size() - 1);
    CHECK(cleaned.rows() == log.rows() - 1);
    for (const auto& col : cleaned.features)
        for (double v : col) CHECK(!std::isnan(v));
}

TEST_CASE("build_rul_frame: one segment per failed serial") {
    DegradationParams p;
    p.n_serials = 5;
    p.min_life_days = 8;
    p.max_life_days = 20;
    DriveLog log = synth_degradation(p, 91);
    SeriesFrame frame = build_rul_frame(log, 5);
    CHECK(frame.segments.size() == 5);
    for (auto [b, e] : frame.segments) CHECK(e - b == 5);
    CHECK(frame.target == "rul");

    WindowedDataset ds = make_windows(frame, 5, WindowMode::sequence);
    CHECK(ds.size() == 5);  // one window per serial at L == horizon
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.targets[i].at(0, 0) == 5.0);
        CHECK(ds.targets[i].at(0, 4) == 1.0);
    }
}
