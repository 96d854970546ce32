#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsadv/series.hpp"

namespace tsadv {

/// Proleptic-Gregorian conversions (no timezone), days relative to
/// 1970-01-01.
std::int64_t days_from_civil(int year, unsigned month, unsigned day);
void civil_from_days(std::int64_t days, int& year, unsigned& month, unsigned& day);

/// UCI household power dialect: semicolon delimiter, header row, first two
/// columns Date (dd/mm/yyyy) and Time (hh:mm:ss), remaining columns numeric,
/// literal "?" (or empty) marks a missing cell. Malformed rows and rows with
/// a deviating field count are errors naming the line number.
SeriesFrame load_electricity(const std::string& path);
void write_electricity_csv(const SeriesFrame& frame, const std::string& path);

/// Backblaze SMART dialect: comma delimiter, header row with columns
/// date (YYYY-MM-DD), serial_number, model, capacity_bytes, failure, then
/// smart_* columns. Rows are grouped by serial and sorted by date.
struct DriveLog {
    std::vector<std::string> serial_names;      // index = serial id
    std::vector<std::uint32_t> serial_ids;      // per row
    std::vector<std::int64_t> dates;            // days since epoch
    std::vector<double> capacity_bytes;         // per row
    std::vector<std::uint8_t> failure;          // per row
    std::vector<std::string> feature_names;     // smart columns
    std::vector<std::vector<double>> features;  // features[c][r], NaN missing
    std::string model;

    std::size_t rows() const { return dates.size(); }
    std::size_t serial_count() const { return serial_names.size(); }
    void validate() const;
};

/// Reads one file, keeping only rows whose model column equals model_filter
/// (empty filter keeps everything).
DriveLog load_hdd_csv(const std::string& path, const std::string& model_filter);
/// Reads every *.csv in a directory (sorted by name) and merges.
DriveLog load_hdd_dir(const std::string& dir, const std::string& model_filter);
void write_hdd_csv(const DriveLog& log, const std::string& path);

/// Drops feature columns observed on fewer than min_coverage of rows, then
/// drops rows that still carry a missing value in a kept column.
DriveLog drop_sparse(const DriveLog& log, double min_coverage = 0.99);

/// Small generic CSV layer for tables and plot files. Doubles are written
/// with round-trip precision so emitted files read back bitwise.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path, char delimiter = ',');
void write_csv(const std::string& path, const CsvTable& table, char delimiter = ',');
std::string format_double(double v);

}  // namespace tsadv
