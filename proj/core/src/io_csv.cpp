#include "tsadv/io_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace tsadv {

// Howard Hinnant's algorithm.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, unsigned& month, unsigned& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = doy - (153 * mp + 2) / 5 + 1;
    month = mp + (mp < 10 ? 3 : -9);
    year = static_cast<int>(y + (month <= 2));
}

namespace {

constexpr std::int64_t kDaySeconds = 24 * 60 * 60;

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_numeric(const std::string& s, const char* what, std::size_t line_no) {
    if (s.empty() || s == "?") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error(std::string(what) + ": line " + std::to_string(line_no) +
                    ": malformed numeric field '" + s + "'");
    return v;
}

long parse_long(const std::string& s, const char* what, std::size_t line_no) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error(std::string(what) + ": line " + std::to_string(line_no) +
                    ": malformed integer field '" + s + "'");
    return v;
}

// dd/mm/yyyy + hh:mm:ss -> seconds since epoch
std::int64_t parse_electricity_timestamp(const std::string& date, const std::string& time,
                                         std::size_t line_no) {
    unsigned d = 0, mo = 0, h = 0, mi = 0, s = 0;
    int y = 0;
    if (std::sscanf(date.c_str(), "%u/%u/%d", &d, &mo, &y) != 3 || mo < 1 || mo > 12 || d < 1 ||
        d > 31)
        throw Error("load_electricity: line " + std::to_string(line_no) + ": bad date '" + date +
                    "' (expected dd/mm/yyyy)");
    if (std::sscanf(time.c_str(), "%u:%u:%u", &h, &mi, &s) != 3 || h > 23 || mi > 59 || s > 60)
        throw Error("load_electricity: line " + std::to_string(line_no) + ": bad time '" + time +
                    "' (expected hh:mm:ss)");
    return days_from_civil(y, mo, d) * kDaySeconds + h * 3600 + mi * 60 + s;
}

std::int64_t parse_iso_date(const std::string& date, const char* what, std::size_t line_no) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(date.c_str(), "%d-%u-%u", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 ||
        d > 31)
        throw Error(std::string(what) + ": line " + std::to_string(line_no) + ": bad date '" +
                    date + "' (expected YYYY-MM-DD)");
    return days_from_civil(y, m, d);
}

}  // namespace

SeriesFrame load_electricity(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_electricity: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw Error("load_electricity: '" + path + "' is empty");
    auto header = split_line(line, ';');
    if (header.size() < 3 || header[0] != "Date" || header[1] != "Time")
        throw Error("load_electricity: unexpected header in '" + path +
                    "' (expected Date;Time;<numeric columns>)");

    SeriesFrame frame;
    frame.source_id = path;
    frame.columns.assign(header.begin() + 2, header.end());
    frame.values.assign(frame.columns.size(), {});

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_line(line, ';');
        if (fields.size() != header.size())
            throw Error("load_electricity: line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
        frame.timestamps.push_back(parse_electricity_timestamp(fields[0], fields[1], line_no));
        for (std::size_t c = 0; c < frame.columns.size(); ++c)
            frame.values[c].push_back(parse_numeric(fields[c + 2], "load_electricity", line_no));
    }
    if (frame.rows() == 0) throw Error("load_electricity: '" + path + "' has no data rows");
    frame.validate();
    return frame;
}

void write_electricity_csv(const SeriesFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_electricity_csv: cannot open '" + path + "'");
    out << "Date;Time";
    for (const auto& c : frame.columns) out << ';' << c;
    out << '\n';
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        const std::int64_t ts = frame.timestamps[r];
        std::int64_t days = ts >= 0 ? ts / kDaySeconds : (ts - kDaySeconds + 1) / kDaySeconds;
        const std::int64_t rem = ts - days * kDaySeconds;
        int y;
        unsigned mo, d;
        civil_from_days(days, y, mo, d);
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%02u/%02u/%04d;%02lld:%02lld:%02lld", d, mo, y,
                      static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                      static_cast<long long>(rem % 60));
        out << buf;
        for (std::size_t c = 0; c < frame.values.size(); ++c) {
            const double v = frame.values[c][r];
            out << ';' << (std::isnan(v) ? std::string("?") : format_double(v));
        }
        out << '\n';
    }
}

void DriveLog::validate() const {
    const std::size_t n = rows();
    if (serial_ids.size() != n || failure.size() != n || capacity_bytes.size() != n)
        throw Error("DriveLog: column length mismatch");
    for (const auto& col : features)
        if (col.size() != n) throw Error("DriveLog: feature column length mismatch");
    for (auto id : serial_ids)
        if (id >= serial_names.size()) throw Error("DriveLog: serial id out of range");
}

namespace {

DriveLog load_hdd_stream(std::istream& in, const std::string& what,
                         const std::string& model_filter, DriveLog log) {
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw Error(what + ": empty file");
    auto header = split_line(line, ',');
    const std::vector<std::string> fixed = {"date", "serial_number", "model", "capacity_bytes",
                                            "failure"};
    if (header.size() < fixed.size())
        throw Error(what + ": header has fewer than the 5 required columns");
    for (std::size_t i = 0; i < fixed.size(); ++i)
        if (header[i] != fixed[i])
            throw Error(what + ": expected column '" + fixed[i] + "' at position " +
                        std::to_string(i) + ", got '" + header[i] + "'");
    std::vector<std::string> smart_cols(header.begin() + fixed.size(), header.end());

    if (log.feature_names.empty()) {
        log.feature_names = smart_cols;
        log.features.assign(smart_cols.size(), {});
    } else if (log.feature_names != smart_cols) {
        throw Error(what + ": smart column set differs from previously loaded files");
    }

    std::unordered_map<std::string, std::uint32_t> serial_index;
    for (std::size_t i = 0; i < log.serial_names.size(); ++i)
        serial_index[log.serial_names[i]] = static_cast<std::uint32_t>(i);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_line(line, ',');
        if (fields.size() != header.size())
            throw Error(what + ": line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
        if (!model_filter.empty() && fields[2] != model_filter) continue;
        log.dates.push_back(parse_iso_date(fields[0], what.c_str(), line_no));
        auto [it, inserted] =
            serial_index.try_emplace(fields[1], static_cast<std::uint32_t>(log.serial_names.size()));
        if (inserted) log.serial_names.push_back(fields[1]);
        log.serial_ids.push_back(it->second);
        log.capacity_bytes.push_back(parse_numeric(fields[3], what.c_str(), line_no));
        const long fail = parse_long(fields[4], what.c_str(), line_no);
        if (fail != 0 && fail != 1)
            throw Error(what + ": line " + std::to_string(line_no) + ": failure must be 0 or 1");
        log.failure.push_back(static_cast<std::uint8_t>(fail));
        for (std::size_t c = 0; c < log.feature_names.size(); ++c)
            log.features[c].push_back(
                parse_numeric(fields[5 + c], what.c_str(), line_no));
    }
    return log;
}

DriveLog sort_by_serial_then_date(DriveLog log) {
    std::vector<std::size_t> order(log.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (log.serial_ids[a] != log.serial_ids[b]) return log.serial_ids[a] < log.serial_ids[b];
        return log.dates[a] < log.dates[b];
    });
    auto permute = [&](auto& col) {
        std::remove_reference_t<decltype(col)> next(col.size());
        for (std::size_t i = 0; i < order.size(); ++i) next[i] = col[order[i]];
        col = std::move(next);
    };
    permute(log.serial_ids);
    permute(log.dates);
    permute(log.capacity_bytes);
    permute(log.failure);
    for (auto& col : log.features) permute(col);
    return log;
}

}  // namespace

DriveLog load_hdd_csv(const std::string& path, const std::string& model_filter) {
    std::ifstream in(path);
    if (!in) throw Error("load_hdd_csv: cannot open '" + path + "'");
    DriveLog log;
    log.model = model_filter;
    log = load_hdd_stream(in, "load_hdd_csv(" + path + ")", model_filter, std::move(log));
    log = sort_by_serial_then_date(std::move(log));
    log.validate();
    return log;
}

DriveLog load_hdd_dir(const std::string& dir, const std::string& model_filter) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error("load_hdd_dir: '" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    if (files.empty()) throw Error("load_hdd_dir: no .csv files in '" + dir + "'");
    std::sort(files.begin(), files.end());
    DriveLog log;
    log.model = model_filter;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw Error("load_hdd_dir: cannot open '" + f.string() + "'");
        log = load_hdd_stream(in, "load_hdd_dir(" + f.filename().string() + ")", model_filter,
                              std::move(log));
    }
    log = sort_by_serial_then_date(std::move(log));
    log.validate();
    return log;
}

void write_hdd_csv(const DriveLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_hdd_csv: cannot open '" + path + "'");
    out << "date,serial_number,model,capacity_bytes,failure";
    for (const auto& c : log.feature_names) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < log.rows(); ++r) {
        int y;
        unsigned m, d;
        civil_from_days(log.dates[r], y, m, d);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
        out << buf << ',' << log.serial_names[log.serial_ids[r]] << ',' << log.model << ','
            << format_double(log.capacity_bytes[r]) << ',' << int(log.failure[r]);
        for (const auto& col : log.features) {
            const double v = col[r];
            out << ',' << (std::isnan(v) ? std::string() : format_double(v));
        }
        out << '\n';
    }
}

DriveLog drop_sparse(const DriveLog& log, double min_coverage) {
    const std::size_t n = log.rows();
    if (n == 0) throw Error("drop_sparse: empty log");
    DriveLog out;
    out.model = log.model;
    out.serial_names = log.serial_names;

    std::vector<std::size_t> kept_cols;
    for (std::size_t c = 0; c < log.features.size(); ++c) {
        std::size_t observed = 0;
        for (double v : log.features[c])
            if (!std::isnan(v)) ++observed;
        if (static_cast<double>(observed) >= min_coverage * static_cast<double>(n))
            kept_cols.push_back(c);
    }
    if (kept_cols.empty()) throw Error("drop_sparse: no feature column meets coverage");
    for (std::size_t c : kept_cols) out.feature_names.push_back(log.feature_names[c]);
    out.features.assign(kept_cols.size(), {});

    for (std::size_t r = 0; r < n; ++r) {
        bool ok = true;
        for (std::size_t c : kept_cols)
            if (std::isnan(log.features[c][r])) {
                ok = false;
                break;
            }
        if (!ok) continue;
        out.serial_ids.push_back(log.serial_ids[r]);
        out.dates.push_back(log.dates[r]);
        out.capacity_bytes.push_back(log.capacity_bytes[r]);
        out.failure.push_back(log.failure[r]);
        for (std::size_t k = 0; k < kept_cols.size(); ++k)
            out.features[k].push_back(log.features[kept_cols[k]][r]);
    }
    if (out.rows() == 0) throw Error("drop_sparse: every row was dropped");
    return out;
}

CsvTable read_csv(const std::string& path, char delimiter) {
    std::ifstream in(path);
    if (!in) throw Error("read_csv: cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw Error("read_csv: '" + path + "' is empty");
    table.header = split_line(line, delimiter);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        table.rows.push_back(split_line(line, delimiter));
    }
    return table;
}

void write_csv(const std::string& path, const CsvTable& table, char delimiter) {
    std::ofstream out(path);
    if (!out) throw Error("write_csv: cannot open '" + path + "'");
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << delimiter;
        out << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << delimiter;
            out << row[i];
        }
        out << '\n';
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

}  // namespace tsadv
