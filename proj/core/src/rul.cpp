#include "tsadv/rul.hpp"

#include <cmath>
#include <unordered_map>

namespace tsadv {

std::vector<RulLabel> label_rul(const DriveLog& log, std::size_t horizon) {
    if (horizon == 0) throw Error("label_rul: horizon must be positive");
    log.validate();

    std::unordered_map<std::uint32_t, std::int64_t> failure_date;
    for (std::size_t r = 0; r < log.rows(); ++r) {
        if (!log.failure[r]) continue;
        auto [it, inserted] = failure_date.try_emplace(log.serial_ids[r], log.dates[r]);
        if (!inserted)
            throw Error("label_rul: serial '" + log.serial_names[log.serial_ids[r]] +
                        "' has more than one failure day");
    }

    std::vector<RulLabel> labels;
    for (std::size_t r = 0; r < log.rows(); ++r) {
        auto it = failure_date.find(log.serial_ids[r]);
        if (it == failure_date.end()) continue;
        const std::int64_t days_left = it->second - log.dates[r];
        if (days_left < 1 || days_left > static_cast<std::int64_t>(horizon)) continue;
        labels.push_back({log.serial_ids[r], log.dates[r], static_cast<double>(days_left), horizon});
    }
    return labels;
}

SeriesFrame build_rul_frame(const DriveLog& log, std::size_t horizon) {
    const auto labels = label_rul(log, horizon);
    if (labels.empty()) throw Error("build_rul_frame: no labeled rows (no failed serials?)");

    // Map (serial, date) -> label for the row filter. Log rows are already
    // sorted by serial then date, so emitting in row order groups segments.
    std::unordered_map<std::uint64_t, double> labeled;
    auto key = [](std::uint32_t serial, std::int64_t date) {
        return (static_cast<std::uint64_t>(serial) << 32) ^
               static_cast<std::uint64_t>(date & 0xffffffff);
    };
    for (const auto& l : labels) labeled.emplace(key(l.serial_id, l.date), l.rul);

    SeriesFrame frame;
    frame.columns = log.feature_names;
    frame.columns.push_back("rul");
    frame.values.assign(frame.columns.size(), {});
    frame.target = "rul";
    frame.source_id = "rul-horizon-" + std::to_string(horizon);

    std::uint32_t current_serial = 0;
    bool in_segment = false;
    std::size_t segment_begin = 0;
    for (std::size_t r = 0; r < log.rows(); ++r) {
        auto it = labeled.find(key(log.serial_ids[r], log.dates[r]));
        if (it == labeled.end()) continue;
        if (!in_segment || log.serial_ids[r] != current_serial) {
            if (in_segment) frame.segments.push_back({segment_begin, frame.rows()});
            segment_begin = frame.rows();
            current_serial = log.serial_ids[r];
            in_segment = true;
        }
        frame.timestamps.push_back(log.dates[r] * 24 * 60 * 60);
        for (std::size_t c = 0; c < log.feature_names.size(); ++c)
            frame.values[c].push_back(log.features[c][r]);
        frame.values.back().push_back(it->second);
    }
    if (in_segment) frame.segments.push_back({segment_begin, frame.rows()});
    frame.validate();
    return frame;
}

}  // namespace tsadv
