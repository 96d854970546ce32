#pragma once

#include "tsadv/io_csv.hpp"
#include "tsadv/series.hpp"

namespace tsadv {

/// Remaining-useful-life label for one (serial, day) row. RUL counts days
/// until the recorded failure: 1 on the day before failure, up to `horizon`.
struct RulLabel {
    std::uint32_t serial_id = 0;
    std::int64_t date = 0;  // days since epoch
    double rul = 0.0;
    std::size_t horizon = 0;
};

/// Labels each failed serial's last `horizon` days before its failure date
/// by date arithmetic (rul = failure_date - date). Days outside the horizon
/// and serials without a failure produce no labels. A serial with more than
/// one failure day is an error.
std::vector<RulLabel> label_rul(const DriveLog& log, std::size_t horizon);

/// Assembles the labeled rows into a windowing-ready frame: smart features
/// plus a "rul" target column, one segment per serial so windows never cross
/// drive boundaries. Serials contributing fewer labeled days than `horizon`
/// keep their shorter segment (windowing skips segments shorter than L).
SeriesFrame build_rul_frame(const DriveLog& log, std::size_t horizon);

}  // namespace tsadv
