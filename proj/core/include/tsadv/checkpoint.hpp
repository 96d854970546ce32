#pragma once

#include <memory>
#include <string>

#include "tsadv/model.hpp"

namespace tsadv {

/// Versioned binary checkpoint: magic + format version, architecture
/// descriptor, then every parameter (name, dims, little-endian float64
/// payload) in the model's declared order. load(save(m)) evaluates
/// bitwise-identically to m. Version or magic mismatches and truncated
/// files raise structured errors instead of crashing.
void save_checkpoint(const ForecastModel& model, const std::string& path);
std::unique_ptr<ForecastModel> load_checkpoint(const std::string& path);

/// FNV-1a over the file bytes; recorded as the checkpoint id in reports.
std::uint64_t file_hash(const std::string& path);

}  // namespace tsadv
