#pragma once

#include "risklab/snapshot.hpp"

#include <string>
#include <vector>

namespace risklab {

// Snapshot container, little-endian throughout:
//   magic "RLLSNAP1"
//   u32 array count
//   per array: u16 name length, name bytes, u8 rank, u32 dims[rank],
//              f64 values (row-major)
//   u32 metadata length, UTF-8 JSON object (string values)
//   u32 CRC-32 of everything before it
// Arrays named *.running_mean / *.running_var load as non-trainable.
void save_snapshot(const WeightSnapshot& snap, const std::string& path);
WeightSnapshot load_snapshot(const std::string& path);

// Sorted *.snap paths directly inside dir.
std::vector<std::string> list_snapshots(const std::string& dir);

} // namespace risklab
