#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tfct/alignment.hpp"
#include "tfct/dataset_io.hpp"
#include "tfct/layout.hpp"

namespace tfct {

struct DatasetInfo {
  std::int32_t steps = 0;
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::vector<std::string> labels;
  double global_min = 0.0;
  double global_max = 0.0;
  std::uint64_t hash = 0;

  bool operator==(const DatasetInfo&) const = default;
};

DatasetInfo dataset_info(const TimeSeriesDataset& dataset);

struct PrecomputeOptions {
  MatchMetric metric;
  std::int32_t seed_step = 0;
  double simplify = 0.0;  // persistence threshold applied to every contour tree
  AnnealingOptions annealing;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Overall alignment and layout of a dataset.
struct Precomputed {
  DatasetInfo info;
  MatchMetric metric;
  std::int32_t seed_step = 0;
  double simplify = 0.0;
  std::uint64_t layout_seed = 42;
  int sweeps = 200;
  double cooling = 0.95;
  AlignmentTree alignment;
  Layout layout;
};

// Contour trees of all steps, computed in parallel.
std::vector<MemberTree> member_trees(const TimeSeriesDataset& dataset, double simplify, unsigned threads = 0);

// Throws std::invalid_argument for an empty dataset or a seed step out of range.
Precomputed precompute(const TimeSeriesDataset& dataset, const PrecomputeOptions& options);

// Cache layout: "TFCA", u32 version, dataset info, options, alignment node
// table (id, kind, value, parent, color key, members), branch positions.
// Little endian. Matching attributes are not stored, so a loaded alignment
// cannot be extended with align_pair.
inline constexpr std::uint32_t kCacheVersion = 1;

std::vector<std::uint8_t> encode_cache(const Precomputed& p);
Precomputed decode_cache(const std::vector<std::uint8_t>& bytes);  // throws DataError
void save_cache(const Precomputed& p, const std::filesystem::path& path);
Precomputed load_cache(const std::filesystem::path& path);
bool is_cache_file(const std::filesystem::path& path);

// TFCT_CACHE_DIR, or ".tfct_cache" under the working directory.
std::filesystem::path cache_directory();
// "<dataset hash>-<metric>-s<seed>.tfca"; combined adds the weight.
// Other options are stored inside the file and checked on load.
std::string cache_file_name(std::uint64_t dataset_hash, const MatchMetric& metric, std::int32_t seed_step);

// Loads the cache for these options if present and matching, otherwise
// computes and stores it.
Precomputed cached_precompute(const TimeSeriesDataset& dataset, const PrecomputeOptions& options);

}  // namespace tfct
