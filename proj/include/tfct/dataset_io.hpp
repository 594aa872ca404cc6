#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tfct/grid.hpp"

namespace tfct {

enum class DatasetFormat { tfts, csv_dir };

DatasetFormat parse_dataset_format(std::string_view name);

// tfts layout: "TFTS", u32 version (1), u32 T, u32 width, u32 height, then
// T*width*height little-endian IEEE-754 doubles, time-major, row-major.
inline constexpr std::uint32_t kTftsVersion = 1;

TimeSeriesDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_tfts(const TimeSeriesDataset& dataset, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_tfts(const TimeSeriesDataset& dataset);
TimeSeriesDataset decode_tfts(const std::vector<std::uint8_t>& bytes);

// One grid from a CSV file: rows are grid rows, comma separated decimals.
ScalarGrid read_csv_grid(const std::filesystem::path& path);
void write_csv_grid(const ScalarGrid& grid, const std::filesystem::path& path);
// Writes t0.csv, t1.csv, ... into dir (created if missing).
void save_csv_dir(const TimeSeriesDataset& dataset, const std::filesystem::path& dir);

// Boolean mask stored as a CSV grid; nonzero entries are kept cells.
struct Mask {
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::vector<bool> keep;
};
Mask read_mask_csv(const std::filesystem::path& path);

// 3x3 box filter applied `passes` times; border cells average the neighbours
// that exist.
ScalarGrid smooth(const ScalarGrid& grid, int passes);

ScalarGrid apply_mask(const ScalarGrid& grid, const Mask& mask, double fill);

enum class SyntheticKind { moving_gaussian, periodic_blob, two_peaks };

SyntheticKind parse_synthetic_kind(std::string_view name);

// Deterministic test fields on a tilted plane that falls from the (0,0)
// corner. periodic_blob carries a secondary Gaussian exactly at steps with
// t mod period < period / 2.
TimeSeriesDataset generate_synthetic(SyntheticKind kind, int steps, std::int32_t width, std::int32_t height,
                                     int period = 12);

// Whether periodic_blob shows its secondary peak at step t.
inline bool periodic_secondary_present(int t, int period) { return 2 * (t % period) < period; }

// FNV-1a over the canonical tfts encoding.
std::uint64_t dataset_hash(const TimeSeriesDataset& dataset);

}  // namespace tfct
