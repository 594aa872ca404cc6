#include "tfct/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include "bytes.hpp"

namespace tfct {

namespace fs = std::filesystem;

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "tfts") return DatasetFormat::tfts;
  if (name == "csv_dir" || name == "csv") return DatasetFormat::csv_dir;
  throw std::invalid_argument("unknown dataset format '" + std::string(name) + "'");
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "moving_gaussian") return SyntheticKind::moving_gaussian;
  if (name == "periodic_blob") return SyntheticKind::periodic_blob;
  if (name == "two_peaks") return SyntheticKind::two_peaks;
  throw std::invalid_argument("unknown synthetic dataset '" + std::string(name) + "'");
}

namespace {

using bytes::put_f64;
using bytes::put_u32;

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<double>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      auto end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      auto first = line.data() + start;
      auto last = line.data() + end;
      while (first < last && (*first == ' ' || *first == '\t')) ++first;
      while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
      if (first < last && *first == '+') ++first;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" +
                        std::string(first, last) + "'");
      }
      row.push_back(v);
      start = end + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": empty grid");
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw DataError(path.string() + ": ragged rows");
  }
  return rows;
}

}  // namespace

std::vector<std::uint8_t> encode_tfts(const TimeSeriesDataset& dataset) {
  std::vector<std::uint8_t> out;
  out.reserve(20 + dataset.steps() * static_cast<std::size_t>(dataset.width() * dataset.height()) * 8);
  out.insert(out.end(), {'T', 'F', 'T', 'S'});
  put_u32(out, kTftsVersion);
  put_u32(out, static_cast<std::uint32_t>(dataset.steps()));
  put_u32(out, static_cast<std::uint32_t>(dataset.width()));
  put_u32(out, static_cast<std::uint32_t>(dataset.height()));
  for (const auto& g : dataset.grids) {
    for (double v : g.values) put_f64(out, v);
  }
  return out;
}

TimeSeriesDataset decode_tfts(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "TFTS")) {
    throw DataError("not a tfts file (bad magic)");
  }
  const std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  bytes::Cursor cur(body, "tfts");
  const auto version = cur.u32();
  if (version != kTftsVersion) throw DataError("unsupported tfts version " + std::to_string(version));
  const auto steps = cur.u32();
  const auto width = cur.u32();
  const auto height = cur.u32();
  if (steps == 0) throw DataError("dataset has no time steps");
  if (width < 2 || height < 2 || width > (1u << 15) || height > (1u << 15)) {
    throw DataError("invalid tfts dimensions " + std::to_string(width) + "x" + std::to_string(height));
  }
  const std::size_t per_step = static_cast<std::size_t>(width) * height;
  if (body.size() != 16 + per_step * steps * 8) throw DataError("tfts payload size does not match header");
  TimeSeriesDataset ds;
  ds.grids.reserve(steps);
  for (std::uint32_t t = 0; t < steps; ++t) {
    std::vector<double> vals(per_step);
    for (auto& v : vals) v = cur.f64();
    ds.grids.emplace_back(static_cast<std::int32_t>(width), static_cast<std::int32_t>(height), std::move(vals));
  }
  ds.finalize();
  return ds;
}

void save_tfts(const TimeSeriesDataset& dataset, const fs::path& path) {
  const auto bytes = encode_tfts(dataset);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

ScalarGrid read_csv_grid(const fs::path& path) {
  const auto rows = read_csv_rows(path);
  std::vector<double> vals;
  for (const auto& r : rows) vals.insert(vals.end(), r.begin(), r.end());
  return ScalarGrid(static_cast<std::int32_t>(rows.front().size()), static_cast<std::int32_t>(rows.size()),
                    std::move(vals));
}

void write_csv_grid(const ScalarGrid& grid, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[32];
  for (std::int32_t y = 0; y < grid.height; ++y) {
    for (std::int32_t x = 0; x < grid.width; ++x) {
      if (x) out << ',';
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, grid.at(x, y));
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

void save_csv_dir(const TimeSeriesDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < dataset.steps(); ++t) {
    write_csv_grid(dataset.grids[t], dir / ("t" + std::to_string(t) + ".csv"));
  }
}

TimeSeriesDataset load_dataset(const fs::path& path, DatasetFormat format) {
  if (!fs::exists(path)) throw DataError("no such file or directory: " + path.string());
  if (format == DatasetFormat::tfts) return decode_tfts(read_file(path));

  if (!fs::is_directory(path)) throw DataError(path.string() + " is not a directory");
  static const std::regex name_re(R"(t(\d+)\.csv)");
  std::map<long, fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    const auto name = entry.path().filename().string();
    std::smatch m;
    if (entry.is_regular_file() && std::regex_match(name, m, name_re)) {
      const long idx = std::stol(m[1].str());
      if (!files.emplace(idx, entry.path()).second) throw DataError("duplicate step index " + m[1].str());
    }
  }
  if (files.empty()) throw DataError("no t{index}.csv files in " + path.string());
  TimeSeriesDataset ds;
  long expected = 0;
  for (const auto& [idx, file] : files) {
    if (idx != expected) throw DataError("missing step t" + std::to_string(expected) + ".csv");
    ds.grids.push_back(read_csv_grid(file));
    ++expected;
  }
  ds.finalize();
  return ds;
}

Mask read_mask_csv(const fs::path& path) {
  const auto rows = read_csv_rows(path);
  Mask m;
  m.width = static_cast<std::int32_t>(rows.front().size());
  m.height = static_cast<std::int32_t>(rows.size());
  for (const auto& r : rows) {
    for (double v : r) m.keep.push_back(v != 0.0);
  }
  return m;
}

ScalarGrid smooth(const ScalarGrid& grid, int passes) {
  if (passes < 0) throw std::invalid_argument("smoothing passes must be non-negative");
  ScalarGrid cur = grid;
  ScalarGrid next = grid;
  for (int p = 0; p < passes; ++p) {
    for (std::int32_t y = 0; y < cur.height; ++y) {
      for (std::int32_t x = 0; x < cur.width; ++x) {
        double sum = 0.0;
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx;
            const int ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= cur.width || ny >= cur.height) continue;
            sum += cur.at(nx, ny);
            ++n;
          }
        }
        next.at(x, y) = sum / n;
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

ScalarGrid apply_mask(const ScalarGrid& grid, const Mask& mask, double fill) {
  if (mask.width != grid.width || mask.height != grid.height || mask.keep.size() != grid.size()) {
    throw DataError("mask is " + std::to_string(mask.width) + "x" + std::to_string(mask.height) + ", grid is " +
                    std::to_string(grid.width) + "x" + std::to_string(grid.height));
  }
  ScalarGrid out = grid;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (!mask.keep[i]) out.values[i] = fill;
  }
  return out;
}

namespace {

double gaussian(double u, double v, double cu, double cv, double sigma) {
  const double du = u - cu;
  const double dv = v - cv;
  return std::exp(-(du * du + dv * dv) / (2.0 * sigma * sigma));
}

// Strictly decreasing in both u and v; maximum at the (0,0) corner, minimum
// at (1,1).
double tilted_base(double u, double v) { return gaussian(u, v, 0.0, 0.0, 0.35) - 0.25 * (0.55 * u + 0.45 * v); }

}  // namespace

TimeSeriesDataset generate_synthetic(SyntheticKind kind, int steps, std::int32_t width, std::int32_t height,
                                     int period) {
  if (steps < 1) throw std::invalid_argument("synthetic dataset needs at least one step");
  if (width < 2 || height < 2) throw std::invalid_argument("synthetic grid must be at least 2x2");
  if (kind == SyntheticKind::periodic_blob && period < 1) throw std::invalid_argument("period must be positive");

  TimeSeriesDataset ds;
  ds.grids.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    ScalarGrid g(width, height, 0.0);
    const double s = steps > 1 ? static_cast<double>(t) / (steps - 1) : 0.0;
    for (std::int32_t y = 0; y < height; ++y) {
      for (std::int32_t x = 0; x < width; ++x) {
        const double u = static_cast<double>(x) / (width - 1);
        const double v = static_cast<double>(y) / (height - 1);
        double f = tilted_base(u, v);
        switch (kind) {
          case SyntheticKind::two_peaks:
            f += 0.8 * gaussian(u, v, 0.65, 0.6, 0.1);
            break;
          case SyntheticKind::moving_gaussian:
            f += 1.4 * gaussian(u, v, 0.25 + 0.5 * s, 0.45 + 0.15 * std::sin(std::numbers::pi * s), 0.12);
            break;
          case SyntheticKind::periodic_blob: {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / period;
            f += 0.6 * (1.0 + 0.08 * std::sin(phase)) * gaussian(u, v, 0.72, 0.3, 0.09);
            if (periodic_secondary_present(t, period)) f += 0.5 * gaussian(u, v, 0.3, 0.72, 0.09);
            break;
          }
        }
        g.at(x, y) = f;
      }
    }
    ds.grids.push_back(std::move(g));
  }
  ds.finalize();
  return ds;
}

std::uint64_t dataset_hash(const TimeSeriesDataset& dataset) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto b : encode_tfts(dataset)) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace tfct
