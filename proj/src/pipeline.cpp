#include "tfct/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "bytes.hpp"
#include "tfct/diagnostics.hpp"

namespace tfct {

DatasetInfo dataset_info(const TimeSeriesDataset& dataset) {
  DatasetInfo info;
  info.steps = static_cast<std::int32_t>(dataset.steps());
  info.width = dataset.width();
  info.height = dataset.height();
  info.labels = dataset.labels;
  info.global_min = dataset.global_min;
  info.global_max = dataset.global_max;
  info.hash = dataset_hash(dataset);
  return info;
}

std::vector<MemberTree> member_trees(const TimeSeriesDataset& dataset, double simplify, unsigned threads) {
  const auto n = dataset.steps();
  std::vector<MemberTree> out(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (auto t = next++; t < n; t = next++) {
      try {
        const auto ct = compute_contour_tree(dataset.grids[t], simplify);
        out[t] = make_member_tree(ct, static_cast<std::int32_t>(t));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Precomputed precompute(const TimeSeriesDataset& dataset, const PrecomputeOptions& options) {
  if (dataset.steps() == 0) throw std::invalid_argument("dataset has no time steps");
  const auto steps = static_cast<std::int32_t>(dataset.steps());
  if (options.seed_step < 0 || options.seed_step >= steps) {
    throw std::invalid_argument("seed step " + std::to_string(options.seed_step) + " outside [0, " +
                                std::to_string(steps) + ")");
  }
  if (dataset.global_min == dataset.global_max) warn("all grids are constant; contour trees reduce to two nodes");

  Precomputed p;
  p.info = dataset_info(dataset);
  p.metric = options.metric;
  p.seed_step = options.seed_step;
  p.simplify = options.simplify;
  p.layout_seed = options.annealing.seed;
  p.sweeps = options.annealing.sweeps;
  p.cooling = options.annealing.cooling;
  p.alignment = align_sequence(member_trees(dataset, options.simplify, options.threads), options.metric,
                               options.seed_step);
  p.layout = compute_layout(p.alignment, ValueRange{dataset.global_min, dataset.global_max}, options.annealing);
  return p;
}

namespace {

constexpr char kMagic[4] = {'T', 'F', 'C', 'A'};

using bytes::put_f64;
using bytes::put_i32;
using bytes::put_string;
using bytes::put_u32;
using bytes::put_u64;

}  // namespace

std::vector<std::uint8_t> encode_cache(const Precomputed& p) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCacheVersion);

  const auto& info = p.info;
  put_i32(out, info.steps);
  put_i32(out, info.width);
  put_i32(out, info.height);
  put_f64(out, info.global_min);
  put_f64(out, info.global_max);
  put_u64(out, info.hash);
  put_u32(out, static_cast<std::uint32_t>(info.labels.size()));
  for (const auto& l : info.labels) put_string(out, l);

  put_u32(out, static_cast<std::uint32_t>(p.metric.kind));
  put_f64(out, p.metric.lambda);
  put_i32(out, p.seed_step);
  put_f64(out, p.simplify);
  put_u64(out, p.layout_seed);
  put_i32(out, p.sweeps);
  put_f64(out, p.cooling);

  const auto& a = p.alignment;
  put_i32(out, a.root_id);
  put_i32(out, a.member_count);
  put_u32(out, static_cast<std::uint32_t>(a.steps.size()));
  for (auto t : a.steps) put_i32(out, t);
  put_u32(out, static_cast<std::uint32_t>(a.nodes.size()));
  for (const auto& n : a.nodes) {
    put_i32(out, n.id);
    put_u32(out, static_cast<std::uint32_t>(n.kind));
    put_f64(out, n.value);
    put_i32(out, n.parent);
    put_i32(out, n.color_key);
    put_u32(out, static_cast<std::uint32_t>(n.members.size()));
    for (const auto& [t, m] : n.members) {
      put_i32(out, t);
      put_i32(out, m.node);
      put_f64(out, m.value);
    }
  }

  const auto& l = p.layout;
  put_f64(out, l.range.min);
  put_f64(out, l.range.max);
  put_f64(out, l.initial_cost);
  put_f64(out, l.cost);
  put_u32(out, static_cast<std::uint32_t>(l.branches.size()));
  for (const auto& b : l.branches) {
    put_i32(out, b.id);
    put_f64(out, b.x);
    put_f64(out, b.order_key);
  }
  return out;
}

Precomputed decode_cache(const std::vector<std::uint8_t>& data) {
  if (data.size() < 8 || !std::equal(std::begin(kMagic), std::end(kMagic), data.begin())) {
    throw DataError("not an alignment cache (bad magic)");
  }
  std::vector<std::uint8_t> body(data.begin() + 4, data.end());
  bytes::Cursor cur(body, "cache");
  const auto version = cur.u32();
  if (version != kCacheVersion) throw DataError("unsupported cache version " + std::to_string(version));

  Precomputed p;
  auto& info = p.info;
  info.steps = cur.i32();
  info.width = cur.i32();
  info.height = cur.i32();
  info.global_min = cur.f64();
  info.global_max = cur.f64();
  info.hash = cur.u64();
  const auto labels = cur.count(4);
  for (std::uint32_t i = 0; i < labels; ++i) info.labels.push_back(cur.string());

  const auto kind = cur.u32();
  if (kind > static_cast<std::uint32_t>(MetricKind::overlap)) throw DataError("bad metric kind in cache");
  p.metric.kind = static_cast<MetricKind>(kind);
  p.metric.lambda = cur.f64();
  p.seed_step = cur.i32();
  p.simplify = cur.f64();
  p.layout_seed = cur.u64();
  p.sweeps = cur.i32();
  p.cooling = cur.f64();

  auto& a = p.alignment;
  a.metric = p.metric;
  a.root_id = cur.i32();
  a.member_count = cur.i32();
  const auto steps = cur.count(4);
  for (std::uint32_t i = 0; i < steps; ++i) a.steps.push_back(cur.i32());
  const auto nodes = cur.count(36);
  a.nodes.resize(nodes);
  for (auto& n : a.nodes) {
    n.id = cur.i32();
    const auto k = cur.u32();
    if (k > static_cast<std::uint32_t>(NodeKind::saddle)) throw DataError("bad node kind in cache");
    n.kind = static_cast<NodeKind>(k);
    n.value = cur.f64();
    n.parent = cur.i32();
    n.color_key = cur.i32();
    const auto members = cur.count(16);
    for (std::uint32_t i = 0; i < members; ++i) {
      const auto t = cur.i32();
      MemberRef m;
      m.node = cur.i32();
      m.value = cur.f64();
      if (!n.members.emplace(t, m).second) throw DataError("duplicate member in cache");
    }
  }

  ValueRange range;
  range.min = cur.f64();
  range.max = cur.f64();
  const auto initial_cost = cur.f64();
  const auto cost = cur.f64();
  const auto branches = cur.count(20);
  std::vector<BranchLayout> placed(branches);
  for (auto& b : placed) {
    b.id = cur.i32();
    b.x = cur.f64();
    b.order_key = cur.f64();
  }
  if (!cur.at_end()) throw DataError("trailing bytes in cache");

  try {
    for (std::size_t i = 1; i < a.nodes.size(); ++i) {
      if (a.nodes[i].id <= a.nodes[i - 1].id) throw DataError("cache node ids not ascending");
    }
    for (const auto& n : a.nodes) {
      if (n.parent >= 0) a.node(n.parent).children.push_back(n.id);
    }
    for (auto& n : a.nodes) std::sort(n.children.begin(), n.children.end());
    a.validate();
    p.layout = restore_layout(a, range, placed, initial_cost);
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("inconsistent cache: ") + e.what());
  }
  if (p.layout.branches.size() != placed.size()) throw DataError("inconsistent cache: branch count");
  if (p.layout.cost != cost) throw DataError("inconsistent cache: layout cost");
  return p;
}

void save_cache(const Precomputed& p, const std::filesystem::path& path) {
  const auto data = encode_cache(p);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write then rename so concurrent readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Precomputed load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_cache(data);
}

bool is_cache_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  return in.read(magic, 4) && std::equal(std::begin(kMagic), std::end(kMagic), magic);
}

std::filesystem::path cache_directory() {
  if (const char* dir = std::getenv("TFCT_CACHE_DIR"); dir && *dir) return dir;
  return ".tfct_cache";
}

std::string cache_file_name(std::uint64_t dataset_hash, const MatchMetric& metric, std::int32_t seed_step) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(dataset_hash));
  std::string name = std::string(hash) + "-" + std::string(to_string(metric.kind));
  if (metric.kind == MetricKind::combined) {
    char w[32];
    std::snprintf(w, sizeof w, "-l%g", metric.lambda);
    name += w;
  }
  return name + "-s" + std::to_string(seed_step) + ".tfca";
}

Precomputed cached_precompute(const TimeSeriesDataset& dataset, const PrecomputeOptions& options) {
  const auto path = cache_directory() / cache_file_name(dataset_hash(dataset), options.metric, options.seed_step);
  if (std::filesystem::exists(path)) {
    try {
      auto p = load_cache(path);
      if (p.info == dataset_info(dataset) && p.metric == options.metric && p.seed_step == options.seed_step &&
          p.simplify == options.simplify && p.layout_seed == options.annealing.seed &&
          p.sweeps == options.annealing.sweeps && p.cooling == options.annealing.cooling) {
        return p;
      }
    } catch (const DataError& e) {
      warn("ignoring unreadable cache " + path.string() + ": " + e.what());
    }
  }
  auto p = precompute(dataset, options);
  save_cache(p, path);
  return p;
}

}  // namespace tfct
