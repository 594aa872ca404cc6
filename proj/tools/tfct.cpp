// Command-line entry point: synth, ingest, precompute, export, serve.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <pthread.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "tfct/diagnostics.hpp"
#include "tfct/service.hpp"

using namespace tfct;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path);
}

struct SynthArgs {
  std::string kind = "moving_gaussian";
  int steps = 16;
  int width = 32;
  int height = 32;
  int period = kDefaultPeriod;
  std::string output;
  std::string format = "tfts";
};

int synth(const SynthArgs& a) {
  const auto ds = generate_synthetic(parse_synthetic_kind(a.kind), a.steps, a.width, a.height, a.period);
  if (parse_dataset_format(a.format) == DatasetFormat::tfts) {
    save_tfts(ds, a.output);
  } else {
    save_csv_dir(ds, a.output);
  }
  std::cout << "wrote " << ds.steps() << " steps of " << ds.width() << "x" << ds.height() << " to " << a.output
            << "\n";
  return kExitOk;
}

struct IngestArgs {
  std::string input;
  std::string format = "csv_dir";
  std::string output;
  std::string mask;
  double fill = -1.0;
  int smooth = 0;
};

int ingest(const IngestArgs& a) {
  auto ds = load_dataset(a.input, parse_dataset_format(a.format));
  if (!a.mask.empty()) {
    const auto mask = read_mask_csv(a.mask);
    for (auto& g : ds.grids) g = apply_mask(g, mask, a.fill);
  }
  if (a.smooth > 0) {
    for (auto& g : ds.grids) g = smooth(g, a.smooth);
  }
  ds.finalize();
  save_tfts(ds, a.output);
  std::cout << "wrote " << ds.steps() << " steps of " << ds.width() << "x" << ds.height() << " to " << a.output
            << "\n";
  return kExitOk;
}

struct PrecomputeArgs {
  std::string dataset;
  std::string format = "tfts";
  std::string metric = "overlap";
  double lambda = 0.5;
  int seed_step = 0;
  double simplify = 0.0;
  std::uint64_t rng_seed = 42;
  unsigned threads = 0;
  std::string output;
};

int run_precompute(const PrecomputeArgs& a) {
  const auto ds = load_dataset(a.dataset, parse_dataset_format(a.format));
  PrecomputeOptions opt;
  opt.metric = {parse_metric_kind(a.metric), a.lambda};
  if (a.seed_step < 0 || a.seed_step >= static_cast<int>(ds.steps())) {
    throw UsageError("--seed-step " + std::to_string(a.seed_step) + " outside [0, " + std::to_string(ds.steps()) +
                     ")");
  }
  opt.seed_step = a.seed_step;
  opt.simplify = a.simplify;
  opt.annealing.seed = a.rng_seed;
  opt.threads = a.threads;
  const auto p = precompute(ds, opt);
  const fs::path out =
      a.output.empty() ? cache_directory() / cache_file_name(p.info.hash, opt.metric, opt.seed_step) : fs::path(a.output);
  save_cache(p, out);

  std::int32_t fmin = p.info.steps;
  std::int32_t fmax = 0;
  double fsum = 0.0;
  for (const auto& n : p.alignment.nodes) {
    fmin = std::min(fmin, n.frequency());
    fmax = std::max(fmax, n.frequency());
    fsum += n.frequency();
  }
  std::printf("steps %d, alignment nodes %zu, branches %zu\n", p.info.steps, p.alignment.nodes.size(),
              p.layout.branches.size());
  std::printf("node frequency min %d, mean %.3f, max %d\n", fmin, fsum / static_cast<double>(p.alignment.nodes.size()),
              fmax);
  std::printf("layout cost %.6g (initial %.6g)\n", p.layout.cost, p.layout.initial_cost);
  std::printf("cache %s\n", out.string().c_str());
  return kExitOk;
}

struct SelectionArgs {
  std::string mode;
  int center = 0;
  int window = kDefaultWindow;
  std::vector<int> members;
  int anchor = 0;
  int period = kDefaultPeriod;
  bool compact_gaps = false;
  bool optimized_spacing = false;
};

Selection make_selection(const SelectionArgs& a, std::int32_t steps) {
  try {
    if (a.mode.empty() || a.mode == "all") return all_steps(steps);
    switch (parse_selection_mode(a.mode)) {
      case SelectionMode::window: return window_selection(a.center, a.window, steps);
      case SelectionMode::periodic: return periodic_selection(a.anchor, a.period, steps);
      case SelectionMode::multi: return multi_selection({a.members.begin(), a.members.end()}, steps);
    }
  } catch (const SelectionError& e) {
    throw UsageError(std::string("invalid selection: ") + e.what());
  }
  throw UsageError("invalid selection");
}

struct ExportArgs {
  std::string cache;
  std::string format = "svg";
  std::string output;
  SelectionArgs selection;
};

int run_export(const ExportArgs& a) {
  const auto p = load_cache(a.cache);
  const auto s = make_selection(a.selection, p.info.steps);
  const auto payload = fct_payload(p, s, {a.selection.compact_gaps, a.selection.optimized_spacing});
  write_text(a.format == "json" ? payload : render_svg(payload), a.output);
  return kExitOk;
}

struct ServeArgs {
  std::string cache;
  std::string host = "127.0.0.1";
  int port = kDefaultPort;
  bool compact_gaps = false;
  bool optimized_spacing = false;
};

int serve(const ServeArgs& a) {
  std::shared_ptr<const Precomputed> data;
  if (!a.cache.empty()) data = std::make_shared<const Precomputed>(load_cache(a.cache));

  // Handle SIGINT/SIGTERM on a dedicated thread so stop() runs outside a
  // signal handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(data, {a.compact_gaps, a.optimized_spacing});
  HttpServer server(service);
  int port = 0;
  try {
    port = server.bind(a.host, a.port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  std::cout << "listening on http://" << a.host << ":" << port << "\n";
  std::cout.flush();

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  // listen() also returns on failure; wake the waiter in that case.
  kill(getpid(), SIGTERM);
  waiter.join();
  std::cout << "stopped\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-varying contour tree alignment and layout"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tfct 1.0");

  const std::vector<std::string> metrics = {"persistence", "volume", "combined", "overlap"};

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--kind", sa.kind, "moving_gaussian, periodic_blob or two_peaks")
      ->check(CLI::IsMember({"moving_gaussian", "periodic_blob", "two_peaks"}))
      ->capture_default_str();
  synth_cmd->add_option("--steps", sa.steps, "Number of time steps")->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--width", sa.width, "Grid width")->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--height", sa.height, "Grid height")->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--period", sa.period, "Period of periodic_blob")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--format", sa.format, "Output format")
      ->check(CLI::IsMember({"tfts", "csv_dir"}))
      ->capture_default_str();
  synth_cmd->add_option("-o,--output", sa.output, "Output file (tfts) or directory (csv_dir)")->required();

  IngestArgs ia;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert a dataset to tfts, masking then smoothing");
  ingest_cmd->add_option("-i,--input", ia.input, "Input file or CSV directory")->required();
  ingest_cmd->add_option("--format", ia.format, "Input format")
      ->check(CLI::IsMember({"tfts", "csv_dir"}))
      ->capture_default_str();
  ingest_cmd->add_option("--mask", ia.mask, "CSV mask; zero cells are replaced by --fill");
  ingest_cmd->add_option("--fill", ia.fill, "Value of masked cells")->capture_default_str();
  ingest_cmd->add_option("--smooth", ia.smooth, "3x3 box filter passes")->check(CLI::NonNegativeNumber)->capture_default_str();
  ingest_cmd->add_option("-o,--output", ia.output, "Output tfts file")->required();

  PrecomputeArgs pa;
  auto* pre_cmd = app.add_subcommand("precompute", "Align all time steps and lay out the alignment");
  pre_cmd->add_option("-d,--dataset", pa.dataset, "Dataset file")->required();
  pre_cmd->add_option("--format", pa.format, "Dataset format")
      ->check(CLI::IsMember({"tfts", "csv_dir"}))
      ->capture_default_str();
  pre_cmd->add_option("--metric", pa.metric, "Match metric")->check(CLI::IsMember(metrics))->capture_default_str();
  pre_cmd->add_option("--lambda", pa.lambda, "Persistence weight of the combined metric")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  pre_cmd->add_option("--seed-step", pa.seed_step, "First time step of the sequential alignment")->capture_default_str();
  pre_cmd->add_option("--simplify", pa.simplify, "Persistence threshold for contour tree simplification")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  pre_cmd->add_option("--rng-seed", pa.rng_seed, "Layout annealing seed")->capture_default_str();
  pre_cmd->add_option("--threads", pa.threads, "Contour tree threads (0: all cores)")->capture_default_str();
  pre_cmd->add_option("-o,--output", pa.output, "Cache file (default: cache directory, see TFCT_CACHE_DIR)");

  auto add_selection = [](CLI::App* cmd, SelectionArgs& s) {
    cmd->add_option("--mode", s.mode, "Selection mode; all steps when omitted")
        ->check(CLI::IsMember({"all", "window", "multi", "periodic"}));
    cmd->add_option("--center", s.center, "Window center")->capture_default_str();
    cmd->add_option("--window", s.window, "Window width (odd)")->capture_default_str();
    cmd->add_option("--members", s.members, "Steps of a multi selection")->delimiter(',');
    cmd->add_option("--anchor", s.anchor, "First step of a periodic selection")->capture_default_str();
    cmd->add_option("--period", s.period, "Period of a periodic selection")->capture_default_str();
    cmd->add_flag("--compact-gaps", s.compact_gaps, "Close gaps left by absent branches");
    cmd->add_flag("--optimized-spacing", s.optimized_spacing, "Spread child branches evenly");
  };

  ExportArgs ea;
  auto* export_cmd = app.add_subcommand("export", "Write the bundled drawing of a selection");
  export_cmd->add_option("-c,--cache", ea.cache, "Cache file")->required();
  export_cmd->add_option("--format", ea.format, "svg or json")->check(CLI::IsMember({"svg", "json"}))->capture_default_str();
  export_cmd->add_option("-o,--output", ea.output, "Output file (default: stdout)");
  add_selection(export_cmd, ea.selection);

  ServeArgs va;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("-c,--cache", va.cache, "Cache file; without it every endpoint answers 404");
  serve_cmd->add_option("--host", va.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", va.port, "Port (0: any free port)")->check(CLI::Range(0, 65535))->capture_default_str();
  serve_cmd->add_flag("--compact-gaps", va.compact_gaps, "Initial compact_gaps flag");
  serve_cmd->add_flag("--optimized-spacing", va.optimized_spacing, "Initial optimized_spacing flag");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  set_warning_sink([](const std::string& m) { std::cerr << "warning: " << m << "\n"; });
  try {
    if (*synth_cmd) return synth(sa);
    if (*ingest_cmd) return ingest(ia);
    if (*pre_cmd) return run_precompute(pa);
    if (*export_cmd) return run_export(ea);
    if (*serve_cmd) return serve(va);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
