// Benchmark driver for the best-effort channel library: runs the
// distributed graph-coloring workload under a chosen asynchronicity mode
// and reports per-worker records plus bootstrapped confidence intervals.
//
// Multi-process runs are launched externally, one OS process per rank,
// sharing a rank manifest (`<rank> <host>:<port>` per line). Rank 0
// gathers all records and writes the output file.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ductwork/ductwork.hpp"

namespace {

struct CliOptions {
  ductwork::BenchConfig config;
  int rank = 0;
  std::string manifest;
  std::string out;
  std::string format = "csv";
};

CliOptions parse_config(int argc, char** argv) {
  CliOptions opt;
  CLI::App app{"best-effort channel graph-coloring benchmark"};
  app.add_option("--mode", opt.config.mode, "asynchronicity mode 0..4")
      ->check(CLI::Range(0, 4));
  app.add_option("--procs", opt.config.num_procs, "number of processes")
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", opt.config.threads_per_proc, "worker threads per process")
      ->check(CLI::PositiveNumber);
  app.add_option("--nodes-per-cpu", opt.config.nodes_per_cpu,
                 "graph nodes per worker (default 2048)")
      ->check(CLI::PositiveNumber);
  app.add_option("--duration-s", opt.config.duration_s, "seconds per replicate")
      ->check(CLI::PositiveNumber);
  app.add_option("--replicates", opt.config.replicates, "replicates per run")
      ->check(CLI::PositiveNumber);
  app.add_option("--colors", opt.config.colors, "number of colors")
      ->check(CLI::Range(2, 1 << 20));
  app.add_option("--b", opt.config.b, "learning factor in (0,1)")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  app.add_option("--chunk-ms", opt.config.chunk_ms, "mode-1 work chunk (ms)")
      ->check(CLI::PositiveNumber);
  app.add_option("--epoch-s", opt.config.epoch_s, "mode-2 barrier period (s)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.config.seed, "base random seed");
  auto* rank_opt =
      app.add_option("--rank", opt.rank, "this process's rank (or env DUCTWORK_RANK)");
  auto* manifest_opt =
      app.add_option("--manifest", opt.manifest, "rank manifest file");
  app.add_option("--out", opt.out, "output path (default: stdout)");
  app.add_option("--format", opt.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--skew-epochs", opt.config.skew_epochs,
               "skip start-epoch negotiation for mode 2 (reproduces the "
               "skewed fixed-point race)");
  app.add_option("--inject-delay-ms", opt.config.inject_delay_ms,
                 "stall one randomly chosen worker per update by this many ms")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::exit(app.exit(e));
  }

  if (!*rank_opt) {
    if (const char* env = std::getenv("DUCTWORK_RANK")) opt.rank = std::atoi(env);
  }
  const bool have_rank = *rank_opt || std::getenv("DUCTWORK_RANK") != nullptr;
  if (have_rank && !*manifest_opt) {
    std::cerr << "error: --rank requires --manifest\n";
    std::exit(2);
  }
  if (opt.config.num_procs > 1 && !*manifest_opt) {
    std::cerr << "error: --procs > 1 requires --manifest (and a --rank per process)\n";
    std::exit(2);
  }
  try {
    opt.config.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::exit(2);
  }
  return opt;
}

void print_summaries(const std::vector<ductwork::BenchmarkRecord>& records) {
  std::vector<double> rates;
  std::vector<double> conflicts;
  for (const auto& r : records) {
    rates.push_back(r.update_rate);
    if (r.conflicts) conflicts.push_back(static_cast<double>(*r.conflicts));
  }
  auto show = [](const ductwork::CiSummary& ci) {
    std::cerr << ci.metric << ": mean=" << ci.mean << " ci95=[" << ci.lower
              << ", " << ci.upper << "] n=" << ci.sample_count << "\n";
  };
  if (!rates.empty()) show(ductwork::bootstrap_ci("update_rate", rates));
  if (!conflicts.empty()) show(ductwork::bootstrap_ci("conflicts", conflicts));
}

}  // namespace

int main(int argc, char** argv) {
  const CliOptions opt = parse_config(argc, argv);

  std::unique_ptr<ductwork::TransportHub> hub;
  if (opt.config.num_procs > 1) {
    auto manifest = ductwork::RankManifest::load(opt.manifest);
    if (manifest.size() != opt.config.num_procs) {
      std::cerr << "error: manifest lists " << manifest.size()
                << " ranks but --procs is " << opt.config.num_procs << "\n";
      return 2;
    }
    auto transport =
        std::make_unique<ductwork::SocketTransport>(std::move(manifest), opt.rank);
    if (!transport->connect_all()) {
      std::cerr << "error: could not reach all peer ranks\n";
      return 3;
    }
    hub = std::make_unique<ductwork::TransportHub>(std::move(transport),
                                                   opt.config.num_procs);
  }

  std::vector<ductwork::BenchmarkRecord> records;
  try {
    records = ductwork::benchmark_run(opt.config, hub.get());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }

  if (opt.rank == 0) {
    if (opt.out.empty()) {
      if (opt.format == "csv") {
        ductwork::emit_records_csv(records, std::cout);
      } else {
        ductwork::emit_records_json(records, std::cout);
      }
    } else {
      try {
        ductwork::emit_records(records, opt.out, opt.format);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
      }
    }
    print_summaries(records);
  }

  for (const auto& r : records) {
    if (r.aborted) return 5;
  }
  return 0;
}
