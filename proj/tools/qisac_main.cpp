// qisac_main.cpp
// Command-line entry point: run experiment specs, emit figure data.
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qisac/harness.hpp"

namespace {

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized ISAC precoder design: experiment runner"};
  app.require_subcommand(1);

  std::string spec_path;
  int seed_count = 0;
  std::string trace_dir;
  std::string run_out = "records.jsonl";
  CLI::App* run = app.add_subcommand(
      "run", "Run an experiment spec and append JSON-lines records");
  run->add_option("spec", spec_path, "experiment spec (JSON)")->required();
  run->add_option("--seeds", seed_count,
                  "override the spec's seed list with 1..N")
      ->check(CLI::PositiveNumber);
  run->add_option("--trace-dir", trace_dir,
                  "write per-solve optimizer traces into this directory");
  run->add_option("--out", run_out, "records file to append to");

  std::string figure, records_path, emit_out;
  CLI::App* emit = app.add_subcommand(
      "emit", "Aggregate a records file into one figure's CSV data");
  emit->add_option("figure", figure, "figure name (see --help-figures)")
      ->required();
  emit->add_option("records", records_path, "JSON-lines records file")
      ->required();
  emit->add_option("--out", emit_out, "output CSV path (default <figure>.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const qisac::ExperimentSpec spec = qisac::load_spec(spec_path);
      qisac::RunOptions opts;
      if (seed_count > 0) opts.seed_count = seed_count;
      opts.trace_dir = trace_dir;
      opts.out = run_out;
      if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);
      ensure_parent_dir(run_out);
      const qisac::RunSummary s = qisac::run_experiment(spec, opts);
      std::cout << s.n_records << " records (" << s.n_failed
                << " non-optimal) -> " << s.out_path << "\n";
    } else {
      if (emit_out.empty()) emit_out = figure + ".csv";
      ensure_parent_dir(emit_out);
      const std::vector<qisac::ResultRecord> records =
          qisac::load_records(records_path);
      qisac::emit_figure(figure, records, emit_out);
      std::cout << "wrote figure data for '" << figure << "' -> " << emit_out
                << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
