#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evidence/harness.hpp"

namespace fs = std::filesystem;
using namespace evidence;
using namespace evidence::harness;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kConsistency = 3, kParse = 4 };

const fs::path kSourceDir = EVIDENCE_SOURCE_DIR;

/// A config argument may be a file path or the name of a bundled preset.
fs::path resolve_config(const std::string& arg, const fs::path& presets_dir) {
  if (fs::exists(arg)) return arg;
  const fs::path preset = presets_dir / (arg + ".ini");
  if (fs::exists(preset)) return preset;
  throw UsageError("no config file or preset named '" + arg + "'");
}

int cmd_run(const std::string& config_arg, const fs::path& presets_dir, const fs::path& reference_file,
            std::optional<std::uint64_t> seed, std::optional<int> runs, std::optional<int> workers,
            std::optional<std::string> output) {
  ExperimentConfig cfg = load_config(resolve_config(config_arg, presets_dir));
  if (seed) cfg.base_seed = *seed;
  if (runs) cfg.runs = *runs;
  if (workers) cfg.workers = *workers;
  if (output) cfg.output = *output;
  if (cfg.output.empty()) cfg.output = cfg.name + ".csv";
  cfg.validate();

  std::cerr << "running " << cfg.name << ": model " << cfg.model << ", " << cfg.runs << " runs, "
            << cfg.workers << " worker(s)\n";
  const auto result = run_experiment(cfg, reference_file);
  write_csv(fs::path(cfg.output), result.rows);

  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += !r.ok;
  std::cerr << "reference evidence " << format_double(result.reference.evidence) << " (" << result.reference.method
            << ", " << result.reference.resolution << ")\n";
  std::cerr << "wrote " << result.rows.size() << " rows to " << cfg.output << "; " << failed << " failed\n";
  print_summary(std::cout, summarize(result.rows));
  return kOk;
}

int cmd_summarize(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  print_summary(std::cout, summarize(read_results_csv(in, path)));
  return kOk;
}

int cmd_regenerate(const std::string& model, const fs::path& reference_file, int cells) {
  const auto rec = regenerate_reference(model, reference_file, cells);
  std::cout << model << ".evidence = " << format_double(rec.evidence) << " (" << rec.method << ", "
            << rec.resolution << "; check " << format_double(rec.check) << ")\n";
  return kOk;
}

int cmd_presets_list(const fs::path& presets_dir) {
  if (!fs::is_directory(presets_dir)) throw UsageError("presets directory '" + presets_dir.string() + "' not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(presets_dir))
    if (e.path().extension() == ".ini") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto cfg = load_config(f);
    std::cout << f.stem().string() << '\t' << cfg.model << '\t' << cfg.runs << " runs\t" << cfg.description << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo evidence and Bayes factor estimation"};
  app.require_subcommand(1);

  std::string presets_dir = (kSourceDir / "presets").string();
  std::string reference_file = (kSourceDir / "data" / "references.txt").string();
  app.add_option("--presets-dir", presets_dir, "Directory holding preset .ini files");
  app.add_option("--references", reference_file, "Reference constants file");

  auto* run = app.add_subcommand("run", "Run a replication study from a config file or preset name");
  std::string config_arg;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs, workers;
  std::optional<std::string> output;
  run->add_option("config", config_arg, "Config file path or preset name")->required();
  run->add_option("--seed", seed, "Base seed (run r uses seed + r)");
  run->add_option("--runs", runs, "Number of replicate runs")->check(CLI::PositiveNumber);
  run->add_option("--workers", workers, "Concurrent worker threads")->check(CLI::PositiveNumber);
  run->add_option("--output", output, "CSV output path");

  auto* summ = app.add_subcommand("summarize", "Per-estimator summary of a results CSV");
  std::string csv_path;
  summ->add_option("csv", csv_path, "Results CSV")->required();

  auto* refs = app.add_subcommand("references", "Reference constant management");
  refs->require_subcommand(1);
  auto* regen = refs->add_subcommand("regenerate", "Recompute and store one model's reference");
  std::string model;
  int cells = kDefaultGridCells;
  regen->add_option("model", model, "gaussian-toy or banana")->required();
  regen->add_option("--cells", cells, "Grid cells per axis for the banana")->check(CLI::Range(100, 20000));

  auto* presets = app.add_subcommand("presets", "Bundled presets");
  presets->require_subcommand(1);
  auto* list = presets->add_subcommand("list", "List presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(config_arg, presets_dir, reference_file, seed, runs, workers, output);
    if (*summ) return cmd_summarize(csv_path);
    if (*regen) return cmd_regenerate(model, reference_file, cells);
    if (*list) return cmd_presets_list(presets_dir);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency error: " << e.what() << '\n';
    return kConsistency;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
