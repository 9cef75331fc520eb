#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mslocal/experiments.hpp"
#include "mslocal/report_io.hpp"
#include "mslocal/version.hpp"

namespace {

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    dims.push_back(std::stoi(part));
  }
  if (dims.empty()) throw std::invalid_argument("could not parse --dims");
  return dims;
}

struct CliOverrides {
  std::string config_path;
  std::optional<std::string> dims;
  std::optional<double> j0;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> delta;
  std::optional<int> max_steps;
};

mslocal::ExperimentConfig resolve(mslocal::ExperimentKind kind, const CliOverrides& cli) {
  mslocal::ExperimentConfig cfg;
  if (!cli.config_path.empty()) {
    std::ifstream f(cli.config_path);
    if (!f) throw std::invalid_argument("cannot read config file: " + cli.config_path);
    nlohmann::json j;
    f >> j;
    cfg = mslocal::ExperimentConfig::from_json(j);
  }
  cfg.experiment = kind;
  if (cli.dims) cfg.dims = parse_dims(*cli.dims);
  if (cli.j0) cfg.j0 = *cli.j0;
  if (cli.samples) cfg.num_samples = *cli.samples;
  if (cli.seed) cfg.master_seed = *cli.seed;
  if (cli.out) cfg.out = *cli.out;
  if (cli.delta) cfg.delta = *cli.delta;
  if (cli.max_steps) cfg.max_steps = *cli.max_steps;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(mslocal::kVersion) +
               " - multi-scale diagonalization experiments for the Anderson model"};
  app.require_subcommand(1);

  CliOverrides cli;
  std::vector<std::pair<CLI::App*, mslocal::ExperimentKind>> subs;
  const std::vector<std::pair<std::string, mslocal::ExperimentKind>> kinds = {
      {"correlator", mslocal::ExperimentKind::Correlator},
      {"percolation", mslocal::ExperimentKind::Percolation},
      {"convergence", mslocal::ExperimentKind::Convergence},
      {"volume_convergence", mslocal::ExperimentKind::VolumeConvergence},
      {"oracle_compare", mslocal::ExperimentKind::OracleCompare},
      {"gaps", mslocal::ExperimentKind::Gaps}};
  for (const auto& [name, kind] : kinds) {
    CLI::App* sub = app.add_subcommand(name, name + " experiment");
    sub->add_option("--config", cli.config_path, "JSON config file");
    sub->add_option("--dims", [&cli](const std::vector<std::string>& v) {
      cli.dims = v.front();
      return true;
    }, "lattice dims, comma separated (e.g. 32 or 12,12)");
    sub->add_option("--j0", [&cli](const std::vector<std::string>& v) {
      cli.j0 = std::stod(v.front());
      return true;
    }, "hopping strength");
    sub->add_option("--samples", [&cli](const std::vector<std::string>& v) {
      cli.samples = std::stoi(v.front());
      return true;
    }, "number of disorder samples");
    sub->add_option("--seed", [&cli](const std::vector<std::string>& v) {
      cli.seed = static_cast<std::uint64_t>(std::stoull(v.front()));
      return true;
    }, "master seed");
    sub->add_option("--out", [&cli](const std::vector<std::string>& v) {
      cli.out = v.front();
      return true;
    }, "output CSV path");
    sub->add_option("--delta", [&cli](const std::vector<std::string>& v) {
      cli.delta = std::stod(v.front());
      return true;
    }, "resonance exponent delta (epsilon = j0^delta)");
    sub->add_option("--max-steps", [&cli](const std::vector<std::string>& v) {
      cli.max_steps = std::stoi(v.front());
      return true;
    }, "scale step budget");
    subs.emplace_back(sub, kind);
  }

  CLI11_PARSE(app, argc, argv);

  mslocal::ExperimentKind kind = mslocal::ExperimentKind::OracleCompare;
  for (const auto& [sub, k] : subs)
    if (sub->parsed()) kind = k;

  mslocal::ExperimentConfig cfg;
  try {
    cfg = resolve(kind, cli);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    const mslocal::ExperimentResult result = mslocal::run_experiment(cfg);
    mslocal::write_report_csv(cfg.out, result.header, result.table);
    mslocal::write_trace_jsonl(cfg.out + ".jsonl", result.trace);
    std::cout << "wrote " << cfg.out << " (" << result.table.rows.size() << " rows, "
              << result.failed << "/" << result.total << " samples failed)\n";
    const double failed_fraction =
        result.total > 0 ? static_cast<double>(result.failed) / result.total : 0.0;
    if (result.failed > 0 && failed_fraction > cfg.failure_fraction) return 2;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
