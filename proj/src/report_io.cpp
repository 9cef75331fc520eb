#include "mslocal/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include "mslocal/version.hpp"

namespace mslocal {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, res.ptr);
}

std::string render_report_csv(const nlohmann::json& header, const ReportTable& table) {
  std::string out = "# " + header.dump() + "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

void write_report_csv(const std::string& path, const nlohmann::json& header,
                      const ReportTable& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << render_report_csv(header, table);
}

void write_trace_jsonl(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trace file: " + path);
  for (const auto& line : lines) f << line << '\n';
}

namespace {

std::string fmt_bool(bool b) { return b ? "1" : "0"; }

nlohmann::json base_header(const ExperimentConfig& cfg) {
  return nlohmann::json{{"config", cfg.to_json()}, {"version", kVersion}};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult out;
  nlohmann::json header = base_header(cfg);
  switch (cfg.experiment) {
    case ExperimentKind::Correlator: {
      const CorrelatorReport rep = run_correlator_experiment(cfg);
      out.table.header = {"distance", "mean_correlator", "std_error", "tail_frequency", "samples"};
      for (const auto& r : rep.rows)
        out.table.rows.push_back({std::to_string(r.distance), format_double(r.mean),
                                  format_double(r.std_error), format_double(r.tail_frequency),
                                  std::to_string(r.count)});
      header["summary"] = {{"fitted_rate", format_double(rep.fitted_rate)},
                           {"oracle_crosscheck", rep.oracle_crosscheck},
                           {"failed_samples", rep.failed}};
      out.trace = rep.trace;
      out.failed = rep.failed;
      out.total = rep.total;
      break;
    }
    case ExperimentKind::Percolation: {
      const PercolationReport rep = run_percolation_experiment(cfg);
      out.table.header = {"scale", "distance", "frequency", "events", "pairs"};
      for (const auto& r : rep.rows)
        out.table.rows.push_back({std::to_string(r.scale), std::to_string(r.distance),
                                  format_double(r.frequency), std::to_string(r.events),
                                  std::to_string(r.count)});
      header["summary"] = {{"failed_samples", rep.failed}};
      out.trace = rep.trace;
      out.failed = rep.failed;
      out.total = rep.total;
      break;
    }
    case ExperimentKind::Convergence: {
      const ConvergenceReport rep = run_convergence_experiment(cfg);
      out.table.header = {"step", "length", "median_max_offdiag", "geomean_max_offdiag", "bound"};
      for (const auto& r : rep.rows)
        out.table.rows.push_back({std::to_string(r.step), format_double(r.length),
                                  format_double(r.median_max_offdiag),
                                  format_double(r.geomean_max_offdiag), format_double(r.bound)});
      nlohmann::json ratios = nlohmann::json::array();
      for (double r : rep.median_ratios) ratios.push_back(format_double(r));
      header["summary"] = {{"median_ratios", ratios},
                           {"fitted_slope", format_double(rep.fitted_slope)},
                           {"step1_bound_max", rep.step1_bound_max},
                           {"block_free_samples", rep.block_free_samples},
                           {"failed_samples", rep.failed}};
      out.trace = rep.trace;
      out.failed = rep.failed;
      out.total = rep.total;
      break;
    }
    case ExperimentKind::VolumeConvergence: {
      const VolumeConvergenceReport rep = run_volume_convergence_experiment(cfg);
      out.table.header = {"box_k",     "mean_de",  "se_de",      "median_de",
                          "mean_dphi", "se_dphi",  "median_dphi", "samples"};
      for (const auto& r : rep.rows)
        out.table.rows.push_back({std::to_string(r.box_k), format_double(r.mean_de),
                                  format_double(r.se_de), format_double(r.median_de),
                                  format_double(r.mean_dphi), format_double(r.se_dphi),
                                  format_double(r.median_dphi), std::to_string(r.samples)});
      header["summary"] = {{"fitted_slope_energy", format_double(rep.fitted_slope_energy)},
                           {"fitted_slope_vector", format_double(rep.fitted_slope_vector)},
                           {"failed_samples", rep.failed}};
      out.trace = rep.trace;
      out.failed = rep.failed;
      out.total = rep.total;
      break;
    }
    case ExperimentKind::OracleCompare: {
      const OracleCompareReport rep = run_oracle_compare(cfg);
      out.table.header = {"sample",        "spectrum_diff", "max_evec_residual", "labels_valid",
                          "orth_residual", "block_free",    "argmax_match"};
      for (const auto& r : rep.rows)
        out.table.rows.push_back({std::to_string(r.sample), format_double(r.spectrum_diff),
                                  format_double(r.max_evec_residual), fmt_bool(r.labels_valid),
                                  format_double(r.orth_residual), fmt_bool(r.block_free),
                                  fmt_bool(r.argmax_match)});
      header["summary"] = {{"max_spectrum_diff", rep.max_spectrum_diff},
                           {"max_evec_residual", rep.max_evec_residual},
                           {"max_orth_residual", rep.max_orth_residual},
                           {"labels_valid", rep.labels_valid_count},
                           {"block_free", rep.block_free_count},
                           {"argmax_match", rep.argmax_match_count},
                           {"failed_samples", rep.failed}};
      out.trace = rep.trace;
      out.failed = rep.failed;
      out.total = rep.total;
      break;
    }
    case ExperimentKind::Gaps: {
      const GapReport rep = run_gap_experiment(cfg);
      out.table.header = {"statistic", "value"};
      out.table.rows = {{"minimum", format_double(rep.minimum)},
                        {"q05", format_double(rep.q05)},
                        {"q25", format_double(rep.q25)},
                        {"median", format_double(rep.median)},
                        {"q75", format_double(rep.q75)},
                        {"q95", format_double(rep.q95)},
                        {"maximum", format_double(rep.maximum)},
                        {"zero_fraction", format_double(rep.zero_fraction)}};
      header["summary"] = {{"failed_samples", rep.failed}};
      out.trace = rep.trace;
      out.failed = rep.failed;
      out.total = rep.total;
      break;
    }
  }
  out.header = std::move(header);
  return out;
}

}  // namespace mslocal
