#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mslocal/model.hpp"
#include "mslocal/multiscale.hpp"
#include "mslocal/types.hpp"

#include "json.hpp"

namespace mslocal {

enum class ExperimentKind {
  Correlator,
  Percolation,
  Convergence,
  VolumeConvergence,
  OracleCompare,
  Gaps,
};

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

/// Everything one experiment run depends on. JSON round-trips exactly;
/// unknown fields in a config file are rejected.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::OracleCompare;
  std::vector<int> dims{32};
  double j0 = 0.02;
  DisorderKind disorder_kind = DisorderKind::Uniform;
  double disorder_lo = 0.0;
  double disorder_hi = 1.0;
  std::uint64_t master_seed = 42;
  int num_samples = 100;
  double delta = 1.0 / 20.0;
  double epsilon_override = -1.0;  // >= 0 replaces j0^delta
  double big_m = 0.0;              // 0 -> 2 * dimension
  double tol = 1e-12;
  int max_steps = 20;
  double kappa = 0.25;
  std::vector<int> k_values{8, 12, 16, 20, 24};
  std::string out = "report.csv";
  double failure_fraction = 0.0;
  int threads = 0;  // 0 -> hardware concurrency

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);

  DisorderConfig disorder() const;
  ResonanceParams resonance_params() const;
  Schedule schedule() const;
};

/// Pre-formatted cells; every run with the same config produces identical
/// bytes.
struct ReportTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct CorrelatorReport {
  struct Row {
    int distance = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double tail_frequency = 0.0;
    long long count = 0;
  };
  std::vector<Row> rows;
  double fitted_rate = 0.0;         // slope of log mean vs distance; -inf when flat zero
  double oracle_crosscheck = 0.0;   // max |Q_pipeline - Q_oracle| over spot-checked samples
  int failed = 0;
  int total = 0;
  std::vector<std::string> trace;
};

struct PercolationReport {
  struct Row {
    int scale = 0;  // -1 aggregates over every scale ("ever in one block")
    int distance = 0;
    double frequency = 0.0;
    long long events = 0;
    long long count = 0;
  };
  std::vector<Row> rows;
  std::vector<double> ever_frequency;  // indexed by distance
  int failed = 0;
  int total = 0;
  std::vector<std::string> trace;
};

struct ConvergenceReport {
  struct Row {
    int step = 0;
    double length = 0.0;
    double median_max_offdiag = 0.0;
    double geomean_max_offdiag = 0.0;
    double bound = 0.0;  // (j0/eps)^(L_k)
  };
  std::vector<Row> rows;
  std::vector<double> median_ratios;  // consecutive-step decay factors
  double fitted_slope = 0.0;          // log median max|J| vs L_k
  double step1_bound_max = 0.0;       // max step-1 max|J| over block-free samples
  int block_free_samples = 0;
  int failed = 0;
  int total = 0;
  std::vector<std::string> trace;
};

struct VolumeConvergenceReport {
  struct Row {
    int box_k = 0;
    double mean_de = 0.0, se_de = 0.0, median_de = 0.0;
    double mean_dphi = 0.0, se_dphi = 0.0, median_dphi = 0.0;
    int samples = 0;
  };
  std::vector<Row> rows;  // one per box size below the largest
  double fitted_slope_energy = 0.0;
  double fitted_slope_vector = 0.0;
  int failed = 0;
  int total = 0;
  std::vector<std::string> trace;
};

struct OracleCompareReport {
  struct Row {
    int sample = 0;
    double spectrum_diff = 0.0;
    double max_evec_residual = 0.0;
    bool labels_valid = false;
    double orth_residual = 0.0;
    bool block_free = false;
    bool argmax_match = false;
  };
  std::vector<Row> rows;
  double max_spectrum_diff = 0.0;
  double max_evec_residual = 0.0;
  double max_orth_residual = 0.0;
  int labels_valid_count = 0;
  int block_free_count = 0;
  int argmax_match_count = 0;  // among block-free samples
  int failed = 0;
  int total = 0;
  std::vector<std::string> trace;
};

struct GapReport {
  double minimum = 0.0, q05 = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, q95 = 0.0, maximum = 0.0;
  double zero_fraction = 0.0;
  std::vector<double> per_sample;
  int failed = 0;
  int total = 0;
  std::vector<std::string> trace;
};

CorrelatorReport run_correlator_experiment(const ExperimentConfig& cfg);
PercolationReport run_percolation_experiment(const ExperimentConfig& cfg);
ConvergenceReport run_convergence_experiment(const ExperimentConfig& cfg);
VolumeConvergenceReport run_volume_convergence_experiment(const ExperimentConfig& cfg);
OracleCompareReport run_oracle_compare(const ExperimentConfig& cfg);
GapReport run_gap_experiment(const ExperimentConfig& cfg);

/// Uniform wrapper for the CLI: runs the configured experiment and renders
/// its table plus the JSONL trace.
struct ExperimentResult {
  ReportTable table;
  nlohmann::json header;  // resolved config + version
  std::vector<std::string> trace;
  int failed = 0;
  int total = 0;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Least-squares slope of y against x; NaN when fewer than two points.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mslocal
