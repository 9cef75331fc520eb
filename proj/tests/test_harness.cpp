#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "mslocal/experiments.hpp"
#include "mslocal/multiscale.hpp"
#include "mslocal/oracle.hpp"
#include "mslocal/report_io.hpp"

using namespace mslocal;

TEST_CASE("config json round trip and strict key checking") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Correlator;
  cfg.dims = {12, 12};
  cfg.j0 = 0.05;
  cfg.num_samples = 7;
  cfg.delta = 0.7;
  const auto j = cfg.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(j);
  CHECK(back.to_json() == j);

  nlohmann::json bad = j;
  bad["typo_field"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), std::invalid_argument);

  nlohmann::json bad_disorder = j;
  bad_disorder["disorder"]["sigma"] = 1.0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_disorder), std::invalid_argument);

  nlohmann::json bad_samples = j;
  bad_samples["num_samples"] = 0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_samples), std::invalid_argument);
}

TEST_CASE("zero hopping correlator: delta functions and a sentinel rate") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Correlator;
  cfg.dims = {8};
  cfg.j0 = 0.0;
  cfg.num_samples = 4;
  cfg.threads = 1;
  const auto rep = run_correlator_experiment(cfg);
  CHECK(rep.failed == 0);
  CHECK(std::abs(rep.rows[0].mean - 1.0) < 1e-9);
  for (const auto& row : rep.rows)
    if (row.distance >= 1) {
      CHECK(row.mean == 0.0);
      CHECK(row.tail_frequency == 0.0);
    }
  CHECK(std::isinf(rep.fitted_rate));
  CHECK(rep.fitted_rate < 0.0);
}

TEST_CASE("correlator decays and matches the dense reference") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Correlator;
  cfg.dims = {16};
  cfg.j0 = 0.05;
  cfg.delta = 0.7;
  cfg.num_samples = 60;
  cfg.master_seed = 7;
  const auto rep = run_correlator_experiment(cfg);
  CHECK(rep.failed == 0);
  CHECK(std::abs(rep.rows[0].mean - 1.0) < 1e-9);
  for (int d = 1; d + 1 <= 8; ++d) CHECK(rep.rows[d].mean > rep.rows[d + 1].mean);
  CHECK(rep.fitted_rate < 0.0);
  CHECK(rep.oracle_crosscheck < 1e-8);
}

TEST_CASE("percolation with epsilon forced to zero never links sites") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Percolation;
  cfg.dims = {16};
  cfg.j0 = 0.02;
  cfg.epsilon_override = 0.0;
  cfg.num_samples = 5;
  const auto rep = run_percolation_experiment(cfg);
  CHECK(rep.failed == 0);
  for (const auto& row : rep.rows) CHECK(row.frequency == 0.0);
}

TEST_CASE("percolation frequencies are probabilities and decay broadly") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Percolation;
  cfg.dims = {24};
  cfg.j0 = 0.02;
  cfg.delta = 1.0;  // epsilon = j0: sparse blocks
  cfg.num_samples = 80;
  cfg.master_seed = 3;
  const auto rep = run_percolation_experiment(cfg);
  CHECK(rep.failed == 0);
  for (const auto& row : rep.rows) {
    CHECK(row.frequency >= 0.0);
    CHECK(row.frequency <= 1.0);
  }
  REQUIRE(rep.ever_frequency.size() >= 9);
  CHECK(rep.ever_frequency[1] >= rep.ever_frequency[8]);
}

TEST_CASE("zero hopping convergence table is identically zero") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Convergence;
  cfg.dims = {12};
  cfg.j0 = 0.0;
  cfg.num_samples = 3;
  cfg.max_steps = 4;
  cfg.tol = 0.0;
  const auto rep = run_convergence_experiment(cfg);
  CHECK(rep.failed == 0);
  for (const auto& row : rep.rows) {
    CHECK(row.median_max_offdiag == 0.0);
    CHECK(row.bound == 0.0);
  }
}

TEST_CASE("convergence medians shrink across scales") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Convergence;
  cfg.dims = {20};
  cfg.j0 = 0.02;
  cfg.delta = 0.7;
  cfg.num_samples = 40;
  cfg.max_steps = 4;
  cfg.tol = 0.0;
  cfg.master_seed = 11;
  const auto rep = run_convergence_experiment(cfg);
  CHECK(rep.failed == 0);
  REQUIRE(rep.rows.size() >= 3);
  for (double r : rep.median_ratios) CHECK(r > 1.0);
  CHECK(rep.fitted_slope < 0.0);
  // After the first scale the leftover coupling on resonance-free samples is
  // second order in the hopping.
  const double eps = cfg.resonance_params().epsilon;
  CHECK(rep.block_free_samples > 0);
  CHECK(rep.step1_bound_max <= 10.0 * cfg.j0 * cfg.j0 / eps);
}

TEST_CASE("volume convergence with zero hopping is exactly stable") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::VolumeConvergence;
  cfg.dims = {1};
  cfg.j0 = 0.0;
  cfg.num_samples = 4;
  cfg.k_values = {3, 5, 7};
  const auto rep = run_volume_convergence_experiment(cfg);
  CHECK(rep.failed == 0);
  REQUIRE(rep.rows.size() == 2);
  for (const auto& row : rep.rows) {
    CHECK(row.mean_de == 0.0);   // shared potential: the center energy is v(0)
    CHECK(row.mean_dphi == 0.0); // and the eigenvector is the center delta
  }
}

TEST_CASE("volume convergence differences shrink with the box") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::VolumeConvergence;
  cfg.dims = {1};
  cfg.j0 = 0.02;
  cfg.delta = 0.7;
  cfg.num_samples = 20;
  cfg.k_values = {4, 8, 12};
  cfg.master_seed = 9;
  const auto rep = run_volume_convergence_experiment(cfg);
  CHECK(rep.failed == 0);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].median_de >= rep.rows[1].median_de);
  CHECK(rep.fitted_slope_energy < 0.0);
}

TEST_CASE("oracle compare on a small grid is exact to tolerance") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::OracleCompare;
  cfg.dims = {4, 4};
  cfg.j0 = 0.02;
  cfg.delta = 0.7;
  cfg.num_samples = 10;
  const auto rep = run_oracle_compare(cfg);
  CHECK(rep.failed == 0);
  CHECK(rep.max_spectrum_diff < 1e-9);
  CHECK(rep.max_evec_residual < 1e-8);
  CHECK(rep.max_orth_residual < 1e-10);
  CHECK(rep.labels_valid_count == 10);
}

TEST_CASE("gap experiment reports strictly positive gaps") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Gaps;
  cfg.dims = {12};
  cfg.j0 = 0.02;
  cfg.delta = 0.7;
  cfg.num_samples = 30;
  const auto rep = run_gap_experiment(cfg);
  CHECK(rep.failed == 0);
  CHECK(rep.minimum > 0.0);
  CHECK(rep.zero_fraction == 0.0);
  CHECK(rep.q25 <= rep.median);
  CHECK(rep.median <= rep.q75);
}

TEST_CASE("an injected exact degeneracy splits at the hopping scale") {
  LatticeGeometry geom({2});
  Vector v(2);
  v << 0.5, 0.5;
  const Hamiltonian h = build_hamiltonian(geom, v, 0.01);
  const auto fin = run_to_convergence(h, Schedule::standard(), ResonanceParams::for_model(0.01, 1));
  CHECK(min_gap(fin.eigenvalues) == doctest::Approx(0.02).epsilon(1e-9));
}

TEST_CASE("reports are byte-identical across reruns") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Correlator;
  cfg.dims = {12};
  cfg.j0 = 0.03;
  cfg.delta = 0.7;
  cfg.num_samples = 8;
  cfg.threads = 4;  // concurrency must not leak into the bytes
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  CHECK(render_report_csv(a.header, a.table) == render_report_csv(b.header, b.table));
  CHECK(a.trace == b.trace);

  cfg.experiment = ExperimentKind::Percolation;
  const auto c = run_experiment(cfg);
  const auto d = run_experiment(cfg);
  CHECK(render_report_csv(c.header, c.table) == render_report_csv(d.header, d.table));
}

TEST_CASE("format_double is stable shortest round trip") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-0.0) == "-0");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}
