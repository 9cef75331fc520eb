// Acceptance suite: one line per criterion, nonzero exit on any failure.
//
// Experiment parameters are pinned here. The resonance exponent delta is
// chosen per run: the pipeline-behavior checks (decay, labeling, volume
// trends) operate in the regime where epsilon = j0^delta separates typical
// level spacings from the hopping, while the percolation statistics use a
// smaller epsilon so that blocks stay dilute enough to resolve their decay
// in distance.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "mslocal/experiments.hpp"
#include "mslocal/model.hpp"
#include "mslocal/multiscale.hpp"
#include "mslocal/oracle.hpp"
#include "mslocal/report_io.hpp"

using namespace mslocal;

namespace {

constexpr double kDeltaPipeline = 0.7;
constexpr double kDeltaDilute = 0.85;      // blocks rare: exercises block-free labeling
constexpr double kDeltaPercolation = 1.8;  // blocks dilute enough to resolve their decay
constexpr double kDeltaVolume = 0.85;

int g_failures = 0;
double g_worst_orth = 0.0;
long long g_orth_checks = 0;

void record(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  %-34s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void absorb_orth(const std::vector<std::string>& trace) {
  for (const auto& line : trace) {
    const auto j = nlohmann::json::parse(line);
    if (j.contains("orth_residual")) {
      g_worst_orth = std::max(g_worst_orth, j.at("orth_residual").get<double>());
      ++g_orth_checks;
    }
  }
}

std::string fmt(double x) { return format_double(x); }

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();

  // ---- 1. Oracle equivalence + 8. labeling, over a dims x j0 grid. --------
  {
    double worst_spec = 0.0, worst_evec = 0.0;
    int labels_bad = 0, block_free = 0, argmax_bad = 0, failed = 0, total = 0;
    for (const std::vector<int>& dims : {std::vector<int>{64}, std::vector<int>{12, 12}}) {
      for (double j0 : {0.01, 0.02, 0.05}) {
        ExperimentConfig cfg;
        cfg.experiment = ExperimentKind::OracleCompare;
        cfg.dims = dims;
        cfg.j0 = j0;
        cfg.delta = kDeltaPipeline;
        cfg.num_samples = 100;
        cfg.master_seed = 9000 + static_cast<std::uint64_t>(j0 * 1000) + dims.size();
        const auto rep = run_oracle_compare(cfg);
        absorb_orth(rep.trace);
        worst_spec = std::max(worst_spec, rep.max_spectrum_diff);
        worst_evec = std::max(worst_evec, rep.max_evec_residual);
        labels_bad += rep.total - rep.failed - rep.labels_valid_count;
        block_free += rep.block_free_count;
        argmax_bad += rep.block_free_count - rep.argmax_match_count;
        failed += rep.failed;
        total += rep.total;
      }
    }
    // A dilute-regime run so the block-free labeling clause is exercised on a
    // substantial sample count rather than holding vacuously. The coupling is
    // small enough that epsilon = j0^delta stays a few times j0: whatever is
    // not in a block is then genuinely weakly mixed, which is the regime the
    // site labeling is meant for.
    {
      ExperimentConfig cfg;
      cfg.experiment = ExperimentKind::OracleCompare;
      cfg.dims = {32};
      cfg.j0 = 0.005;
      cfg.delta = kDeltaDilute;
      cfg.num_samples = 200;
      cfg.master_seed = 801;
      const auto rep = run_oracle_compare(cfg);
      absorb_orth(rep.trace);
      worst_spec = std::max(worst_spec, rep.max_spectrum_diff);
      worst_evec = std::max(worst_evec, rep.max_evec_residual);
      labels_bad += rep.total - rep.failed - rep.labels_valid_count;
      block_free += rep.block_free_count;
      argmax_bad += rep.block_free_count - rep.argmax_match_count;
      failed += rep.failed;
      total += rep.total;
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    record("1 oracle equivalence",
           failed == 0 && worst_spec < 1e-9 && worst_evec < 1e-8,
           "max spectrum diff " + fmt(worst_spec) + ", max eigenvector residual " +
               fmt(worst_evec) + ", " + std::to_string(total) + " samples in " + fmt(secs) + "s");
    record("8 state-site labeling", labels_bad == 0 && argmax_bad == 0 && block_free > 0,
           "non-bijective " + std::to_string(labels_bad) + ", block-free samples " +
               std::to_string(block_free) + ", argmax mismatches " + std::to_string(argmax_bad));
  }

  // ---- 3. Off-diagonal decay across scales. -------------------------------
  {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::Convergence;
    cfg.dims = {32};
    cfg.j0 = 0.02;
    cfg.delta = kDeltaPipeline;
    cfg.num_samples = 200;
    cfg.max_steps = 5;
    cfg.tol = 0.0;  // run every scheduled step
    cfg.master_seed = 301;
    const auto rep = run_convergence_experiment(cfg);
    absorb_orth(rep.trace);
    const ResonanceParams params = cfg.resonance_params();
    const double slope_bound = 0.5 * std::log(cfg.j0 / params.epsilon);
    bool ratios_ok = rep.median_ratios.size() >= 3;
    std::string ratio_text;
    for (std::size_t i = 0; i + 1 < 4 && i < rep.median_ratios.size(); ++i) {
      ratios_ok = ratios_ok && rep.median_ratios[i] >= 10.0;
      ratio_text += (i ? "," : "") + fmt(rep.median_ratios[i]);
    }
    const bool slope_ok = rep.fitted_slope <= slope_bound;
    record("3 off-diagonal decay", rep.failed == 0 && ratios_ok && slope_ok,
           "step ratios [" + ratio_text + "] (need >= 10), slope " + fmt(rep.fitted_slope) +
               " vs bound " + fmt(slope_bound));
  }

  // ---- 4 + 5. Correlator decay and tail bound. ----------------------------
  {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::Correlator;
    cfg.dims = {32};
    cfg.j0 = 0.05;
    cfg.delta = kDeltaPipeline;
    cfg.num_samples = 500;
    cfg.kappa = 0.25;
    cfg.master_seed = 401;
    const auto rep = run_correlator_experiment(cfg);
    absorb_orth(rep.trace);
    bool decreasing = true;
    for (int d = 1; d < 12; ++d)
      if (!(rep.rows[d].mean > rep.rows[d + 1].mean)) decreasing = false;
    const bool q0_ok = std::abs(rep.rows[0].mean - 1.0) < 1e-9;
    const bool rate_ok = rep.fitted_rate < 0.0 &&
                         std::abs(rep.fitted_rate) >= std::abs(std::log(cfg.j0)) / 10.0;
    bool bound_ok = true;
    double worst_margin = 0.0;
    for (const auto& row : rep.rows)
      if (row.distance >= 2) {
        const double bound = std::pow(cfg.j0, row.distance / 4.0);
        if (row.mean > bound) bound_ok = false;
        worst_margin = std::max(worst_margin, row.mean / bound);
      }
    record("4 correlator decay",
           rep.failed == 0 && decreasing && q0_ok && rate_ok && bound_ok,
           "rate " + fmt(rep.fitted_rate) + ", Q(0)-1 = " + fmt(rep.rows[0].mean - 1.0) +
               ", worst mean/bound " + fmt(worst_margin) +
               (decreasing ? ", strictly decreasing to d=12" : ", NOT decreasing"));
    const double tail8 = rep.rows.size() > 8 ? rep.rows[8].tail_frequency : 1.0;
    record("5 correlator tail bound", rep.failed == 0 && tail8 < 0.05,
           "tail frequency at d=8: " + fmt(tail8));
  }

  // ---- 6. Block percolation decay. ----------------------------------------
  {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::Percolation;
    cfg.dims = {64};
    cfg.j0 = 0.02;
    cfg.delta = kDeltaPercolation;
    cfg.num_samples = 1000;
    cfg.max_steps = 8;  // the registry is static beyond the third scale
    cfg.master_seed = 601;
    const auto rep = run_percolation_experiment(cfg);
    absorb_orth(rep.trace);
    // Non-increasing within two standard errors of a Bernoulli estimate.
    bool monotone = true;
    std::vector<double> freq = rep.ever_frequency;
    std::vector<long long> count(freq.size(), 0);
    for (const auto& row : rep.rows)
      if (row.scale == -1) count[row.distance] = row.count;
    for (std::size_t d = 1; d + 1 < freq.size(); ++d) {
      const double se = count[d] > 0
                            ? std::sqrt(std::max(freq[d] * (1.0 - freq[d]), 1e-12) /
                                        static_cast<double>(count[d]))
                            : 0.0;
      if (freq[d + 1] > freq[d] + 2.0 * se) monotone = false;
    }
    const double f1 = freq.size() > 1 ? freq[1] : 0.0;
    const double f4 = freq.size() > 4 ? freq[4] : 0.0;
    const bool ratio_ok = f4 == 0.0 || f1 / f4 >= 10.0;
    record("6 percolation decay", rep.failed == 0 && monotone && ratio_ok,
           "freq(1) " + fmt(f1) + ", freq(4) " + fmt(f4) +
               (f4 > 0.0 ? ", ratio " + fmt(f1 / f4) : ", ratio inf") +
               (monotone ? ", non-increasing" : ", NOT monotone"));
  }

  // ---- 7. Nondegeneracy. ---------------------------------------------------
  {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::Gaps;
    cfg.dims = {32};
    cfg.j0 = 0.02;
    cfg.delta = kDeltaPipeline;
    cfg.num_samples = 1000;
    cfg.master_seed = 701;
    const auto rep = run_gap_experiment(cfg);
    absorb_orth(rep.trace);
    record("7 nondegeneracy", rep.failed == 0 && rep.minimum > 0.0 && rep.zero_fraction == 0.0,
           "min gap " + fmt(rep.minimum) + ", zero fraction " + fmt(rep.zero_fraction) + " over " +
               std::to_string(rep.total) + " samples");
  }

  // ---- 9. Finite-volume convergence trend. ---------------------------------
  {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::VolumeConvergence;
    cfg.dims = {1};
    cfg.j0 = 0.02;
    cfg.delta = kDeltaVolume;
    cfg.num_samples = 100;
    cfg.k_values = {8, 12, 16, 20, 24};
    cfg.master_seed = 901;
    const auto rep = run_volume_convergence_experiment(cfg);
    absorb_orth(rep.trace);
    bool shrinking = true;
    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
      if (rep.rows[i + 1].mean_de >
          rep.rows[i].mean_de + 2.0 * (rep.rows[i].se_de + rep.rows[i + 1].se_de))
        shrinking = false;
    record("9 volume convergence",
           rep.failed == 0 && rep.fitted_slope_energy < 0.0 && rep.fitted_slope_vector < 0.0 &&
               shrinking,
           "energy slope " + fmt(rep.fitted_slope_energy) + ", vector slope " +
               fmt(rep.fitted_slope_vector));
  }

  // ---- 10. Determinism of report bytes. ------------------------------------
  {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::Correlator;
    cfg.dims = {24};
    cfg.j0 = 0.03;
    cfg.delta = kDeltaPipeline;
    cfg.num_samples = 25;
    cfg.threads = 4;
    cfg.master_seed = 1001;
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    const bool corr_same = render_report_csv(a.header, a.table) ==
                               render_report_csv(b.header, b.table) &&
                           a.trace == b.trace;
    cfg.experiment = ExperimentKind::Percolation;
    const auto c = run_experiment(cfg);
    const auto d = run_experiment(cfg);
    const bool perc_same = render_report_csv(c.header, c.table) ==
                               render_report_csv(d.header, d.table) &&
                           c.trace == d.trace;
    absorb_orth(a.trace);
    record("10 determinism", corr_same && perc_same,
           std::string("correlator rerun ") + (corr_same ? "identical" : "DIFFERS") +
               ", percolation rerun " + (perc_same ? "identical" : "DIFFERS"));
  }

  // ---- 11. Trivial fixed point at zero hopping. -----------------------------
  {
    bool ok = true;
    std::string why = "zero steps, identity rotation, exact potentials";
    for (std::uint64_t s = 0; s < 5; ++s) {
      LatticeGeometry geom({32});
      DisorderConfig dis;
      dis.master_seed = 1100 + s;
      const Vector v = sample_potential(geom, dis, 0);
      const Hamiltonian h = build_hamiltonian(geom, v, 0.0);
      const auto fin =
          run_to_convergence(h, Schedule::standard(), ResonanceParams::for_model(0.0, 1));
      if (fin.steps_used != 0 || fin.cleanup_used) ok = false;
      if (fin.eigenvalues != v) ok = false;
      if ((fin.rotation.matrix - Matrix::Identity(32, 32)).cwiseAbs().maxCoeff() != 0.0) ok = false;
    }
    record("11 trivial fixed point", ok, why);
  }

  // ---- 2. Orthogonality across every run above. -----------------------------
  record("2 orthogonality", g_worst_orth < 1e-10 && g_orth_checks > 0,
         "worst ||R^T R - I||_max " + fmt(g_worst_orth) + " over " +
             std::to_string(g_orth_checks) + " accumulations");

  const auto t_end = std::chrono::steady_clock::now();
  std::printf("total: %d failure(s), %.1fs\n", g_failures,
              std::chrono::duration<double>(t_end - t0).count());
  return g_failures == 0 ? 0 : 1;
}
