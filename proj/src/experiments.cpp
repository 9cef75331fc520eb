#include "mslocal/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "mslocal/oracle.hpp"
#include "mslocal/version.hpp"

namespace mslocal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double to_unit_double(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

template <typename Work>
void for_each_sample(int total, int threads_cfg, Work&& work) {
  int threads = threads_cfg;
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw == 0 ? 4 : static_cast<int>(hw);
  }
  threads = std::max(1, std::min(threads, total));
  if (threads == 1) {
    for (int i = 0; i < total; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) work(i);
    });
  for (auto& th : pool) th.join();
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) /
         std::sqrt(static_cast<double>(v.size()));
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

struct RefPairs {
  std::vector<std::array<int, 3>> pairs;  // {x, y, distance >= 1}
  std::vector<int> zero_sites;
  int max_distance = 0;
};

RefPairs reference_pairs(const LatticeGeometry& geom) {
  RefPairs out;
  if (geom.dimension() == 1) {
    for (int x = 0; x < geom.size(); ++x) out.zero_sites.push_back(x);
    for (int x = 0; x < geom.size(); ++x)
      for (int y = x + 1; y < geom.size(); ++y) {
        const int d = geom.l1_distance(x, y);
        out.pairs.push_back({x, y, d});
        out.max_distance = std::max(out.max_distance, d);
      }
  } else {
    std::vector<int> c(geom.dims().size());
    for (std::size_t mu = 0; mu < c.size(); ++mu) c[mu] = geom.dims()[mu] / 2;
    const int center = geom.flat_index(c);
    out.zero_sites.push_back(center);
    for (int y = 0; y < geom.size(); ++y) {
      if (y == center) continue;
      const int d = geom.l1_distance(center, y);
      out.pairs.push_back({center, y, d});
      out.max_distance = std::max(out.max_distance, d);
    }
  }
  return out;
}

void append_pipeline_trace(std::vector<std::string>& out, int sample,
                           const FinalDiagonalization& fin) {
  for (const auto& m : fin.metrics) {
    const nlohmann::json j{{"sample", sample},
                           {"step", m.step},
                           {"L", m.length},
                           {"resonant_pairs", m.resonant_pairs},
                           {"blocks", m.blocks_total},
                           {"blocks_small", m.blocks_small},
                           {"blocks_large", m.blocks_large},
                           {"largest_block", m.largest_block},
                           {"max_offdiag", m.max_offdiag},
                           {"generator_max", m.generator_max},
                           {"orth_residual", m.orth_residual}};
    out.push_back(j.dump());
  }
  const nlohmann::json j{
      {"sample", sample}, {"steps_used", fin.steps_used}, {"cleanup", fin.cleanup_used}};
  out.push_back(j.dump());
}

struct SampleSlot {
  bool ok = false;
  std::string error;
  FinalDiagonalization fin;
  Vector potential;
};

SampleSlot run_pipeline_sample(const ExperimentConfig& cfg, const LatticeGeometry& geom,
                               int sample) {
  SampleSlot slot;
  try {
    slot.potential = sample_potential(geom, cfg.disorder(), static_cast<std::uint64_t>(sample));
    const Hamiltonian h = build_hamiltonian(geom, slot.potential, cfg.j0);
    slot.fin = run_to_convergence(h, cfg.schedule(), cfg.resonance_params());
    slot.ok = true;
  } catch (const std::exception& e) {
    slot.error = e.what();
  }
  return slot;
}

bool is_permutation_labeling(const std::vector<int>& labels) {
  std::vector<char> seen(labels.size(), 0);
  for (int site : labels) {
    if (site < 0 || site >= static_cast<int>(labels.size()) || seen[site]) return false;
    seen[site] = 1;
  }
  return true;
}

double worst_orth_residual(const FinalDiagonalization& fin) {
  double worst = fin.rotation.orth_residual;
  for (const auto& m : fin.metrics) worst = std::max(worst, m.orth_residual);
  return worst;
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Correlator: return "correlator";
    case ExperimentKind::Percolation: return "percolation";
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::VolumeConvergence: return "volume_convergence";
    case ExperimentKind::OracleCompare: return "oracle_compare";
    case ExperimentKind::Gaps: return "gaps";
  }
  return "unknown";
}

ExperimentKind experiment_from_string(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::Correlator, ExperimentKind::Percolation, ExperimentKind::Convergence,
        ExperimentKind::VolumeConvergence, ExperimentKind::OracleCompare, ExperimentKind::Gaps})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown experiment: " + name);
}

void ExperimentConfig::validate() const {
  if (dims.empty()) throw std::invalid_argument("dims must be nonempty");
  for (int d : dims)
    if (d <= 0) throw std::invalid_argument("dims must be positive");
  if (j0 < 0.0) throw std::invalid_argument("j0 must be nonnegative");
  if (num_samples < 1) throw std::invalid_argument("num_samples must be at least 1");
  if (!(disorder_hi > disorder_lo)) throw std::invalid_argument("disorder needs hi > lo");
  if (delta <= 0.0) throw std::invalid_argument("delta must be positive");
  if (tol < 0.0) throw std::invalid_argument("tol must be nonnegative");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be at least 1");
  if (kappa <= 0.0) throw std::invalid_argument("kappa must be positive");
  if (failure_fraction < 0.0 || failure_fraction > 1.0)
    throw std::invalid_argument("failure_fraction must lie in [0, 1]");
  if (experiment == ExperimentKind::VolumeConvergence) {
    if (k_values.size() < 2) throw std::invalid_argument("volume_convergence needs >= 2 box sizes");
    for (std::size_t i = 0; i < k_values.size(); ++i) {
      if (k_values[i] < 1) throw std::invalid_argument("box sizes must be positive");
      if (i > 0 && k_values[i] <= k_values[i - 1])
        throw std::invalid_argument("box sizes must be strictly increasing");
    }
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{
      {"experiment", to_string(experiment)},
      {"dims", dims},
      {"j0", j0},
      {"disorder", {{"kind", "uniform"}, {"lo", disorder_lo}, {"hi", disorder_hi}}},
      {"master_seed", master_seed},
      {"num_samples", num_samples},
      {"delta", delta},
      {"epsilon", epsilon_override},
      {"m", big_m},
      {"tol", tol},
      {"max_steps", max_steps},
      {"kappa", kappa},
      {"k_values", k_values},
      {"out", out},
      {"failure_fraction", failure_fraction},
      {"threads", threads}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "experiment", "dims",      "j0",        "disorder",         "master_seed", "num_samples",
      "delta",      "epsilon",   "m",         "tol",              "max_steps",   "kappa",
      "k_values",   "out",       "threads",   "failure_fraction"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw std::invalid_argument("unknown config field: " + key);
  }
  ExperimentConfig cfg;
  if (j.contains("experiment")) cfg.experiment = experiment_from_string(j.at("experiment"));
  if (j.contains("dims")) cfg.dims = j.at("dims").get<std::vector<int>>();
  if (j.contains("j0")) cfg.j0 = j.at("j0").get<double>();
  if (j.contains("disorder")) {
    const auto& d = j.at("disorder");
    for (const auto& [key, value] : d.items()) {
      (void)value;
      if (key != "kind" && key != "lo" && key != "hi")
        throw std::invalid_argument("unknown disorder field: " + key);
    }
    if (d.contains("kind") && d.at("kind") != "uniform")
      throw std::invalid_argument("unsupported disorder kind");
    if (d.contains("lo")) cfg.disorder_lo = d.at("lo").get<double>();
    if (d.contains("hi")) cfg.disorder_hi = d.at("hi").get<double>();
  }
  if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("num_samples")) cfg.num_samples = j.at("num_samples").get<int>();
  if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
  if (j.contains("epsilon")) cfg.epsilon_override = j.at("epsilon").get<double>();
  if (j.contains("m")) cfg.big_m = j.at("m").get<double>();
  if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
  if (j.contains("max_steps")) cfg.max_steps = j.at("max_steps").get<int>();
  if (j.contains("kappa")) cfg.kappa = j.at("kappa").get<double>();
  if (j.contains("k_values")) cfg.k_values = j.at("k_values").get<std::vector<int>>();
  if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
  if (j.contains("failure_fraction")) cfg.failure_fraction = j.at("failure_fraction").get<double>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  cfg.validate();
  return cfg;
}

DisorderConfig ExperimentConfig::disorder() const {
  return DisorderConfig{disorder_kind, disorder_lo, disorder_hi, master_seed};
}

ResonanceParams ExperimentConfig::resonance_params() const {
  ResonanceParams p = ResonanceParams::for_model(j0, static_cast<int>(dims.size()), delta, big_m);
  if (epsilon_override >= 0.0) p.epsilon = epsilon_override;
  return p;
}

Schedule ExperimentConfig::schedule() const { return Schedule::standard(max_steps, tol); }

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = mean_of(x), my = mean_of(y);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : num / den;
}

CorrelatorReport run_correlator_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const LatticeGeometry geom(cfg.dims);
  const RefPairs ref = reference_pairs(geom);
  const int n = cfg.num_samples;

  std::vector<SampleSlot> slots(n);
  // Per-sample mean correlator by distance, plus pooled tail counts.
  std::vector<std::vector<double>> sample_means(n);
  std::vector<std::vector<long long>> tail_hits(n), tail_tot(n);
  for_each_sample(n, cfg.threads, [&](int i) {
    slots[i] = run_pipeline_sample(cfg, geom, i);
    if (!slots[i].ok) return;
    const Matrix absr = slots[i].fin.rotation.matrix.cwiseAbs();
    const Matrix q = absr * absr.transpose();
    std::vector<double> sum(ref.max_distance + 1, 0.0);
    std::vector<long long> cnt(ref.max_distance + 1, 0), hits(ref.max_distance + 1, 0);
    for (int s : ref.zero_sites) {
      sum[0] += q(s, s);
      ++cnt[0];
    }
    for (const auto& [x, y, d] : ref.pairs) {
      sum[d] += q(x, y);
      ++cnt[d];
      const double threshold = cfg.j0 > 0.0 ? std::pow(cfg.j0, cfg.kappa * d / 2.0) : 0.0;
      if (q(x, y) > threshold) ++hits[d];
    }
    auto& means = sample_means[i];
    means.assign(ref.max_distance + 1, 0.0);
    for (int d = 0; d <= ref.max_distance; ++d)
      means[d] = cnt[d] > 0 ? sum[d] / static_cast<double>(cnt[d]) : 0.0;
    tail_hits[i] = std::move(hits);
    std::vector<long long> totals(ref.max_distance + 1, 0);
    for (const auto& p : ref.pairs) ++totals[p[2]];
    tail_tot[i] = std::move(totals);
  });

  CorrelatorReport rep;
  rep.total = n;
  for (int i = 0; i < n; ++i) {
    if (!slots[i].ok) {
      ++rep.failed;
      rep.trace.push_back(nlohmann::json{{"sample", i}, {"error", slots[i].error}}.dump());
      continue;
    }
    append_pipeline_trace(rep.trace, i, slots[i].fin);
  }

  for (int d = 0; d <= ref.max_distance; ++d) {
    std::vector<double> per_sample;
    long long hits = 0, tot = 0;
    for (int i = 0; i < n; ++i) {
      if (!slots[i].ok) continue;
      per_sample.push_back(sample_means[i][d]);
      if (d >= 1) {
        hits += tail_hits[i][d];
        tot += tail_tot[i][d];
      }
    }
    CorrelatorReport::Row row;
    row.distance = d;
    row.mean = mean_of(per_sample);
    row.std_error = std_error_of(per_sample);
    row.tail_frequency = tot > 0 ? static_cast<double>(hits) / static_cast<double>(tot) : 0.0;
    row.count = static_cast<long long>(per_sample.size());
    rep.rows.push_back(row);
  }

  std::vector<double> xs, ys;
  for (const auto& row : rep.rows)
    if (row.distance >= 1 && row.mean > 0.0) {
      xs.push_back(row.distance);
      ys.push_back(std::log(row.mean));
    }
  rep.fitted_rate = xs.size() >= 2 ? fit_slope(xs, ys) : -kInf;

  // Spot-check the pipeline correlator against the dense reference solver.
  const int checks = std::min(3, n);
  for (int i = 0; i < checks; ++i) {
    if (!slots[i].ok) continue;
    const Hamiltonian h = build_hamiltonian(geom, slots[i].potential, cfg.j0);
    const EigenDecomposition decomp = dense_jacobi_eigensolve(h.matrix);
    const Matrix absr = slots[i].fin.rotation.matrix.cwiseAbs();
    const Matrix q = absr * absr.transpose();
    for (const auto& [x, y, d] : ref.pairs) {
      (void)d;
      rep.oracle_crosscheck =
          std::max(rep.oracle_crosscheck, std::abs(q(x, y) - exact_correlator(decomp, x, y)));
    }
  }
  return rep;
}

PercolationReport run_percolation_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const LatticeGeometry geom(cfg.dims);
  const RefPairs ref = reference_pairs(geom);
  const int n = cfg.num_samples;

  std::vector<SampleSlot> slots(n);
  for_each_sample(n, cfg.threads, [&](int i) { slots[i] = run_pipeline_sample(cfg, geom, i); });

  int max_scale = 0;
  for (const auto& s : slots)
    if (s.ok) max_scale = std::max(max_scale, static_cast<int>(s.fin.registry_history.size()));

  // events[scale][d]; scale index 0 is reserved for the union over scales.
  std::vector<std::vector<long long>> events(max_scale + 1,
                                             std::vector<long long>(ref.max_distance + 1, 0));
  std::vector<long long> totals(ref.max_distance + 1, 0);

  PercolationReport rep;
  rep.total = n;
  for (int i = 0; i < n; ++i) {
    if (!slots[i].ok) {
      ++rep.failed;
      rep.trace.push_back(nlohmann::json{{"sample", i}, {"error", slots[i].error}}.dump());
      continue;
    }
    const auto& history = slots[i].fin.registry_history;
    for (const auto& [x, y, d] : ref.pairs) {
      ++totals[d];
      bool ever = false;
      for (int k = 1; k <= max_scale; ++k) {
        // Converged samples keep their last registry at later scales.
        const std::size_t idx =
            std::min<std::size_t>(history.size(), static_cast<std::size_t>(k)) - 1;
        const bool same = !history.empty() && history[idx].same_block(x, y);
        if (same) {
          ++events[k][d];
          ever = true;
        }
      }
      if (ever) ++events[0][d];
    }
    append_pipeline_trace(rep.trace, i, slots[i].fin);
    rep.trace.push_back(
        nlohmann::json{{"sample", i}, {"registry", slots[i].fin.registry.to_json()}}.dump());
  }

  rep.ever_frequency.assign(ref.max_distance + 1, 0.0);
  for (int scale = 1; scale <= max_scale + 1; ++scale) {
    const int row_scale = scale == max_scale + 1 ? -1 : scale;
    const auto& ev = events[scale == max_scale + 1 ? 0 : scale];
    for (int d = 1; d <= ref.max_distance; ++d) {
      PercolationReport::Row row;
      row.scale = row_scale;
      row.distance = d;
      row.events = ev[d];
      row.count = totals[d];
      row.frequency = totals[d] > 0 ? static_cast<double>(ev[d]) / static_cast<double>(totals[d])
                                    : 0.0;
      rep.rows.push_back(row);
      if (row_scale == -1) rep.ever_frequency[d] = row.frequency;
    }
  }
  return rep;
}

ConvergenceReport run_convergence_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const LatticeGeometry geom(cfg.dims);
  const int n = cfg.num_samples;

  std::vector<SampleSlot> slots(n);
  for_each_sample(n, cfg.threads, [&](int i) { slots[i] = run_pipeline_sample(cfg, geom, i); });

  ConvergenceReport rep;
  rep.total = n;
  int max_step = 0;
  for (int i = 0; i < n; ++i) {
    if (!slots[i].ok) {
      ++rep.failed;
      rep.trace.push_back(nlohmann::json{{"sample", i}, {"error", slots[i].error}}.dump());
      continue;
    }
    max_step = std::max(max_step, static_cast<int>(slots[i].fin.metrics.size()));
    append_pipeline_trace(rep.trace, i, slots[i].fin);
  }

  const ResonanceParams params = cfg.resonance_params();
  const double ratio = params.epsilon > 0.0 ? cfg.j0 / params.epsilon : 0.0;
  const Schedule sched = cfg.schedule();
  for (int k = 1; k <= max_step; ++k) {
    std::vector<double> values;
    for (int i = 0; i < n; ++i) {
      if (!slots[i].ok) continue;
      const auto& ms = slots[i].fin.metrics;
      if (static_cast<int>(ms.size()) >= k) values.push_back(ms[k - 1].max_offdiag);
    }
    if (values.empty()) break;
    ConvergenceReport::Row row;
    row.step = k;
    row.length = sched.length(k);
    row.median_max_offdiag = median_of(values);
    double slog = 0.0;
    for (double v : values) slog += std::log(std::max(v, 1e-300));
    row.geomean_max_offdiag = std::exp(slog / static_cast<double>(values.size()));
    row.bound = ratio > 0.0 ? std::pow(ratio, row.length) : 0.0;
    rep.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    const double a = rep.rows[i].median_max_offdiag, b = rep.rows[i + 1].median_max_offdiag;
    rep.median_ratios.push_back(b > 0.0 ? a / b : kInf);
  }
  std::vector<double> xs, ys;
  for (const auto& row : rep.rows)
    if (row.step <= 4 && row.median_max_offdiag > 0.0) {
      xs.push_back(row.length);
      ys.push_back(std::log(row.median_max_offdiag));
    }
  rep.fitted_slope = fit_slope(xs, ys);

  for (int i = 0; i < n; ++i) {
    if (!slots[i].ok || slots[i].fin.metrics.empty()) continue;
    if (slots[i].fin.metrics.front().resonant_pairs != 0) continue;
    ++rep.block_free_samples;
    rep.step1_bound_max = std::max(rep.step1_bound_max, slots[i].fin.metrics.front().max_offdiag);
  }
  return rep;
}

VolumeConvergenceReport run_volume_convergence_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const int dim = static_cast<int>(cfg.dims.size());
  if (dim > 2) throw std::invalid_argument("volume_convergence supports 1D and 2D boxes");
  const int n = cfg.num_samples;
  const int k_max = cfg.k_values.back();

  // Potential keyed by absolute position so nested boxes share one field.
  const auto potential_at = [&](int sample, const std::vector<int>& abs_pos) {
    std::uint64_t h = mix_seed(cfg.master_seed, static_cast<std::uint64_t>(sample));
    for (int p : abs_pos) h = mix_seed(h, static_cast<std::uint64_t>(p + (1 << 20)));
    return cfg.disorder_lo + (cfg.disorder_hi - cfg.disorder_lo) * to_unit_double(h);
  };

  struct VolumeSlot {
    bool ok = false;
    std::string error;
    std::vector<double> de;    // |E_c(K) - E_c(K_max)| per box below the largest
    std::vector<double> dphi;  // sup-norm eigenvector differences, zero padded
    std::vector<std::string> trace;
  };
  std::vector<VolumeSlot> slots(n);

  for_each_sample(n, cfg.threads, [&](int i) {
    auto& slot = slots[i];
    try {
      std::vector<double> energies;
      std::vector<Vector> vectors;  // embedded into the largest box
      for (int K : cfg.k_values) {
        std::vector<int> box(dim, 2 * K + 1);
        const LatticeGeometry geom(box);
        Vector v(geom.size());
        for (int s = 0; s < geom.size(); ++s) {
          auto c = geom.coords(s);
          for (auto& x : c) x -= K;
          v[s] = potential_at(i, c);
        }
        const Hamiltonian h = build_hamiltonian(geom, v, cfg.j0);
        ExperimentConfig sub = cfg;
        sub.dims = box;
        const FinalDiagonalization fin =
            run_to_convergence(h, sub.schedule(), sub.resonance_params());
        const int center = geom.flat_index(std::vector<int>(dim, K));
        int state = -1;
        for (std::size_t a = 0; a < fin.labels.size(); ++a)
          if (fin.labels[a] == center) state = static_cast<int>(a);
        if (state < 0) throw NumericalError("no state labeled by the center site");
        Vector phi = fin.rotation.matrix.col(state);
        Eigen::Index am = 0;
        phi.cwiseAbs().maxCoeff(&am);
        if (phi[am] < 0.0) phi = -phi;
        // Embed into the largest box, centered.
        const LatticeGeometry big(std::vector<int>(dim, 2 * k_max + 1));
        Vector embedded = Vector::Zero(big.size());
        for (int s = 0; s < geom.size(); ++s) {
          auto c = geom.coords(s);
          for (auto& x : c) x += k_max - K;
          embedded[big.flat_index(c)] = phi[s];
        }
        energies.push_back(fin.eigenvalues[state]);
        vectors.push_back(std::move(embedded));
        slot.trace.push_back(nlohmann::json{{"sample", i},
                                            {"box_k", K},
                                            {"steps_used", fin.steps_used},
                                            {"cleanup", fin.cleanup_used},
                                            {"center_energy", energies.back()}}
                                 .dump());
      }
      for (std::size_t b = 0; b + 1 < cfg.k_values.size(); ++b) {
        slot.de.push_back(std::abs(energies[b] - energies.back()));
        slot.dphi.push_back((vectors[b] - vectors.back()).cwiseAbs().maxCoeff());
      }
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });

  VolumeConvergenceReport rep;
  rep.total = n;
  for (int i = 0; i < n; ++i) {
    if (!slots[i].ok) {
      ++rep.failed;
      rep.trace.push_back(nlohmann::json{{"sample", i}, {"error", slots[i].error}}.dump());
      continue;
    }
    for (const auto& line : slots[i].trace) rep.trace.push_back(line);
  }

  for (std::size_t b = 0; b + 1 < cfg.k_values.size(); ++b) {
    std::vector<double> de, dphi;
    for (int i = 0; i < n; ++i)
      if (slots[i].ok) {
        de.push_back(slots[i].de[b]);
        dphi.push_back(slots[i].dphi[b]);
      }
    VolumeConvergenceReport::Row row;
    row.box_k = cfg.k_values[b];
    row.mean_de = mean_of(de);
    row.se_de = std_error_of(de);
    row.median_de = median_of(de);
    row.mean_dphi = mean_of(dphi);
    row.se_dphi = std_error_of(dphi);
    row.median_dphi = median_of(dphi);
    row.samples = static_cast<int>(de.size());
    rep.rows.push_back(row);
  }
  std::vector<double> xs, ye, yp;
  for (const auto& row : rep.rows)
    if (row.median_de > 0.0 && row.median_dphi > 0.0) {
      xs.push_back(row.box_k);
      ye.push_back(std::log(row.median_de));
      yp.push_back(std::log(row.median_dphi));
    }
  rep.fitted_slope_energy = fit_slope(xs, ye);
  rep.fitted_slope_vector = fit_slope(xs, yp);
  return rep;
}

OracleCompareReport run_oracle_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  const LatticeGeometry geom(cfg.dims);
  const int n = cfg.num_samples;

  std::vector<SampleSlot> slots(n);
  std::vector<OracleCompareReport::Row> rows(n);
  for_each_sample(n, cfg.threads, [&](int i) {
    slots[i] = run_pipeline_sample(cfg, geom, i);
    if (!slots[i].ok) return;
    const auto& fin = slots[i].fin;
    const Hamiltonian h = build_hamiltonian(geom, slots[i].potential, cfg.j0);
    const EigenDecomposition decomp = dense_jacobi_eigensolve(h.matrix);
    OracleCompareReport::Row row;
    row.sample = i;
    row.spectrum_diff = spectrum_compare(fin.eigenvalues, decomp.eigenvalues);
    const Matrix residual =
        h.matrix * fin.rotation.matrix - fin.rotation.matrix * fin.eigenvalues.asDiagonal();
    row.max_evec_residual = residual.cwiseAbs().maxCoeff();
    row.labels_valid = is_permutation_labeling(fin.labels);
    row.orth_residual = worst_orth_residual(fin);
    bool any_blocks = fin.cleanup_used;
    for (const auto& m : fin.metrics) any_blocks = any_blocks || m.blocks_total > 0;
    row.block_free = !any_blocks;
    row.argmax_match = true;
    if (row.block_free)
      for (Eigen::Index a = 0; a < fin.rotation.matrix.cols(); ++a) {
        Eigen::Index am = 0;
        fin.rotation.matrix.col(a).cwiseAbs().maxCoeff(&am);
        if (fin.labels[a] != static_cast<int>(am)) row.argmax_match = false;
      }
    rows[i] = row;
  });

  OracleCompareReport rep;
  rep.total = n;
  for (int i = 0; i < n; ++i) {
    if (!slots[i].ok) {
      ++rep.failed;
      rep.trace.push_back(nlohmann::json{{"sample", i}, {"error", slots[i].error}}.dump());
      continue;
    }
    rep.rows.push_back(rows[i]);
    rep.max_spectrum_diff = std::max(rep.max_spectrum_diff, rows[i].spectrum_diff);
    rep.max_evec_residual = std::max(rep.max_evec_residual, rows[i].max_evec_residual);
    rep.max_orth_residual = std::max(rep.max_orth_residual, rows[i].orth_residual);
    if (rows[i].labels_valid) ++rep.labels_valid_count;
    if (rows[i].block_free) {
      ++rep.block_free_count;
      if (rows[i].argmax_match) ++rep.argmax_match_count;
    }
    append_pipeline_trace(rep.trace, i, slots[i].fin);
  }
  return rep;
}

GapReport run_gap_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const LatticeGeometry geom(cfg.dims);
  const int n = cfg.num_samples;

  std::vector<SampleSlot> slots(n);
  for_each_sample(n, cfg.threads, [&](int i) { slots[i] = run_pipeline_sample(cfg, geom, i); });

  GapReport rep;
  rep.total = n;
  for (int i = 0; i < n; ++i) {
    if (!slots[i].ok) {
      ++rep.failed;
      rep.trace.push_back(nlohmann::json{{"sample", i}, {"error", slots[i].error}}.dump());
      continue;
    }
    rep.per_sample.push_back(min_gap(slots[i].fin.eigenvalues));
    append_pipeline_trace(rep.trace, i, slots[i].fin);
  }
  if (!rep.per_sample.empty()) {
    std::vector<double> sorted = rep.per_sample;
    std::sort(sorted.begin(), sorted.end());
    rep.minimum = sorted.front();
    rep.maximum = sorted.back();
    rep.q05 = quantile_sorted(sorted, 0.05);
    rep.q25 = quantile_sorted(sorted, 0.25);
    rep.median = quantile_sorted(sorted, 0.50);
    rep.q75 = quantile_sorted(sorted, 0.75);
    rep.q95 = quantile_sorted(sorted, 0.95);
    long long zeros = 0;
    for (double g : rep.per_sample)
      if (g == 0.0) ++zeros;
    rep.zero_fraction = static_cast<double>(zeros) / static_cast<double>(rep.per_sample.size());
  }
  return rep;
}

}  // namespace mslocal
