#include "rnmax/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace rnmax {

std::vector<EstimatorPair> all_estimator_pairs() {
  std::vector<EstimatorPair> out;
  for (AlphaMethod a : {AlphaMethod::GPWM, AlphaMethod::ML})
    for (PickandsMethod p : {PickandsMethod::P, PickandsMethod::CFG, PickandsMethod::MD})
      out.emplace_back(p, a);
  return out;
}

namespace {

void bad(const std::string& field, const std::string& why) {
  throw std::invalid_argument(field + ": " + why);
}

template <typename T, typename Pred>
void check_each(const std::vector<T>& v, const std::string& field, Pred ok, const char* why) {
  if (v.empty()) bad(field, "must be a nonempty list");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!ok(v[i])) bad(field + "[" + std::to_string(i) + "]", why);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (experiment != 1 && experiment != 2) bad("experiment", "must be 1 or 2");
  check_each(alphas, "alpha", [](double a) { return a > 0.0 && a < 1.0; }, "must lie in (0, 1)");
  if (experiment == 1) {
    check_each(psis, "psi", [](double p) { return p > 0.0 && p <= 1.0; }, "must lie in (0, 1]");
  } else {
    check_each(rhos, "rho", [](double r) { return r > -1.0 && r < 1.0; }, "must lie in (-1, 1)");
    check_each(nus, "upsilon", [](double v) { return v > 0.0; }, "must be positive");
    if (n_prime < 1) bad("n_prime", "must be >= 1");
  }
  check_each(ns, "n", [](int n) { return n >= 2; }, "must be >= 2");
  if (replications < 2) bad("replications", "must be >= 2");
  if (pairs.empty()) bad("pairs", "must be a nonempty list");
  if (k < 2) bad("k", "must be >= 2");
  if (grid_m < 3 || grid_m % 2 == 0) bad("grid_m", "must be odd and >= 3");
  if (jobs < 1) bad("jobs", "must be >= 1");
  if (block_cap < 1) bad("block_cap", "must be >= 1");
}

std::vector<Combo> enumerate_combos(const ExperimentConfig& config) {
  std::vector<Combo> out;
  for (int n : config.ns) {
    for (double a : config.alphas) {
      if (config.experiment == 1) {
        for (double p : config.psis) out.push_back({1, a, p, 0.0, n});
      } else {
        for (double v : config.nus)
          for (double r : config.rhos) out.push_back({2, a, r, v, n});
      }
    }
  }
  return out;
}

std::uint64_t replication_stream(const Combo& combo, int r) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(combo.experiment));
  h = hash_combine(h, double_bits(combo.alpha));
  h = hash_combine(h, double_bits(combo.dependence));
  h = hash_combine(h, double_bits(combo.nu));
  h = hash_combine(h, static_cast<std::uint64_t>(combo.n));
  return hash_combine(h, static_cast<std::uint64_t>(r));
}

Vector truth_curve(const Combo& combo, const Vector& grid) {
  const PickandsModel base = combo.experiment == 1
                                 ? PickandsModel::logistic(combo.dependence)
                                 : PickandsModel::extremal_t(combo.dependence, combo.nu);
  Vector out(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k)
    out[k] = astar_from_base(base, combo.alpha, SimplexPoint::on_edge(grid[k]));
  return out;
}

Vector trapezoid_weights(const Vector& grid) {
  const Eigen::Index m = grid.size();
  if (m < 2) throw std::invalid_argument("trapezoid_weights: need >= 2 nodes");
  Vector w = Vector::Zero(m);
  for (Eigen::Index k = 0; k + 1 < m; ++k) {
    const double h = grid[k + 1] - grid[k];
    if (!(h > 0.0)) throw std::invalid_argument("trapezoid_weights: grid must increase");
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

MiseParts mise_decompose(const Matrix& curves, const Vector& truth, const Vector& grid) {
  if (curves.cols() != truth.size() || truth.size() != grid.size())
    throw std::invalid_argument("mise_decompose: curve, truth and grid lengths differ");
  if (curves.rows() < 1) throw std::invalid_argument("mise_decompose: no curves");
  const Vector w = trapezoid_weights(grid);
  const Vector mean = curves.colwise().mean().transpose();
  MiseParts out;
  out.isb = w.dot((mean - truth).array().square().matrix());
  const Matrix centred = curves.rowwise() - mean.transpose();
  const Vector var = centred.array().square().colwise().mean().transpose();
  out.iv = w.dot(var);
  out.mise = out.isb + out.iv;
  return out;
}

double PairResult::ise_stderr() const {
  const Eigen::Index r = ise.size();
  if (r < 2) return 0.0;
  const double m = ise.mean();
  return std::sqrt((ise.array() - m).square().sum() / (r - 1) / r);
}

namespace {

struct ReplicationOutput {
  // one entry per configured pair; empty optional = failure
  std::vector<std::optional<CurveEstimate>> curves;
  std::uint64_t cap_hits = 0;
};

ReplicationOutput run_replication(const ExperimentConfig& config, const Combo& combo,
                                  const Vector& grid, int r) {
  RngStream rng(config.seed, replication_stream(combo, config.identical_replications ? 0 : r));
  ReplicationOutput out;
  PairedSample sample;
  if (combo.experiment == 1) {
    sample = sample_experiment1(combo.dependence, combo.alpha, combo.n, rng);
  } else {
    Experiment2Options opt;
    opt.n_prime = config.n_prime;
    opt.cap = config.block_cap;
    Experiment2Sample s2 = sample_experiment2(combo.dependence, combo.nu, combo.alpha, combo.n, opt, rng);
    sample = std::move(s2.sample);
    out.cap_hits = s2.cap_hits;
  }

  std::optional<double> alpha_hat[2];
  bool alpha_tried[2] = {false, false};
  std::optional<Vector> curves[3];
  const EmpiricalMargins margins(sample.eta);

  for (const auto& [pm, am] : config.pairs) {
    const int ai = am == AlphaMethod::GPWM ? 0 : 1;
    const int pi = static_cast<int>(pm);
    if (!alpha_tried[ai]) {
      alpha_tried[ai] = true;
      try {
        alpha_hat[ai] = estimate_alpha(sample.xi, am, config.k, config.ml_scale);
      } catch (const EstimationFailure&) {
      }
    }
    if (!curves[pi]) {
      Vector c = pickands_curve(margins, grid, pm, config.md_normalizer);
      if (config.correct) c = endpoint_correct(c, grid, pm);
      curves[pi] = std::move(c);
    }
    if (!alpha_hat[ai]) {
      out.curves.emplace_back();
      continue;
    }
    try {
      out.curves.emplace_back(
          composite_from_parts(*alpha_hat[ai], grid, *curves[pi], pm, am, config.correct));
    } catch (const EstimationFailure&) {
      out.curves.emplace_back();
    }
  }
  return out;
}

}  // namespace

ComboResult run_combo(const ExperimentConfig& config, const Combo& combo, const Vector& grid) {
  const auto start = std::chrono::steady_clock::now();
  const int R = config.replications;
  std::vector<ReplicationOutput> reps(R);

  const int width = std::max(1, std::min(config.jobs, R));
  if (width == 1) {
    for (int r = 0; r < R; ++r) reps[r] = run_replication(config, combo, grid, r);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= R) return;
        try {
          reps[r] = run_replication(config, combo, grid, r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(R);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < width; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  ComboResult out;
  out.combo = combo;
  out.truth = truth_curve(combo, grid);
  const Vector weights = trapezoid_weights(grid);
  for (const auto& rep : reps) out.cap_hits += rep.cap_hits;

  for (std::size_t p = 0; p < config.pairs.size(); ++p) {
    PairResult pr;
    pr.pair = config.pairs[p];
    pr.replications = R;
    int good = 0;
    for (const auto& rep : reps) good += rep.curves[p].has_value() ? 1 : 0;
    pr.failures = R - good;
    pr.flagged = pr.failures * 5 > R;
    Matrix curves(good, grid.size());
    pr.ise.resize(good);
    int row = 0;
    for (const auto& rep : reps) {
      const auto& c = rep.curves[p];
      if (!c) continue;
      curves.row(row) = c->a_star.transpose();
      pr.ise[row] = weights.dot((c->a_star - out.truth).array().square().matrix());
      if (c->alpha_clamped) ++pr.clamps;
      if (c->envelope_clamps > 0) ++pr.envelope_clamps;
      ++row;
    }
    if (good > 0) {
      pr.mise = mise_decompose(curves, out.truth, grid);
      pr.mean_curve = curves.colwise().mean().transpose();
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      pr.mise = {nan, nan, nan};
    }
    out.pairs.push_back(std::move(pr));
  }
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  result.grid = edge_grid(config.grid_m);
  const std::vector<Combo> combos = enumerate_combos(config);
  for (std::size_t i = 0; i < combos.size(); ++i) {
    result.combos.push_back(run_combo(config, combos[i], result.grid));
    if (progress) progress(result.combos.back(), i, combos.size());
  }
  return result;
}

}  // namespace rnmax
