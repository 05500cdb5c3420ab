#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rnml/csv.hpp"
#include "rnml/errors.hpp"
#include "rnml/gmm_complexity.hpp"
#include "rnml/gmm_selection.hpp"
#include "rnml/rng.hpp"
#include "rnml/types.hpp"

namespace rnml {

namespace detail {
inline constexpr std::uint64_t kStreamModel = 0x4d4fULL;
inline constexpr std::uint64_t kStreamData = 0xda7aULL;
inline constexpr std::uint64_t kStreamEm = 0xe4ULL;
}  // namespace detail

/// A ground-truth mixture used to generate experiment data.
struct TrueModel {
  int dim = 0;
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
  std::vector<Matrix> cholesky;  // lower factors of the covariances
};

/// Draws a well-separated mixture. Eigenvalues are uniform in [0.5, 2] times
/// cov_scale, eigenvectors come from a sign-fixed QR of a Gaussian matrix,
/// and means are rejection-sampled in a hypercube until every pair is at
/// least separation * sqrt(max eigenvalue) apart. Means are then recentered
/// on their centroid so the generated data straddles the origin.
inline TrueModel generate_true_model(int dim, int num_clusters, double separation, std::uint64_t seed,
                                     double cov_scale = 1.0) {
  if (dim < 1) throw DomainError("generate_true_model: need dim >= 1");
  if (num_clusters < 1) throw DomainError("generate_true_model: need K >= 1");
  if (!(separation > 0.0)) throw DomainError("generate_true_model: separation must be positive");
  if (!(cov_scale > 0.0)) throw DomainError("generate_true_model: cov_scale must be positive");
  Rng rng(seed);
  TrueModel model;
  model.dim = dim;
  model.weights.assign(num_clusters, 1.0 / num_clusters);

  double max_eig = 0.0;
  for (int k = 0; k < num_clusters; ++k) {
    Vector eigs(dim);
    for (int j = 0; j < dim; ++j) eigs(j) = (0.5 + 1.5 * rng.uniform01()) * cov_scale;
    Matrix g(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) g(r, c) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j)
      if (rmat(j, j) < 0.0) q.col(j) = -q.col(j);
    Matrix cov = q * eigs.asDiagonal() * q.transpose();
    cov = ((cov + cov.transpose()) * 0.5).eval();
    model.covariances.push_back(cov);
    max_eig = std::max(max_eig, eigs.maxCoeff());
  }

  const double min_dist = separation * std::sqrt(max_eig);
  const double side = 1.5 * std::pow(static_cast<double>(num_clusters), 1.0 / dim) * min_dist;
  const int max_attempts = 100000;
  bool placed = false;
  std::vector<Vector> means(num_clusters, Vector(dim));
  for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
    for (int k = 0; k < num_clusters; ++k)
      for (int j = 0; j < dim; ++j) means[k](j) = side * rng.uniform01();
    placed = true;
    for (int a = 0; a < num_clusters && placed; ++a)
      for (int b = a + 1; b < num_clusters && placed; ++b)
        if ((means[a] - means[b]).norm() < min_dist) placed = false;
  }
  if (!placed) throw ConfigError("generate_true_model: could not place separated means; lower the separation");
  Vector centroid = Vector::Zero(dim);
  for (const Vector& mu : means) centroid += mu;
  centroid /= num_clusters;
  for (Vector& mu : means) mu -= centroid;
  model.means = std::move(means);

  for (int k = 0; k < num_clusters; ++k) {
    Eigen::LLT<Matrix> llt(model.covariances[k]);
    if (llt.info() != Eigen::Success)
      throw ConfigError("generate_true_model: covariance factorization failed");
    model.cholesky.push_back(Matrix(llt.matrixL()));
  }
  return model;
}

/// Samples n points and their true component labels.
inline std::pair<Matrix, ClusterAssignment> generate_gmm_data(const TrueModel& model, int n,
                                                              std::uint64_t seed) {
  if (n < 1) throw DomainError("generate_gmm_data: need n >= 1");
  if (model.dim < 1 || model.means.empty()) throw DomainError("generate_gmm_data: empty model");
  Rng rng(seed);
  const int m = model.dim;
  Matrix data(n, m);
  ClusterAssignment labels(n);
  Vector g(m);
  for (int i = 0; i < n; ++i) {
    const int k = rng.categorical(std::span<const double>(model.weights));
    for (int j = 0; j < m; ++j) g(j) = rng.normal();
    data.row(i) = (model.means[k] + model.cholesky[k] * g).transpose();
    labels[i] = k + 1;
  }
  return {std::move(data), std::move(labels)};
}

/// max(0, 1 - |K* - K_true| / T). Equals 1 on an exact hit and decays
/// linearly to 0 at distance T.
inline double benefit(int k_star, int k_true, double tolerance) {
  if (!(tolerance > 0.0)) throw DomainError("benefit: tolerance must be positive");
  return std::max(0.0, 1.0 - std::abs(k_star - k_true) / tolerance);
}

/// One scored experiment trial.
struct TrialResult {
  int dim = 0;
  int k_true = 0;
  int n = 0;
  int trial = 0;
  std::vector<int> chosen;        // per criterion
  std::vector<double> benefits;   // per criterion
};

/// Fraction of trials whose chosen K equals k_true for the given criterion
/// index.
inline double identification_probability(std::span<const TrialResult> trials, int k_true,
                                         std::size_t criterion_index) {
  if (trials.empty()) throw DomainError("identification_probability: no trials");
  int hit = 0;
  for (const TrialResult& t : trials) {
    if (criterion_index >= t.chosen.size())
      throw DomainError("identification_probability: criterion index out of range");
    if (t.chosen[criterion_index] == k_true) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(trials.size());
}

struct SweepConfig {
  std::vector<int> dims{2};
  std::vector<int> true_ks{3};
  std::vector<int> sample_sizes{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  int trials = 30;
  int restarts = 20;
  std::vector<Criterion> criteria{Criterion::rnml, Criterion::nml, Criterion::aic, Criterion::bic};
  HyperParams hyper{};
  double domain_theta = 1e4;  // NML domain scale: bound = theta, floor = theta^(-1/m)
  double benefit_tolerance = 2.0;
  double target_level = 0.8;
  std::uint64_t seed = 0;
  bool has_seed = false;
  double separation = 6.0;
  double cov_scale = 1.0;
  int k_min = 1;
  int k_max = 0;  // 0 resolves to max(true_ks) + 2
  std::vector<double> thetas{1e2, 1e4, 1e6, 1e8};
  int min_points = 0;
  bool standard_bic = false;
  EmConfig em{};  // n_restarts and seed are overridden per trial
};

inline void validate_sweep_config(const SweepConfig& c) {
  if (c.dims.empty() || c.true_ks.empty() || c.sample_sizes.empty())
    throw ConfigError("sweep config: dims, true_ks and sample_sizes must be nonempty");
  for (int m : c.dims)
    if (m < 1) throw ConfigError("sweep config: dims must be positive");
  for (int k : c.true_ks)
    if (k < 1) throw ConfigError("sweep config: true_ks must be positive");
  for (int n : c.sample_sizes)
    if (n < 1) throw ConfigError("sweep config: sample_sizes must be positive");
  for (std::size_t i = 1; i < c.sample_sizes.size(); ++i)
    if (c.sample_sizes[i] <= c.sample_sizes[i - 1])
      throw ConfigError("sweep config: sample_sizes must increase");
  if (c.trials < 1) throw ConfigError("sweep config: trials must be at least 1");
  if (c.restarts < 1) throw ConfigError("sweep config: restarts must be at least 1");
  if (c.criteria.empty()) throw ConfigError("sweep config: criteria must be nonempty");
  if (!(c.domain_theta > 1.0)) throw ConfigError("sweep config: domain_theta must exceed 1");
  if (!(c.benefit_tolerance > 0.0)) throw ConfigError("sweep config: benefit_tolerance must be positive");
  if (!(c.target_level > 0.0) || !(c.target_level < 1.0))
    throw ConfigError("sweep config: target_level must lie in (0, 1)");
  if (!c.has_seed) throw ConfigError("sweep config: a seed is required");
  if (!(c.separation > 0.0)) throw ConfigError("sweep config: separation must be positive");
  if (!(c.cov_scale > 0.0)) throw ConfigError("sweep config: cov_scale must be positive");
  if (c.k_min < 1) throw ConfigError("sweep config: k_min must be at least 1");
  if (c.k_max != 0 && c.k_max < c.k_min) throw ConfigError("sweep config: k_max must be at least k_min");
  for (double t : c.thetas)
    if (!(t > 1.0)) throw ConfigError("sweep config: thetas must exceed 1");
  validate_hyper_params(c.hyper);
}

inline int resolved_k_max(const SweepConfig& c) {
  if (c.k_max != 0) return c.k_max;
  int mx = 0;
  for (int k : c.true_ks) mx = std::max(mx, k);
  return mx + 2;
}

/// NML domain for one cell: bound theta on the squared mean norm and a flat
/// eigenvalue floor theta^(-1/m), so the domain volume scales the same way in
/// every dimension.
inline DomainParams sweep_domain_params(int dim, double theta) {
  Vector floor = Vector::Constant(dim, std::pow(theta, -1.0 / dim));
  return DomainParams{theta, floor};
}

/// Hyperparameter box with both ratios equal to theta.
inline HyperParams sweep_hyper_params(double theta) {
  return HyperParams{1.0, theta, 1.0, theta};
}

struct AccuracyRow {
  int dim = 0;
  int k_true = 0;
  int n = 0;
  Criterion criterion = Criterion::rnml;
  double accuracy = 0.0;
  double mean_benefit = 0.0;
};

struct LeastNRow {
  int dim = 0;
  int k_true = 0;
  Criterion criterion = Criterion::rnml;
  std::optional<int> least_n;  // empty means never reached
};

struct SweepResult {
  std::vector<TrialResult> trials;
  std::vector<AccuracyRow> accuracy;
  std::vector<LeastNRow> least_n;
};

struct ThetaRow {
  double theta = 0.0;
  Criterion criterion = Criterion::rnml;
  std::optional<int> least_n;
};

struct ThetaSweepResult {
  std::vector<ThetaRow> rows;
};

namespace detail {

/// Runs fn(i) for i in [0, count) on up to jobs threads. Work items write
/// only to their own slot, so the output is schedule independent.
template <class Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  if (jobs < 1) throw DomainError("parallel_for: need at least one job");
  if (jobs == 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, count);
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct CellKey {
  int dim;
  int k_true;
  friend bool operator<(const CellKey& a, const CellKey& b) {
    return a.dim != b.dim ? a.dim < b.dim : a.k_true < b.k_true;
  }
};

struct TableKey {
  int dim;
  int n;
  friend bool operator<(const TableKey& a, const TableKey& b) {
    return a.dim != b.dim ? a.dim < b.dim : a.n < b.n;
  }
};

}  // namespace detail

/// Grid experiment: for every (dim, K_true, n) cell, draws `trials` data sets
/// from a fixed per-cell true model, selects K under every criterion, and
/// aggregates identification accuracy, mean benefit, and the least n at which
/// mean benefit exceeds the target level.
inline SweepResult run_sweep(const SweepConfig& config, int jobs = 1) {
  validate_sweep_config(config);
  const int kmax = resolved_k_max(config);
  std::vector<int> k_range;
  for (int k = config.k_min; k <= kmax; ++k) k_range.push_back(k);

  std::map<detail::CellKey, TrueModel> models;
  for (int m : config.dims)
    for (int kt : config.true_ks)
      models.emplace(detail::CellKey{m, kt},
                     generate_true_model(m, kt, config.separation,
                                         derive_seed(config.seed, {detail::kStreamModel,
                                                                   static_cast<std::uint64_t>(m),
                                                                   static_cast<std::uint64_t>(kt)}),
                                         config.cov_scale));

  std::map<detail::TableKey, ComplexityTable> tables;
  for (int m : config.dims)
    for (int n : config.sample_sizes)
      tables.emplace(detail::TableKey{m, n}, ComplexityTable::build(kmax, n, m, config.min_points));

  struct Item {
    int dim, k_true, n, trial;
  };
  std::vector<Item> items;
  for (int m : config.dims)
    for (int kt : config.true_ks)
      for (int n : config.sample_sizes)
        for (int t = 0; t < config.trials; ++t) items.push_back({m, kt, n, t});

  SweepResult result;
  result.trials.resize(items.size());
  detail::parallel_for(static_cast<int>(items.size()), jobs, [&](int idx) {
    const Item& it = items[idx];
    const TrueModel& model = models.at({it.dim, it.k_true});
    auto [data, true_z] = generate_gmm_data(
        model, it.n,
        derive_seed(config.seed, {detail::kStreamData, static_cast<std::uint64_t>(it.dim),
                                  static_cast<std::uint64_t>(it.k_true), static_cast<std::uint64_t>(it.n),
                                  static_cast<std::uint64_t>(it.trial)}));
    EmConfig em = config.em;
    em.n_restarts = config.restarts;
    em.seed = derive_seed(config.seed, {detail::kStreamEm, static_cast<std::uint64_t>(it.dim),
                                        static_cast<std::uint64_t>(it.k_true), static_cast<std::uint64_t>(it.n),
                                        static_cast<std::uint64_t>(it.trial)});
    const ComplexityTable& table = tables.at({it.dim, it.n});
    SelectionReport rep = select_k(data, k_range, config.criteria, em, config.hyper,
                                   sweep_domain_params(it.dim, config.domain_theta), &table,
                                   config.min_points, config.standard_bic);
    TrialResult& tr = result.trials[idx];
    tr.dim = it.dim;
    tr.k_true = it.k_true;
    tr.n = it.n;
    tr.trial = it.trial;
    tr.chosen = rep.chosen;
    tr.benefits.resize(rep.chosen.size());
    for (std::size_t c = 0; c < rep.chosen.size(); ++c)
      tr.benefits[c] = benefit(rep.chosen[c], it.k_true, config.benefit_tolerance);
  });

  // Aggregation in fixed (dim, K_true, n, criterion) order keeps the tables
  // byte-stable regardless of how the items above were scheduled.
  for (int m : config.dims) {
    for (int kt : config.true_ks) {
      std::vector<std::vector<double>> mean_by_n(config.criteria.size());
      for (std::size_t c = 0; c < config.criteria.size(); ++c) mean_by_n[c].resize(config.sample_sizes.size(), 0.0);
      for (std::size_t ni = 0; ni < config.sample_sizes.size(); ++ni) {
        const int n = config.sample_sizes[ni];
        std::vector<TrialResult> cell;
        for (const TrialResult& t : result.trials)
          if (t.dim == m && t.k_true == kt && t.n == n) cell.push_back(t);
        for (std::size_t c = 0; c < config.criteria.size(); ++c) {
          double acc = identification_probability(std::span<const TrialResult>(cell), kt, c);
          double mb = 0.0;
          for (const TrialResult& t : cell) mb += t.benefits[c];
          mb /= static_cast<double>(cell.size());
          mean_by_n[c][ni] = mb;
          result.accuracy.push_back({m, kt, n, config.criteria[c], acc, mb});
        }
      }
      for (std::size_t c = 0; c < config.criteria.size(); ++c) {
        std::optional<int> least;
        for (std::size_t ni = 0; ni < config.sample_sizes.size() && !least; ++ni)
          if (mean_by_n[c][ni] > config.target_level) least = config.sample_sizes[ni];
        result.least_n.push_back({m, kt, config.criteria[c], least});
      }
    }
  }
  return result;
}

/// Hyperparameter sensitivity experiment on the first (dim, K_true) cell:
/// every trial's per-K fits are shared across all theta values, and each
/// theta re-scores them for RNML (box ratios theta) and NML (domain scale
/// theta). Reported per theta: the least n reaching the target mean benefit.
inline ThetaSweepResult run_theta_sweep(const SweepConfig& config, int jobs = 1) {
  validate_sweep_config(config);
  if (config.thetas.empty()) throw ConfigError("theta sweep: thetas must be nonempty");
  const int m = config.dims.front();
  const int kt = config.true_ks.front();
  const int kmax = resolved_k_max(config);
  std::vector<int> k_range;
  for (int k = config.k_min; k <= kmax; ++k) k_range.push_back(k);
  const std::vector<Criterion> crits{Criterion::rnml, Criterion::nml};

  const TrueModel model = generate_true_model(
      m, kt, config.separation,
      derive_seed(config.seed, {detail::kStreamModel, static_cast<std::uint64_t>(m),
                                static_cast<std::uint64_t>(kt)}),
      config.cov_scale);
  std::map<detail::TableKey, ComplexityTable> tables;
  for (int n : config.sample_sizes)
    tables.emplace(detail::TableKey{m, n}, ComplexityTable::build(kmax, n, m, config.min_points));

  struct Item {
    int n, trial;
  };
  std::vector<Item> items;
  for (int n : config.sample_sizes)
    for (int t = 0; t < config.trials; ++t) items.push_back({n, t});

  // benefits[item][theta][criterion]
  std::vector<std::vector<std::vector<double>>> benefits(items.size());
  detail::parallel_for(static_cast<int>(items.size()), jobs, [&](int idx) {
    const Item& it = items[idx];
    auto [data, true_z] = generate_gmm_data(
        model, it.n,
        derive_seed(config.seed, {detail::kStreamData, static_cast<std::uint64_t>(m),
                                  static_cast<std::uint64_t>(kt), static_cast<std::uint64_t>(it.n),
                                  static_cast<std::uint64_t>(it.trial)}));
    EmConfig em = config.em;
    em.n_restarts = config.restarts;
    em.seed = derive_seed(config.seed, {detail::kStreamEm, static_cast<std::uint64_t>(m),
                                        static_cast<std::uint64_t>(kt), static_cast<std::uint64_t>(it.n),
                                        static_cast<std::uint64_t>(it.trial)});
    FitSet fs = best_fits(data, k_range, em);
    const ComplexityTable& table = tables.at({m, it.n});
    auto& out = benefits[idx];
    out.assign(config.thetas.size(), std::vector<double>(crits.size(), 0.0));
    for (std::size_t ti = 0; ti < config.thetas.size(); ++ti) {
      const double theta = config.thetas[ti];
      const HyperParams hyper = sweep_hyper_params(theta);
      const DomainParams domain = sweep_domain_params(m, theta);
      for (std::size_t c = 0; c < crits.size(); ++c) {
        double best_score = kInf;
        int chosen = fs.k_values.front();
        for (std::size_t ki = 0; ki < fs.k_values.size(); ++ki) {
          if (!fs.fits[ki]) continue;
          const double score =
              score_assignment(data, fs.fits[ki]->labels, fs.k_values[ki], crits[c], hyper, domain,
                               &table, config.min_points, config.standard_bic);
          if (score < best_score) {
            best_score = score;
            chosen = fs.k_values[ki];
          }
        }
        out[ti][c] = benefit(chosen, kt, config.benefit_tolerance);
      }
    }
  });

  ThetaSweepResult result;
  for (std::size_t ti = 0; ti < config.thetas.size(); ++ti) {
    for (std::size_t c = 0; c < crits.size(); ++c) {
      std::optional<int> least;
      for (std::size_t ni = 0; ni < config.sample_sizes.size() && !least; ++ni) {
        const int n = config.sample_sizes[ni];
        double mb = 0.0;
        int cnt = 0;
        for (std::size_t idx = 0; idx < items.size(); ++idx)
          if (items[idx].n == n) {
            mb += benefits[idx][ti][c];
            ++cnt;
          }
        mb /= static_cast<double>(cnt);
        if (mb > config.target_level) least = n;
      }
      result.rows.push_back({config.thetas[ti], crits[c], least});
    }
  }
  return result;
}

inline void write_accuracy_csv(std::ostream& out, const SweepResult& r) {
  out << "m,K_true,n,criterion,accuracy,mean_benefit\n";
  for (const AccuracyRow& row : r.accuracy)
    out << row.dim << ',' << row.k_true << ',' << row.n << ',' << criterion_name(row.criterion) << ','
        << format_g9(row.accuracy) << ',' << format_g9(row.mean_benefit) << '\n';
}

inline void write_least_n_csv(std::ostream& out, const SweepResult& r) {
  out << "m,K_true,criterion,least_n\n";
  for (const LeastNRow& row : r.least_n) {
    out << row.dim << ',' << row.k_true << ',' << criterion_name(row.criterion) << ',';
    if (row.least_n)
      out << *row.least_n << '\n';
    else
      out << "never\n";
  }
}

inline void write_theta_csv(std::ostream& out, const ThetaSweepResult& r) {
  out << "theta,criterion,least_n\n";
  for (const ThetaRow& row : r.rows) {
    out << format_g9(row.theta) << ',' << criterion_name(row.criterion) << ',';
    if (row.least_n)
      out << *row.least_n << '\n';
    else
      out << "never\n";
  }
}

/// Structured echo of a sweep configuration, reused by the run manifest.
inline nlohmann::ordered_json sweep_config_to_json(const SweepConfig& c) {
  nlohmann::ordered_json j;
  j["dims"] = c.dims;
  j["true_ks"] = c.true_ks;
  j["sample_sizes"] = c.sample_sizes;
  j["trials"] = c.trials;
  j["restarts"] = c.restarts;
  std::vector<std::string> crit_names;
  for (Criterion cr : c.criteria) crit_names.push_back(criterion_name(cr));
  j["criteria"] = crit_names;
  j["hyper"] = {{"eigen_lo", c.hyper.eigen_lo},
                {"eigen_hi", c.hyper.eigen_hi},
                {"mean_sq_lo", c.hyper.mean_sq_lo},
                {"mean_sq_hi", c.hyper.mean_sq_hi}};
  j["domain_theta"] = c.domain_theta;
  j["benefit_tolerance"] = c.benefit_tolerance;
  j["target_level"] = c.target_level;
  j["seed"] = c.seed;
  j["separation"] = c.separation;
  j["cov_scale"] = c.cov_scale;
  j["k_min"] = c.k_min;
  j["k_max"] = c.k_max;
  j["thetas"] = c.thetas;
  j["min_points"] = c.min_points;
  j["standard_bic"] = c.standard_bic;
  j["em"] = {{"max_iter", c.em.max_iter}, {"tol", c.em.tol}, {"reg_eps", c.em.reg_eps}};
  return j;
}

/// Parses a sweep configuration. Unknown keys are rejected so that a typo
/// cannot silently fall back to a default.
inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("sweep config: top level must be an object");
  SweepConfig c;
  static const char* known[] = {"dims",       "true_ks",   "sample_sizes", "trials",       "restarts",
                                "criteria",   "hyper",     "domain_theta", "benefit_tolerance",
                                "target_level", "seed",    "separation",   "cov_scale",    "k_min",
                                "k_max",      "thetas",    "min_points",   "standard_bic", "em"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || (it.key() == k);
    if (!ok) throw ConfigError("sweep config: unknown key '" + it.key() + "'");
  }
  try {
    if (j.contains("dims")) c.dims = j.at("dims").get<std::vector<int>>();
    if (j.contains("true_ks")) c.true_ks = j.at("true_ks").get<std::vector<int>>();
    if (j.contains("sample_sizes")) c.sample_sizes = j.at("sample_sizes").get<std::vector<int>>();
    if (j.contains("trials")) c.trials = j.at("trials").get<int>();
    if (j.contains("restarts")) c.restarts = j.at("restarts").get<int>();
    if (j.contains("criteria")) {
      c.criteria.clear();
      for (const auto& name : j.at("criteria")) {
        auto cr = criterion_from_name(name.get<std::string>());
        if (!cr) throw ConfigError("sweep config: unknown criterion '" + name.get<std::string>() + "'");
        c.criteria.push_back(*cr);
      }
    }
    if (j.contains("hyper")) {
      const auto& h = j.at("hyper");
      c.hyper.eigen_lo = h.value("eigen_lo", c.hyper.eigen_lo);
      c.hyper.eigen_hi = h.value("eigen_hi", c.hyper.eigen_hi);
      c.hyper.mean_sq_lo = h.value("mean_sq_lo", c.hyper.mean_sq_lo);
      c.hyper.mean_sq_hi = h.value("mean_sq_hi", c.hyper.mean_sq_hi);
    }
    if (j.contains("domain_theta")) c.domain_theta = j.at("domain_theta").get<double>();
    if (j.contains("benefit_tolerance")) c.benefit_tolerance = j.at("benefit_tolerance").get<double>();
    if (j.contains("target_level")) c.target_level = j.at("target_level").get<double>();
    if (j.contains("seed")) {
      c.seed = j.at("seed").get<std::uint64_t>();
      c.has_seed = true;
    }
    if (j.contains("separation")) c.separation = j.at("separation").get<double>();
    if (j.contains("cov_scale")) c.cov_scale = j.at("cov_scale").get<double>();
    if (j.contains("k_min")) c.k_min = j.at("k_min").get<int>();
    if (j.contains("k_max")) c.k_max = j.at("k_max").get<int>();
    if (j.contains("thetas")) c.thetas = j.at("thetas").get<std::vector<double>>();
    if (j.contains("min_points")) c.min_points = j.at("min_points").get<int>();
    if (j.contains("standard_bic")) c.standard_bic = j.at("standard_bic").get<bool>();
    if (j.contains("em")) {
      const auto& e = j.at("em");
      c.em.max_iter = e.value("max_iter", c.em.max_iter);
      c.em.tol = e.value("tol", c.em.tol);
      c.em.reg_eps = e.value("reg_eps", c.em.reg_eps);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sweep config: ") + e.what());
  }
  return c;
}

inline SweepConfig sweep_config_from_file(const std::string& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return sweep_config_from_json(j);
}

}  // namespace rnml
