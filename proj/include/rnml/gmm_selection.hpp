#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "rnml/csv.hpp"
#include "rnml/errors.hpp"
#include "rnml/gaussian_nml.hpp"
#include "rnml/gmm_complexity.hpp"
#include "rnml/rng.hpp"
#include "rnml/special_functions.hpp"
#include "rnml/types.hpp"

namespace rnml {

enum class Criterion { rnml, nml, aic, bic };

inline const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::rnml: return "rnml";
    case Criterion::nml: return "nml";
    case Criterion::aic: return "aic";
    case Criterion::bic: return "bic";
  }
  throw DomainError("criterion_name: unknown criterion");
}

inline std::optional<Criterion> criterion_from_name(std::string_view s) {
  if (s == "rnml") return Criterion::rnml;
  if (s == "nml") return Criterion::nml;
  if (s == "aic") return Criterion::aic;
  if (s == "bic") return Criterion::bic;
  return std::nullopt;
}

struct EmConfig {
  int max_iter = 200;
  double tol = 1e-6;      // relative log-likelihood improvement threshold
  int n_restarts = 100;
  std::uint64_t seed = 0;
  double reg_eps = 1e-6;  // covariance ridge, scaled by trace(global cov)/m
};

inline void validate_em_config(const EmConfig& cfg) {
  if (cfg.max_iter < 1) throw DomainError("EmConfig: max_iter must be at least 1");
  if (!(cfg.tol > 0.0) || !(cfg.tol < 1.0)) throw DomainError("EmConfig: tol must lie in (0, 1)");
  if (cfg.n_restarts < 1) throw DomainError("EmConfig: n_restarts must be at least 1");
  if (!(cfg.reg_eps > 0.0)) throw DomainError("EmConfig: reg_eps must be positive");
}

/// A converged hard clustering. The stored MLEs come from the hard assignment
/// without regularization, so the complete log-likelihood is finite.
struct ClusteringResult {
  ClusterAssignment labels;            // 1..K
  std::vector<GaussianMle> clusters;   // per-cluster MLEs
  std::vector<int> counts;
  double complete_log_likelihood = 0.0;
  int n_iter = 0;
  bool converged = false;
};

namespace detail {

/// Soft EM from explicit initial means. Covariances start at the regularized
/// global covariance; every M-step covariance keeps the same ridge so the
/// E-step factorizations stay positive definite. The ridge never touches the
/// final hard-assignment MLEs.
inline ClusteringResult em_fit_core(const Matrix& data, int num_clusters,
                                    const std::vector<Vector>& init_means, const EmConfig& cfg,
                                    std::vector<double>* loglik_trace) {
  validate_em_config(cfg);
  const int n = static_cast<int>(data.rows());
  const int m = static_cast<int>(data.cols());
  if (num_clusters < 1) throw DomainError("em_fit: need at least one cluster");
  if (static_cast<long long>(n) < static_cast<long long>(num_clusters) * (m + 1))
    throw InfeasibleError("em_fit: need at least K*(m+1) observations");
  if (static_cast<int>(init_means.size()) != num_clusters)
    throw DomainError("em_fit: one initial mean per cluster required");

  Vector gmean;
  Matrix gcov;
  moments(data, gmean, gcov);
  const double ridge = cfg.reg_eps * gcov.trace() / m;
  const Matrix ridge_eye = ridge * Matrix::Identity(m, m);

  std::vector<Vector> means = init_means;
  std::vector<Matrix> covs(num_clusters, gcov + ridge_eye);
  std::vector<double> log_w(num_clusters, -std::log(static_cast<double>(num_clusters)));

  Matrix work(n, num_clusters);  // log joints, then responsibilities
  Vector row_ll(n);
  std::vector<int> labels(n, 1);
  double prev_ll = -kInf;
  bool converged = false;
  int iters = 0;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    ++iters;
    for (int k = 0; k < num_clusters; ++k) {
      Eigen::LLT<Matrix> llt(covs[k]);
      if (llt.info() != Eigen::Success)
        throw CollapseError("em_fit: covariance update lost positive definiteness");
      Matrix centered = (data.rowwise() - means[k].transpose()).transpose();
      llt.matrixL().solveInPlace(centered);
      const double half_logdet = Matrix(llt.matrixL()).diagonal().array().log().sum();
      work.col(k) = (-0.5 * centered.colwise().squaredNorm()).transpose().array() + log_w[k] -
                    0.5 * m * kLn2Pi - half_logdet;
    }
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = work(i, 0);
      int arg = 0;
      for (int k = 1; k < num_clusters; ++k)
        if (work(i, k) > best) {
          best = work(i, k);
          arg = k;
        }
      double s = 0.0;
      for (int k = 0; k < num_clusters; ++k) s += std::exp(work(i, k) - best);
      row_ll(i) = best + std::log(s);
      labels[i] = arg + 1;
      ll += row_ll(i);
    }
    if (loglik_trace) loglik_trace->push_back(ll);
    if (iter > 0 && ll - prev_ll <= cfg.tol * std::abs(prev_ll)) {
      converged = true;
      break;
    }
    prev_ll = ll;

    for (int i = 0; i < n; ++i)
      for (int k = 0; k < num_clusters; ++k) work(i, k) = std::exp(work(i, k) - row_ll(i));
    for (int k = 0; k < num_clusters; ++k) {
      const double nk = work.col(k).sum();
      if (!(nk > 1e-9)) throw CollapseError("em_fit: component responsibility vanished");
      means[k] = (work.col(k).transpose() * data).transpose() / nk;
      Matrix centered = data.rowwise() - means[k].transpose();
      Matrix weighted = centered.array().colwise() * work.col(k).array();
      Matrix cov = (centered.adjoint() * weighted) / nk;
      covs[k] = ((cov + cov.transpose()) * 0.5) + ridge_eye;
      log_w[k] = std::log(nk / n);
    }
  }

  ClusteringResult out;
  out.labels = std::move(labels);
  out.n_iter = iters;
  out.converged = converged;

  ClusterStats stats = compute_cluster_stats(data, out.labels, num_clusters);
  out.counts = stats.counts;
  out.clusters.reserve(num_clusters);
  for (int k = 0; k < num_clusters; ++k) {
    if (stats.counts[k] == 0) throw CollapseError("em_fit: empty cluster after hard assignment");
    if (stats.singular[k]) throw CollapseError("em_fit: degenerate cluster after hard assignment");
    out.clusters.push_back(GaussianMle{stats.means[k], stats.covariances[k], stats.eigenvalues[k]});
  }
  const auto neg_log_f = gmm_complete_neg_log_likelihood(stats);
  out.complete_log_likelihood = -*neg_log_f;
  return out;
}

}  // namespace detail

/// One EM run from means sampled at K distinct observation indices.
inline ClusteringResult em_fit(const Matrix& data, int num_clusters, const EmConfig& cfg,
                               std::vector<double>* loglik_trace = nullptr) {
  validate_em_config(cfg);
  const int n = static_cast<int>(data.rows());
  if (num_clusters < 1) throw DomainError("em_fit: need at least one cluster");
  if (n < num_clusters) throw InfeasibleError("em_fit: fewer observations than clusters");
  Rng rng(cfg.seed);
  std::vector<std::size_t> picked;
  picked.reserve(num_clusters);
  while (static_cast<int>(picked.size()) < num_clusters) {
    std::size_t i = rng.uniform_index(static_cast<std::size_t>(n));
    bool dup = false;
    for (std::size_t p : picked) dup = dup || (p == i);
    if (!dup) picked.push_back(i);
  }
  std::vector<Vector> means;
  means.reserve(num_clusters);
  for (std::size_t i : picked) means.push_back(data.row(static_cast<Eigen::Index>(i)).transpose());
  return detail::em_fit_core(data, num_clusters, means, cfg, loglik_trace);
}

/// One EM run from caller-supplied initial means, taken by value. Useful when
/// an invariance argument needs initialization decoupled from row order.
inline ClusteringResult em_fit_from(const Matrix& data, int num_clusters,
                                    const std::vector<Vector>& init_means, const EmConfig& cfg,
                                    std::vector<double>* loglik_trace = nullptr) {
  return detail::em_fit_core(data, num_clusters, init_means, cfg, loglik_trace);
}

/// 2 * -ln f + m(m+3)K + K. An empty or singular cluster is unencodable and
/// scores +infinity.
inline CodeLength aic(const Matrix& data, const ClusterAssignment& z, int num_clusters) {
  const int m = static_cast<int>(data.cols());
  const ClusterStats s = compute_cluster_stats(data, z, num_clusters);
  const auto neg_log_f = gmm_complete_neg_log_likelihood(s);
  if (!neg_log_f) return kInf;
  return 2.0 * *neg_log_f + static_cast<double>(m) * (m + 3.0) * num_clusters + num_clusters;
}

/// Default form: 2 * -ln f + (m(m+3)K/2) sum_k ln h_k + K ln n. The standard
/// textbook penalty ((m(m+3)/2) sum_k ln h_k + (K-1) ln n) sits behind the
/// flag and is off by default.
inline CodeLength bic(const Matrix& data, const ClusterAssignment& z, int num_clusters,
                      bool standard_variant = false) {
  const int m = static_cast<int>(data.cols());
  const int n = static_cast<int>(data.rows());
  const ClusterStats s = compute_cluster_stats(data, z, num_clusters);
  const auto neg_log_f = gmm_complete_neg_log_likelihood(s);
  if (!neg_log_f) return kInf;
  double sum_log_h = 0.0;
  for (int k = 0; k < num_clusters; ++k) sum_log_h += std::log(static_cast<double>(s.counts[k]));
  const double dm = m;
  if (standard_variant)
    return 2.0 * *neg_log_f + 0.5 * dm * (dm + 3.0) * sum_log_h + (num_clusters - 1.0) * std::log(static_cast<double>(n));
  return 2.0 * *neg_log_f + 0.5 * dm * (dm + 3.0) * num_clusters * sum_log_h +
         num_clusters * std::log(static_cast<double>(n));
}

/// Scores one fitted assignment under one criterion. Degenerate fitted
/// domains count as unencodable rather than errors at this layer.
inline CodeLength score_assignment(const Matrix& data, const ClusterAssignment& z, int num_clusters,
                                   Criterion crit, const HyperParams& hyper, const DomainParams& domain,
                                   const ComplexityTable* table = nullptr, int min_points = 0,
                                   bool standard_bic = false) {
  switch (crit) {
    case Criterion::rnml:
      try {
        return gmm_rnml_codelength(data, z, num_clusters, hyper, min_points, table);
      } catch (const DegenerateDomainError&) {
        return kInf;
      }
    case Criterion::nml:
      return gmm_nml_codelength(data, z, num_clusters, domain);
    case Criterion::aic:
      return aic(data, z, num_clusters);
    case Criterion::bic:
      return bic(data, z, num_clusters, standard_bic);
  }
  throw DomainError("score_assignment: unknown criterion");
}

/// Best fit per candidate K over seeded restarts. Restart r of candidate K
/// draws its seed from (seed, K, r), so results do not depend on scheduling.
/// Collapsed restarts are discarded and counted; a K whose restarts all
/// collapse (or that is outright infeasible) yields an empty fit.
struct FitSet {
  std::vector<int> k_values;
  std::vector<std::optional<ClusteringResult>> fits;
  std::vector<int> discarded;
};

inline FitSet best_fits(const Matrix& data, std::span<const int> k_range, const EmConfig& cfg) {
  validate_em_config(cfg);
  if (k_range.empty()) throw DomainError("best_fits: empty candidate range");
  FitSet out;
  out.k_values.assign(k_range.begin(), k_range.end());
  std::sort(out.k_values.begin(), out.k_values.end());
  out.k_values.erase(std::unique(out.k_values.begin(), out.k_values.end()), out.k_values.end());
  if (out.k_values.front() < 1) throw DomainError("best_fits: candidate cluster counts must be positive");
  out.fits.resize(out.k_values.size());
  out.discarded.assign(out.k_values.size(), 0);
  for (std::size_t ki = 0; ki < out.k_values.size(); ++ki) {
    const int k = out.k_values[ki];
    std::optional<ClusteringResult> best;
    for (int r = 0; r < cfg.n_restarts; ++r) {
      EmConfig run = cfg;
      run.seed = derive_seed(cfg.seed, {0x656dULL, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(r)});
      try {
        ClusteringResult fit = em_fit(data, k, run);
        if (!best || fit.complete_log_likelihood > best->complete_log_likelihood) best = std::move(fit);
      } catch (const CollapseError&) {
        ++out.discarded[ki];
      } catch (const InfeasibleError&) {
        out.discarded[ki] = cfg.n_restarts;
        break;
      }
    }
    out.fits[ki] = std::move(best);
  }
  return out;
}

/// Scores over a candidate range of cluster counts, one row per criterion.
struct SelectionReport {
  std::vector<int> k_values;
  std::vector<Criterion> criteria;
  std::vector<std::vector<double>> scores;  // scores[c][k-index]
  std::vector<int> chosen;                  // chosen[c], a value from k_values
  std::vector<std::optional<ClusteringResult>> fits;
  std::vector<int> discarded;
};

/// Fits every candidate K once and scores the shared fits under every
/// requested criterion. Ties in a criterion pick the smaller K.
inline SelectionReport select_k(const Matrix& data, std::span<const int> k_range,
                                std::span<const Criterion> criteria, const EmConfig& cfg,
                                const HyperParams& hyper, const DomainParams& domain,
                                const ComplexityTable* table = nullptr, int min_points = 0,
                                bool standard_bic = false) {
  if (criteria.empty()) throw DomainError("select_k: no criteria requested");
  FitSet fs = best_fits(data, k_range, cfg);
  SelectionReport rep;
  rep.k_values = std::move(fs.k_values);
  rep.criteria.assign(criteria.begin(), criteria.end());
  rep.fits = std::move(fs.fits);
  rep.discarded = std::move(fs.discarded);
  rep.scores.assign(rep.criteria.size(), std::vector<double>(rep.k_values.size(), kInf));
  rep.chosen.assign(rep.criteria.size(), rep.k_values.front());
  for (std::size_t c = 0; c < rep.criteria.size(); ++c) {
    for (std::size_t ki = 0; ki < rep.k_values.size(); ++ki) {
      if (!rep.fits[ki]) continue;
      rep.scores[c][ki] = score_assignment(data, rep.fits[ki]->labels, rep.k_values[ki], rep.criteria[c],
                                           hyper, domain, table, min_points, standard_bic);
    }
    std::size_t arg = 0;
    for (std::size_t ki = 1; ki < rep.k_values.size(); ++ki)
      if (rep.scores[c][ki] < rep.scores[c][arg]) arg = ki;
    rep.chosen[c] = rep.k_values[arg];
  }
  return rep;
}

/// Long-form CSV: one row per (K, criterion) pair.
inline void write_selection_csv(std::ostream& out, const SelectionReport& rep) {
  out << "K,criterion,score,chosen\n";
  for (std::size_t ki = 0; ki < rep.k_values.size(); ++ki)
    for (std::size_t c = 0; c < rep.criteria.size(); ++c)
      out << rep.k_values[ki] << ',' << criterion_name(rep.criteria[c]) << ','
          << format_g9(rep.scores[c][ki]) << ',' << (rep.chosen[c] == rep.k_values[ki] ? 1 : 0) << '\n';
}

}  // namespace rnml
