#pragma once

#include <cmath>

#include "rnml/errors.hpp"
#include "rnml/special_functions.hpp"
#include "rnml/types.hpp"

namespace rnml {

/// Relative eigenvalue threshold below which a covariance counts as singular.
inline constexpr double kSingularRelTol = 1e-12;

/// Multiplicative slack for membership tests at the domain boundary, so that a
/// domain fitted to the data contains the data that produced it.
inline constexpr double kBoundarySlack = 1e-12;

/// Maximum-likelihood estimate of a multivariate Gaussian.
struct GaussianMle {
  Vector mean;
  Matrix covariance;   // divisor n
  Vector eigenvalues;  // nonincreasing
};

/// Restriction of the Gaussian parameter domain: the squared mean norm is
/// bounded above and the j-th largest covariance eigenvalue is bounded below.
struct DomainParams {
  double mean_sq_bound;  // upper bound on |mu|^2
  Vector eigen_floor;    // lower bound per eigenvalue, paired by rank
};

namespace detail {

inline void moments(const Matrix& data, Vector& mean, Matrix& cov) {
  const auto n = data.rows();
  mean = data.colwise().mean();
  Matrix centered = data.rowwise() - mean.transpose();
  cov = (centered.adjoint() * centered) / static_cast<double>(n);
  cov = ((cov + cov.transpose()) * 0.5).eval();
}

inline Vector eigenvalues_desc(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

}  // namespace detail

/// Sample mean and covariance (divisor n) with the covariance spectrum.
/// Needs n >= m+1 rows and a full-rank covariance.
inline GaussianMle mvn_mle(const Matrix& data) {
  const auto n = data.rows();
  const auto m = data.cols();
  if (m < 1) throw DomainError("mvn_mle: need at least one column");
  if (n <= m) throw SingularCovarianceError("mvn_mle: need at least m+1 observations");
  GaussianMle out;
  detail::moments(data, out.mean, out.covariance);
  out.eigenvalues = detail::eigenvalues_desc(out.covariance);
  const double lo = out.eigenvalues(m - 1);
  const double hi = out.eigenvalues(0);
  if (lo <= kSingularRelTol * hi)
    throw SingularCovarianceError("mvn_mle: covariance is rank deficient");
  return out;
}

inline void validate_domain_params(int m, const DomainParams& dp) {
  if (!(dp.mean_sq_bound > 0.0))
    throw DomainError("DomainParams: mean norm bound must be positive");
  if (dp.eigen_floor.size() != m)
    throw DomainError("DomainParams: eigenvalue floor must have one entry per dimension");
  for (int j = 0; j < m; ++j)
    if (!(dp.eigen_floor(j) > 0.0))
      throw DomainError("DomainParams: eigenvalue floors must be positive");
}

/// ln C of the restricted Gaussian NML distribution for n observations in m
/// dimensions:
///   (m+1) ln 2 + (m/2) ln R - (m/2) sum_j ln lambda_min_j
///   - (m+1) ln m - ln Gamma(m/2) + (mn/2) ln(n / 2e) - ln Gamma_m((n-1)/2).
/// The multivariate gamma needs (n-1)/2 > (m-1)/2, hence n >= m+1.
inline LogValue gaussian_log_normalizer(int n, int m, const DomainParams& dp) {
  if (m < 1) throw DomainError("gaussian_log_normalizer: need m >= 1");
  validate_domain_params(m, dp);
  if (n < m + 1) throw DomainError("gaussian_log_normalizer: need n >= m+1");
  const double dm = m;
  const double dn = n;
  double v = (dm + 1.0) * std::log(2.0) + 0.5 * dm * std::log(dp.mean_sq_bound);
  for (int j = 0; j < m; ++j) v -= 0.5 * dm * std::log(dp.eigen_floor(j));
  v -= (dm + 1.0) * std::log(dm);
  v -= std::lgamma(0.5 * dm);
  v += 0.5 * dm * dn * std::log(0.5 * dn / std::exp(1.0));
  v -= log_multivariate_gamma(m, 0.5 * (dn - 1.0)).value();
  return LogValue(v);
}

/// Whether the estimate lies in the restricted domain, with boundary slack.
inline bool in_restricted_domain(const GaussianMle& mle, const DomainParams& dp) {
  const int m = static_cast<int>(mle.mean.size());
  validate_domain_params(m, dp);
  if (mle.mean.squaredNorm() > dp.mean_sq_bound * (1.0 + kBoundarySlack)) return false;
  for (int j = 0; j < m; ++j)
    if (mle.eigenvalues(j) < dp.eigen_floor(j) * (1.0 - kBoundarySlack)) return false;
  return true;
}

/// -ln of the Gaussian density at its own MLE:
///   (n/2) ln((2 pi)^m |Sigma-hat|) + nm/2.
inline double gaussian_neg_log_max_likelihood(int n, const Vector& eigenvalues) {
  const int m = static_cast<int>(eigenvalues.size());
  double logdet = 0.0;
  for (int j = 0; j < m; ++j) logdet += std::log(eigenvalues(j));
  return 0.5 * n * (m * kLn2Pi + logdet) + 0.5 * n * m;
}

/// NML code-length of the data under the restricted Gaussian model.
inline CodeLength gaussian_nml_codelength(const Matrix& data, const DomainParams& dp) {
  const GaussianMle mle = mvn_mle(data);
  const int n = static_cast<int>(data.rows());
  const int m = static_cast<int>(data.cols());
  if (!in_restricted_domain(mle, dp))
    throw OutOfDomainError("gaussian_nml_codelength: MLE lies outside the restricted domain");
  return gaussian_neg_log_max_likelihood(n, mle.eigenvalues) + gaussian_log_normalizer(n, m, dp).value();
}

/// Domain parameters fitted to the data: the bound equals the squared norm of
/// the sample mean and the floors equal the covariance eigenvalues. A zero
/// mean gives a volume-zero domain and is rejected.
inline DomainParams ml_domain_params(const Matrix& data) {
  const GaussianMle mle = mvn_mle(data);
  const double r = mle.mean.squaredNorm();
  if (r == 0.0)
    throw DegenerateDomainError("ml_domain_params: sample mean is zero, fitted domain has no volume");
  return DomainParams{r, mle.eigenvalues};
}

}  // namespace rnml
