#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rnml/csv.hpp"
#include "rnml/errors.hpp"
#include "rnml/gaussian_nml.hpp"
#include "rnml/special_functions.hpp"
#include "rnml/types.hpp"

namespace rnml {

/// Hyperparameter box for the second normalization. The fitted eigenvalue
/// floors range over [eigen_lo, eigen_hi] and the fitted squared mean bound
/// over [mean_sq_lo, mean_sq_hi]; only the two ratios enter the code-length.
struct HyperParams {
  double eigen_lo = 1.0;
  double eigen_hi = 1e4;
  double mean_sq_lo = 1.0;
  double mean_sq_hi = 1e4;
};

inline void validate_hyper_params(const HyperParams& g) {
  if (!(g.eigen_lo > 0.0) || !(g.mean_sq_lo > 0.0))
    throw DomainError("HyperParams: lower endpoints must be positive");
  if (!(g.eigen_hi / g.eigen_lo > 1.0) || !(g.mean_sq_hi / g.mean_sq_lo > 1.0))
    throw DomainError("HyperParams: both ratios must exceed 1");
}

/// Per-cluster hyperparameter normalizer:
///   ln I = (m+1) ln(m/2) + ln ln(R2/R1) + m ln ln(l2/l1).
/// Depends on the box only through iterated logs of the two ratios.
inline LogValue log_hyper_normalizer(int dim, const HyperParams& g) {
  if (dim < 1) throw DomainError("log_hyper_normalizer: need dim >= 1");
  validate_hyper_params(g);
  const double dm = dim;
  return LogValue((dm + 1.0) * std::log(0.5 * dm) + std::log(std::log(g.mean_sq_hi / g.mean_sq_lo)) +
                  dm * std::log(std::log(g.eigen_hi / g.eigen_lo)));
}

/// Smallest cluster size whose fitted covariance has full rank.
inline int default_min_points(int dim) { return dim + 1; }

namespace detail {

inline int resolve_min_points(int dim, int min_points) {
  if (min_points == 0) return default_min_points(dim);
  if (min_points <= dim)
    throw DomainError("min_points must exceed the dimension for a full-rank covariance");
  return min_points;
}

}  // namespace detail

/// Contribution of one cluster of size h to the mixture complexity:
///   J(h) = (h / 2e)^{mh/2} / Gamma_m((h-1)/2) for h >= min_points, else 0.
/// B(x,z) * prod_k J(h_k) equals the product of per-cluster restricted-domain
/// normalizers evaluated at the estimated bounds, so the exponent is mh/2,
/// matching the (mn/2) ln(n/2e) term of the single-Gaussian normalizer.
/// min_points = 0 selects the default dim+1.
inline LogValue log_cluster_normalizer(int h, int dim, int min_points = 0) {
  if (dim < 1) throw DomainError("log_cluster_normalizer: need dim >= 1");
  if (h < 0) throw DomainError("log_cluster_normalizer: cluster size cannot be negative");
  const int mp = detail::resolve_min_points(dim, min_points);
  if (h < mp) return LogValue::zero();
  const double dh = h;
  const double dm = dim;
  return LogValue(0.5 * dm * dh * std::log(0.5 * dh / std::exp(1.0)) -
                  log_multivariate_gamma(dim, 0.5 * (dh - 1.0)).value());
}

namespace detail {

/// ln i! for i in 0..n.
inline std::vector<double> log_factorials(int n) {
  std::vector<double> lf(n + 1);
  lf[0] = 0.0;
  for (int i = 1; i <= n; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
  return lf;
}

/// i ln i with the 0 ln 0 = 0 convention.
inline std::vector<double> x_log_x(int n) {
  std::vector<double> xl(n + 1);
  xl[0] = 0.0;
  for (int i = 1; i <= n; ++i) xl[i] = i * std::log(static_cast<double>(i));
  return xl;
}

/// ln C1(k, n) for k = 1..max_clusters. The closed binomial sum seeds k = 2
/// and the two-step recurrence C1(k, n) = C1(k-1, n) + n/(k-2) C1(k-2, n)
/// extends it; the recurrence is exact, not asymptotic.
inline std::vector<double> multinomial_complexity_column(int max_clusters, int n,
                                                         const std::vector<double>& lf,
                                                         const std::vector<double>& xl) {
  std::vector<double> c1(max_clusters + 1, 0.0);
  c1[1] = 0.0;
  if (max_clusters >= 2) {
    const double nlogn = xl[n];
    std::vector<double> terms;
    terms.reserve(n + 1);
    for (int h = 0; h <= n; ++h)
      terms.push_back(lf[n] - lf[h] - lf[n - h] + xl[h] + xl[n - h] - nlogn);
    c1[2] = log_sum_exp(std::span<const double>(terms));
  }
  for (int k = 3; k <= max_clusters; ++k)
    c1[k] = log_add(c1[k - 1], std::log(static_cast<double>(n) / (k - 2)) + c1[k - 2]);
  return c1;
}

}  // namespace detail

/// ln C1(K, n), the parametric complexity of the K-cell multinomial on n
/// observations.
inline LogValue log_multinomial_complexity(int num_clusters, int n) {
  if (num_clusters < 1) throw DomainError("log_multinomial_complexity: need K >= 1");
  if (n < 1) throw DomainError("log_multinomial_complexity: need n >= 1");
  auto lf = detail::log_factorials(n);
  auto xl = detail::x_log_x(n);
  return LogValue(detail::multinomial_complexity_column(num_clusters, n, lf, xl)[num_clusters]);
}

/// Exact complexity terms for mixtures of up to max_clusters Gaussian
/// components over n observations in a fixed dimension. Building the table
/// costs O(K n^2); reusing it makes every score lookup O(1), which is what the
/// experiment sweeps rely on.
class ComplexityTable {
 public:
  static ComplexityTable build(int max_clusters, int n, int dim, int min_points = 0) {
    if (max_clusters < 1) throw DomainError("ComplexityTable: need K >= 1");
    if (n < 1) throw DomainError("ComplexityTable: need n >= 1");
    if (dim < 1) throw DomainError("ComplexityTable: need dim >= 1");
    const int mp = detail::resolve_min_points(dim, min_points);
    ComplexityTable t;
    t.n_ = n;
    t.max_clusters_ = max_clusters;
    t.dim_ = dim;
    t.min_points_ = mp;

    auto lf = detail::log_factorials(n);
    auto xl = detail::x_log_x(n);
    t.log_c1_ = detail::multinomial_complexity_column(max_clusters, n, lf, xl);

    std::vector<double> log_j(n + 1);
    for (int r = 0; r <= n; ++r) log_j[r] = log_cluster_normalizer(r, dim, mp).value();

    // C2(1, r) = J(r); C2(k, r) convolves C2(k-1, .) with J through the
    // binomial split weights (r1/r)^{r1} (r2/r)^{r2} binom(r, r1).
    t.log_c2_.assign(max_clusters + 1, std::vector<double>(n + 1, -kInf));
    for (int r = 0; r <= n; ++r) t.log_c2_[1][r] = log_j[r];
    std::vector<double> terms;
    terms.reserve(n + 1);
    for (int k = 2; k <= max_clusters; ++k) {
      const int min_r1 = (k - 1) * mp;
      for (int r = k * mp; r <= n; ++r) {
        terms.clear();
        for (int r1 = min_r1; r1 <= r - mp; ++r1) {
          const int r2 = r - r1;
          const double prev = t.log_c2_[k - 1][r1];
          if (prev == -kInf) continue;
          const double w = lf[r] - lf[r1] - lf[r2] + xl[r1] + xl[r2] - xl[r];
          terms.push_back(w + prev + log_j[r2]);
        }
        t.log_c2_[k][r] = log_sum_exp(std::span<const double>(terms));
      }
    }
    return t;
  }

  int sample_size() const { return n_; }
  int max_clusters() const { return max_clusters_; }
  int dim() const { return dim_; }
  int min_points() const { return min_points_; }

  /// ln C1(k, n) at the table's sample size.
  double log_multinomial(int k) const {
    check_k(k);
    return log_c1_[k];
  }

  /// ln C2(k, r) for any sub-sample size r <= n.
  double log_gaussian_mixture(int k, int r) const {
    check_k(k);
    if (r < 0 || r > n_) throw DomainError("ComplexityTable: sub-sample size out of range");
    return log_c2_[k][r];
  }

  /// Columns K, r, logC1, logC2; logC1 depends only on K and repeats down each
  /// block. A leading comment row carries the dimension and threshold so a
  /// cached file can be validated on reload.
  void write_csv(std::ostream& out) const {
    out << "# dim=" << dim_ << " min_points=" << min_points_ << '\n';
    out << "K,r,logC1,logC2\n";
    for (int k = 1; k <= max_clusters_; ++k)
      for (int r = 0; r <= n_; ++r)
        out << k << ',' << r << ',' << format_g17(log_c1_[k]) << ',' << format_g17(log_c2_[k][r]) << '\n';
  }

  void write_csv_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    write_csv(out);
  }

  static ComplexityTable read_csv(std::istream& in, const std::string& where) {
    ComplexityTable t;
    t.dim_ = 0;
    t.min_points_ = 0;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    int max_k = 0;
    int max_r = -1;
    std::vector<std::tuple<int, int, double, double>> rows;
    while (std::getline(in, line)) {
      ++line_no;
      std::string_view sv = csv_strip(line);
      if (sv.empty()) continue;
      if (sv.front() == '#') {
        parse_meta(sv, t);
        continue;
      }
      if (!saw_header) {
        if (sv != std::string_view("K,r,logC1,logC2"))
          throw ParseError(where + ": line " + std::to_string(line_no) + ": expected header K,r,logC1,logC2");
        saw_header = true;
        continue;
      }
      auto fields = detail_split(sv);
      if (fields.size() != 4)
        throw ParseError(where + ": line " + std::to_string(line_no) + ": expected four fields");
      const int k = static_cast<int>(rnml::detail::parse_int(fields[0], line_no, where));
      const int r = static_cast<int>(rnml::detail::parse_int(fields[1], line_no, where));
      const double c1 = parse_log_field(fields[2], line_no, where);
      const double c2 = parse_log_field(fields[3], line_no, where);
      if (k < 1 || r < 0) throw ParseError(where + ": line " + std::to_string(line_no) + ": bad K or r");
      max_k = std::max(max_k, k);
      max_r = std::max(max_r, r);
      rows.emplace_back(k, r, c1, c2);
    }
    if (!saw_header || rows.empty()) throw ParseError(where + ": no table rows");
    if (t.dim_ < 1 || t.min_points_ <= t.dim_)
      throw ParseError(where + ": missing or invalid dimension metadata row");
    t.n_ = max_r;
    t.max_clusters_ = max_k;
    t.log_c1_.assign(max_k + 1, -kInf);
    t.log_c2_.assign(max_k + 1, std::vector<double>(max_r + 1, -kInf));
    std::vector<std::vector<char>> seen(max_k + 1, std::vector<char>(max_r + 1, 0));
    for (auto& [k, r, c1, c2] : rows) {
      t.log_c1_[k] = c1;
      t.log_c2_[k][r] = c2;
      seen[k][r] = 1;
    }
    for (int k = 1; k <= max_k; ++k)
      for (int r = 0; r <= max_r; ++r)
        if (!seen[k][r]) throw ParseError(where + ": table is missing entry K=" + std::to_string(k) + " r=" + std::to_string(r));
    return t;
  }

  static ComplexityTable read_csv_file(const std::string& path) {
    auto in = rnml::detail::open_input(path);
    return read_csv(in, path);
  }

 private:
  ComplexityTable() = default;

  void check_k(int k) const {
    if (k < 1 || k > max_clusters_) throw DomainError("ComplexityTable: cluster count out of range");
  }

  static std::string_view csv_strip(std::string_view s) { return rnml::detail::strip_ws(s); }
  static std::vector<std::string_view> detail_split(std::string_view s) { return rnml::detail::split_fields(s); }

  static double parse_log_field(std::string_view f, int line_no, const std::string& where) {
    if (f == "inf") return kInf;
    if (f == "-inf") return -kInf;
    return rnml::detail::parse_double(f, line_no, where);
  }

  static void parse_meta(std::string_view sv, ComplexityTable& t) {
    sv.remove_prefix(1);
    std::string s(sv);
    std::size_t dpos = s.find("dim=");
    std::size_t mpos = s.find("min_points=");
    if (dpos != std::string::npos) t.dim_ = std::atoi(s.c_str() + dpos + 4);
    if (mpos != std::string::npos) t.min_points_ = std::atoi(s.c_str() + mpos + 11);
  }

  int n_ = 0;
  int max_clusters_ = 0;
  int dim_ = 0;
  int min_points_ = 0;
  std::vector<double> log_c1_;
  std::vector<std::vector<double>> log_c2_;
};

/// ln C2(K, n) computed from scratch. Sweeps should build a ComplexityTable
/// once per sample size instead of calling this in a loop.
inline LogValue log_gaussian_mixture_complexity(int num_clusters, int n, int dim, int min_points = 0) {
  if (num_clusters < 1) throw DomainError("log_gaussian_mixture_complexity: need K >= 1");
  if (n < 1) throw DomainError("log_gaussian_mixture_complexity: need n >= 1");
  auto t = ComplexityTable::build(num_clusters, n, dim, min_points);
  return LogValue(t.log_gaussian_mixture(num_clusters, n));
}

/// Per-cluster sample moments of a hard assignment.
struct ClusterStats {
  int n = 0;
  int dim = 0;
  int num_clusters = 0;
  std::vector<int> counts;
  std::vector<Vector> means;          // defined where counts > 0
  std::vector<Matrix> covariances;    // divisor h, defined where counts > 0
  std::vector<Vector> eigenvalues;    // nonincreasing, defined where counts > 0
  std::vector<char> singular;         // rank-deficient covariance flag
};

/// Moments of each cluster under labels in 1..K. Labels outside that range or
/// a length mismatch are input errors.
inline ClusterStats compute_cluster_stats(const Matrix& data, const ClusterAssignment& z, int num_clusters) {
  const int n = static_cast<int>(data.rows());
  const int m = static_cast<int>(data.cols());
  if (num_clusters < 1) throw DomainError("compute_cluster_stats: need K >= 1");
  if (static_cast<int>(z.size()) != n)
    throw DomainError("compute_cluster_stats: one label per observation required");
  ClusterStats s;
  s.n = n;
  s.dim = m;
  s.num_clusters = num_clusters;
  s.counts.assign(num_clusters, 0);
  s.means.assign(num_clusters, Vector());
  s.covariances.assign(num_clusters, Matrix());
  s.eigenvalues.assign(num_clusters, Vector());
  s.singular.assign(num_clusters, 0);
  for (int i = 0; i < n; ++i) {
    if (z[i] < 1 || z[i] > num_clusters)
      throw DomainError("compute_cluster_stats: label " + std::to_string(z[i]) + " outside 1.." +
                        std::to_string(num_clusters));
    ++s.counts[z[i] - 1];
  }
  for (int k = 0; k < num_clusters; ++k) {
    const int h = s.counts[k];
    if (h == 0) continue;
    Matrix rows(h, m);
    int at = 0;
    for (int i = 0; i < n; ++i)
      if (z[i] == k + 1) rows.row(at++) = data.row(i);
    detail::moments(rows, s.means[k], s.covariances[k]);
    s.eigenvalues[k] = detail::eigenvalues_desc(s.covariances[k]);
    const double lo = s.eigenvalues[k](m - 1);
    const double hi = s.eigenvalues[k](0);
    s.singular[k] = (h <= m) || (lo <= kSingularRelTol * hi);
  }
  return s;
}

/// -ln f(x^n, z^n) at the per-cluster MLEs, covering both the multinomial
/// cluster indicator and the within-cluster Gaussians. Empty if some cluster
/// is empty or has a singular covariance.
inline std::optional<double> gmm_complete_neg_log_likelihood(const ClusterStats& s) {
  double v = 0.0;
  const double dn = s.n;
  for (int k = 0; k < s.num_clusters; ++k) {
    const int h = s.counts[k];
    if (h == 0 || s.singular[k]) return std::nullopt;
    double logdet = 0.0;
    for (int j = 0; j < s.dim; ++j) logdet += std::log(s.eigenvalues[k](j));
    v -= h * std::log(h / dn);
    v += 0.5 * h * (s.dim * kLn2Pi + logdet) + 0.5 * s.dim * h;
  }
  return v;
}

/// ln of the estimated-domain factor
///   prod_p 2^{m+1} |mu_p|^m |Sigma_p|^{-m/2} / (m^{m+1} Gamma(m/2)).
/// Empty when some cluster is smaller than m+1 or singular; a cluster with a
/// zero mean makes the fitted domain degenerate and throws.
inline std::optional<LogValue> log_estimated_domain_factor(const ClusterStats& s) {
  const int m = s.dim;
  const double dm = m;
  double v = 0.0;
  for (int k = 0; k < s.num_clusters; ++k) {
    if (s.counts[k] < m + 1 || s.singular[k]) return std::nullopt;
    const double norm_sq = s.means[k].squaredNorm();
    if (norm_sq == 0.0)
      throw DegenerateDomainError("log_estimated_domain_factor: cluster mean is zero");
    double logdet = 0.0;
    for (int j = 0; j < m; ++j) logdet += std::log(s.eigenvalues[k](j));
    v += (dm + 1.0) * std::log(2.0) + 0.5 * dm * std::log(norm_sq) - 0.5 * dm * logdet -
         (dm + 1.0) * std::log(dm) - std::lgamma(0.5 * dm);
  }
  return LogValue(v);
}

inline std::optional<LogValue> log_estimated_domain_factor(const Matrix& data, const ClusterAssignment& z,
                                                           int num_clusters) {
  return log_estimated_domain_factor(compute_cluster_stats(data, z, num_clusters));
}

namespace detail {

inline void check_table(const ComplexityTable* table, int num_clusters, int n, int dim, int min_points) {
  if (!table) return;
  if (table->dim() != dim || table->sample_size() != n || table->max_clusters() < num_clusters ||
      table->min_points() != min_points)
    throw DomainError("ComplexityTable does not match the requested query");
}

}  // namespace detail

/// Renormalized code-length of (data, labels) under a K-component Gaussian
/// mixture. Returns +infinity when the assignment is not encodable: a cluster
/// below the size threshold or with a singular covariance. A zero cluster
/// mean throws, since the fitted domain itself is degenerate.
inline CodeLength gmm_rnml_codelength(const Matrix& data, const ClusterAssignment& z, int num_clusters,
                                      const HyperParams& hyper, int min_points = 0,
                                      const ComplexityTable* table = nullptr) {
  const int n = static_cast<int>(data.rows());
  const int m = static_cast<int>(data.cols());
  if (num_clusters < 1) throw DomainError("gmm_rnml_codelength: need K >= 1");
  const int mp = detail::resolve_min_points(m, min_points);
  const double log_i = log_hyper_normalizer(m, hyper).value();
  detail::check_table(table, num_clusters, n, m, mp);

  const ClusterStats s = compute_cluster_stats(data, z, num_clusters);
  for (int k = 0; k < num_clusters; ++k)
    if (s.counts[k] < mp) return kInf;
  const auto domain_factor = log_estimated_domain_factor(s);
  if (!domain_factor) return kInf;
  const auto neg_log_f = gmm_complete_neg_log_likelihood(s);
  if (!neg_log_f) return kInf;

  double c1, c2;
  if (table) {
    c1 = table->log_multinomial(num_clusters);
    c2 = table->log_gaussian_mixture(num_clusters, n);
  } else {
    auto t = ComplexityTable::build(num_clusters, n, m, mp);
    c1 = t.log_multinomial(num_clusters);
    c2 = t.log_gaussian_mixture(num_clusters, n);
  }
  return *neg_log_f + c1 + c2 + domain_factor->value() + num_clusters * log_i;
}

/// NML code-length of (data, labels) under a K-component Gaussian mixture
/// with a fixed restricted domain shared by all clusters. Each cluster pays
/// its own restricted Gaussian normalizer, which needs at least m+1 points.
/// Returns +infinity when some cluster is too small, singular, or has an MLE
/// outside the domain.
inline CodeLength gmm_nml_codelength(const Matrix& data, const ClusterAssignment& z, int num_clusters,
                                     const DomainParams& dp) {
  const int n = static_cast<int>(data.rows());
  const int m = static_cast<int>(data.cols());
  if (num_clusters < 1) throw DomainError("gmm_nml_codelength: need K >= 1");
  validate_domain_params(m, dp);

  const ClusterStats s = compute_cluster_stats(data, z, num_clusters);
  double normalizers = 0.0;
  for (int k = 0; k < num_clusters; ++k) {
    const int h = s.counts[k];
    if (h < m + 1 || s.singular[k]) return kInf;
    GaussianMle mle{s.means[k], s.covariances[k], s.eigenvalues[k]};
    if (!in_restricted_domain(mle, dp)) return kInf;
    normalizers += gaussian_log_normalizer(h, m, dp).value();
  }
  const auto neg_log_f = gmm_complete_neg_log_likelihood(s);
  if (!neg_log_f) return kInf;
  return *neg_log_f + log_multinomial_complexity(num_clusters, n).value() + normalizers;
}

}  // namespace rnml
