#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "rnml/errors.hpp"

namespace rnml {

inline constexpr double kLnPi = 1.1447298858494001741;
inline constexpr double kLn2Pi = 1.8378770664093454836;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A nonnegative real carried as its natural logarithm.
/// -infinity encodes an exact zero. NaN is rejected at construction, so a
/// LogValue always holds a finite real or a signed infinity.
class LogValue {
 public:
  LogValue() : v_(-kInf) {}

  explicit LogValue(double log_v) : v_(log_v) {
    if (std::isnan(log_v)) throw DomainError("LogValue: NaN is not a representable quantity");
  }

  static LogValue zero() { return LogValue(); }

  /// The stored logarithm.
  double value() const { return v_; }

  bool is_zero() const { return v_ == -kInf; }

  friend bool operator==(LogValue a, LogValue b) { return a.v_ == b.v_; }
  friend bool operator<(LogValue a, LogValue b) { return a.v_ < b.v_; }

 private:
  double v_;
};

/// ln Gamma(a) for a > 0.
inline LogValue log_gamma(double a) {
  if (!(a > 0.0)) throw DomainError("log_gamma: argument must be positive");
  return LogValue(std::lgamma(a));
}

/// ln Gamma_m(a), the multivariate gamma function:
///   Gamma_m(a) = pi^{m(m-1)/4} prod_{j=1..m} Gamma(a + (1-j)/2),
/// defined for a > (m-1)/2.
inline LogValue log_multivariate_gamma(int m, double a) {
  if (m < 1) throw DomainError("log_multivariate_gamma: dimension must be at least 1");
  if (!(a > 0.5 * (m - 1)))
    throw DomainError("log_multivariate_gamma: argument must exceed (m-1)/2");
  double s = 0.25 * m * (m - 1) * kLnPi;
  for (int j = 1; j <= m; ++j) s += std::lgamma(a + 0.5 * (1 - j));
  return LogValue(s);
}

/// ln(e^a + e^b) without overflow. Either argument may be -infinity.
inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == -kInf) return -kInf;
  if (a == kInf) return kInf;
  return a + std::log1p(std::exp(b - a));
}

/// ln sum_i e^{v_i} by max shifting. An empty sequence sums to zero, so -infinity.
inline double log_sum_exp(std::span<const double> vs) {
  double mx = -kInf;
  for (double v : vs) mx = std::max(mx, v);
  if (mx == -kInf || mx == kInf) return mx;
  double s = 0.0;
  for (double v : vs) s += std::exp(v - mx);
  return mx + std::log(s);
}

inline LogValue log_sum_exp(std::span<const LogValue> vs) {
  double mx = -kInf;
  for (LogValue v : vs) mx = std::max(mx, v.value());
  if (mx == -kInf || mx == kInf) return LogValue(mx);
  double s = 0.0;
  for (LogValue v : vs) s += std::exp(v.value() - mx);
  return LogValue(mx + std::log(s));
}

/// ln(1 + e^x), stable on both tails.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

/// ln binomial(n, k).
inline double log_binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n) throw DomainError("log_binomial: need 0 <= k <= n");
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace rnml
