#pragma once

#include <cmath>
#include <concepts>
#include <span>

#include "rnml/errors.hpp"
#include "rnml/special_functions.hpp"
#include "rnml/types.hpp"

namespace rnml {

/// Scale-parameter MLE for the Gamma family with known shape k:
/// theta-hat = sum x_i / (k n). Observations must be positive.
inline double gamma_mle(std::span<const double> xs, double shape) {
  if (xs.empty()) throw DomainError("gamma_mle: empty sample");
  if (!(shape > 0.0)) throw DomainError("gamma_mle: shape must be positive");
  double s = 0.0;
  for (double x : xs) {
    if (!(x > 0.0)) throw DomainError("gamma_mle: observations must be positive");
    s += x;
  }
  return s / (shape * static_cast<double>(xs.size()));
}

/// MLE for the one-parameter logistic family
///   f(x; theta) = theta e^{-x} / (1 + e^{-x})^{theta+1},
/// namely theta-hat = n / sum_i ln(1 + e^{-x_i}).
inline double logistic_mle(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("logistic_mle: empty sample");
  double s = 0.0;
  for (double x : xs) s += softplus(-x);
  return static_cast<double>(xs.size()) / s;
}

/// ln C for the Gamma family with theta-hat restricted to [theta_min, theta_max]:
///   ln C = kn ln(kn) - ln Gamma(kn) - kn + ln ln(theta_max / theta_min).
inline LogValue gamma_log_normalizer(double shape, int n, double theta_min, double theta_max) {
  if (!(shape > 0.0)) throw DomainError("gamma_log_normalizer: shape must be positive");
  if (n < 1) throw DomainError("gamma_log_normalizer: need n >= 1");
  if (!(theta_min > 0.0) || !(theta_max > theta_min))
    throw DomainError("gamma_log_normalizer: need 0 < theta_min < theta_max");
  const double kn = shape * n;
  return LogValue(kn * std::log(kn) - std::lgamma(kn) - kn + std::log(std::log(theta_max / theta_min)));
}

/// ln C for the logistic family with theta-hat restricted to (0, R]:
///   ln C = (n - 1) ln n - ln Gamma(n) - n + 2 ln R.
inline LogValue logistic_log_normalizer(int n, double theta_bound) {
  if (n < 1) throw DomainError("logistic_log_normalizer: need n >= 1");
  if (!(theta_bound > 0.0)) throw DomainError("logistic_log_normalizer: bound must be positive");
  const double dn = n;
  return LogValue((dn - 1.0) * std::log(dn) - std::lgamma(dn) - dn + 2.0 * std::log(theta_bound));
}

/// Gamma density with known shape and free scale theta.
struct GammaModel {
  double shape;
  double theta_min;
  double theta_max;

  GammaModel(double shape_, double theta_min_, double theta_max_)
      : shape(shape_), theta_min(theta_min_), theta_max(theta_max_) {
    if (!(shape > 0.0)) throw DomainError("GammaModel: shape must be positive");
    if (!(theta_min > 0.0) || !(theta_max > theta_min))
      throw DomainError("GammaModel: need 0 < theta_min < theta_max");
  }

  double mle(std::span<const double> xs) const { return gamma_mle(xs, shape); }

  bool in_domain(double theta) const { return theta_min <= theta && theta <= theta_max; }

  double log_density(std::span<const double> xs, double theta) const {
    double s = 0.0;
    for (double x : xs) {
      if (!(x > 0.0)) throw DomainError("GammaModel: observations must be positive");
      s += (shape - 1.0) * std::log(x) - x / theta;
    }
    const double n = static_cast<double>(xs.size());
    return s - n * std::lgamma(shape) - n * shape * std::log(theta);
  }

  LogValue log_normalizer(int n) const { return gamma_log_normalizer(shape, n, theta_min, theta_max); }
};

/// One-parameter logistic family on the real line.
struct LogisticModel {
  double theta_bound;

  explicit LogisticModel(double theta_bound_) : theta_bound(theta_bound_) {
    if (!(theta_bound > 0.0)) throw DomainError("LogisticModel: bound must be positive");
  }

  double mle(std::span<const double> xs) const { return logistic_mle(xs); }

  bool in_domain(double theta) const { return theta > 0.0 && theta <= theta_bound; }

  double log_density(std::span<const double> xs, double theta) const {
    double s = 0.0;
    for (double x : xs) s += -x - (theta + 1.0) * softplus(-x);
    return s + static_cast<double>(xs.size()) * std::log(theta);
  }

  LogValue log_normalizer(int n) const { return logistic_log_normalizer(n, theta_bound); }
};

/// A one-parameter model usable by nml_codelength. Each implementation
/// supplies its MLE, its log density, the restricted-domain membership test,
/// and the closed-form log normalizer of the restricted NML distribution.
template <class M>
concept ExpFamilyModel = requires(const M& m, std::span<const double> xs, double theta, int n) {
  { m.mle(xs) } -> std::convertible_to<double>;
  { m.in_domain(theta) } -> std::convertible_to<bool>;
  { m.log_density(xs, theta) } -> std::convertible_to<double>;
  { m.log_normalizer(n) } -> std::same_as<LogValue>;
};

/// Stochastic complexity of the sample under the restricted NML distribution:
///   -ln f(x^n; theta-hat) + ln C(n).
/// Throws OutOfDomainError when the MLE leaves the restricted domain.
template <ExpFamilyModel M>
CodeLength nml_codelength(const M& model, std::span<const double> xs) {
  if (xs.empty()) throw DomainError("nml_codelength: empty sample");
  const double theta = model.mle(xs);
  if (!model.in_domain(theta))
    throw OutOfDomainError("nml_codelength: MLE lies outside the restricted domain");
  return -model.log_density(xs, theta) + model.log_normalizer(static_cast<int>(xs.size())).value();
}

}  // namespace rnml
