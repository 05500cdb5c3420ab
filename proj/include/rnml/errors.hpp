#pragma once

#include <stdexcept>
#include <string>

namespace rnml {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// An argument violates an operation's stated domain (a <= 0, ratio <= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A maximum-likelihood estimate falls outside the restricted parameter domain.
class OutOfDomainError : public Error {
 public:
  using Error::Error;
};

/// A fitted restriction domain has zero volume, e.g. a zero mean vector.
class DegenerateDomainError : public Error {
 public:
  using Error::Error;
};

/// A sample covariance is rank deficient or built from too few points.
class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

/// The request cannot be satisfied by any assignment, e.g. n < K*(m+1).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// An EM run ended in an empty or degenerate cluster and must be discarded.
class CollapseError : public Error {
 public:
  using Error::Error;
};

/// A configuration file is semantically invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An input file could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace rnml
