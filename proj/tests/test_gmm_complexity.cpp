#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "rnml/gmm_complexity.hpp"

using namespace rnml;

namespace {

Matrix column(std::initializer_list<double> xs) {
  Matrix out(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) out(i++, 0) = x;
  return out;
}

const HyperParams kUnitE2Box{1.0, std::exp(2.0), 1.0, std::exp(2.0)};

}  // namespace

TEST_CASE("log_hyper_normalizer spot values") {
  HyperParams e_box{1.0, std::exp(1.0), 1.0, std::exp(1.0)};
  CHECK(log_hyper_normalizer(1, e_box).value() ==
        Catch::Approx(-1.3862943611198906188).margin(1e-13));
  CHECK(log_hyper_normalizer(2, kUnitE2Box).value() ==
        Catch::Approx(2.0794415416798359283).margin(1e-13));
}

TEST_CASE("log_hyper_normalizer depends only on the ratios") {
  HyperParams a{1.0, 50.0, 2.0, 14.0};
  HyperParams b{3.0, 150.0, 10.0, 70.0};
  CHECK(log_hyper_normalizer(3, a).value() ==
        Catch::Approx(log_hyper_normalizer(3, b).value()).margin(1e-12));
}

TEST_CASE("hyper params validation") {
  CHECK_THROWS_AS(validate_hyper_params(HyperParams{1.0, 1.0, 1.0, 10.0}), DomainError);
  CHECK_THROWS_AS(validate_hyper_params(HyperParams{0.0, 1.0, 1.0, 10.0}), DomainError);
  CHECK_THROWS_AS(validate_hyper_params(HyperParams{2.0, 1.0, 1.0, 10.0}), DomainError);
  CHECK_NOTHROW(validate_hyper_params(HyperParams{}));
}

TEST_CASE("log_cluster_normalizer spot values") {
  CHECK(std::exp(log_cluster_normalizer(2, 1).value()) ==
        Catch::Approx(0.20755374871029735167).epsilon(1e-12));
  CHECK(log_cluster_normalizer(3, 1).value() ==
        Catch::Approx(-0.891802337837753427).margin(1e-12));
  CHECK(log_cluster_normalizer(3, 2).value() ==
        Catch::Approx(-2.9283345615249070282).margin(1e-12));
}

TEST_CASE("log_cluster_normalizer threshold behavior") {
  CHECK(log_cluster_normalizer(0, 1).is_zero());
  CHECK(log_cluster_normalizer(1, 1).is_zero());
  CHECK_FALSE(log_cluster_normalizer(2, 1).is_zero());
  CHECK(log_cluster_normalizer(2, 2).is_zero());
  CHECK_FALSE(log_cluster_normalizer(3, 2).is_zero());
  // A raised threshold zeroes sizes the default would admit.
  CHECK(log_cluster_normalizer(2, 1, 3).is_zero());
  CHECK_FALSE(log_cluster_normalizer(3, 1, 3).is_zero());
  CHECK_THROWS_AS(log_cluster_normalizer(-1, 1), DomainError);
  CHECK_THROWS_AS(log_cluster_normalizer(3, 1, 1), DomainError);
}

TEST_CASE("log_multinomial_complexity spot values") {
  CHECK(log_multinomial_complexity(1, 9).value() == 0.0);
  CHECK(log_multinomial_complexity(2, 4).value() ==
        Catch::Approx(1.1689930854299092237).margin(1e-13));
  CHECK(log_multinomial_complexity(3, 4).value() ==
        Catch::Approx(1.9766818077220669935).margin(1e-13));
}

TEST_CASE("log_multinomial_complexity matches brute-force enumeration") {
  for (int n = 1; n <= 12; ++n) {
    for (int k = 1; k <= 5; ++k) {
      CAPTURE(n, k);
      const double brute = oracle::multinomial_complexity_brute(k, n);
      const double impl = std::exp(log_multinomial_complexity(k, n).value());
      CHECK(std::abs(impl - brute) <= 1e-9 * brute);
    }
  }
}

TEST_CASE("log_multinomial_complexity grows with the cell count") {
  for (int k = 1; k < 6; ++k)
    CHECK(log_multinomial_complexity(k, 10).value() <
          log_multinomial_complexity(k + 1, 10).value());
}

TEST_CASE("log_gaussian_mixture_complexity known values") {
  // K = 1 reduces to a single cluster normalizer.
  CHECK(log_gaussian_mixture_complexity(1, 5, 1).value() ==
        log_cluster_normalizer(5, 1).value());
  CHECK(log_gaussian_mixture_complexity(2, 5, 1).value() ==
        Catch::Approx(-2.8334933422547447007).margin(1e-12));
  // Three points cannot host two full-rank planar clusters.
  CHECK(log_gaussian_mixture_complexity(2, 3, 2).is_zero());
}

TEST_CASE("log_gaussian_mixture_complexity matches brute-force enumeration") {
  for (int m : {1, 2}) {
    for (int n = 1; n <= 12; ++n) {
      for (int k = 1; k <= 3; ++k) {
        CAPTURE(m, n, k);
        const double brute = oracle::gaussian_mixture_complexity_brute(k, n, m, m + 1);
        const double impl = log_gaussian_mixture_complexity(k, n, m).value();
        if (brute == 0.0) {
          CHECK(impl == -kInf);
        } else {
          CHECK(std::abs(impl - std::log(brute)) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("complexity table agrees with the standalone functions") {
  auto t = ComplexityTable::build(4, 12, 1);
  CHECK(t.sample_size() == 12);
  CHECK(t.max_clusters() == 4);
  CHECK(t.dim() == 1);
  CHECK(t.min_points() == 2);
  for (int k = 1; k <= 4; ++k) {
    CHECK(t.log_multinomial(k) == log_multinomial_complexity(k, 12).value());
    CHECK(t.log_gaussian_mixture(k, 12) == log_gaussian_mixture_complexity(k, 12, 1).value());
  }
  // Sub-sample entries equal fresh builds at the smaller size.
  for (int r = 2; r <= 11; ++r)
    CHECK(t.log_gaussian_mixture(2, r) ==
          Catch::Approx(log_gaussian_mixture_complexity(2, r, 1).value()).margin(1e-11));
}

TEST_CASE("complexity table sub-sample entries match brute force") {
  auto t = ComplexityTable::build(3, 10, 2);
  for (int k = 1; k <= 3; ++k) {
    for (int r = 0; r <= 10; ++r) {
      CAPTURE(k, r);
      const double brute = oracle::gaussian_mixture_complexity_brute(k, r > 0 ? r : 1, 2, 3);
      if (r == 0 || brute == 0.0) {
        CHECK(t.log_gaussian_mixture(k, r) == -kInf);
      } else {
        CHECK(std::abs(t.log_gaussian_mixture(k, r) - std::log(brute)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("complexity table validates queries") {
  auto t = ComplexityTable::build(3, 8, 1);
  CHECK_THROWS_AS(t.log_multinomial(0), DomainError);
  CHECK_THROWS_AS(t.log_multinomial(4), DomainError);
  CHECK_THROWS_AS(t.log_gaussian_mixture(2, 9), DomainError);
  CHECK_THROWS_AS(t.log_gaussian_mixture(2, -1), DomainError);
  CHECK_THROWS_AS(ComplexityTable::build(0, 8, 1), DomainError);
  CHECK_THROWS_AS(ComplexityTable::build(2, 8, 1, 1), DomainError);
}

TEST_CASE("complexity table round-trips through CSV exactly") {
  auto t = ComplexityTable::build(3, 9, 2, 4);
  std::ostringstream out;
  t.write_csv(out);
  std::istringstream in(out.str());
  auto u = ComplexityTable::read_csv(in, "roundtrip");
  CHECK(u.sample_size() == t.sample_size());
  CHECK(u.max_clusters() == t.max_clusters());
  CHECK(u.dim() == t.dim());
  CHECK(u.min_points() == t.min_points());
  for (int k = 1; k <= 3; ++k) {
    CHECK(u.log_multinomial(k) == t.log_multinomial(k));
    for (int r = 0; r <= 9; ++r) CHECK(u.log_gaussian_mixture(k, r) == t.log_gaussian_mixture(k, r));
  }
}

TEST_CASE("complexity table reload rejects damaged input") {
  auto t = ComplexityTable::build(2, 5, 1);
  std::ostringstream out;
  t.write_csv(out);
  const std::string text = out.str();

  // Drop the last row: the table is incomplete.
  std::string truncated = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  std::istringstream in1(truncated);
  CHECK_THROWS_AS(ComplexityTable::read_csv(in1, "trunc"), ParseError);

  // Corrupt the header.
  std::string bad_header = text;
  bad_header.replace(bad_header.find("K,r"), 3, "a,b");
  std::istringstream in2(bad_header);
  CHECK_THROWS_AS(ComplexityTable::read_csv(in2, "header"), ParseError);

  std::istringstream in3("");
  CHECK_THROWS_AS(ComplexityTable::read_csv(in3, "empty"), ParseError);
}

TEST_CASE("compute_cluster_stats splits moments by label") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  ClusterAssignment z{1, 1, 1, 2, 2, 2};
  auto s = compute_cluster_stats(data, z, 2);
  CHECK(s.counts == std::vector<int>{3, 3});
  CHECK(s.means[0](0) == Catch::Approx(-5.0).margin(1e-14));
  CHECK(s.means[1](0) == Catch::Approx(5.0).margin(1e-14));
  CHECK(s.covariances[0](0, 0) == Catch::Approx(0.08 / 3.0).margin(1e-14));
  CHECK_FALSE(s.singular[0]);
  CHECK_FALSE(s.singular[1]);
}

TEST_CASE("compute_cluster_stats flags degenerate clusters") {
  Matrix data = column({1.0, 1.0, 3.0, 4.0});
  auto s = compute_cluster_stats(data, {1, 1, 2, 2}, 2);
  CHECK(s.singular[0]);       // zero variance
  CHECK_FALSE(s.singular[1]);
  auto t = compute_cluster_stats(data, {1, 1, 1, 2}, 2);
  CHECK(t.singular[1]);       // single point
  CHECK(t.counts[1] == 1);
}

TEST_CASE("compute_cluster_stats validates labels") {
  Matrix data = column({1.0, 2.0});
  CHECK_THROWS_AS(compute_cluster_stats(data, {0, 1}, 2), DomainError);
  CHECK_THROWS_AS(compute_cluster_stats(data, {1, 3}, 2), DomainError);
  CHECK_THROWS_AS(compute_cluster_stats(data, {1}, 2), DomainError);
}

TEST_CASE("log_estimated_domain_factor single cluster value") {
  Matrix data = column({1.0, 3.0});
  auto lv = log_estimated_domain_factor(data, {1, 1}, 1);
  REQUIRE(lv.has_value());
  CHECK(lv->value() == Catch::Approx(1.5070765987551358412).margin(1e-13));
}

TEST_CASE("log_estimated_domain_factor multiplies over clusters") {
  Matrix data = column({1.0, 3.0, 1.0, 3.0});
  auto lv = log_estimated_domain_factor(data, {1, 1, 2, 2}, 2);
  REQUIRE(lv.has_value());
  CHECK(lv->value() == Catch::Approx(2.0 * 1.5070765987551358412).margin(1e-12));
}

TEST_CASE("log_estimated_domain_factor degenerate cases") {
  // An undersized cluster gives no estimate.
  Matrix data = column({1.0, 3.0, 7.0});
  CHECK_FALSE(log_estimated_domain_factor(data, {1, 1, 2}, 2).has_value());
  // A zero-variance cluster gives no estimate.
  Matrix flat = column({2.0, 2.0});
  CHECK_FALSE(log_estimated_domain_factor(flat, {1, 1}, 1).has_value());
  // A zero sample mean makes the fitted box an empty set.
  Matrix centered = column({-1.0, 1.0});
  CHECK_THROWS_AS(log_estimated_domain_factor(centered, {1, 1}, 1), DegenerateDomainError);
}

TEST_CASE("gmm_complete_neg_log_likelihood closed form") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  auto s = compute_cluster_stats(data, {1, 1, 1, 2, 2, 2}, 2);
  auto v = gmm_complete_neg_log_likelihood(s);
  REQUIRE(v.has_value());
  CHECK(*v == Catch::Approx(1.7994914836586129).margin(1e-12));
  // Empty on a singular cluster.
  Matrix flat = column({2.0, 2.0, 5.0});
  CHECK_FALSE(gmm_complete_neg_log_likelihood(compute_cluster_stats(flat, {1, 1, 2}, 2)).has_value());
}

TEST_CASE("gmm_rnml_codelength on the six-point example") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  ClusterAssignment z{1, 1, 1, 2, 2, 2};
  const double total = gmm_rnml_codelength(data, z, 2, kUnitE2Box);
  CHECK(total == Catch::Approx(9.6036932414989831).margin(1e-9));
  // The total decomposes into independently computed parts.
  const double parts = 1.7994914836586129 + 1.3283186198948430 + (-1.9951924562894197) +
                       8.4710755942349469 + 2.0 * log_hyper_normalizer(1, kUnitE2Box).value();
  CHECK(total == Catch::Approx(parts).margin(1e-9));
}

TEST_CASE("gmm_rnml_codelength composes its own terms") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  ClusterAssignment z{1, 1, 1, 2, 2, 2};
  auto s = compute_cluster_stats(data, z, 2);
  const double expect = *gmm_complete_neg_log_likelihood(s) +
                        log_multinomial_complexity(2, 6).value() +
                        log_gaussian_mixture_complexity(2, 6, 1).value() +
                        log_estimated_domain_factor(s)->value() +
                        2.0 * log_hyper_normalizer(1, kUnitE2Box).value();
  CHECK(gmm_rnml_codelength(data, z, 2, kUnitE2Box) == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("gmm_rnml_codelength hyper-box shift identity") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  ClusterAssignment z{1, 1, 1, 2, 2, 2};
  HyperParams wide{1.0, std::exp(4.0), 1.0, std::exp(4.0)};
  const double narrow_len = gmm_rnml_codelength(data, z, 2, kUnitE2Box);
  const double wide_len = gmm_rnml_codelength(data, z, 2, wide);
  const double delta_i =
      log_hyper_normalizer(1, wide).value() - log_hyper_normalizer(1, kUnitE2Box).value();
  CHECK(std::abs((wide_len - narrow_len) - 2.0 * delta_i) <= 1e-10);
}

TEST_CASE("gmm_rnml_codelength is invariant to row and label permutation") {
  Matrix a = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  Matrix b = column({5.0, -5.0, 5.2, -5.2, 4.8, -4.8});
  ClusterAssignment za{1, 1, 1, 2, 2, 2};
  ClusterAssignment zb{2, 1, 2, 1, 2, 1};
  CHECK(gmm_rnml_codelength(a, za, 2, kUnitE2Box) ==
        Catch::Approx(gmm_rnml_codelength(b, zb, 2, kUnitE2Box)).margin(1e-12));
}

TEST_CASE("gmm_rnml_codelength unencodable assignments score infinity") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  // One cluster below the size threshold.
  CHECK(gmm_rnml_codelength(data, {1, 1, 1, 1, 1, 2}, 2, kUnitE2Box) == kInf);
  // A zero-variance cluster.
  Matrix flat = column({2.0, 2.0, 5.0, 6.0});
  CHECK(gmm_rnml_codelength(flat, {1, 1, 2, 2}, 2, kUnitE2Box) == kInf);
  // A zero-mean cluster in an otherwise valid assignment throws.
  Matrix centered = column({-1.0, 1.0, 5.0, 6.0, 7.0});
  CHECK_THROWS_AS(gmm_rnml_codelength(centered, {1, 1, 2, 2, 2}, 2, kUnitE2Box),
                  DegenerateDomainError);
}

TEST_CASE("gmm_rnml_codelength accepts a matching table and rejects others") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  ClusterAssignment z{1, 1, 1, 2, 2, 2};
  auto good = ComplexityTable::build(3, 6, 1);
  CHECK(gmm_rnml_codelength(data, z, 2, kUnitE2Box, 0, &good) ==
        gmm_rnml_codelength(data, z, 2, kUnitE2Box));
  auto wrong_n = ComplexityTable::build(3, 7, 1);
  CHECK_THROWS_AS(gmm_rnml_codelength(data, z, 2, kUnitE2Box, 0, &wrong_n), DomainError);
  auto too_few_k = ComplexityTable::build(1, 6, 1);
  CHECK_THROWS_AS(gmm_rnml_codelength(data, z, 2, kUnitE2Box, 0, &too_few_k), DomainError);
}

TEST_CASE("gmm_nml_codelength reduces to the single-Gaussian case at K = 1") {
  Matrix data = column({0.5, 2.5, 1.7, 3.1});
  DomainParams dp{30.0, Vector::Constant(1, 0.01)};
  CHECK(gmm_nml_codelength(data, {1, 1, 1, 1}, 1, dp) ==
        Catch::Approx(gaussian_nml_codelength(data, dp)).margin(1e-12));
}

TEST_CASE("gmm_nml_codelength composes its own terms") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  ClusterAssignment z{1, 1, 1, 2, 2, 2};
  DomainParams dp{30.0, Vector::Constant(1, 0.01)};
  auto s = compute_cluster_stats(data, z, 2);
  const double expect = *gmm_complete_neg_log_likelihood(s) +
                        log_multinomial_complexity(2, 6).value() +
                        2.0 * gaussian_log_normalizer(3, 1, dp).value();
  CHECK(gmm_nml_codelength(data, z, 2, dp) == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("gmm_nml_codelength domain-scale shift identity") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  ClusterAssignment z{1, 1, 1, 2, 2, 2};
  // Bound theta with floor theta^{-1/m}: the score shifts by K m ln(theta2/theta1).
  auto domain_for = [](double theta) {
    return DomainParams{theta, Vector::Constant(1, 1.0 / theta)};
  };
  const double a = gmm_nml_codelength(data, z, 2, domain_for(100.0));
  const double b = gmm_nml_codelength(data, z, 2, domain_for(1e6));
  CHECK(std::abs((b - a) - 2.0 * 1.0 * std::log(1e4)) <= 1e-10);
}

TEST_CASE("gmm_nml_codelength unencodable assignments score infinity") {
  Matrix data = column({-5.0, -5.2, -4.8, 5.0, 5.2, 4.8});
  // Cluster means at +-5 break a tight mean bound.
  CHECK(gmm_nml_codelength(data, {1, 1, 1, 2, 2, 2}, 2, DomainParams{1.0, Vector::Constant(1, 0.01)}) ==
        kInf);
  // Cluster variances below the floor.
  CHECK(gmm_nml_codelength(data, {1, 1, 1, 2, 2, 2}, 2, DomainParams{30.0, Vector::Constant(1, 0.5)}) ==
        kInf);
  // Undersized cluster.
  CHECK(gmm_nml_codelength(data, {1, 1, 1, 1, 1, 2}, 2, DomainParams{30.0, Vector::Constant(1, 0.01)}) ==
        kInf);
}
