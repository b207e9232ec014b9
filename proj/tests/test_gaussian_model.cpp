#include <doctest.h>

#include <map>
#include <random>

#include "pimo/contraction.hpp"
#include "pimo/errors.hpp"
#include "pimo/gaussian_model.hpp"
#include "test_util.hpp"

using namespace pimo;
using pimo::test::rel_close;

namespace {

// Bell numbers from the Bell triangle, independent of the enumerator.
std::vector<long> bell_numbers(int n) {
  std::vector<long> bell{1};
  std::vector<long> row{1};
  for (int k = 1; k <= n; ++k) {
    std::vector<long> next{row.back()};
    for (long x : row) next.push_back(next.back() + x);
    bell.push_back(next.front());
    row = next;
  }
  return bell;
}

// Coincidence pattern of (a, b, c, d) as a string, computed by hand.
std::string pattern_key(int a, int b, int c, int d) {
  const int v[4] = {a, b, c, d};
  int label[4];
  int next = 0;
  for (int s = 0; s < 4; ++s) {
    label[s] = -1;
    for (int t = 0; t < s; ++t)
      if (v[t] == v[s]) label[s] = label[t];
    if (label[s] < 0) label[s] = next++;
  }
  return {char('0' + label[0]), char('0' + label[1]), char('0' + label[2]), char('0' + label[3])};
}

// Masked brute force: average of M_ab M_cd over words and over all index
// tuples realising each exact pattern.
std::map<std::string, double> brute_force_patterns(const MatrixEnsemble& ens) {
  const int d = ens.dim();
  std::map<std::string, double> sum;
  std::map<std::string, double> count;
  for (const auto& m : ens.matrices())
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          for (int e = 0; e < d; ++e) {
            const auto key = pattern_key(a, b, c, e);
            sum[key] += m(a, b) * m(c, e);
            count[key] += 1.0;
          }
  for (auto& [k, v] : sum) v /= count[k];
  return sum;
}

MatrixEnsemble random_ensemble(int d, int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  MatrixEnsemble ens(d);
  for (int k = 0; k < n; ++k) ens.add("w" + std::to_string(k), pimo::test::random_matrix(d, gen));
  return ens;
}

PatternMoments scalar_model(double mu, double c) {
  std::array<double, 15> second{};
  std::array<bool, 15> populated{};
  second[0] = c + mu * mu;
  populated[0] = true;
  return PatternMoments(1, mu, 0.0, second, populated);
}

}  // namespace

TEST_CASE("partition enumeration matches Bell numbers") {
  const auto bell = bell_numbers(8);
  CHECK(enumerate_partitions(1).size() == 1);
  for (int k = 1; k <= 8; ++k) CHECK(static_cast<long>(enumerate_partitions(k).size()) == bell[k]);
  CHECK(enumerate_partitions(4).size() == 15);
  CHECK(enumerate_partitions(6).size() == 203);
  CHECK(enumerate_partitions(8).size() == 4140);
  CHECK(enumerate_partitions(4).front().key() == "0000");
  CHECK(enumerate_partitions(4).back().key() == "0123");
  CHECK_THROWS_AS(enumerate_partitions(0), std::out_of_range);
  CHECK_THROWS_AS(enumerate_partitions(9), std::out_of_range);
}

TEST_CASE("moebius inversion is the inverse of coarsening sums") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k : {2, 3, 4, 5}) {
    std::vector<double> x(enumerate_partitions(k).size());
    for (double& v : x) v = u(gen);
    const auto back = unrestricted_from_exact(k, exact_from_unrestricted(k, x));
    for (std::size_t p = 0; p < x.size(); ++p) CHECK(rel_close(back[p], x[p], 1e-12));
  }
  // mu(0^, 1^) on 4 slots = (-1)^3 3! = -6
  CHECK(moebius(partition_from_key("0123"), partition_from_key("0000")) == -6.0);
  CHECK(moebius(partition_from_key("0112"), partition_from_key("0111")) == -1.0);
}

TEST_CASE("eleven quadratic orbit classes") {
  CHECK(PatternMoments::orbit_representatives().size() == 11);
  int fixed = 0;
  for (std::size_t p = 0; p < 15; ++p) {
    CHECK(PatternMoments::swapped(PatternMoments::swapped(p)) == p);
    if (PatternMoments::swapped(p) == p) ++fixed;
  }
  CHECK(fixed == 7);
  CHECK((15 + fixed) / 2 == 11);
}

TEST_CASE("fit examples") {
  SUBCASE("scalar ensemble") {
    MatrixEnsemble ens(1);
    const double xs[] = {0.5, -1.0, 2.0};
    for (int k = 0; k < 3; ++k) ens.add("w" + std::to_string(k), Eigen::MatrixXd::Constant(1, 1, xs[k]));
    const auto pm = fit_pattern_moments(ens);
    CHECK(pm.mean_diag() == doctest::Approx(0.5));
    CHECK(pm.second_moment("0000") == doctest::Approx((0.25 + 1.0 + 4.0) / 3.0));
    CHECK_FALSE(pm.populated(PatternMoments::pattern_index(0, 1, 0, 1)));
  }
  SUBCASE("identity at D=3") {
    MatrixEnsemble ens(3);
    ens.add("id", Eigen::MatrixXd::Identity(3, 3));
    const auto pm = fit_pattern_moments(ens);
    CHECK(pm.mean_diag() == doctest::Approx(1.0));
    CHECK(pm.mean_off() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pm.second_moment("0011") == doctest::Approx(1.0));
    CHECK(pm.second_moment("0000") == doctest::Approx(1.0));
    CHECK(pm.second_moment("0101") == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_FALSE(pm.populated(PatternMoments::pattern_index(0, 1, 2, 3)));
  }
  SUBCASE("random ensemble at D=5 against masked brute force") {
    const auto ens = random_ensemble(5, 7, 101);
    const auto pm = fit_pattern_moments(ens);
    const auto oracle = brute_force_patterns(ens);
    REQUIRE(oracle.size() == 15);
    for (const auto& [key, value] : oracle) CHECK(rel_close(pm.second_moment(key), value, 1e-9));
    double mean_diag = 0.0, mean_off = 0.0;
    for (const auto& m : ens.matrices()) {
      mean_diag += m.diagonal().sum() / 5.0;
      mean_off += (m.sum() - m.diagonal().sum()) / 20.0;
    }
    CHECK(rel_close(pm.mean_diag(), mean_diag / 7.0, 1e-9));
    CHECK(rel_close(pm.mean_off(), mean_off / 7.0, 1e-9));
  }
}

TEST_CASE("round trip through pattern moments reproduces the 13 invariants") {
  for (int d : {4, 5, 6}) {
    const auto ens = random_ensemble(d, 9, 200 + d);
    const auto stats = compute_stats(canonical_set("13"), ens);
    const auto pm = fit_pattern_moments(ens);
    const auto back = invariant_means(pm);
    for (std::size_t k = 0; k < 13; ++k) {
      CHECK(rel_close(back[k], stats.observables[k].mean, 1e-9));
      CHECK(rel_close(theoretical_moment(standard_observable(static_cast<int>(k) + 1), pm),
                      stats.observables[k].mean, 1e-9));
    }
  }
}

TEST_CASE("group-averaged covariance is positive semidefinite") {
  for (int d : {3, 4, 5}) {
    const auto pm = fit_pattern_moments(random_ensemble(d, 4, 300 + d));
    const Eigen::MatrixXd cov = pm.full_covariance();
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * eig.eigenvalues().maxCoeff());
  }
}

TEST_CASE("Isserlis moments at D=1") {
  const double mu = 0.7, c = 1.3;
  const auto pm = scalar_model(mu, c);
  CHECK(theoretical_moment(standard_observable(14), pm) == doctest::Approx(mu * mu * mu + 3 * mu * c));
  CHECK(theoretical_moment(standard_observable(24), pm) ==
        doctest::Approx(std::pow(mu, 4) + 6 * mu * mu * c + 3 * c * c));
  // at D=1 every observable collapses onto M_11^degree
  CHECK(theoretical_moment(standard_observable(23), pm) == doctest::Approx(theoretical_moment(standard_observable(24), pm)));
  CHECK_THROWS_AS(theoretical_moment(Observable(2, {{0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1}}), pm), NumericalError);
}

TEST_CASE("theoretical moment of a cubic cycle against Monte Carlo") {
  const auto pm = fit_pattern_moments(random_ensemble(3, 6, 17));
  const GaussianSampler sampler(pm, 3);
  Rng rng(5);
  const auto& obs = standard_observable(16);
  const auto p = plan(obs);
  std::vector<double> values;
  const int n = 200000;
  values.reserve(n);
  for (int k = 0; k < n; ++k) values.push_back(evaluate(p, sampler.draw(rng)));
  const auto ms = mean_std(values);
  CHECK(std::abs(ms.mean - theoretical_moment(obs, pm)) < 4.0 * ms.standard_error());
}

TEST_CASE("sampler") {
  SUBCASE("zero covariance reproduces the mean") {
    MatrixEnsemble ens(3);
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(3, 3, 0.25);
    m.diagonal().setConstant(2.0);
    ens.add("a", m);
    const auto pm = fit_pattern_moments(ens);
    const auto sample = sample_ensemble(pm, 3, 5, 1);
    for (const auto& s : sample.matrices()) CHECK((s - m).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("unit variance at D=1") {
    const auto pm = scalar_model(0.0, 1.0);
    const GaussianSampler sampler(pm, 1);
    Rng rng(123);
    std::vector<double> sq;
    for (int k = 0; k < 1000000; ++k) {
      const double x = sampler.draw(rng)(0, 0);
      sq.push_back(x * x);
    }
    CHECK(std::abs(pairwise_sum(sq) / sq.size() - 1.0) < 0.005);
  }
  SUBCASE("deterministic given seed") {
    const auto pm = fit_pattern_moments(random_ensemble(4, 5, 8));
    const auto a = sample_ensemble(pm, 4, 3, 77);
    const auto b = sample_ensemble(pm, 4, 3, 77);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a[k] == b[k]);
  }
  SUBCASE("limits") {
    const auto pm = fit_pattern_moments(random_ensemble(4, 5, 8));
    CHECK_THROWS_AS(GaussianSampler(pm, 13), NumericalError);
    std::array<double, 15> second{};
    std::array<bool, 15> populated{};
    populated.fill(true);
    second[0] = -1.0;  // negative diagonal variance
    CHECK_THROWS_AS(GaussianSampler(PatternMoments(2, 0.0, 0.0, second, populated), 2), NumericalError);
  }
}

TEST_CASE("gaussianity report") {
  SUBCASE("constant ensemble gives undefined markers") {
    MatrixEnsemble ens(4);
    ens.add("a", Eigen::MatrixXd::Identity(4, 4));
    ens.add("b", Eigen::MatrixXd::Identity(4, 4));
    const auto r = gaussianity_report(canonical_set("15"), ens);
    for (const auto& row : r.rows) CHECK_FALSE(row.normalized_difference.has_value());
    CHECK(to_csv(r).find("undefined") != std::string::npos);
    CHECK(to_json(r)["rows"][0]["normalized_difference"].is_null());
  }
  SUBCASE("degree <= 2 rows match exactly") {
    const auto r = gaussianity_report(canonical_set("13"), random_ensemble(5, 20, 44));
    for (const auto& row : r.rows) {
      REQUIRE(row.normalized_difference.has_value());
      CHECK(*row.normalized_difference <= 1e-9);
    }
  }
}

TEST_CASE("pattern moments JSON round trip") {
  const auto pm = fit_pattern_moments(random_ensemble(4, 5, 12));
  const auto j = to_json(pm);
  CHECK(j["second_moments"].size() == 11);
  CHECK(j["second_moments"].contains("0011"));
  const auto back = pattern_moments_from_json(j);
  CHECK(back.dim() == 4);
  for (std::size_t p = 0; p < 15; ++p) CHECK(back.second_moment(p) == pm.second_moment(p));
}
