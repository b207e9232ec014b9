#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pimo/ensemble.hpp"
#include "pimo/observable.hpp"
#include "pimo/partition.hpp"
#include "pimo/rng.hpp"

namespace pimo {

/// Permutation invariant Gaussian matrix model in entrywise-moment form.
///
/// The mean of M_ab depends only on whether a == b. The second moment
/// E[M_ab M_cd] depends only on the coincidence pattern of (a, b, c, d),
/// i.e. on one of the 15 partitions of four slots, with blocks taking
/// pairwise distinct values. Swapping the two factors identifies 4 pairs of
/// patterns, leaving 11 quadratic classes; with the 2 mean classes that is
/// 13 numbers, the same count as the linear and quadratic invariants they
/// are fitted to.
class PatternMoments {
 public:
  static constexpr int kQuadraticPatterns = 15;

  PatternMoments() = default;
  PatternMoments(int dim, double mean_diag, double mean_off, std::array<double, kQuadraticPatterns> second,
                 std::array<bool, kQuadraticPatterns> populated);

  int dim() const { return dim_; }
  double mean_diag() const { return mean_diag_; }
  double mean_off() const { return mean_off_; }
  double mean(int a, int b) const { return a == b ? mean_diag_ : mean_off_; }

  /// Exact-pattern second moment indexed like enumerate_partitions(4).
  double second_moment(std::size_t pattern) const { return second_[pattern]; }
  double second_moment(const std::string& key) const;
  /// Covariance of M_ab and M_cd for distinct-block labels a, b, c, d.
  double covariance(int a, int b, int c, int d) const;
  /// Second moment minus the product of the two pattern means.
  double pattern_covariance(std::size_t pattern) const;
  bool populated(std::size_t pattern) const { return populated_[pattern]; }

  /// Representatives of the factor-swap orbits of 4-slot patterns (11).
  static const std::vector<std::size_t>& orbit_representatives();
  /// Index of the factor-swapped pattern (a,b,c,d) -> (c,d,a,b).
  static std::size_t swapped(std::size_t pattern);
  static std::size_t pattern_index(int a, int b, int c, int d);

  /// Full D^2 x D^2 covariance of the row-major flattened matrix at
  /// dimension d (defaults to the fitted dimension).
  Eigen::MatrixXd full_covariance(int d = 0) const;
  Eigen::MatrixXd mean_matrix(int d = 0) const;

 private:
  int dim_ = 0;
  double mean_diag_ = 0.0;
  double mean_off_ = 0.0;
  std::array<double, kQuadraticPatterns> second_{};
  std::array<bool, kQuadraticPatterns> populated_{};
};

/// Standard rows 1..13 ensemble means -> exact-pattern moments by Moebius
/// inversion on the partition lattice. Patterns with more blocks than D
/// have no assignments and are left unpopulated (stored as 0).
PatternMoments fit_pattern_moments(int dim, const std::array<double, 13>& invariant_means);
PatternMoments fit_pattern_moments(const MatrixEnsemble& ens);

/// Inverse map: unrestricted invariant means of rows 1..13 implied by pm.
std::array<double, 13> invariant_means(const PatternMoments& pm);

/// Expectation of a degree <= 4 observable under the Gaussian model: sum over
/// node partitions of (falling-factorial count) x (Isserlis moment of the
/// edge factors for that coincidence pattern).
double theoretical_moment(const Observable& obs, const PatternMoments& pm);

nlohmann::json to_json(const PatternMoments& pm);
PatternMoments pattern_moments_from_json(const nlohmann::json& j);

struct GaussianityRow {
  double expt_mean = 0.0;
  double theor_mean = 0.0;
  double std = 0.0;
  /// |expt - theor| / std; empty when std == 0.
  std::optional<double> normalized_difference;
};

struct GaussianityReport {
  ObservableSet set;
  std::size_t count = 0;
  PatternMoments moments;
  std::vector<GaussianityRow> rows;
};

GaussianityReport gaussianity_report(const ObservableSet& set, const MatrixEnsemble& ens);

nlohmann::json to_json(const GaussianityReport& report);
std::string to_csv(const GaussianityReport& report);

/// Draws i.i.d. matrices from the Gaussian with the model's mean and
/// covariance. Factorisation: Cholesky, then Cholesky with diagonal jitter
/// 1e-10 * max diagonal, then clipped eigendecomposition.
class GaussianSampler {
 public:
  GaussianSampler(const PatternMoments& pm, int dim);

  int dim() const { return dim_; }
  Eigen::MatrixXd draw(Rng& rng) const;
  const Eigen::MatrixXd& factor() const { return factor_; }

 private:
  int dim_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

/// D <= 12. Deterministic given seed.
MatrixEnsemble sample_ensemble(const PatternMoments& pm, int dim, std::size_t count, std::uint64_t seed);

}  // namespace pimo
