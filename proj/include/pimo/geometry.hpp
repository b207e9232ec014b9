#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pimo/ensemble.hpp"
#include "pimo/gaussian_model.hpp"
#include "pimo/observable.hpp"

namespace pimo {

enum class FeatureMode { RawValue, DeviationExpt, DeviationTheor };

std::string to_string(FeatureMode mode);
FeatureMode parse_feature_mode(const std::string& s);  // raw | expt | theor

/// Per-word feature rows (words x columns).
struct FeatureTable {
  std::vector<std::string> words;
  std::vector<std::string> columns;
  Matrix values;
  FeatureMode mode = FeatureMode::RawValue;
  /// What was subtracted from each raw column (zero for RawValue).
  Vector center;

  std::size_t size() const { return words.size(); }
  /// Row index of `word`, if present.
  std::optional<Eigen::Index> find(const std::string& word) const;

  void reindex();

 private:
  std::map<std::string, Eigen::Index> index_;
};

/// Raw values v = O(M), or deviations from the experimental mean or from
/// the Gaussian model prediction (which needs `pm`).
FeatureTable build_features(const MatrixEnsemble& ens, const ObservableSet& set, FeatureMode mode,
                            const PatternMoments* pm = nullptr);

/// Shared helper: turn a raw table into the requested mode. For
/// DeviationTheor, `theoretical` holds the per-column model means.
FeatureTable make_feature_table(std::vector<std::string> words, std::vector<std::string> columns, Matrix raw,
                                FeatureMode mode, const Vector* theoretical = nullptr);

/// Row-major flattening of every word matrix (D^2 columns).
FeatureTable flatten_matrix_features(const MatrixEnsemble& ens, FeatureMode mode = FeatureMode::RawValue);

/// Plain word vectors, one row per word, file order.
struct WordVectors {
  std::vector<std::string> words;
  Matrix values;
};

/// "word v1 v2 ... vD" per line. A leading "count dim" header line is skipped.
WordVectors load_word_vectors(const std::string& path);

enum class InvariantSubset { Set1, Set2, Set3 };
InvariantSubset parse_invariant_subset(const std::string& s);  // set1 | set2 | set3

/// Permutation invariants of a vector built from power sums p_k = sum_i v_i^k:
/// degree 1: p1; 2: p2, p1^2; 3: p3, p2 p1, p1^3; 4: p4, p3 p1, p2^2, p2 p1^2, p1^4.
Eigen::VectorXd vector_invariants(const Eigen::VectorXd& v);
FeatureTable vector_invariant_features(const WordVectors& vectors, InvariantSubset subset,
                                       FeatureMode mode = FeatureMode::RawValue);
FeatureTable word_vector_features(const WordVectors& vectors, FeatureMode mode = FeatureMode::RawValue);

enum class MetricKind { DiagonalValue, DiagonalDeviation, Mahalanobis, Flat };

std::string to_string(MetricKind kind);

/// Inner product on feature rows.
struct MetricSpec {
  MetricKind kind = MetricKind::Flat;
  /// Per-column scale (second moment or variance); 1 for Flat.
  Vector scales;
  /// Inverse scales, zero on dropped columns (diagonal kinds).
  Vector weights;
  /// Pseudo-inverse covariance (Mahalanobis only).
  Matrix inverse_covariance;
  std::vector<std::size_t> dropped;
  std::vector<std::string> dropped_columns;

  double inner(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) const;
};

/// DiagonalValue: scales = column mean of squares. DiagonalDeviation:
/// column variance for raw tables, mean of squared deviations otherwise.
/// Mahalanobis: pseudo-inverse of the population feature covariance with
/// relative eigenvalue cutoff 1e-10. Flat: unit scales. Zero-scale columns
/// are dropped and recorded.
MetricSpec build_metric(const FeatureTable& features, MetricKind kind);
MetricKind parse_metric_kind(const std::string& s);  // diag | maha | flat | value

/// g(u,v) / sqrt(g(u,u) g(v,v)); empty if either vector has zero norm.
std::optional<double> cosine(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                             const MetricSpec& m);
double norm(const Eigen::Ref<const Eigen::VectorXd>& u, const MetricSpec& m);

nlohmann::json to_json(const FeatureTable& t);
std::string to_csv(const FeatureTable& t);

}  // namespace pimo
