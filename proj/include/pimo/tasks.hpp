#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pimo/ensemble.hpp"
#include "pimo/geometry.hpp"

namespace pimo {

enum class Relation { Synonyms, Antonyms, None, HyperHyponyms, Cohyponyms };

std::string to_string(Relation r);
Relation parse_relation(const std::string& s);

enum class HyperDirection { First, Second, Unknown };

struct WordPair {
  std::string word1;
  std::string word2;
  Relation relation = Relation::None;
  double score = 0.0;
  HyperDirection hyper = HyperDirection::Unknown;
};

struct PairDataset {
  std::vector<WordPair> pairs;
};

/// TSV with header "word1\tword2\trelation\tscore\thyper_direction";
/// hyper_direction is 1, 2, UNKNOWN or "-".
PairDataset load_pairs(const std::string& path);

struct CosineGroups {
  std::map<Relation, std::vector<double>> by_relation;
  std::size_t skipped_missing = 0;    // a word has no feature row
  std::size_t skipped_zero_norm = 0;  // cosine undefined

  std::size_t skipped() const { return skipped_missing + skipped_zero_norm; }
};

/// Cosine of every pair whose words both have feature rows, grouped by relation.
CosineGroups pair_cosines(const FeatureTable& features, const MetricSpec& metric, const PairDataset& pairs);

struct RelationMean {
  double mean = 0.0;
  double std = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

/// Mean and population std / sqrt(count) for each nonempty group.
std::map<Relation, RelationMean> relation_means(const CosineGroups& groups);

struct OrderingResult {
  /// ANTONYMS < NONE < SYNONYMS; empty when a relation is missing.
  std::optional<bool> antonym_none_synonym;
  /// HYPER_HYPONYMS < COHYPONYMS; empty when a relation is missing.
  std::optional<bool> hyper_cohypo;

  bool pass() const { return antonym_none_synonym.value_or(true) && hyper_cohypo.value_or(true); }
};

OrderingResult ordering_check(const std::map<Relation, RelationMean>& means);

/// D_lo + (4/pi) atan(sd_lo / sd_hi) (D_hi - D_lo) / 2. Equal spreads give
/// the midpoint; sd_hi == 0 gives D_hi.
double divide(double mean_lo, double sd_lo, double mean_hi, double sd_hi);

struct DivideModel {
  double mean_lo = 0.0;
  double sd_lo = 0.0;
  double mean_hi = 0.0;
  double sd_hi = 0.0;
  double value = 0.0;

  static DivideModel fit(const std::vector<double>& lo, const std::vector<double>& hi);
};

/// Cosines with class labels 0..k-1; classes are ordered from the low end of
/// the cosine axis to the high end.
struct LabeledCosines {
  std::vector<double> cosines;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  int classes() const { return static_cast<int>(class_names.size()); }
  std::vector<double> of_class(int c) const;
};

enum class ClassifyMode { SynAnt, SynAntNone, SynVsRest, HyperCohypo };

ClassifyMode parse_classify_mode(const std::string& s);  // syn-ant | syn-ant-none | syn-vs-rest | hyper-cohypo
std::string to_string(ClassifyMode mode);

/// Throws DegenerateDataError if a required class has no pairs.
LabeledCosines make_task(const CosineGroups& groups, ClassifyMode mode);

struct Confusion {
  /// counts(actual, predicted)
  Eigen::MatrixXi counts;

  int classes() const { return static_cast<int>(counts.rows()); }
  /// True rate of class c; empty when the class has no members.
  std::optional<double> true_rate(int c) const;
  /// Mean of per-class true rates; empty if any class is empty.
  std::optional<double> balanced_accuracy() const;
};

/// Binary balanced accuracy (TPR + TNR) / 2 from confusion counts.
double balanced_accuracy(int tp, int fn, int tn, int fp);

/// Predicted class = number of divides <= cosine (a tie goes to the
/// higher class).
int classify(double cosine, const std::vector<double>& divides);

/// Divides between consecutive classes; throws DegenerateDataError if they
/// are not nondecreasing.
std::vector<DivideModel> fit_divides(const LabeledCosines& data);
Confusion evaluate_divides(const LabeledCosines& data, const std::vector<double>& divides);

struct SplitOptions {
  double frac = 0.65;
  int reps = 20;
  std::uint64_t seed = 0;
  bool stratify = true;
};

struct ClassReport {
  std::vector<std::string> class_names;
  std::string protocol;  // "full" or "split"
  // full protocol
  std::vector<DivideModel> divides;
  Confusion confusion;
  // split protocol
  SplitOptions split;
  std::vector<double> repetition_scores;

  /// Full: balanced accuracy on the whole set. Split: mean over repetitions.
  std::optional<double> balanced_accuracy;
  double standard_error = 0.0;
  std::size_t skipped_pairs = 0;
};

ClassReport classify_full(const LabeledCosines& data);
ClassReport split_protocol(const LabeledCosines& data, const SplitOptions& options);

/// Two-class convenience: low / high class cosines and a fixed divide.
Confusion classify_binary(const std::vector<double>& lo, const std::vector<double>& hi, double divide);
/// Antonym / none / synonym cosines with divides D_AN <= D_NS.
Confusion classify_three_way(const std::vector<double>& antonyms, const std::vector<double>& none,
                             const std::vector<double>& synonyms, double divide_an, double divide_ns);

struct LengthRatio {
  double ratio = 0.0;
  std::size_t pairs = 0;
  std::size_t hyper_longer = 0;
  std::size_t ties = 0;
  std::size_t skipped = 0;  // missing words or unknown direction
};

/// Fraction of directed hyper/hyponym pairs whose hypernym row is strictly
/// longer under the metric. Ties count as failures.
LengthRatio hyper_length_ratio(const FeatureTable& features, const MetricSpec& metric, const PairDataset& pairs);

struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::map<Relation, std::vector<double>> normalized_counts;
};

Histogram cosine_histogram(const CosineGroups& groups, int bins = 40, double lo = -1.0, double hi = 1.0);
std::string to_csv(const Histogram& h);

struct BaselineTable {
  std::string name;
  std::map<Relation, RelationMean> means;
  OrderingResult ordering;
  std::size_t skipped_pairs = 0;
};

/// Matrix baselines (flattened entries, raw and deviation) when `ens` is
/// given; word-vector baselines (invariants set1..3, plain, deviation) when
/// `vectors` is given.
std::vector<BaselineTable> run_baselines(const MatrixEnsemble* ens, const WordVectors* vectors,
                                         const PairDataset& pairs);

nlohmann::json to_json(const std::map<Relation, RelationMean>& means);
nlohmann::json to_json(const OrderingResult& o);
nlohmann::json to_json(const ClassReport& r);
nlohmann::json to_json(const LengthRatio& r);

}  // namespace pimo
