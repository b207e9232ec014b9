#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pimo/numeric.hpp"
#include "pimo/observable.hpp"

namespace pimo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Named collection of D x D word matrices with deterministic word order.
class MatrixEnsemble {
 public:
  MatrixEnsemble() = default;
  explicit MatrixEnsemble(int dim, std::string source = {}) : dim_(dim), source_(std::move(source)) {}

  /// Throws IngestionError on duplicate words or a shape mismatch.
  void add(const std::string& word, Matrix m);

  int dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::string& source() const { return source_; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<Matrix>& matrices() const { return matrices_; }
  const Matrix& operator[](std::size_t i) const { return matrices_[i]; }

  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  /// Position of `word` in word order, or size() if absent.
  std::size_t index_of(const std::string& word) const;
  const Matrix& at(const std::string& word) const;

 private:
  int dim_ = 0;
  std::string source_;
  std::vector<std::string> words_;
  std::vector<Matrix> matrices_;
  std::map<std::string, std::size_t> index_;
};

/// Reads `dir/manifest.json` ({"dim", "format": "csv", "words"}) and one
/// `<word>.csv` per word. Without a "words" list, every *.csv in the
/// directory is loaded in lexicographic order.
MatrixEnsemble load_ensemble(const std::string& dir);

/// Parses D lines of D comma- or whitespace-separated floats.
Matrix read_matrix_file(const std::string& path, int expected_dim);

void write_ensemble(const MatrixEnsemble& ens, const std::string& dir);

struct MixResult {
  MatrixEnsemble ensemble;
  std::size_t dropped = 0;  // words present in only one input
};

/// M = a M_O + (1 - a) M_S on the common words, in M_O word order.
MixResult mix(const MatrixEnsemble& mo, const MatrixEnsemble& ms, double a);

struct ObservableStats {
  double mean = 0.0;
  double std = 0.0;
  double second_moment = 0.0;
  double standard_error = 0.0;
};

struct EnsembleStats {
  std::size_t count = 0;
  std::vector<ObservableStats> observables;
};

/// Per-word observable values, one row per word in ensemble order.
Matrix observable_table(const ObservableSet& set, const MatrixEnsemble& ens);

/// Experimental means and population standard deviations of each observable.
EnsembleStats compute_stats(const ObservableSet& set, const MatrixEnsemble& ens);
EnsembleStats compute_stats(const Matrix& table);

nlohmann::json to_json(const EnsembleStats& stats, const ObservableSet& set);

}  // namespace pimo
