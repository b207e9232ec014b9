#include "pimo/ensemble.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pimo/contraction.hpp"
#include "pimo/errors.hpp"

namespace fs = std::filesystem;

namespace pimo {

void MatrixEnsemble::add(const std::string& word, Matrix m) {
  if (m.rows() != dim_ || m.cols() != dim_) {
    throw IngestionError("matrix for '" + word + "' is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         ", expected " + std::to_string(dim_) + "x" + std::to_string(dim_));
  }
  if (index_.count(word)) throw IngestionError("duplicate word '" + word + "'");
  index_.emplace(word, words_.size());
  words_.push_back(word);
  matrices_.push_back(std::move(m));
}

std::size_t MatrixEnsemble::index_of(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? words_.size() : it->second;
}

const Matrix& MatrixEnsemble::at(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) throw IngestionError("word '" + word + "' not in ensemble");
  return matrices_[it->second];
}

Matrix read_matrix_file(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::replace(line.begin(), line.end(), '\t', ' ');
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      double v = 0.0;
      const char* first = tok.data();
      const char* last = tok.data() + tok.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw IngestionError(path + ":" + std::to_string(line_no) + ": non-numeric cell '" + tok + "'");
      }
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (static_cast<int>(row.size()) != expected_dim) {
      throw IngestionError(path + ":" + std::to_string(line_no) + ": dimension mismatch, row has " +
                           std::to_string(row.size()) + " cells, expected " + std::to_string(expected_dim));
    }
    rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) != expected_dim) {
    throw IngestionError(path + ": dimension mismatch, " + std::to_string(rows.size()) + " rows, expected " +
                         std::to_string(expected_dim));
  }
  Matrix m(expected_dim, expected_dim);
  for (int i = 0; i < expected_dim; ++i)
    for (int j = 0; j < expected_dim; ++j) m(i, j) = rows[i][j];
  return m;
}

MatrixEnsemble load_ensemble(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw IngestionError("ensemble directory " + dir + " does not exist");
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path)) {
    bool any = fs::directory_iterator(root) != fs::directory_iterator();
    throw IngestionError(any ? "missing manifest.json in " + dir : "empty ensemble directory " + dir);
  }
  nlohmann::json manifest;
  try {
    std::ifstream in(manifest_path);
    in >> manifest;
  } catch (const nlohmann::json::exception& ex) {
    throw IngestionError(manifest_path.string() + ": " + ex.what());
  }
  int dim = 0;
  std::vector<std::string> words;
  try {
    dim = manifest.at("dim").get<int>();
    const std::string format = manifest.value("format", std::string("csv"));
    if (format != "csv") throw IngestionError(manifest_path.string() + ": unsupported format '" + format + "'");
    if (manifest.contains("words")) words = manifest["words"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& ex) {
    throw IngestionError(manifest_path.string() + ": " + ex.what());
  }
  if (dim < 1) throw IngestionError(manifest_path.string() + ": dim must be positive");
  if (!manifest.contains("words")) {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.path().extension() == ".csv") words.push_back(entry.path().stem().string());
    }
    std::sort(words.begin(), words.end());
  }
  if (words.empty()) throw IngestionError("empty ensemble in " + dir);

  MatrixEnsemble ens(dim, dir);
  for (const std::string& w : words) {
    if (ens.contains(w)) throw IngestionError(manifest_path.string() + ": duplicate word '" + w + "'");
    ens.add(w, read_matrix_file((root / (w + ".csv")).string(), dim));
  }
  return ens;
}

void write_ensemble(const MatrixEnsemble& ens, const std::string& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest = {{"dim", ens.dim()}, {"format", "csv"}, {"words", ens.words()}};
  std::ofstream(fs::path(dir) / "manifest.json") << manifest.dump(2) << "\n";
  for (std::size_t k = 0; k < ens.size(); ++k) {
    std::ofstream out(fs::path(dir) / (ens.words()[k] + ".csv"));
    out << std::setprecision(17);
    const Matrix& m = ens[k];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
      out << "\n";
    }
  }
}

MixResult mix(const MatrixEnsemble& mo, const MatrixEnsemble& ms, double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw FlagError("mixing weight a must lie in [0, 1]");
  if (mo.dim() != ms.dim()) {
    throw IngestionError("cannot mix ensembles of dimension " + std::to_string(mo.dim()) + " and " +
                         std::to_string(ms.dim()));
  }
  MixResult r{MatrixEnsemble(mo.dim(), "mix(a=" + std::to_string(a) + ")"), 0};
  for (std::size_t k = 0; k < mo.size(); ++k) {
    const std::string& w = mo.words()[k];
    if (!ms.contains(w)) {
      ++r.dropped;
      continue;
    }
    r.ensemble.add(w, a * mo[k] + (1.0 - a) * ms.at(w));
  }
  for (const std::string& w : ms.words()) {
    if (!mo.contains(w)) ++r.dropped;
  }
  if (r.ensemble.empty()) throw DegenerateDataError("mixing inputs share no words");
  return r;
}

Matrix observable_table(const ObservableSet& set, const MatrixEnsemble& ens) {
  const SetEvaluator eval(set);
  Matrix table(static_cast<Eigen::Index>(ens.size()), static_cast<Eigen::Index>(set.size()));
  for (std::size_t a = 0; a < ens.size(); ++a) table.row(static_cast<Eigen::Index>(a)) = eval(ens[a]).transpose();
  return table;
}

EnsembleStats compute_stats(const Matrix& table) {
  if (table.rows() == 0) throw DegenerateDataError("statistics of an empty ensemble");
  EnsembleStats stats;
  stats.count = static_cast<std::size_t>(table.rows());
  for (Eigen::Index c = 0; c < table.cols(); ++c) {
    std::vector<double> column(table.col(c).data(), table.col(c).data() + table.rows());
    const MeanStd ms = mean_std(column);
    stats.observables.push_back({ms.mean, ms.std, ms.second_moment, ms.standard_error()});
  }
  return stats;
}

EnsembleStats compute_stats(const ObservableSet& set, const MatrixEnsemble& ens) {
  if (ens.empty()) throw DegenerateDataError("statistics of an empty ensemble");
  return compute_stats(observable_table(set, ens));
}

MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  r.count = xs.size();
  if (xs.empty()) return r;
  const double n = static_cast<double>(xs.size());
  r.mean = pairwise_sum(xs) / n;
  std::vector<double> dev2(xs.size()), sq(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    dev2[k] = (xs[k] - r.mean) * (xs[k] - r.mean);
    sq[k] = xs[k] * xs[k];
  }
  r.std = std::sqrt(pairwise_sum(std::span<const double>(dev2)) / n);
  r.second_moment = pairwise_sum(std::span<const double>(sq)) / n;
  return r;
}

nlohmann::json to_json(const EnsembleStats& stats, const ObservableSet& set) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < stats.observables.size(); ++k) {
    const auto& o = stats.observables[k];
    nlohmann::json row = {{"observable", set[k].label().empty() ? set[k].to_string() : set[k].label()},
                          {"mean", o.mean},
                          {"std", o.std},
                          {"second_moment", o.second_moment},
                          {"standard_error", o.standard_error}};
    if (set[k].id()) row["id"] = *set[k].id();
    rows.push_back(std::move(row));
  }
  return {{"count", stats.count}, {"observables", rows}};
}

}  // namespace pimo
