#include "pimo/geometry.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pimo/errors.hpp"

namespace pimo {
namespace {

std::vector<std::string> observable_columns(const ObservableSet& set) {
  std::vector<std::string> cols;
  for (const Observable& o : set) cols.push_back(o.id() ? std::to_string(*o.id()) : o.to_string());
  return cols;
}

}  // namespace

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::RawValue: return "raw";
    case FeatureMode::DeviationExpt: return "expt";
    case FeatureMode::DeviationTheor: return "theor";
  }
  return "?";
}

FeatureMode parse_feature_mode(const std::string& s) {
  if (s == "raw") return FeatureMode::RawValue;
  if (s == "expt") return FeatureMode::DeviationExpt;
  if (s == "theor") return FeatureMode::DeviationTheor;
  throw FlagError("unknown deviation mode '" + s + "' (expected raw, expt or theor)");
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::DiagonalValue: return "value";
    case MetricKind::DiagonalDeviation: return "diag";
    case MetricKind::Mahalanobis: return "maha";
    case MetricKind::Flat: return "flat";
  }
  return "?";
}

MetricKind parse_metric_kind(const std::string& s) {
  if (s == "diag") return MetricKind::DiagonalDeviation;
  if (s == "maha") return MetricKind::Mahalanobis;
  if (s == "flat") return MetricKind::Flat;
  if (s == "value") return MetricKind::DiagonalValue;
  throw FlagError("unknown metric '" + s + "' (expected diag, maha, flat or value)");
}

InvariantSubset parse_invariant_subset(const std::string& s) {
  if (s == "set1") return InvariantSubset::Set1;
  if (s == "set2") return InvariantSubset::Set2;
  if (s == "set3") return InvariantSubset::Set3;
  throw FlagError("unknown invariant subset '" + s + "' (expected set1, set2 or set3)");
}

std::optional<Eigen::Index> FeatureTable::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void FeatureTable::reindex() {
  index_.clear();
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (!index_.emplace(words[k], static_cast<Eigen::Index>(k)).second) {
      throw IngestionError("duplicate word '" + words[k] + "' in feature table");
    }
  }
}

FeatureTable make_feature_table(std::vector<std::string> words, std::vector<std::string> columns, Matrix raw,
                                FeatureMode mode, const Vector* theoretical) {
  FeatureTable t;
  t.words = std::move(words);
  t.columns = std::move(columns);
  t.mode = mode;
  t.center = Vector::Zero(raw.cols());
  switch (mode) {
    case FeatureMode::RawValue:
      break;
    case FeatureMode::DeviationExpt:
      if (raw.rows() == 0) throw DegenerateDataError("deviation features of an empty table");
      for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        std::vector<double> col(raw.col(c).data(), raw.col(c).data() + raw.rows());
        t.center[c] = pairwise_sum(col) / static_cast<double>(raw.rows());
      }
      break;
    case FeatureMode::DeviationTheor:
      if (!theoretical || theoretical->size() != raw.cols()) {
        throw FlagError("theoretical deviation features need fitted Gaussian model means");
      }
      t.center = *theoretical;
      break;
  }
  t.values = raw.rowwise() - t.center.transpose();
  t.reindex();
  return t;
}

FeatureTable build_features(const MatrixEnsemble& ens, const ObservableSet& set, FeatureMode mode,
                            const PatternMoments* pm) {
  Matrix raw = observable_table(set, ens);
  if (mode == FeatureMode::DeviationTheor) {
    if (!pm) throw FlagError("theoretical deviation features need fitted pattern moments");
    Vector theor(static_cast<Eigen::Index>(set.size()));
    for (std::size_t k = 0; k < set.size(); ++k) theor[static_cast<Eigen::Index>(k)] = theoretical_moment(set[k], *pm);
    return make_feature_table(ens.words(), observable_columns(set), std::move(raw), mode, &theor);
  }
  return make_feature_table(ens.words(), observable_columns(set), std::move(raw), mode);
}

FeatureTable flatten_matrix_features(const MatrixEnsemble& ens, FeatureMode mode) {
  if (mode == FeatureMode::DeviationTheor) throw FlagError("matrix baselines support raw or expt deviations only");
  const int d = ens.dim();
  Matrix raw(static_cast<Eigen::Index>(ens.size()), d * d);
  for (std::size_t a = 0; a < ens.size(); ++a)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) raw(static_cast<Eigen::Index>(a), i * d + j) = ens[a](i, j);
  std::vector<std::string> cols;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) cols.push_back("M" + std::to_string(i) + "_" + std::to_string(j));
  return make_feature_table(ens.words(), std::move(cols), std::move(raw), mode);
}

WordVectors load_word_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open word-vector file " + path);
  WordVectors wv;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw IngestionError(path + ":" + std::to_string(line_no) + ": non-numeric value '" + tok + "'");
      }
    }
    if (line_no == 1 && row.size() == 1 && word.find_first_not_of("0123456789") == std::string::npos) continue;
    if (row.empty()) throw IngestionError(path + ":" + std::to_string(line_no) + ": word without values");
    if (dim == 0) dim = row.size();
    if (row.size() != dim) {
      throw IngestionError(path + ":" + std::to_string(line_no) + ": dimension mismatch, expected " +
                           std::to_string(dim) + " values");
    }
    wv.words.push_back(word);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IngestionError("no word vectors in " + path);
  wv.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < dim; ++c) wv.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return wv;
}

Eigen::VectorXd vector_invariants(const Eigen::VectorXd& v) {
  const double p1 = v.sum();
  const double p2 = v.array().square().sum();
  const double p3 = v.array().cube().sum();
  const double p4 = v.array().square().square().sum();
  Eigen::VectorXd out(11);
  out << p1,                                          // degree 1
      p2, p1 * p1,                                    // degree 2
      p3, p2 * p1, p1 * p1 * p1,                      // degree 3
      p4, p3 * p1, p2 * p2, p2 * p1 * p1, p1 * p1 * p1 * p1;  // degree 4
  return out;
}

FeatureTable vector_invariant_features(const WordVectors& vectors, InvariantSubset subset, FeatureMode mode) {
  if (mode == FeatureMode::DeviationTheor) throw FlagError("vector baselines support raw or expt deviations only");
  static const char* kNames[11] = {"p1", "p2", "p1^2", "p3", "p2p1", "p1^3", "p4", "p3p1", "p2^2", "p2p1^2", "p1^4"};
  int first = 0, count = 11;
  if (subset == InvariantSubset::Set1) count = 3;
  if (subset == InvariantSubset::Set2) first = 3, count = 8;
  Matrix raw(vectors.values.rows(), count);
  for (Eigen::Index r = 0; r < vectors.values.rows(); ++r) {
    raw.row(r) = vector_invariants(vectors.values.row(r).transpose()).segment(first, count).transpose();
  }
  std::vector<std::string> cols(kNames + first, kNames + first + count);
  return make_feature_table(vectors.words, std::move(cols), std::move(raw), mode);
}

FeatureTable word_vector_features(const WordVectors& vectors, FeatureMode mode) {
  if (mode == FeatureMode::DeviationTheor) throw FlagError("vector baselines support raw or expt deviations only");
  std::vector<std::string> cols;
  for (Eigen::Index c = 0; c < vectors.values.cols(); ++c) cols.push_back("v" + std::to_string(c));
  return make_feature_table(vectors.words, std::move(cols), vectors.values, mode);
}

double MetricSpec::inner(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (kind == MetricKind::Mahalanobis) return u.dot(inverse_covariance * v);
  return (u.array() * weights.array() * v.array()).sum();
}

MetricSpec build_metric(const FeatureTable& features, MetricKind kind) {
  const Matrix& x = features.values;
  const Eigen::Index n = x.rows();
  const Eigen::Index cols = x.cols();
  if (kind != MetricKind::Flat && n == 0) throw DegenerateDataError("metric of an empty feature table");
  if ((kind == MetricKind::DiagonalDeviation || kind == MetricKind::Mahalanobis) && n < 2) {
    throw DegenerateDataError("deviation metrics need at least two words");
  }
  MetricSpec m;
  m.kind = kind;
  m.scales = Vector::Ones(cols);

  Vector column_mean = Vector::Zero(cols);
  if (n > 0) column_mean = x.colwise().mean().transpose();
  const bool centre = features.mode == FeatureMode::RawValue;

  for (Eigen::Index c = 0; c < cols; ++c) {
    std::vector<double> sq(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
      double v = x(r, c);
      if ((kind == MetricKind::DiagonalDeviation || kind == MetricKind::Mahalanobis) && centre) v -= column_mean[c];
      sq[static_cast<std::size_t>(r)] = v * v;
    }
    if (kind != MetricKind::Flat) m.scales[c] = pairwise_sum(sq) / static_cast<double>(n);
  }

  // A column is degenerate when its spread is at roundoff level relative to
  // the magnitudes that produced it.
  m.weights = Vector::Zero(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double magnitude = std::abs(features.center.size() ? features.center[c] : 0.0) +
                             (n > 0 ? x.col(c).cwiseAbs().maxCoeff() : 0.0);
    const double floor = 1e-12 * magnitude;
    if (!(m.scales[c] > floor * floor) || m.scales[c] == 0.0) {
      m.dropped.push_back(static_cast<std::size_t>(c));
      m.dropped_columns.push_back(features.columns[static_cast<std::size_t>(c)]);
    } else {
      m.weights[c] = 1.0 / m.scales[c];
    }
  }

  if (kind == MetricKind::Mahalanobis) {
    const Matrix centred = x.rowwise() - column_mean.transpose();
    const Matrix cov = (centred.transpose() * centred) / static_cast<double>(n);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector& lambda = eig.eigenvalues();
    const double lmax = lambda.size() ? lambda.maxCoeff() : 0.0;
    Vector inv = Vector::Zero(lambda.size());
    for (Eigen::Index k = 0; k < lambda.size(); ++k)
      if (lmax > 0.0 && lambda[k] > 1e-10 * lmax) inv[k] = 1.0 / lambda[k];
    m.inverse_covariance = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    m.inverse_covariance = 0.5 * (m.inverse_covariance + m.inverse_covariance.transpose()).eval();
  }
  return m;
}

std::optional<double> cosine(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                             const MetricSpec& m) {
  const double uu = m.inner(u, u);
  const double vv = m.inner(v, v);
  if (!(uu > 0.0) || !(vv > 0.0)) return std::nullopt;
  return m.inner(u, v) / std::sqrt(uu * vv);
}

double norm(const Eigen::Ref<const Eigen::VectorXd>& u, const MetricSpec& m) {
  return std::sqrt(std::max(m.inner(u, u), 0.0));
}

nlohmann::json to_json(const FeatureTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) row.push_back(t.values(r, c));
    rows.push_back(row);
  }
  return {{"mode", to_string(t.mode)}, {"columns", t.columns}, {"words", t.words}, {"values", rows}};
}

std::string to_csv(const FeatureTable& t) {
  std::ostringstream out;
  out << std::setprecision(17) << "word";
  for (const auto& c : t.columns) out << "," << c;
  out << "\n";
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    out << t.words[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) out << "," << t.values(r, c);
    out << "\n";
  }
  return out.str();
}

}  // namespace pimo
