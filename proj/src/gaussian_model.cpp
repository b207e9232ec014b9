#include "pimo/gaussian_model.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "pimo/errors.hpp"
#include "pimo/numeric.hpp"

namespace pimo {
namespace {

// Which of rows 1..13 is the unrestricted sum for each 4-slot pattern:
// pattern (a,b,c,d) <-> graph with edges a->b, c->d on its blocks.
const std::array<int, PatternMoments::kQuadraticPatterns>& quadratic_row_of_pattern() {
  static const auto table = [] {
    std::array<int, PatternMoments::kQuadraticPatterns> rows{};
    const auto& parts = enumerate_partitions(4);
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const auto& r = parts[p].rgs;
      const Observable g(parts[p].blocks, {{r[0], r[1]}, {r[2], r[3]}});
      rows[p] = 0;
      for (int id = 3; id <= 13; ++id) {
        if (standard_observable(id).same_graph(g)) rows[p] = id;
      }
      if (rows[p] == 0) throw std::logic_error("quadratic pattern without a matching invariant");
    }
    return rows;
  }();
  return table;
}

// Partial matchings of {0..n-1}: each entry lists pairs, unmatched elements
// are the rest.
using Matching = std::vector<std::pair<int, int>>;

void matchings_rec(std::vector<int>& free, Matching& cur, std::vector<Matching>& out) {
  if (free.empty()) {
    out.push_back(cur);
    return;
  }
  const int first = free.front();
  std::vector<int> rest(free.begin() + 1, free.end());
  // first left unmatched
  matchings_rec(rest, cur, out);
  for (std::size_t k = 0; k < rest.size(); ++k) {
    std::vector<int> remaining;
    for (std::size_t q = 0; q < rest.size(); ++q)
      if (q != k) remaining.push_back(rest[q]);
    cur.emplace_back(first, rest[k]);
    matchings_rec(remaining, cur, out);
    cur.pop_back();
  }
}

const std::vector<Matching>& partial_matchings(int n) {
  static const std::array<std::vector<Matching>, 5> cache = [] {
    std::array<std::vector<Matching>, 5> all;
    for (int k = 0; k <= 4; ++k) {
      std::vector<int> free(k);
      for (int q = 0; q < k; ++q) free[q] = q;
      Matching cur;
      matchings_rec(free, cur, all[k]);
    }
    return all;
  }();
  return cache.at(static_cast<std::size_t>(n));
}

std::string format_number(double x) {
  std::ostringstream ss;
  ss << std::setprecision(10) << x;
  return ss.str();
}

}  // namespace

PatternMoments::PatternMoments(int dim, double mean_diag, double mean_off, std::array<double, kQuadraticPatterns> second,
                               std::array<bool, kQuadraticPatterns> populated)
    : dim_(dim), mean_diag_(mean_diag), mean_off_(mean_off), second_(second), populated_(populated) {
  for (std::size_t p = 0; p < second_.size(); ++p) {
    if (second_[p] != second_[swapped(p)]) {
      const double avg = 0.5 * (second_[p] + second_[swapped(p)]);
      second_[p] = second_[swapped(p)] = avg;
    }
  }
}

std::size_t PatternMoments::pattern_index(int a, int b, int c, int d) {
  const SetPartition p = partition_of({a, b, c, d});
  const auto& parts = enumerate_partitions(4);
  for (std::size_t k = 0; k < parts.size(); ++k)
    if (parts[k].rgs == p.rgs) return k;
  throw std::logic_error("unreachable: unknown 4-slot pattern");
}

std::size_t PatternMoments::swapped(std::size_t pattern) {
  static const auto table = [] {
    std::array<std::size_t, kQuadraticPatterns> t{};
    const auto& parts = enumerate_partitions(4);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto& r = parts[k].rgs;
      t[k] = pattern_index(r[2], r[3], r[0], r[1]);
    }
    return t;
  }();
  return table.at(pattern);
}

const std::vector<std::size_t>& PatternMoments::orbit_representatives() {
  static const auto reps = [] {
    std::vector<std::size_t> r;
    for (std::size_t k = 0; k < kQuadraticPatterns; ++k)
      if (swapped(k) >= k) r.push_back(k);
    return r;
  }();
  return reps;
}

double PatternMoments::second_moment(const std::string& key) const {
  const SetPartition p = partition_from_key(key);
  if (p.slots() != 4) throw std::invalid_argument("quadratic pattern key must have 4 slots: " + key);
  return second_[pattern_index(p.rgs[0], p.rgs[1], p.rgs[2], p.rgs[3])];
}

double PatternMoments::pattern_covariance(std::size_t pattern) const {
  const auto& r = enumerate_partitions(4)[pattern].rgs;
  return second_[pattern] - mean(r[0], r[1]) * mean(r[2], r[3]);
}

double PatternMoments::covariance(int a, int b, int c, int d) const {
  return second_[pattern_index(a, b, c, d)] - mean(a, b) * mean(c, d);
}

Eigen::MatrixXd PatternMoments::mean_matrix(int d) const {
  if (d == 0) d = dim_;
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(d, d, mean_off_);
  m.diagonal().setConstant(mean_diag_);
  return m;
}

Eigen::MatrixXd PatternMoments::full_covariance(int d) const {
  if (d == 0) d = dim_;
  const auto& parts = enumerate_partitions(4);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].blocks <= d && !populated_[k]) {
      throw DegenerateDataError("pattern " + parts[k].key() + " is not populated; cannot build covariance at D=" +
                                std::to_string(d));
    }
  }
  // Pattern index depends only on equalities, precompute over (a==b, ...) via direct lookup.
  const int n = d * d;
  Eigen::MatrixXd cov(n, n);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) cov(a * d + b, c * d + e) = covariance(a, b, c, e);
  return cov;
}

PatternMoments fit_pattern_moments(int dim, const std::array<double, 13>& means) {
  if (dim < 1) throw DegenerateDataError("pattern moments need D >= 1");
  // Linear: unrestricted "00" = trace, "01" = total sum.
  const std::vector<double> lin_exact = exact_from_unrestricted(2, {means[0], means[1]});
  const double mean_diag = lin_exact[0] / falling_factorial(dim, 1);
  const double off_count = falling_factorial(dim, 2);
  const double mean_off = off_count > 0 ? lin_exact[1] / off_count : 0.0;

  const auto& parts = enumerate_partitions(4);
  const auto& rows = quadratic_row_of_pattern();
  std::vector<double> unrestricted(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) unrestricted[p] = means[static_cast<std::size_t>(rows[p] - 1)];
  const std::vector<double> exact = exact_from_unrestricted(4, unrestricted);

  std::array<double, PatternMoments::kQuadraticPatterns> second{};
  std::array<bool, PatternMoments::kQuadraticPatterns> populated{};
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const double count = falling_factorial(dim, parts[p].blocks);
    populated[p] = count > 0;
    second[p] = count > 0 ? exact[p] / count : 0.0;
  }
  return PatternMoments(dim, mean_diag, mean_off, second, populated);
}

PatternMoments fit_pattern_moments(const MatrixEnsemble& ens) {
  if (ens.empty()) throw DegenerateDataError("cannot fit pattern moments to an empty ensemble");
  const EnsembleStats stats = compute_stats(canonical_set("13"), ens);
  std::array<double, 13> means{};
  for (std::size_t k = 0; k < 13; ++k) means[k] = stats.observables[k].mean;
  return fit_pattern_moments(ens.dim(), means);
}

std::array<double, 13> invariant_means(const PatternMoments& pm) {
  const int d = pm.dim();
  std::array<double, 13> out{};
  const std::vector<double> lin = unrestricted_from_exact(
      2, {pm.mean_diag() * falling_factorial(d, 1), pm.mean_off() * falling_factorial(d, 2)});
  out[0] = lin[0];
  out[1] = lin[1];
  const auto& parts = enumerate_partitions(4);
  std::vector<double> exact(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p)
    exact[p] = pm.second_moment(p) * falling_factorial(d, parts[p].blocks);
  const std::vector<double> unrestricted = unrestricted_from_exact(4, exact);
  const auto& rows = quadratic_row_of_pattern();
  for (std::size_t p = 0; p < parts.size(); ++p) out[static_cast<std::size_t>(rows[p] - 1)] = unrestricted[p];
  return out;
}

double theoretical_moment(const Observable& obs, const PatternMoments& pm) {
  if (obs.degree() > 4) {
    throw NumericalError("theoretical moments are implemented for degree <= 4, got degree " +
                         std::to_string(obs.degree()));
  }
  if (obs.node_count() > 8) throw NumericalError("theoretical moments support at most 8 nodes");
  const int d = pm.dim();
  const auto& edges = obs.edges();
  const auto& matchings = partial_matchings(obs.degree());

  std::vector<double> terms;
  for (const SetPartition& pi : enumerate_partitions(obs.node_count())) {
    const double count = falling_factorial(d, pi.blocks);
    if (count == 0.0) continue;
    std::vector<int> x(edges.size()), y(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      x[e] = pi.rgs[edges[e].source];
      y[e] = pi.rgs[edges[e].target];
    }
    double moment = 0.0;
    for (const Matching& mt : matchings) {
      std::vector<bool> matched(edges.size(), false);
      double term = 1.0;
      for (auto [e, f] : mt) {
        matched[e] = matched[f] = true;
        term *= pm.covariance(x[e], y[e], x[f], y[f]);
      }
      for (std::size_t e = 0; e < edges.size(); ++e)
        if (!matched[e]) term *= pm.mean(x[e], y[e]);
      moment += term;
    }
    terms.push_back(count * moment);
  }
  return pairwise_sum(terms);
}

nlohmann::json to_json(const PatternMoments& pm) {
  nlohmann::json second = nlohmann::json::object();
  nlohmann::json cov = nlohmann::json::object();
  const auto& parts = enumerate_partitions(4);
  for (std::size_t p : PatternMoments::orbit_representatives()) {
    if (!pm.populated(p)) continue;
    second[parts[p].key()] = pm.second_moment(p);
    cov[parts[p].key()] = pm.pattern_covariance(p);
  }
  return {{"dim", pm.dim()},
          {"mean_diag", pm.mean_diag()},
          {"mean_off", pm.mean_off()},
          {"second_moments", second},
          {"covariances", cov}};
}

PatternMoments pattern_moments_from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    std::array<double, PatternMoments::kQuadraticPatterns> second{};
    std::array<bool, PatternMoments::kQuadraticPatterns> populated{};
    for (const auto& [key, value] : j.at("second_moments").items()) {
      const SetPartition p = partition_from_key(key);
      if (p.slots() != 4) throw IngestionError("pattern key '" + key + "' must have 4 slots");
      const std::size_t idx = PatternMoments::pattern_index(p.rgs[0], p.rgs[1], p.rgs[2], p.rgs[3]);
      second[idx] = second[PatternMoments::swapped(idx)] = value.get<double>();
      populated[idx] = populated[PatternMoments::swapped(idx)] = true;
    }
    return PatternMoments(dim, j.at("mean_diag").get<double>(), j.at("mean_off").get<double>(), second, populated);
  } catch (const nlohmann::json::exception& ex) {
    throw IngestionError(std::string("malformed pattern moments JSON: ") + ex.what());
  }
}

GaussianityReport gaussianity_report(const ObservableSet& set, const MatrixEnsemble& ens) {
  if (ens.empty()) throw DegenerateDataError("gaussianity report of an empty ensemble");
  GaussianityReport report{set, ens.size(), fit_pattern_moments(ens), {}};
  const EnsembleStats stats = compute_stats(set, ens);
  for (std::size_t k = 0; k < set.size(); ++k) {
    GaussianityRow row;
    row.expt_mean = stats.observables[k].mean;
    row.std = stats.observables[k].std;
    row.theor_mean = theoretical_moment(set[k], report.moments);
    if (row.std > 0.0) row.normalized_difference = std::abs(row.expt_mean - row.theor_mean) / row.std;
    report.rows.push_back(row);
  }
  return report;
}

nlohmann::json to_json(const GaussianityReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    const Observable& o = report.set[k];
    const auto& r = report.rows[k];
    nlohmann::json row = {{"observable", o.label().empty() ? o.to_string() : o.label()},
                          {"expt_mean", r.expt_mean},
                          {"theor_mean", r.theor_mean},
                          {"std", r.std},
                          {"normalized_difference", nullptr}};
    if (r.normalized_difference) row["normalized_difference"] = *r.normalized_difference;
    if (o.id()) row["id"] = *o.id();
    rows.push_back(std::move(row));
  }
  return {{"count", report.count}, {"moments", to_json(report.moments)}, {"rows", rows}};
}

std::string to_csv(const GaussianityReport& report) {
  std::ostringstream out;
  out << "id,observable,expt_mean,theor_mean,std,normalized_difference\n";
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    const Observable& o = report.set[k];
    const auto& r = report.rows[k];
    out << (o.id() ? std::to_string(*o.id()) : std::string{}) << ",\""
        << (o.label().empty() ? o.to_string() : o.label()) << "\"," << format_number(r.expt_mean) << ","
        << format_number(r.theor_mean) << "," << format_number(r.std) << ","
        << (r.normalized_difference ? format_number(*r.normalized_difference) : std::string("undefined")) << "\n";
  }
  return out.str();
}

GaussianSampler::GaussianSampler(const PatternMoments& pm, int dim) : dim_(dim) {
  if (dim < 1 || dim > 12) throw NumericalError("Gaussian sampling supports 1 <= D <= 12");
  const Eigen::MatrixXd mean = pm.mean_matrix(dim);
  mean_.resize(dim * dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) mean_[a * dim + b] = mean(a, b);

  const Eigen::MatrixXd cov = pm.full_covariance(dim);
  const double max_diag = cov.diagonal().maxCoeff();
  if (max_diag <= 0.0) {
    if (cov.cwiseAbs().maxCoeff() > 0.0) throw NumericalError("covariance has nonzero entries but zero variances");
    factor_ = Eigen::MatrixXd::Zero(dim * dim, dim * dim);
    return;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmin < -1e-8 * lmax) {
    std::ostringstream msg;
    msg << "covariance is not positive semidefinite: smallest eigenvalue " << lmin << ", largest " << lmax;
    throw NumericalError(msg.str());
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    const Eigen::MatrixXd jittered =
        cov + 1e-10 * max_diag * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    llt.compute(jittered);
  }
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
  } else {
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor_ = eig.eigenvectors() * root.asDiagonal();
  }
}

Eigen::MatrixXd GaussianSampler::draw(Rng& rng) const {
  const Eigen::Index n = mean_.size();
  Eigen::VectorXd z(n);
  for (Eigen::Index k = 0; k < n; ++k) z[k] = rng.normal();
  const Eigen::VectorXd x = mean_ + factor_ * z;
  // row-major flattening back to a matrix
  Eigen::MatrixXd m(dim_, dim_);
  for (int a = 0; a < dim_; ++a)
    for (int b = 0; b < dim_; ++b) m(a, b) = x[a * dim_ + b];
  return m;
}

MatrixEnsemble sample_ensemble(const PatternMoments& pm, int dim, std::size_t count, std::uint64_t seed) {
  const GaussianSampler sampler(pm, dim);
  Rng rng(seed);
  MatrixEnsemble ens(dim, "gaussian-sample(seed=" + std::to_string(seed) + ")");
  const int width = static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size());
  for (std::size_t k = 0; k < count; ++k) {
    std::ostringstream name;
    name << "s" << std::setw(width) << std::setfill('0') << k;
    ens.add(name.str(), sampler.draw(rng));
  }
  return ens;
}

}  // namespace pimo
