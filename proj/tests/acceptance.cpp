// Acceptance suite: prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pimo/contraction.hpp"
#include "pimo/ensemble.hpp"
#include "pimo/errors.hpp"
#include "pimo/gaussian_model.hpp"
#include "pimo/geometry.hpp"
#include "pimo/observable.hpp"
#include "pimo/partition.hpp"
#include "pimo/tasks.hpp"
#include "test_util.hpp"

using namespace pimo;
using pimo::test::rel_close;
using Clock = std::chrono::steady_clock;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
  Outcome outcome = Outcome::Pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

MatrixEnsemble random_ensemble(int d, int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  MatrixEnsemble ens(d);
  for (int k = 0; k < n; ++k) ens.add("w" + std::to_string(k), pimo::test::random_matrix(d, gen));
  return ens;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

Verdict evaluator_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1);
  double worst = 0.0;
  int failures = 0;
  for (int d : {2, 3, 4, 5}) {
    for (int k = 0; k < 50; ++k) {
      const Eigen::MatrixXd m = pimo::test::random_matrix(d, gen);
      for (const Observable& o : standard_observables()) {
        const double fast = evaluate(o, m);
        const double slow = evaluate_naive(o, m);
        const double err = std::abs(fast - slow) / std::max(1.0, std::max(std::abs(fast), std::abs(slow)));
        worst = std::max(worst, err);
        if (!rel_close(fast, slow, 1e-9)) ++failures;
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = failures == 0 && secs < 10.0;
  return {ok ? Outcome::Pass : Outcome::Fail,
          "5600 comparisons, worst rel err " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s"};
}

Verdict permutation_invariance() {
  std::mt19937_64 gen(2);
  const Eigen::MatrixXd m = pimo::test::random_matrix(6, gen);
  const SetEvaluator eval(canonical_set("28"));
  const Eigen::VectorXd base = eval(m);
  int failures = 0;
  for (int k = 0; k < 10; ++k) {
    const Eigen::MatrixXd p = pimo::test::permutation_matrix(6, gen);
    const Eigen::VectorXd v = eval(p * m * p.transpose());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!rel_close(v[i], base[i], 1e-9)) ++failures;
  }
  return {failures == 0 ? Outcome::Pass : Outcome::Fail, "10 conjugations at D=6, " + std::to_string(failures) + " mismatches"};
}

Verdict closed_form_identities() {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> dim(2, 6);
  const SetEvaluator eval(canonical_set("28"));
  int failures = 0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd v = eval(pimo::test::random_matrix(dim(gen), gen));
    auto row = [&](int id) { return v[id - 1]; };
    failures += !rel_close(row(10), row(2) * row(2), 1e-9);
    failures += !rel_close(row(23), std::pow(row(2), 4), 1e-9);
    failures += !rel_close(row(12), row(1) * row(1), 1e-9);
    failures += !rel_close(row(26), row(9) * row(9), 1e-9);
    failures += !rel_close(row(27), row(28), 1e-9);
  }
  return {failures == 0 ? Outcome::Pass : Outcome::Fail, "500 identity checks, " + std::to_string(failures) + " failures"};
}

Verdict moment_round_trip() {
  int failures = 0;
  double worst = 0.0;
  for (int d : {4, 5, 6}) {
    const auto ens = random_ensemble(d, 10, 40 + d);
    const auto stats = compute_stats(canonical_set("13"), ens);
    std::array<double, 13> means{};
    for (std::size_t k = 0; k < 13; ++k) means[k] = stats.observables[k].mean;
    const auto back = invariant_means(fit_pattern_moments(d, means));
    for (std::size_t k = 0; k < 13; ++k) {
      worst = std::max(worst, std::abs(back[k] - means[k]) / std::max(1.0, std::abs(means[k])));
      failures += !rel_close(back[k], means[k], 1e-9);
    }
  }
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<double> x(15);
  for (double& v : x) v = u(gen);
  const auto y = unrestricted_from_exact(4, exact_from_unrestricted(4, x));
  for (std::size_t p = 0; p < 15; ++p) failures += !rel_close(y[p], x[p], 1e-12);

  // Orbit count by Burnside: fixed points of the factor swap on the 15 patterns.
  int fixed = 0;
  for (const auto& p : enumerate_partitions(4)) {
    const auto& r = p.rgs;
    if (partition_of({r[2], r[3], r[0], r[1]}).key() == p.key()) ++fixed;
  }
  const int burnside = (15 + fixed) / 2;
  const auto orbits = PatternMoments::orbit_representatives().size();
  const bool ok = failures == 0 && burnside == 11 && orbits == 11;
  return {ok ? Outcome::Pass : Outcome::Fail, "worst rel err " + fmt(worst, 3) + ", orbits " + std::to_string(orbits) +
                                                  ", Burnside (15+" + std::to_string(fixed) + ")/2 = " + std::to_string(burnside)};
}

Verdict wick_oracle() {
  const auto t0 = Clock::now();
  std::vector<Observable> higher;
  for (const Observable& o : standard_observables())
    if (o.degree() >= 3) higher.push_back(o);
  const ObservableSet set{"cubic+quartic", higher};
  const SetEvaluator eval(set);
  int failures = 0;
  double worst_sigma = 0.0;
  double worst_low = 0.0;
  for (int d : {3, 5}) {
    const auto source = random_ensemble(d, 12, 500 + d);
    const auto pm = fit_pattern_moments(source);
    const auto stats = compute_stats(canonical_set("13"), source);
    for (int id = 1; id <= 13; ++id) {
      const double th = theoretical_moment(standard_observable(id), pm);
      const double ex = stats.observables[id - 1].mean;
      worst_low = std::max(worst_low, std::abs(th - ex) / std::max(1.0, std::abs(ex)));
      failures += !rel_close(th, ex, 1e-9);
    }

    constexpr std::size_t kSamples = 1000000;
    constexpr std::size_t kChunk = 20000;
    std::vector<std::vector<double>> values(set.size());
    for (auto& v : values) v.reserve(kSamples);
    for (std::size_t chunk = 0; chunk * kChunk < kSamples; ++chunk) {
      const auto sample = sample_ensemble(pm, d, kChunk, 9000 + 100 * d + chunk);
      for (const auto& m : sample.matrices()) {
        const Eigen::VectorXd v = eval(m);
        for (std::size_t k = 0; k < set.size(); ++k) values[k].push_back(v[static_cast<Eigen::Index>(k)]);
      }
    }
    for (std::size_t k = 0; k < set.size(); ++k) {
      const auto ms = mean_std(values[k]);
      const double th = theoretical_moment(set[k], pm);
      const double sigma = std::abs(ms.mean - th) / ms.standard_error();
      worst_sigma = std::max(worst_sigma, sigma);
      if (!(sigma < 4.0)) {
        ++failures;
        std::cerr << "  wick: D=" << d << " row " << *set[k].id() << " theor " << th << " mc " << ms.mean << " ("
                  << sigma << " SE)\n";
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = failures == 0 && secs < 300.0;
  return {ok ? Outcome::Pass : Outcome::Fail, "30 cubic/quartic checks, worst " + fmt(worst_sigma, 3) +
                                                  " SE; degree<=2 worst rel err " + fmt(worst_low, 3) + "; " +
                                                  fmt(secs, 3) + " s"};
}

Verdict gaussianity_self_test() {
  const auto pm = fit_pattern_moments(random_ensemble(5, 12, 77));
  const auto& set = canonical_set("15");
  auto differences = [&](std::size_t n, std::uint64_t seed) {
    const auto report = gaussianity_report(set, sample_ensemble(pm, 5, n, seed));
    std::vector<double> out;
    for (const auto& row : report.rows) out.push_back(row.normalized_difference.value_or(INFINITY));
    return out;
  };
  const auto main = differences(2000, 2024);
  const double worst = *std::max_element(main.begin(), main.end());
  const double m100 = median(differences(100, 11));
  const double m10k = median(differences(10000, 12));
  const bool ok = main.size() == 15 && worst < 0.15 && m10k < m100;
  return {ok ? Outcome::Pass : Outcome::Fail, "N=2000 max normalized difference " + fmt(worst, 3) + "; median " +
                                                  fmt(m100, 3) + " (N=100) -> " + fmt(m10k, 3) + " (N=10^4)"};
}

Verdict geometry_properties() {
  const auto ens = random_ensemble(4, 60, 8);
  const auto t = build_features(ens, canonical_set("28"), FeatureMode::DeviationExpt);
  int failures = 0;
  for (auto kind : {MetricKind::DiagonalValue, MetricKind::DiagonalDeviation, MetricKind::Mahalanobis, MetricKind::Flat}) {
    MetricSpec m;
    try {
      m = build_metric(t, kind);
    } catch (const std::exception&) {
      ++failures;
      continue;
    }
    for (Eigen::Index i = 0; i < 20; ++i) {
      const Eigen::VectorXd u = t.values.row(i).transpose();
      const auto self = cosine(u, u, m);
      failures += !(self && std::abs(*self - 1.0) < 1e-9);
      for (Eigen::Index j = 0; j < 20; ++j) {
        const Eigen::VectorXd v = t.values.row(j).transpose();
        const auto c = cosine(u, v, m);
        if (!c || !std::isfinite(*c) || std::abs(*c) > 1.0 + 1e-9) {
          ++failures;
          continue;
        }
        const auto scaled = cosine(Eigen::VectorXd(3.0 * u), Eigen::VectorXd(0.01 * v), m);
        failures += !(scaled && std::abs(*scaled - *c) < 1e-9);
      }
    }
  }

  // Exactly uncorrelated features: a two-level factorial design.
  Matrix design(16, 4);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 4; ++c) design(r, c) = (c + 1.0) * ((r >> c) & 1 ? 1.0 : -1.0);
  std::vector<std::string> words, cols{"a", "b", "c", "d"};
  for (int r = 0; r < 16; ++r) words.push_back("x" + std::to_string(r));
  const auto dt = make_feature_table(words, cols, design, FeatureMode::RawValue);
  const auto maha = build_metric(dt, MetricKind::Mahalanobis);
  const auto diag = build_metric(dt, MetricKind::DiagonalDeviation);
  double worst = 0.0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      const Eigen::VectorXd u = design.row(i).transpose(), v = design.row(j).transpose();
      worst = std::max(worst, std::abs(*cosine(u, v, maha) - *cosine(u, v, diag)));
    }
  failures += !(worst < 1e-6);
  return {failures == 0 ? Outcome::Pass : Outcome::Fail,
          "4 metrics on 28-observable deviations incl. duplicated rows 27/28; Mahalanobis vs diagonal max diff " +
              fmt(worst, 3)};
}

Verdict task_harness() {
  int failures = 0;
  failures += std::abs(divide(0.1, 0.2, 0.7, 0.2) - 0.4) > 1e-15;
  failures += std::abs(balanced_accuracy(3, 1, 1, 1) - 0.625) > 1e-15;

  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  std::vector<double> lo, mid, hi;
  for (int k = 0; k < 50; ++k) {
    lo.push_back(-0.5 + u(gen));
    mid.push_back(u(gen));
    hi.push_back(0.5 + u(gen));
  }
  const double dlh = DivideModel::fit(lo, hi).value;
  failures += classify_binary(lo, hi, dlh).balanced_accuracy().value_or(0) != 1.0;
  LabeledCosines three{{}, {}, {"ANTONYMS", "NONE", "SYNONYMS"}};
  for (int c = 0; c < 3; ++c)
    for (double x : (c == 0 ? lo : c == 1 ? mid : hi)) {
      three.cosines.push_back(x);
      three.labels.push_back(c);
    }
  failures += classify_full(three).balanced_accuracy.value_or(0) != 1.0;

  std::uniform_real_distribution<double> any(-1.0, 1.0);
  std::vector<double> r[3];
  for (int k = 0; k < 10000; ++k) r[k % 3].push_back(any(gen));
  const double chance = classify_three_way(r[0], r[1], r[2], -1.0 / 3.0, 1.0 / 3.0).balanced_accuracy().value_or(0);
  failures += std::abs(chance - 1.0 / 3.0) > 0.05;

  LabeledCosines noisy{{}, {}, {"ANTONYMS", "SYNONYMS"}};
  for (int k = 0; k < 200; ++k) {
    noisy.cosines.push_back(any(gen) + (k % 2 ? 0.2 : 0.0));
    noisy.labels.push_back(k % 2);
  }
  SplitOptions opt;
  opt.seed = 17;
  const auto s1 = split_protocol(noisy, opt);
  const auto s2 = split_protocol(noisy, opt);
  failures += s1.repetition_scores != s2.repetition_scores || to_json(s1).dump() != to_json(s2).dump();

  Matrix feats(40, 3);
  std::normal_distribution<double> g;
  std::vector<std::string> words;
  for (int i = 0; i < 40; ++i) {
    words.push_back("w" + std::to_string(i));
    for (int c = 0; c < 3; ++c) feats(i, c) = g(gen);
  }
  const auto table = make_feature_table(words, {"a", "b", "c"}, feats, FeatureMode::RawValue);
  const auto metric = build_metric(table, MetricKind::DiagonalValue);
  PairDataset p, q;
  for (int k = 0; k < 20; ++k) {
    const auto dir = k % 3 ? HyperDirection::First : HyperDirection::Second;
    const auto flip = dir == HyperDirection::First ? HyperDirection::Second : HyperDirection::First;
    p.pairs.push_back({words[2 * k], words[2 * k + 1], Relation::HyperHyponyms, 5.0, dir});
    q.pairs.push_back({words[2 * k], words[2 * k + 1], Relation::HyperHyponyms, 5.0, flip});
  }
  const auto rp = hyper_length_ratio(table, metric, p);
  const auto rq = hyper_length_ratio(table, metric, q);
  failures += rp.ties != 0 || rp.ratio + rq.ratio != 1.0;

  return {failures == 0 ? Outcome::Pass : Outcome::Fail,
          "divide, BA fixtures, separability, chance BA " + fmt(chance, 4) + ", split determinism, length flip " +
              fmt(rp.ratio, 3) + " + " + fmt(rq.ratio, 3)};
}

Verdict verb_dataset() {
  const char* root = std::getenv("PIMO_VERB_DATA");
  if (!root) return {Outcome::Skip, "set PIMO_VERB_DATA to a directory with mo/, ms/ and pairs.tsv"};
  namespace fs = std::filesystem;
  const fs::path base(root);
  const auto mo = load_ensemble((base / "mo").string());
  const auto ms = load_ensemble((base / "ms").string());
  const auto pairs = load_pairs((base / "pairs.tsv").string());
  const auto& set28 = canonical_set("28");
  std::vector<std::string> notes;
  int failures = 0;
  auto near = [&](const std::string& what, double got, double want, double tol) {
    const bool ok = std::abs(got - want) <= tol;
    failures += !ok;
    notes.push_back(what + " " + fmt(got, 4) + (ok ? "" : " (want " + fmt(want, 4) + ")"));
  };

  const auto a1 = mix(mo, ms, 1.0).ensemble;
  const auto t1 = build_features(a1, set28, FeatureMode::DeviationExpt);
  const auto diag1 = build_metric(t1, MetricKind::DiagonalDeviation);
  const auto means = relation_means(pair_cosines(t1, diag1, pairs));
  near("ANT", means.at(Relation::Antonyms).mean, 0.087, 0.001);
  near("NONE", means.at(Relation::None).mean, 0.177, 0.001);
  near("SYN", means.at(Relation::Synonyms).mean, 0.281, 0.001);

  const auto g = gaussianity_report(canonical_set("15"), a1);
  near("M_ii^3", g.rows[0].normalized_difference.value_or(NAN), 0.206, 0.002);

  const auto a05 = mix(mo, ms, 0.5).ensemble;
  const auto t05 = build_features(a05, set28, FeatureMode::DeviationExpt);
  const auto diag05 = build_metric(t05, MetricKind::DiagonalDeviation);
  const auto task = make_task(pair_cosines(t05, diag05, pairs), ClassifyMode::SynAnt);
  near("BA full", classify_full(task).balanced_accuracy.value_or(NAN), 0.587, 0.0005);
  const auto split = split_protocol(task, {});
  near("BA split", split.balanced_accuracy.value_or(NAN), 0.597, 0.007);

  near("len diag", hyper_length_ratio(t1, diag1, pairs).ratio, 0.627, 0.002);
  near("len maha", hyper_length_ratio(t1, build_metric(t1, MetricKind::Mahalanobis), pairs).ratio, 0.677, 0.002);

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {failures == 0 ? Outcome::Pass : Outcome::Fail, detail};
}

// Three clusters of identical word matrices at C + tX for t = -1, 0, 1.
// Antonyms join the outer clusters, unrelated pairs join an outer cluster to
// the small middle one, synonyms stay inside an outer cluster. Each copy uses
// its own C and X, so every mixture is again a three-cluster fixture.
struct ClusterFixture {
  MatrixEnsemble first{3};
  MatrixEnsemble second{3};
  PairDataset pairs;
};

ClusterFixture cluster_fixture() {
  ClusterFixture f;
  std::mt19937_64 gen(31);
  for (MatrixEnsemble* ens : {&f.first, &f.second}) {
    const Eigen::MatrixXd centre = pimo::test::random_matrix(3, gen);
    const Eigen::MatrixXd step = pimo::test::random_matrix(3, gen, 0.3);
    for (int k = 0; k < 100; ++k) ens->add("a" + std::to_string(k), centre - step);
    for (int k = 0; k < 40; ++k) ens->add("b" + std::to_string(k), centre);
    for (int k = 0; k < 100; ++k) ens->add("c" + std::to_string(k), centre + step);
  }
  auto add = [&](const std::string& x, const std::string& y, Relation r) {
    f.pairs.pairs.push_back({x, y, r, 5.0, HyperDirection::Unknown});
  };
  for (int k = 0; k < 40; ++k) add("a" + std::to_string(k), "c" + std::to_string(k), Relation::Antonyms);
  for (int k = 0; k < 20; ++k) {
    add("a" + std::to_string(40 + k), "b" + std::to_string(k), Relation::None);
    add("b" + std::to_string(20 + k), "c" + std::to_string(40 + k), Relation::None);
    add("a" + std::to_string(60 + 2 * k), "a" + std::to_string(61 + 2 * k), Relation::Synonyms);
    add("c" + std::to_string(60 + 2 * k), "c" + std::to_string(61 + 2 * k), Relation::Synonyms);
  }
  return f;
}

Verdict ordering_regression() {
  const auto f = cluster_fixture();
  // Whitened cluster points have Gram matrix diag(1/w) - 1 for cluster weights w.
  const double r_outer = 240.0 / 100.0 - 1.0, r_middle = 240.0 / 40.0 - 1.0;
  const double maha_ant = -1.0 / r_outer, maha_none = -1.0 / std::sqrt(r_outer * r_middle);
  int failures = 0, cells = 0;
  double maha_err = 0.0;
  std::string first_failure;
  for (double a : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    const auto ens = mix(f.first, f.second, a).ensemble;
    const auto t = build_features(ens, canonical_set("28"), FeatureMode::DeviationExpt);
    for (auto kind : {MetricKind::DiagonalValue, MetricKind::DiagonalDeviation, MetricKind::Mahalanobis, MetricKind::Flat}) {
      ++cells;
      const auto means = relation_means(pair_cosines(t, build_metric(t, kind), f.pairs));
      const auto o = ordering_check(means);
      if (!(o.antonym_none_synonym && *o.antonym_none_synonym)) {
        ++failures;
        if (first_failure.empty()) first_failure = ", first failure a=" + fmt(a) + " metric " + to_string(kind);
      }
      if (kind == MetricKind::Mahalanobis) {
        maha_err = std::max({maha_err, std::abs(means.at(Relation::Antonyms).mean - maha_ant),
                             std::abs(means.at(Relation::None).mean - maha_none),
                             std::abs(means.at(Relation::Synonyms).mean - 1.0)});
      }
    }
  }
  if (!(maha_err < 1e-6)) ++failures;
  return {failures == 0 ? Outcome::Pass : Outcome::Fail,
          std::to_string(cells) + " cells (5 mixtures x 4 metrics), Mahalanobis means vs closed form max err " +
              fmt(maha_err, 3) + first_failure};
}
}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"evaluator-correctness", evaluator_correctness},
      {"permutation-invariance", permutation_invariance},
      {"closed-form-identities", closed_form_identities},
      {"pattern-moment-round-trip", moment_round_trip},
      {"gaussian-moment-oracle", wick_oracle},
      {"gaussianity-self-test", gaussianity_self_test},
      {"geometry-properties", geometry_properties},
      {"task-harness", task_harness},
      {"verb-dataset-reproduction", verb_dataset},
      {"ordering-regression", ordering_regression},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& ex) {
      v = {Outcome::Fail, std::string("exception: ") + ex.what()};
    }
    const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL" : "SKIP";
    std::printf("%s  %2d %-28s %s\n", tag, index, name.c_str(), v.detail.c_str());
    std::fflush(stdout);
    if (v.outcome == Outcome::Fail) ++failed;
  }
  std::printf("%d failing\n", failed);
  return failed == 0 ? 0 : 1;
}
