#include "pimo/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "pimo/errors.hpp"
#include "pimo/numeric.hpp"
#include "pimo/rng.hpp"

namespace pimo {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string to_string(Relation r) {
  switch (r) {
    case Relation::Synonyms: return "SYNONYMS";
    case Relation::Antonyms: return "ANTONYMS";
    case Relation::None: return "NONE";
    case Relation::HyperHyponyms: return "HYPER_HYPONYMS";
    case Relation::Cohyponyms: return "COHYPONYMS";
  }
  return "?";
}

Relation parse_relation(const std::string& s) {
  for (Relation r : {Relation::Synonyms, Relation::Antonyms, Relation::None, Relation::HyperHyponyms,
                     Relation::Cohyponyms}) {
    if (s == to_string(r)) return r;
  }
  throw IngestionError("unknown relation label '" + s + "'");
}

PairDataset load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open pairs file " + path);
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(path + ": empty pairs file");
  const auto header = split_tabs(line);
  const std::vector<std::string> expected = {"word1", "word2", "relation", "score", "hyper_direction"};
  if (header != expected) {
    throw IngestionError(path + ": header must be word1\\tword2\\trelation\\tscore\\thyper_direction");
  }
  PairDataset ds;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_tabs(line);
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    if (f.size() != 5) throw IngestionError(where + "expected 5 tab-separated fields");
    WordPair p;
    p.word1 = f[0];
    p.word2 = f[1];
    try {
      p.relation = parse_relation(f[2]);
    } catch (const IngestionError& ex) {
      throw IngestionError(where + ex.what());
    }
    try {
      std::size_t used = 0;
      p.score = std::stod(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument(f[3]);
    } catch (const std::exception&) {
      throw IngestionError(where + "non-numeric score '" + f[3] + "'");
    }
    if (!(p.score >= 0.0 && p.score <= 10.0)) throw IngestionError(where + "score outside [0, 10]");
    if (f[4] == "1") {
      p.hyper = HyperDirection::First;
    } else if (f[4] == "2") {
      p.hyper = HyperDirection::Second;
    } else if (f[4] == "-" || f[4] == "UNKNOWN" || f[4].empty()) {
      p.hyper = HyperDirection::Unknown;
    } else {
      throw IngestionError(where + "hyper_direction must be 1, 2, UNKNOWN or -");
    }
    ds.pairs.push_back(std::move(p));
  }
  return ds;
}

CosineGroups pair_cosines(const FeatureTable& features, const MetricSpec& metric, const PairDataset& pairs) {
  CosineGroups g;
  for (const WordPair& p : pairs.pairs) {
    const auto a = features.find(p.word1);
    const auto b = features.find(p.word2);
    if (!a || !b) {
      ++g.skipped_missing;
      continue;
    }
    const auto c = cosine(features.values.row(*a).transpose(), features.values.row(*b).transpose(), metric);
    if (!c) {
      ++g.skipped_zero_norm;
      continue;
    }
    g.by_relation[p.relation].push_back(*c);
  }
  return g;
}

std::map<Relation, RelationMean> relation_means(const CosineGroups& groups) {
  std::map<Relation, RelationMean> out;
  for (const auto& [rel, xs] : groups.by_relation) {
    if (xs.empty()) continue;
    const MeanStd ms = mean_std(xs);
    out[rel] = {ms.mean, ms.std, ms.standard_error(), xs.size()};
  }
  return out;
}

OrderingResult ordering_check(const std::map<Relation, RelationMean>& means) {
  OrderingResult r;
  auto has = [&](Relation x) { return means.count(x) != 0; };
  if (has(Relation::Antonyms) && has(Relation::None) && has(Relation::Synonyms)) {
    r.antonym_none_synonym = means.at(Relation::Antonyms).mean < means.at(Relation::None).mean &&
                             means.at(Relation::None).mean < means.at(Relation::Synonyms).mean;
  }
  if (has(Relation::HyperHyponyms) && has(Relation::Cohyponyms)) {
    r.hyper_cohypo = means.at(Relation::HyperHyponyms).mean < means.at(Relation::Cohyponyms).mean;
  }
  return r;
}

double divide(double mean_lo, double sd_lo, double mean_hi, double sd_hi) {
  if (sd_hi == 0.0) return mean_hi;
  return mean_lo + (4.0 / std::numbers::pi) * std::atan(sd_lo / sd_hi) * (mean_hi - mean_lo) / 2.0;
}

DivideModel DivideModel::fit(const std::vector<double>& lo, const std::vector<double>& hi) {
  if (lo.empty() || hi.empty()) throw DegenerateDataError("divide needs both classes nonempty");
  const MeanStd a = mean_std(lo);
  const MeanStd b = mean_std(hi);
  return {a.mean, a.std, b.mean, b.std, divide(a.mean, a.std, b.mean, b.std)};
}

std::vector<double> LabeledCosines::of_class(int c) const {
  std::vector<double> out;
  for (std::size_t k = 0; k < cosines.size(); ++k)
    if (labels[k] == c) out.push_back(cosines[k]);
  return out;
}

ClassifyMode parse_classify_mode(const std::string& s) {
  if (s == "syn-ant") return ClassifyMode::SynAnt;
  if (s == "syn-ant-none") return ClassifyMode::SynAntNone;
  if (s == "syn-vs-rest") return ClassifyMode::SynVsRest;
  if (s == "hyper-cohypo") return ClassifyMode::HyperCohypo;
  throw FlagError("unknown classification mode '" + s + "'");
}

std::string to_string(ClassifyMode mode) {
  switch (mode) {
    case ClassifyMode::SynAnt: return "syn-ant";
    case ClassifyMode::SynAntNone: return "syn-ant-none";
    case ClassifyMode::SynVsRest: return "syn-vs-rest";
    case ClassifyMode::HyperCohypo: return "hyper-cohypo";
  }
  return "?";
}

LabeledCosines make_task(const CosineGroups& groups, ClassifyMode mode) {
  std::vector<std::vector<Relation>> classes;
  LabeledCosines out;
  switch (mode) {
    case ClassifyMode::SynAnt:
      classes = {{Relation::Antonyms}, {Relation::Synonyms}};
      out.class_names = {"ANTONYMS", "SYNONYMS"};
      break;
    case ClassifyMode::SynAntNone:
      classes = {{Relation::Antonyms}, {Relation::None}, {Relation::Synonyms}};
      out.class_names = {"ANTONYMS", "NONE", "SYNONYMS"};
      break;
    case ClassifyMode::SynVsRest:
      classes = {{Relation::Antonyms, Relation::None}, {Relation::Synonyms}};
      out.class_names = {"ANTONYMS+NONE", "SYNONYMS"};
      break;
    case ClassifyMode::HyperCohypo:
      classes = {{Relation::HyperHyponyms}, {Relation::Cohyponyms}};
      out.class_names = {"HYPER_HYPONYMS", "COHYPONYMS"};
      break;
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::size_t n = 0;
    for (Relation r : classes[c]) {
      auto it = groups.by_relation.find(r);
      if (it == groups.by_relation.end()) continue;
      for (double x : it->second) {
        out.cosines.push_back(x);
        out.labels.push_back(static_cast<int>(c));
        ++n;
      }
    }
    if (n == 0) throw DegenerateDataError("class " + out.class_names[c] + " has no usable pairs");
  }
  return out;
}

std::optional<double> Confusion::true_rate(int c) const {
  const int total = counts.row(c).sum();
  if (total == 0) return std::nullopt;
  return static_cast<double>(counts(c, c)) / total;
}

std::optional<double> Confusion::balanced_accuracy() const {
  double acc = 0.0;
  for (int c = 0; c < classes(); ++c) {
    const auto r = true_rate(c);
    if (!r) return std::nullopt;
    acc += *r;
  }
  return acc / classes();
}

double balanced_accuracy(int tp, int fn, int tn, int fp) {
  const double tpr = static_cast<double>(tp) / (tp + fn);
  const double tnr = static_cast<double>(tn) / (tn + fp);
  return 0.5 * (tpr + tnr);
}

int classify(double cosine, const std::vector<double>& divides) {
  int c = 0;
  for (double d : divides)
    if (cosine >= d) ++c;
  return c;
}

std::vector<DivideModel> fit_divides(const LabeledCosines& data) {
  std::vector<DivideModel> out;
  for (int c = 0; c + 1 < data.classes(); ++c) out.push_back(DivideModel::fit(data.of_class(c), data.of_class(c + 1)));
  for (std::size_t k = 1; k < out.size(); ++k) {
    if (out[k].value < out[k - 1].value) {
      std::ostringstream msg;
      msg << "crossed divides: " << out[k - 1].value << " > " << out[k].value;
      throw DegenerateDataError(msg.str());
    }
  }
  return out;
}

Confusion evaluate_divides(const LabeledCosines& data, const std::vector<double>& divides) {
  for (std::size_t k = 1; k < divides.size(); ++k)
    if (divides[k] < divides[k - 1]) throw DegenerateDataError("crossed divides");
  Confusion conf{Eigen::MatrixXi::Zero(data.classes(), data.classes())};
  for (std::size_t k = 0; k < data.cosines.size(); ++k) ++conf.counts(data.labels[k], classify(data.cosines[k], divides));
  return conf;
}

ClassReport classify_full(const LabeledCosines& data) {
  ClassReport r;
  r.class_names = data.class_names;
  r.protocol = "full";
  r.divides = fit_divides(data);
  std::vector<double> values;
  for (const auto& d : r.divides) values.push_back(d.value);
  r.confusion = evaluate_divides(data, values);
  r.balanced_accuracy = r.confusion.balanced_accuracy();
  return r;
}

ClassReport split_protocol(const LabeledCosines& data, const SplitOptions& options) {
  if (!(options.frac > 0.0 && options.frac <= 1.0)) throw FlagError("--frac must lie in (0, 1]");
  if (options.reps < 1) throw FlagError("--reps must be positive");
  const int k = data.classes();
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < data.labels.size(); ++i) members[data.labels[i]].push_back(i);

  ClassReport r;
  r.class_names = data.class_names;
  r.protocol = "split";
  r.split = options;
  const Rng root(options.seed);
  constexpr int kMaxRetries = 100;

  for (int rep = 0; rep < options.reps; ++rep) {
    std::vector<char> in_train;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
      Rng rng = root.split(static_cast<std::uint64_t>(rep) * kMaxRetries + attempt);
      in_train.assign(data.cosines.size(), 0);
      if (options.stratify) {
        for (int c = 0; c < k; ++c) {
          std::vector<std::size_t> idx = members[c];
          std::shuffle(idx.begin(), idx.end(), rng.engine());
          auto n_train = static_cast<std::size_t>(std::llround(options.frac * static_cast<double>(idx.size())));
          if (options.frac < 1.0) n_train = std::clamp<std::size_t>(n_train, 1, idx.size() > 1 ? idx.size() - 1 : 1);
          for (std::size_t q = 0; q < n_train; ++q) in_train[idx[q]] = 1;
        }
      } else {
        std::vector<std::size_t> idx(data.cosines.size());
        for (std::size_t q = 0; q < idx.size(); ++q) idx[q] = q;
        std::shuffle(idx.begin(), idx.end(), rng.engine());
        const auto n_train = static_cast<std::size_t>(std::llround(options.frac * static_cast<double>(idx.size())));
        for (std::size_t q = 0; q < n_train; ++q) in_train[idx[q]] = 1;
      }
      ok = true;
      for (int c = 0; c < k && ok; ++c) {
        std::size_t tr = 0;
        for (std::size_t i : members[c]) tr += in_train[i];
        if (tr == 0) ok = false;
        if (options.frac < 1.0 && tr == members[c].size()) ok = false;
      }
    }
    if (!ok) throw DegenerateDataError("split protocol could not draw nonempty classes in both splits");

    LabeledCosines train{{}, {}, data.class_names}, test{{}, {}, data.class_names};
    for (std::size_t i = 0; i < data.cosines.size(); ++i) {
      LabeledCosines& dst = in_train[i] ? train : test;
      dst.cosines.push_back(data.cosines[i]);
      dst.labels.push_back(data.labels[i]);
    }
    // frac = 1 leaves no held-out pairs; score on the training set itself.
    if (test.cosines.empty()) test = train;
    std::vector<double> divides;
    for (const auto& d : fit_divides(train)) divides.push_back(d.value);
    const auto ba = evaluate_divides(test, divides).balanced_accuracy();
    if (!ba) throw DegenerateDataError("empty class in held-out split");
    r.repetition_scores.push_back(*ba);
  }
  const MeanStd ms = mean_std(r.repetition_scores);
  r.balanced_accuracy = ms.mean;
  r.standard_error = ms.standard_error();
  return r;
}

Confusion classify_binary(const std::vector<double>& lo, const std::vector<double>& hi, double divide_value) {
  LabeledCosines d{{}, {}, {"low", "high"}};
  for (double x : lo) d.cosines.push_back(x), d.labels.push_back(0);
  for (double x : hi) d.cosines.push_back(x), d.labels.push_back(1);
  return evaluate_divides(d, {divide_value});
}

Confusion classify_three_way(const std::vector<double>& antonyms, const std::vector<double>& none,
                             const std::vector<double>& synonyms, double divide_an, double divide_ns) {
  if (divide_an > divide_ns) throw DegenerateDataError("crossed divides: D_AN > D_NS");
  LabeledCosines d{{}, {}, {"ANTONYMS", "NONE", "SYNONYMS"}};
  for (double x : antonyms) d.cosines.push_back(x), d.labels.push_back(0);
  for (double x : none) d.cosines.push_back(x), d.labels.push_back(1);
  for (double x : synonyms) d.cosines.push_back(x), d.labels.push_back(2);
  return evaluate_divides(d, {divide_an, divide_ns});
}

LengthRatio hyper_length_ratio(const FeatureTable& features, const MetricSpec& metric, const PairDataset& pairs) {
  LengthRatio r;
  for (const WordPair& p : pairs.pairs) {
    if (p.relation != Relation::HyperHyponyms) continue;
    if (p.hyper == HyperDirection::Unknown) {
      ++r.skipped;
      continue;
    }
    const std::string& hyper = p.hyper == HyperDirection::First ? p.word1 : p.word2;
    const std::string& hypo = p.hyper == HyperDirection::First ? p.word2 : p.word1;
    const auto a = features.find(hyper);
    const auto b = features.find(hypo);
    if (!a || !b) {
      ++r.skipped;
      continue;
    }
    const double la = norm(features.values.row(*a).transpose(), metric);
    const double lb = norm(features.values.row(*b).transpose(), metric);
    ++r.pairs;
    if (la > lb) ++r.hyper_longer;
    if (la == lb) ++r.ties;
  }
  if (r.pairs == 0) throw DegenerateDataError("no directed hyper/hyponym pairs with feature rows");
  r.ratio = static_cast<double>(r.hyper_longer) / static_cast<double>(r.pairs);
  return r;
}

Histogram cosine_histogram(const CosineGroups& groups, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw FlagError("histogram needs at least one bin over a nonempty range");
  Histogram h{lo, hi, {}};
  for (const auto& [rel, xs] : groups.by_relation) {
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double x : xs) {
      auto b = static_cast<long>(std::floor((x - lo) / (hi - lo) * bins));
      b = std::clamp<long>(b, 0, bins - 1);
      counts[static_cast<std::size_t>(b)] += 1.0;
    }
    if (!xs.empty())
      for (double& c : counts) c /= static_cast<double>(xs.size());
    h.normalized_counts[rel] = std::move(counts);
  }
  return h;
}

std::string to_csv(const Histogram& h) {
  std::ostringstream out;
  out << std::setprecision(10) << "relation,bin_left,bin_right,normalized_count\n";
  for (const auto& [rel, counts] : h.normalized_counts) {
    const double width = (h.hi - h.lo) / static_cast<double>(counts.size());
    for (std::size_t b = 0; b < counts.size(); ++b) {
      out << to_string(rel) << "," << h.lo + width * b << "," << h.lo + width * (b + 1) << "," << counts[b] << "\n";
    }
  }
  return out.str();
}

namespace {

BaselineTable baseline(const std::string& name, const FeatureTable& t, MetricKind kind, const PairDataset& pairs) {
  const MetricSpec m = build_metric(t, kind);
  const CosineGroups g = pair_cosines(t, m, pairs);
  BaselineTable b{name, relation_means(g), {}, g.skipped()};
  b.ordering = ordering_check(b.means);
  return b;
}

}  // namespace

std::vector<BaselineTable> run_baselines(const MatrixEnsemble* ens, const WordVectors* vectors,
                                         const PairDataset& pairs) {
  if (!ens && !vectors) throw FlagError("baselines need an ensemble, word vectors, or both");
  std::vector<BaselineTable> out;
  if (ens) {
    out.push_back(baseline("matrix-flat", flatten_matrix_features(*ens, FeatureMode::RawValue), MetricKind::Flat, pairs));
    out.push_back(baseline("matrix-deviation", flatten_matrix_features(*ens, FeatureMode::DeviationExpt),
                           MetricKind::DiagonalDeviation, pairs));
  }
  if (vectors) {
    for (auto [name, subset] : {std::pair{"word2vec-invariants-set1", InvariantSubset::Set1},
                                std::pair{"word2vec-invariants-set2", InvariantSubset::Set2},
                                std::pair{"word2vec-invariants-set3", InvariantSubset::Set3}}) {
      out.push_back(baseline(name, vector_invariant_features(*vectors, subset, FeatureMode::DeviationExpt),
                             MetricKind::DiagonalDeviation, pairs));
    }
    out.push_back(baseline("word2vec-plain", word_vector_features(*vectors, FeatureMode::RawValue), MetricKind::Flat, pairs));
    out.push_back(baseline("word2vec-deviation", word_vector_features(*vectors, FeatureMode::DeviationExpt),
                           MetricKind::DiagonalDeviation, pairs));
  }
  return out;
}

nlohmann::json to_json(const std::map<Relation, RelationMean>& means) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [rel, m] : means) {
    j[to_string(rel)] = {{"mean", m.mean}, {"std", m.std}, {"standard_error", m.standard_error}, {"count", m.count}};
  }
  return j;
}

nlohmann::json to_json(const OrderingResult& o) {
  nlohmann::json j = {{"antonym_none_synonym", nullptr}, {"hyper_cohypo", nullptr}, {"pass", o.pass()}};
  if (o.antonym_none_synonym) j["antonym_none_synonym"] = *o.antonym_none_synonym;
  if (o.hyper_cohypo) j["hyper_cohypo"] = *o.hyper_cohypo;
  return j;
}

nlohmann::json to_json(const ClassReport& r) {
  nlohmann::json j = {{"classes", r.class_names},
                      {"protocol", r.protocol},
                      {"balanced_accuracy", nullptr},
                      {"skipped_pairs", r.skipped_pairs}};
  if (r.balanced_accuracy) j["balanced_accuracy"] = *r.balanced_accuracy;
  if (r.protocol == "full") {
    nlohmann::json divides = nlohmann::json::array();
    for (const auto& d : r.divides) {
      divides.push_back({{"mean_lo", d.mean_lo}, {"sd_lo", d.sd_lo}, {"mean_hi", d.mean_hi}, {"sd_hi", d.sd_hi},
                         {"divide", d.value}});
    }
    j["divides"] = divides;
    nlohmann::json counts = nlohmann::json::array();
    nlohmann::json rates = nlohmann::json::array();
    for (int a = 0; a < r.confusion.classes(); ++a) {
      std::vector<int> row;
      for (int p = 0; p < r.confusion.classes(); ++p) row.push_back(r.confusion.counts(a, p));
      counts.push_back(row);
      const auto tr = r.confusion.true_rate(a);
      rates.push_back(tr ? nlohmann::json(*tr) : nlohmann::json(nullptr));
    }
    j["confusion"] = counts;
    j["true_rates"] = rates;
  } else {
    j["standard_error"] = r.standard_error;
    j["repetition_scores"] = r.repetition_scores;
    j["frac"] = r.split.frac;
    j["reps"] = r.split.reps;
    j["seed"] = r.split.seed;
    j["stratify"] = r.split.stratify;
  }
  return j;
}

nlohmann::json to_json(const LengthRatio& r) {
  return {{"ratio", r.ratio}, {"pairs", r.pairs}, {"hyper_longer", r.hyper_longer}, {"ties", r.ties},
          {"skipped", r.skipped}};
}

}  // namespace pimo
