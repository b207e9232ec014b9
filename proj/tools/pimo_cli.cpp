#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pimo/contraction.hpp"
#include "pimo/ensemble.hpp"
#include "pimo/errors.hpp"
#include "pimo/gaussian_model.hpp"
#include "pimo/geometry.hpp"
#include "pimo/observable.hpp"
#include "pimo/tasks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pimo;

namespace {

struct RunConfig {
  std::string command;
  std::string ensemble;
  std::string mo;
  std::string ms;
  std::vector<double> a;
  std::string set;
  std::string deviation = "expt";
  std::string metric = "diag";
  std::string pairs;
  std::string vectors;
  double frac = 0.65;
  int reps = 20;
  std::uint64_t seed = 0;
  std::string stratify = "on";
  std::string out;
  std::string format = "json";
  int hist_bins = 0;
  std::string mode = "syn-ant";
  std::string protocol = "full";
  std::string moments;
  std::size_t count = 100;
  int dim = 0;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

json config_echo(const RunConfig& c) {
  json j = {{"command", c.command}};
  if (!c.ensemble.empty()) j["ensemble"] = c.ensemble;
  if (!c.mo.empty()) j["mo"] = c.mo;
  if (!c.ms.empty()) j["ms"] = c.ms;
  if (!c.a.empty()) j["a"] = c.a;
  if (!c.set.empty()) j["set"] = c.set;
  j["deviation"] = c.deviation;
  j["metric"] = c.metric;
  if (!c.pairs.empty()) j["pairs"] = c.pairs;
  if (!c.vectors.empty()) j["vectors"] = c.vectors;
  j["frac"] = c.frac;
  j["reps"] = c.reps;
  j["stratify"] = c.stratify;
  j["format"] = c.format;
  j["hist_bins"] = c.hist_bins;
  if (c.command == "classify") {
    j["mode"] = c.mode;
    j["protocol"] = c.protocol;
  }
  if (c.command == "sample") {
    j["count"] = c.count;
    j["dim"] = c.dim;
    if (!c.moments.empty()) j["moments"] = c.moments;
  }
  return j;
}

json envelope(const RunConfig& c) {
  return {{"tool", "pimo"}, {"version", PIMO_VERSION}, {"config", config_echo(c)}, {"seed", c.seed}};
}

void emit(const RunConfig& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw IngestionError("cannot write output file " + c.out);
  f << text;
}

void emit_json(const RunConfig& c, const json& j) { emit(c, j.dump(2) + "\n"); }

void require_readable(const std::string& path, const char* what) {
  if (!path.empty() && !fs::exists(path)) throw IngestionError(std::string(what) + " not found: " + path);
}

bool stratify_flag(const std::string& s) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  throw FlagError("--stratify must be on or off");
}

// Flag consistency first, then input paths, before any work starts.
void validate(const RunConfig& c, bool needs_matrices, bool multi_a) {
  if (c.format != "json" && c.format != "csv") throw FlagError("--format must be json or csv");
  parse_feature_mode(c.deviation);
  parse_metric_kind(c.metric);
  stratify_flag(c.stratify);
  for (double a : c.a)
    if (!(a >= 0.0 && a <= 1.0)) throw FlagError("--a must lie in [0, 1], got " + num(a));
  if (!multi_a && c.a.size() > 1) throw FlagError("--a takes a single value for " + c.command);
  const bool single = !c.ensemble.empty();
  const bool mixed = !c.mo.empty() || !c.ms.empty();
  if (single && mixed) throw FlagError("use either --ensemble or --mo/--ms, not both");
  if (mixed && (c.mo.empty() || c.ms.empty())) throw FlagError("--mo and --ms must be given together");
  if (mixed && c.a.empty()) throw FlagError("--mo/--ms need a mixing weight --a");
  if (single && !c.a.empty()) throw FlagError("--a needs --mo and --ms");
  if (needs_matrices && !single && !mixed) throw FlagError(c.command + " needs --ensemble or --mo/--ms");
  if (c.hist_bins < 0) throw FlagError("--hist-bins must be non-negative");
  require_readable(c.ensemble, "ensemble directory");
  require_readable(c.mo, "ensemble directory");
  require_readable(c.ms, "ensemble directory");
  require_readable(c.pairs, "pairs file");
  require_readable(c.vectors, "word-vector file");
}

struct Variant {
  std::optional<double> a;
  MatrixEnsemble ensemble;
  std::size_t dropped_words = 0;
};

std::vector<Variant> load_variants(const RunConfig& c) {
  std::vector<Variant> out;
  if (!c.ensemble.empty()) {
    out.push_back({std::nullopt, load_ensemble(c.ensemble), 0});
    return out;
  }
  const MatrixEnsemble mo = load_ensemble(c.mo);
  const MatrixEnsemble ms = load_ensemble(c.ms);
  for (double a : c.a) {
    MixResult m = mix(mo, ms, a);
    out.push_back({a, std::move(m.ensemble), m.dropped});
  }
  return out;
}

ObservableSet select_set(const std::string& s, const std::string& fallback) {
  const std::string name = s.empty() ? fallback : s;
  if (!name.empty() && name.find_first_not_of("0123456789") == std::string::npos) return canonical_set(name);
  return load_observable_set(name);
}

json a_value(const std::optional<double>& a) { return a ? json(*a) : json(nullptr); }

std::string a_cell(const std::optional<double>& a) { return a ? num(*a) : std::string{}; }

FeatureTable features_for(const RunConfig& c, const MatrixEnsemble& ens, const ObservableSet& set) {
  const FeatureMode mode = parse_feature_mode(c.deviation);
  if (mode == FeatureMode::DeviationTheor) {
    const PatternMoments pm = fit_pattern_moments(ens);
    return build_features(ens, set, mode, &pm);
  }
  return build_features(ens, set, mode);
}

json skipped_json(const CosineGroups& g) {
  return {{"missing_word", g.skipped_missing}, {"zero_norm", g.skipped_zero_norm}, {"total", g.skipped()}};
}

int cmd_gaussianity(const RunConfig& c) {
  validate(c, true, true);
  const ObservableSet set = select_set(c.set, "15");
  json results = json::array();
  std::ostringstream csv;
  bool header = false;
  for (const Variant& v : load_variants(c)) {
    const GaussianityReport r = gaussianity_report(set, v.ensemble);
    std::vector<std::string> undefined;
    for (std::size_t k = 0; k < r.rows.size(); ++k)
      if (!r.rows[k].normalized_difference) undefined.push_back(set[k].label().empty() ? set[k].to_string() : set[k].label());
    results.push_back({{"a", a_value(v.a)},
                       {"words", v.ensemble.size()},
                       {"dropped_words", v.dropped_words},
                       {"skipped_pairs", 0},
                       {"dropped_observables", undefined},
                       {"report", to_json(r)}});
    std::istringstream lines(to_csv(r));
    std::string line;
    std::getline(lines, line);
    if (!header) {
      csv << "a," << line << "\n";
      header = true;
    }
    while (std::getline(lines, line)) csv << a_cell(v.a) << "," << line << "\n";
  }
  if (c.format == "csv") {
    emit(c, csv.str());
  } else {
    json j = envelope(c);
    j["results"] = results;
    emit_json(c, j);
  }
  return 0;
}

int cmd_features(const RunConfig& c) {
  validate(c, true, false);
  const ObservableSet set = select_set(c.set, "28");
  const Variant v = std::move(load_variants(c).front());
  const FeatureTable t = features_for(c, v.ensemble, set);
  const MetricSpec m = build_metric(t, parse_metric_kind(c.metric));
  if (c.format == "csv") {
    emit(c, to_csv(t));
    return 0;
  }
  json j = envelope(c);
  j["a"] = a_value(v.a);
  j["dropped_words"] = v.dropped_words;
  j["skipped_pairs"] = 0;
  j["dropped_observables"] = m.dropped_columns;
  j["metric_scales"] = std::vector<double>(m.scales.data(), m.scales.data() + m.scales.size());
  j["features"] = to_json(t);
  emit_json(c, j);
  return 0;
}

int cmd_relation_means(const RunConfig& c) {
  validate(c, true, true);
  if (c.pairs.empty()) throw FlagError("relation-means needs --pairs");
  const ObservableSet set = select_set(c.set, "28");
  const PairDataset pairs = load_pairs(c.pairs);
  json results = json::array();
  std::ostringstream csv, hist_csv;
  csv << "a,relation,mean,std,standard_error,count\n";
  hist_csv << "a,relation,bin_left,bin_right,normalized_count\n";
  for (const Variant& v : load_variants(c)) {
    const FeatureTable t = features_for(c, v.ensemble, set);
    const MetricSpec m = build_metric(t, parse_metric_kind(c.metric));
    const CosineGroups g = pair_cosines(t, m, pairs);
    const auto means = relation_means(g);
    json r = {{"a", a_value(v.a)},
              {"words", v.ensemble.size()},
              {"dropped_words", v.dropped_words},
              {"skipped_pairs", skipped_json(g)},
              {"dropped_observables", m.dropped_columns},
              {"means", to_json(means)},
              {"ordering", to_json(ordering_check(means))}};
    for (const auto& [rel, rm] : means) {
      csv << a_cell(v.a) << "," << to_string(rel) << "," << num(rm.mean) << "," << num(rm.std) << ","
          << num(rm.standard_error) << "," << rm.count << "\n";
    }
    if (c.hist_bins > 0) {
      const Histogram h = cosine_histogram(g, c.hist_bins);
      json hj = {{"bins", c.hist_bins}, {"lo", h.lo}, {"hi", h.hi}, {"normalized_counts", json::object()}};
      for (const auto& [rel, counts] : h.normalized_counts) hj["normalized_counts"][to_string(rel)] = counts;
      r["histogram"] = hj;
      std::istringstream lines(to_csv(h));
      std::string line;
      std::getline(lines, line);
      while (std::getline(lines, line)) hist_csv << a_cell(v.a) << "," << line << "\n";
    }
    results.push_back(std::move(r));
  }
  if (c.format == "csv") {
    if (c.hist_bins > 0 && !c.out.empty()) {
      std::ofstream f(c.out + ".hist.csv", std::ios::binary);
      if (!f) throw IngestionError("cannot write output file " + c.out + ".hist.csv");
      f << hist_csv.str();
      emit(c, csv.str());
    } else if (c.hist_bins > 0) {
      emit(c, csv.str() + "\n" + hist_csv.str());
    } else {
      emit(c, csv.str());
    }
    return 0;
  }
  json j = envelope(c);
  j["results"] = results;
  emit_json(c, j);
  return 0;
}

int cmd_classify(const RunConfig& c) {
  validate(c, true, false);
  if (c.pairs.empty()) throw FlagError("classify needs --pairs");
  const ClassifyMode mode = parse_classify_mode(c.mode);
  if (c.protocol != "full" && c.protocol != "split") throw FlagError("--protocol must be full or split");
  SplitOptions split{c.frac, c.reps, c.seed, stratify_flag(c.stratify)};
  if (c.protocol == "split" && !(split.frac > 0.0 && split.frac <= 1.0)) throw FlagError("--frac must lie in (0, 1]");
  if (c.protocol == "split" && split.reps < 1) throw FlagError("--reps must be positive");
  const ObservableSet set = select_set(c.set, "28");
  const PairDataset pairs = load_pairs(c.pairs);
  const Variant v = std::move(load_variants(c).front());
  const FeatureTable t = features_for(c, v.ensemble, set);
  const MetricSpec m = build_metric(t, parse_metric_kind(c.metric));
  const CosineGroups g = pair_cosines(t, m, pairs);
  const LabeledCosines data = make_task(g, mode);
  ClassReport r = c.protocol == "full" ? classify_full(data) : split_protocol(data, split);
  r.skipped_pairs = g.skipped();

  if (c.format == "csv") {
    std::ostringstream csv;
    csv << "key,value\n";
    csv << "balanced_accuracy," << (r.balanced_accuracy ? num(*r.balanced_accuracy) : "undefined") << "\n";
    if (r.protocol == "split") {
      csv << "standard_error," << num(r.standard_error) << "\n";
    } else {
      for (std::size_t k = 0; k < r.divides.size(); ++k) csv << "divide_" << k << "," << num(r.divides[k].value) << "\n";
      for (int k = 0; k < r.confusion.classes(); ++k) {
        const auto tr = r.confusion.true_rate(k);
        csv << "true_rate_" << r.class_names[static_cast<std::size_t>(k)] << "," << (tr ? num(*tr) : "undefined") << "\n";
      }
    }
    csv << "skipped_pairs," << r.skipped_pairs << "\n";
    emit(c, csv.str());
    return 0;
  }
  json j = envelope(c);
  j["a"] = a_value(v.a);
  j["dropped_words"] = v.dropped_words;
  j["skipped_pairs"] = skipped_json(g);
  j["dropped_observables"] = m.dropped_columns;
  j["report"] = to_json(r);
  emit_json(c, j);
  return 0;
}

int cmd_hyper_length(const RunConfig& c) {
  validate(c, true, false);
  if (c.pairs.empty()) throw FlagError("hyper-length needs --pairs");
  const ObservableSet set = select_set(c.set, "28");
  const PairDataset pairs = load_pairs(c.pairs);
  const Variant v = std::move(load_variants(c).front());
  const FeatureTable t = features_for(c, v.ensemble, set);
  const MetricSpec m = build_metric(t, parse_metric_kind(c.metric));
  const LengthRatio r = hyper_length_ratio(t, m, pairs);
  if (c.format == "csv") {
    std::ostringstream csv;
    csv << "ratio,pairs,hyper_longer,ties,skipped\n"
        << num(r.ratio) << "," << r.pairs << "," << r.hyper_longer << "," << r.ties << "," << r.skipped << "\n";
    emit(c, csv.str());
    return 0;
  }
  json j = envelope(c);
  j["a"] = a_value(v.a);
  j["dropped_words"] = v.dropped_words;
  j["skipped_pairs"] = r.skipped;
  j["dropped_observables"] = m.dropped_columns;
  j["report"] = to_json(r);
  emit_json(c, j);
  return 0;
}

int cmd_baselines(const RunConfig& c) {
  validate(c, false, false);
  if (c.pairs.empty()) throw FlagError("baselines needs --pairs");
  if (c.ensemble.empty() && c.mo.empty() && c.vectors.empty())
    throw FlagError("baselines need --ensemble, --mo/--ms or --vectors");
  const PairDataset pairs = load_pairs(c.pairs);
  std::optional<Variant> v;
  if (!c.ensemble.empty() || !c.mo.empty()) v = std::move(load_variants(c).front());
  std::optional<WordVectors> wv;
  if (!c.vectors.empty()) wv = load_word_vectors(c.vectors);
  const auto tables = run_baselines(v ? &v->ensemble : nullptr, wv ? &*wv : nullptr, pairs);

  if (c.format == "csv") {
    std::ostringstream csv;
    csv << "baseline,relation,mean,std,standard_error,count,ordering_pass\n";
    for (const auto& t : tables)
      for (const auto& [rel, rm] : t.means)
        csv << t.name << "," << to_string(rel) << "," << num(rm.mean) << "," << num(rm.std) << ","
            << num(rm.standard_error) << "," << rm.count << "," << (t.ordering.pass() ? "true" : "false") << "\n";
    emit(c, csv.str());
    return 0;
  }
  json arr = json::array();
  for (const auto& t : tables) {
    arr.push_back({{"name", t.name},
                   {"skipped_pairs", t.skipped_pairs},
                   {"means", to_json(t.means)},
                   {"ordering", to_json(t.ordering)}});
  }
  json j = envelope(c);
  j["a"] = v ? a_value(v->a) : json(nullptr);
  j["dropped_words"] = v ? v->dropped_words : 0;
  j["dropped_observables"] = json::array();
  j["baselines"] = arr;
  emit_json(c, j);
  return 0;
}

int cmd_sample(const RunConfig& c) {
  validate(c, false, false);
  if (c.out.empty()) throw FlagError("sample needs --out <directory>");
  if (c.count < 1) throw FlagError("--count must be positive");
  PatternMoments pm;
  std::optional<Variant> v;
  if (!c.moments.empty()) {
    if (!c.ensemble.empty() || !c.mo.empty()) throw FlagError("use either --moments or an ensemble, not both");
    require_readable(c.moments, "moments file");
    std::ifstream in(c.moments);
    json mj;
    try {
      in >> mj;
    } catch (const json::exception& ex) {
      throw IngestionError(c.moments + ": " + ex.what());
    }
    pm = pattern_moments_from_json(mj);
  } else {
    if (c.ensemble.empty() && c.mo.empty()) throw FlagError("sample needs --moments, --ensemble or --mo/--ms");
    v = std::move(load_variants(c).front());
    pm = fit_pattern_moments(v->ensemble);
  }
  const int dim = c.dim > 0 ? c.dim : pm.dim();
  const MatrixEnsemble sample = sample_ensemble(pm, dim, c.count, c.seed);
  write_ensemble(sample, c.out);
  json j = envelope(c);
  j["a"] = v ? a_value(v->a) : json(nullptr);
  j["dropped_words"] = v ? v->dropped_words : 0;
  j["skipped_pairs"] = 0;
  j["dropped_observables"] = json::array();
  j["dim"] = dim;
  j["count"] = sample.size();
  j["moments"] = to_json(pm);
  const std::string text = j.dump(2) + "\n";
  std::ofstream f(fs::path(c.out) / "sample.json", std::ios::binary);
  f << text;
  std::cout << text;
  return 0;
}

int cmd_dump_observables(const RunConfig& c) {
  if (c.format != "json" && c.format != "csv") throw FlagError("--format must be json or csv");
  const ObservableSet set = select_set(c.set, "28");
  if (c.format == "csv") {
    std::ostringstream csv;
    csv << "id,label,nodes,edges\n";
    for (const Observable& o : set) {
      std::string edges;
      for (const Edge& e : o.edges()) edges += (edges.empty() ? "" : ";") + std::to_string(e.source) + ">" + std::to_string(e.target);
      csv << (o.id() ? std::to_string(*o.id()) : "") << "," << csv_quote(o.label()) << "," << o.node_count() << ","
          << edges << "\n";
    }
    emit(c, csv.str());
    return 0;
  }
  json j = envelope(c);
  j["set"] = set.name;
  j["observables"] = to_json(set);
  emit_json(c, j);
  return 0;
}

void add_input_flags(CLI::App* sub, RunConfig& c, bool multi_a) {
  sub->add_option("--ensemble", c.ensemble, "Ensemble directory (manifest.json + <word>.csv)");
  sub->add_option("--mo", c.mo, "First ensemble to mix");
  sub->add_option("--ms", c.ms, "Second ensemble to mix");
  auto* a = sub->add_option("--a", c.a, multi_a ? "Mixing weights a in [0,1]" : "Mixing weight a in [0,1]");
  if (multi_a) a->delimiter(',');
}

void add_geometry_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("--set", c.set, "Observable set: 13, 10, 15, 23, 28 or a JSON file");
  sub->add_option("--deviation", c.deviation, "Feature mode: raw, expt or theor");
  sub->add_option("--metric", c.metric, "Metric: diag, maha, flat or value");
}

void add_output_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("--out", c.out, "Output file (default stdout)");
  sub->add_option("--format", c.format, "json or csv");
  sub->add_option("--seed", c.seed, "RNG seed");
}

int run(int argc, char** argv) {
  RunConfig c;
  CLI::App app{"Permutation invariant matrix observables toolkit"};
  app.set_version_flag("--version", PIMO_VERSION);
  app.require_subcommand(1);

  auto* g = app.add_subcommand("gaussianity", "Compare cubic/quartic moments with the Gaussian model");
  add_input_flags(g, c, true);
  g->add_option("--set", c.set, "Observable set (default 15)");
  add_output_flags(g, c);

  auto* f = app.add_subcommand("features", "Per-word observable features");
  add_input_flags(f, c, false);
  add_geometry_flags(f, c);
  add_output_flags(f, c);

  auto* rm = app.add_subcommand("relation-means", "Mean cosine per lexical relation");
  add_input_flags(rm, c, true);
  add_geometry_flags(rm, c);
  rm->add_option("--pairs", c.pairs, "Word-pair TSV");
  rm->add_option("--hist-bins", c.hist_bins, "Cosine histogram bins (0 = none)");
  add_output_flags(rm, c);

  auto* cl = app.add_subcommand("classify", "Divide-based relation classification");
  add_input_flags(cl, c, false);
  add_geometry_flags(cl, c);
  cl->add_option("--pairs", c.pairs, "Word-pair TSV");
  cl->add_option("--mode", c.mode, "syn-ant, syn-ant-none, syn-vs-rest or hyper-cohypo");
  cl->add_option("--protocol", c.protocol, "full or split");
  cl->add_option("--frac", c.frac, "Training fraction for the split protocol");
  cl->add_option("--reps", c.reps, "Split repetitions");
  cl->add_option("--stratify", c.stratify, "on or off");
  add_output_flags(cl, c);

  auto* hl = app.add_subcommand("hyper-length", "Fraction of hypernyms longer than their hyponyms");
  add_input_flags(hl, c, false);
  add_geometry_flags(hl, c);
  hl->add_option("--pairs", c.pairs, "Word-pair TSV");
  add_output_flags(hl, c);

  auto* bl = app.add_subcommand("baselines", "Relation means for flattened-matrix and word-vector baselines");
  add_input_flags(bl, c, false);
  bl->add_option("--vectors", c.vectors, "Word-vector text file");
  bl->add_option("--pairs", c.pairs, "Word-pair TSV");
  add_output_flags(bl, c);

  auto* sa = app.add_subcommand("sample", "Draw a synthetic ensemble from the fitted Gaussian model");
  add_input_flags(sa, c, false);
  sa->add_option("--moments", c.moments, "Pattern-moment JSON instead of an ensemble");
  sa->add_option("--count", c.count, "Number of matrices");
  sa->add_option("--dim", c.dim, "Matrix dimension (default: fitted dimension)");
  sa->add_option("--out", c.out, "Output ensemble directory")->required();
  sa->add_option("--seed", c.seed, "RNG seed");

  auto* d = app.add_subcommand("dump-observables", "Print observable graphs as JSON");
  d->add_option("--set", c.set, "Observable set (default 28)");
  d->add_option("--out", c.out, "Output file (default stdout)");
  d->add_option("--format", c.format, "json or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::Flag);
  }

  c.command = app.get_subcommands().front()->get_name();
  if (c.command == "gaussianity") return cmd_gaussianity(c);
  if (c.command == "features") return cmd_features(c);
  if (c.command == "relation-means") return cmd_relation_means(c);
  if (c.command == "classify") return cmd_classify(c);
  if (c.command == "hyper-length") return cmd_hyper_length(c);
  if (c.command == "baselines") return cmd_baselines(c);
  if (c.command == "sample") return cmd_sample(c);
  return cmd_dump_observables(c);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pimo::Error& e) {
    std::cerr << "pimo: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "pimo: internal error: " << e.what() << "\n";
    return 1;
  }
}
