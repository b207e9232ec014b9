#include "pimo/observable.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "pimo/errors.hpp"

namespace pimo {
namespace {

using Signature = std::vector<int>;

// Per-node invariant used to restrict the relabelling search: degree counts
// plus the sorted degree counts of in/out neighbours (one refinement round).
std::vector<Signature> node_signatures(int n, const std::vector<Edge>& edges) {
  std::vector<int> out(n, 0), in(n, 0), loops(n, 0);
  for (const Edge& e : edges) {
    if (e.source == e.target) {
      ++loops[e.source];
    } else {
      ++out[e.source];
      ++in[e.target];
    }
  }
  std::vector<Signature> sig(n);
  for (int v = 0; v < n; ++v) {
    std::vector<int> succ, pred;
    for (const Edge& e : edges) {
      if (e.source == e.target) continue;
      if (e.source == v) succ.push_back(out[e.target] * 4096 + in[e.target] * 64 + loops[e.target]);
      if (e.target == v) pred.push_back(out[e.source] * 4096 + in[e.source] * 64 + loops[e.source]);
    }
    std::sort(succ.begin(), succ.end());
    std::sort(pred.begin(), pred.end());
    sig[v] = {out[v], in[v], loops[v]};
    sig[v].insert(sig[v].end(), succ.begin(), succ.end());
    sig[v].push_back(-1);
    sig[v].insert(sig[v].end(), pred.begin(), pred.end());
  }
  return sig;
}

std::vector<Edge> relabel(const std::vector<Edge>& edges, const std::vector<int>& label) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (const Edge& e : edges) out.push_back({label[e.source], label[e.target]});
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> canonicalize(int n, const std::vector<Edge>& edges) {
  const auto sig = node_signatures(n, edges);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sig[a] < sig[b]; });

  // Groups of equal signature occupy contiguous label ranges; search all
  // permutations inside each group.
  std::vector<std::pair<int, int>> groups;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && sig[order[j]] == sig[order[i]]) ++j;
    groups.emplace_back(i, j);
    i = j;
  }

  std::vector<Edge> best;
  bool have_best = false;
  std::vector<int> perm = order;  // perm[position] = original node
  std::vector<int> label(n);

  std::function<void(std::size_t)> search = [&](std::size_t g) {
    if (g == groups.size()) {
      for (int p = 0; p < n; ++p) label[perm[p]] = p;
      auto candidate = relabel(edges, label);
      if (!have_best || candidate < best) {
        best = std::move(candidate);
        have_best = true;
      }
      return;
    }
    auto [lo, hi] = groups[g];
    std::sort(perm.begin() + lo, perm.begin() + hi);
    do {
      search(g + 1);
    } while (std::next_permutation(perm.begin() + lo, perm.begin() + hi));
  };
  search(0);
  return best;
}

std::string index_name(int v) {
  static const char* kNames[] = {"i", "j", "k", "l", "m", "n", "o", "p", "q", "r", "s", "t"};
  if (v < 12) return kNames[v];
  return "i" + std::to_string(v);
}

}  // namespace

Observable::Observable(int node_count, std::vector<Edge> edges, std::optional<int> id, std::string label)
    : node_count_(node_count), edges_(std::move(edges)), id_(id), label_(std::move(label)) {
  if (node_count_ < 1) throw IngestionError("observable must have at least one node");
  if (edges_.empty()) throw IngestionError("observable must have at least one edge");
  std::vector<int> touched(node_count_, 0);
  for (const Edge& e : edges_) {
    if (e.source < 0 || e.source >= node_count_ || e.target < 0 || e.target >= node_count_) {
      throw IngestionError("edge (" + std::to_string(e.source) + "," + std::to_string(e.target) +
                           ") references a node outside 0.." + std::to_string(node_count_ - 1));
    }
    touched[e.source] = touched[e.target] = 1;
  }
  for (int v = 0; v < node_count_; ++v) {
    if (!touched[v]) throw IngestionError("node " + std::to_string(v) + " is isolated");
  }
  canonical_ = canonicalize(node_count_, edges_);
}

std::uint64_t Observable::canonical_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t x) {
    h ^= x;
    h *= 1099511628211ULL;
  };
  mix(static_cast<std::uint64_t>(node_count_));
  for (const Edge& e : canonical_) {
    mix(static_cast<std::uint64_t>(e.source));
    mix(static_cast<std::uint64_t>(e.target) + 0x100);
  }
  return h;
}

std::vector<Observable> Observable::components() const {
  std::vector<int> parent(node_count_);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); };
  for (const Edge& e : edges_) parent[find(e.source)] = find(e.target);

  std::map<int, std::vector<int>> members;  // root -> nodes, ordered by smallest node
  std::vector<int> root_order;
  for (int v = 0; v < node_count_; ++v) {
    const int r = find(v);
    if (!members.count(r)) root_order.push_back(r);
    members[r].push_back(v);
  }
  std::vector<Observable> out;
  for (int r : root_order) {
    std::vector<int> local(node_count_, -1);
    const auto& nodes = members[r];
    for (std::size_t k = 0; k < nodes.size(); ++k) local[nodes[k]] = static_cast<int>(k);
    std::vector<Edge> es;
    for (const Edge& e : edges_) {
      if (find(e.source) == r) es.push_back({local[e.source], local[e.target]});
    }
    out.emplace_back(static_cast<int>(nodes.size()), std::move(es));
  }
  return out;
}

std::string Observable::to_string() const {
  std::string s;
  for (const Edge& e : edges_) s += "M_{" + index_name(e.source) + index_name(e.target) + "}";
  return s;
}

const std::vector<Observable>& standard_observables() {
  static const std::vector<Observable> table = [] {
    struct Row {
      int nodes;
      std::vector<Edge> edges;
      const char* label;
    };
    const std::vector<Row> rows = {
        {1, {{0, 0}}, "M_{ii}"},
        {2, {{0, 1}}, "M_{ij}"},
        {2, {{0, 1}, {0, 1}}, "M_{ij}M_{ij}"},
        {2, {{0, 1}, {1, 0}}, "M_{ij}M_{ji}"},
        {2, {{0, 0}, {0, 1}}, "M_{ii}M_{ij}"},
        {2, {{0, 0}, {1, 0}}, "M_{ii}M_{ji}"},
        {3, {{0, 1}, {0, 2}}, "M_{ij}M_{ik}"},
        {3, {{0, 1}, {2, 1}}, "M_{ij}M_{kj}"},
        {3, {{0, 1}, {1, 2}}, "M_{ij}M_{jk}"},
        {4, {{0, 1}, {2, 3}}, "M_{ij}M_{kl}"},
        {1, {{0, 0}, {0, 0}}, "M^2_{ii}"},
        {2, {{0, 0}, {1, 1}}, "M_{ii}M_{jj}"},
        {3, {{0, 0}, {1, 2}}, "M_{ii}M_{jk}"},
        {1, {{0, 0}, {0, 0}, {0, 0}}, "M^3_{ii}"},
        {2, {{0, 1}, {0, 1}, {0, 1}}, "M^3_{ij}"},
        {3, {{0, 1}, {1, 2}, {2, 0}}, "M_{ij}M_{jk}M_{ki}"},
        {3, {{0, 1}, {1, 1}, {1, 2}}, "M_{ij}M_{jj}M_{jk}"},
        {4, {{0, 1}, {2, 2}, {3, 3}}, "M_{ij}M_{kk}M_{ll}"},
        {4, {{0, 1}, {1, 2}, {3, 3}}, "M_{ij}M_{jk}M_{ll}"},
        {5, {{0, 1}, {2, 3}, {4, 4}}, "M_{ij}M_{kl}M_{mm}"},
        {6, {{0, 1}, {2, 3}, {4, 5}}, "M_{ij}M_{kl}M_{mn}"},
        {7, {{0, 1}, {2, 3}, {4, 5}, {6, 6}}, "M_{ij}M_{kl}M_{mn}M_{oo}"},
        {8, {{0, 1}, {2, 3}, {4, 5}, {6, 7}}, "M_{ij}M_{kl}M_{mn}M_{op}"},
        {1, {{0, 0}, {0, 0}, {0, 0}, {0, 0}}, "M^4_{ii}"},
        {2, {{0, 1}, {0, 1}, {0, 1}, {0, 1}}, "M^4_{ij}"},
        {6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}}, "M_{ij}M_{jk}M_{pq}M_{qr}"},
        {4, {{0, 1}, {1, 2}, {2, 3}}, "M_{ij}M_{jk}M_{kl}"},
        {4, {{0, 1}, {1, 2}, {2, 3}}, "M_{jk}M_{kl}M_{lm}"},
    };
    std::vector<Observable> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.emplace_back(rows[r].nodes, rows[r].edges, static_cast<int>(r + 1), rows[r].label);
    }
    return out;
  }();
  return table;
}

const Observable& standard_observable(int id) {
  if (id < 1 || id > 28) throw FlagError("standard observable id must be in 1..28, got " + std::to_string(id));
  return standard_observables()[static_cast<std::size_t>(id - 1)];
}

ObservableSet canonical_set(std::string_view name) {
  int first = 0, last = 0;
  if (name == "13") {
    first = 1, last = 13;
  } else if (name == "10") {
    first = 14, last = 23;
  } else if (name == "15") {
    first = 14, last = 28;
  } else if (name == "23") {
    first = 1, last = 23;
  } else if (name == "28") {
    first = 1, last = 28;
  } else {
    throw FlagError("unknown observable set '" + std::string(name) + "' (expected 13, 10, 15, 23 or 28)");
  }
  ObservableSet set{std::string(name), {}};
  for (int id = first; id <= last; ++id) set.observables.push_back(standard_observable(id));
  return set;
}

std::vector<std::pair<std::size_t, std::size_t>> duplicate_graphs(const ObservableSet& set) {
  std::vector<std::pair<std::size_t, std::size_t>> dups;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      if (set[i].same_graph(set[j])) dups.emplace_back(i, j);
    }
  }
  return dups;
}

nlohmann::json to_json(const Observable& obs) {
  nlohmann::json j;
  j["nodes"] = obs.node_count();
  auto edges = nlohmann::json::array();
  for (const Edge& e : obs.edges()) edges.push_back({e.source, e.target});
  j["edges"] = std::move(edges);
  if (obs.id()) j["id"] = *obs.id();
  if (!obs.label().empty()) j["label"] = obs.label();
  return j;
}

Observable observable_from_json(const nlohmann::json& j) {
  try {
    const int nodes = j.at("nodes").get<int>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw IngestionError("edge must be a [source, target] pair");
      edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    std::optional<int> id;
    if (j.contains("id") && !j["id"].is_null()) id = j["id"].get<int>();
    return Observable(nodes, std::move(edges), id, j.value("label", std::string{}));
  } catch (const nlohmann::json::exception& ex) {
    throw IngestionError(std::string("malformed observable JSON: ") + ex.what());
  }
}

nlohmann::json to_json(const ObservableSet& set) {
  auto arr = nlohmann::json::array();
  for (const Observable& o : set) arr.push_back(to_json(o));
  return arr;
}

ObservableSet observable_set_from_json(const nlohmann::json& j, std::string name) {
  ObservableSet set{std::move(name), {}};
  const nlohmann::json& arr = j.is_object() && j.contains("observables") ? j["observables"] : j;
  if (!arr.is_array() || arr.empty()) throw IngestionError("observable set must be a non-empty JSON array");
  for (const auto& o : arr) set.observables.push_back(observable_from_json(o));
  return set;
}

ObservableSet load_observable_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open observable file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw IngestionError(path + ": " + ex.what());
  }
  return observable_set_from_json(j, "custom");
}

}  // namespace pimo
