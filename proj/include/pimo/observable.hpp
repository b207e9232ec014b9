#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pimo {

/// A directed edge (source, target); contributes the factor M(source, target).
struct Edge {
  int source = 0;
  int target = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Directed multigraph encoding a permutation invariant matrix observable.
/// Nodes are summed indices, edges are matrix factors. Self-loops and
/// repeated edges are allowed.
class Observable {
 public:
  Observable() = default;
  /// Throws IngestionError on out-of-range ids, isolated nodes or no edges.
  Observable(int node_count, std::vector<Edge> edges, std::optional<int> id = std::nullopt,
             std::string label = {});

  int node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int degree() const { return static_cast<int>(edges_.size()); }
  std::optional<int> id() const { return id_; }
  const std::string& label() const { return label_; }

  /// Edge list after relabelling nodes to the lexicographically smallest
  /// sorted edge list. Two observables are the same polynomial iff their
  /// canonical edge lists (and node counts) agree.
  const std::vector<Edge>& canonical_edges() const { return canonical_; }
  std::uint64_t canonical_hash() const;
  bool same_graph(const Observable& other) const {
    return node_count_ == other.node_count_ && canonical_ == other.canonical_;
  }

  /// Connected components as standalone observables (nodes renumbered).
  std::vector<Observable> components() const;

  /// "M_{ij}M_{jk}" style rendering with indices i, j, k, ...
  std::string to_string() const;

 private:
  int node_count_ = 0;
  std::vector<Edge> edges_;
  std::optional<int> id_;
  std::string label_;
  std::vector<Edge> canonical_;
};

struct ObservableSet {
  std::string name;
  std::vector<Observable> observables;

  std::size_t size() const { return observables.size(); }
  const Observable& operator[](std::size_t i) const { return observables[i]; }
  auto begin() const { return observables.begin(); }
  auto end() const { return observables.end(); }
};

/// Rows 1..28 of the standard observable table, in order.
const std::vector<Observable>& standard_observables();

/// Row `id` (1-based) of the standard table.
const Observable& standard_observable(int id);

/// Named subsets: "13" rows 1-13, "10" rows 14-23, "15" rows 14-28,
/// "23" rows 1-23, "28" rows 1-28. Throws FlagError for other names.
ObservableSet canonical_set(std::string_view name);

/// Pairs (i, j) with i < j whose graphs coincide up to relabelling.
std::vector<std::pair<std::size_t, std::size_t>> duplicate_graphs(const ObservableSet& set);

nlohmann::json to_json(const Observable& obs);
Observable observable_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ObservableSet& set);
ObservableSet observable_set_from_json(const nlohmann::json& j, std::string name = "custom");
ObservableSet load_observable_set(const std::string& path);

}  // namespace pimo
