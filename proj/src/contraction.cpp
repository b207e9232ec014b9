#include "pimo/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pimo {
namespace {

ComponentPlan plan_component(const Observable& component) {
  const int n = component.node_count();
  std::vector<std::set<int>> adj(n);
  for (const Edge& e : component.edges()) {
    if (e.source == e.target) continue;
    adj[e.source].insert(e.target);
    adj[e.target].insert(e.source);
  }
  ComponentPlan cp{component, {}, false};
  std::vector<bool> alive(n, true);
  for (int round = 0; round < n; ++round) {
    int best = -1;
    for (int v = 0; v < n; ++v) {
      if (!alive[v]) continue;
      if (best < 0 || adj[v].size() < adj[best].size()) best = v;
    }
    EliminationStep step{best, std::vector<int>(adj[best].begin(), adj[best].end())};
    if (step.neighbors.size() > 2) cp.requires_naive = true;
    for (int u : step.neighbors) {
      adj[u].erase(best);
      for (int w : step.neighbors) {
        if (w != u) adj[u].insert(w);
      }
    }
    adj[best].clear();
    alive[best] = false;
    cp.steps.push_back(std::move(step));
  }
  return cp;
}

}  // namespace

int ContractionPlan::max_cost_exponent() const {
  int e = 2;
  for (const auto& c : components) {
    if (c.requires_naive) e = std::max(e, c.graph.node_count());
    for (const auto& s : c.steps) e = std::max(e, s.cost_exponent());
  }
  return e;
}

double ContractionPlan::cost_estimate(int d) const {
  const double dd = d;
  double cost = 0.0;
  for (const auto& c : components) {
    if (c.requires_naive) {
      cost += std::pow(dd, c.graph.node_count()) * c.graph.degree();
      continue;
    }
    cost += dd * dd * c.graph.degree();
    for (const auto& s : c.steps) cost += std::pow(dd, s.cost_exponent());
  }
  return cost;
}

bool ContractionPlan::requires_naive() const {
  return std::any_of(components.begin(), components.end(), [](const auto& c) { return c.requires_naive; });
}

ContractionPlan plan(const Observable& obs) {
  ContractionPlan p;
  for (const Observable& c : obs.components()) p.components.push_back(plan_component(c));
  return p;
}

SetEvaluator::SetEvaluator(ObservableSet set) : set_(std::move(set)) {
  std::vector<Observable> seen;
  for (const Observable& obs : set_) {
    std::vector<std::size_t> uses;
    for (const Observable& c : obs.components()) {
      auto it = std::find_if(seen.begin(), seen.end(), [&](const Observable& s) { return s.same_graph(c); });
      if (it == seen.end()) {
        seen.push_back(c);
        unique_.push_back(plan_component(c));
        uses.push_back(unique_.size() - 1);
      } else {
        uses.push_back(static_cast<std::size_t>(it - seen.begin()));
      }
    }
    uses_.push_back(std::move(uses));
  }
}

Eigen::VectorXd evaluate_all(const ObservableSet& set, const Eigen::MatrixXd& m) { return SetEvaluator(set)(m); }

}  // namespace pimo
