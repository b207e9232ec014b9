#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pimo/errors.hpp"
#include "pimo/numeric.hpp"
#include "pimo/observable.hpp"

namespace pimo {

/// Summing out one node: the node and the other nodes it shares factors with
/// at that point of the elimination (sorted ascending).
struct EliminationStep {
  int node = 0;
  std::vector<int> neighbors;

  int cost_exponent() const { return static_cast<int>(neighbors.size()) + 1; }
};

struct ComponentPlan {
  Observable graph;
  std::vector<EliminationStep> steps;
  /// Some step would create a factor of arity > 2; evaluated by brute force.
  bool requires_naive = false;
};

/// Connected components with a min-degree elimination order for each. The
/// observable value is the product of the component values.
struct ContractionPlan {
  std::vector<ComponentPlan> components;

  /// Largest power of D among the elimination steps.
  int max_cost_exponent() const;
  /// Upper bound on multiply-adds at dimension d, including factor setup.
  double cost_estimate(int d) const;
  bool requires_naive() const;
};

ContractionPlan plan(const Observable& obs);

namespace detail {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Scalar naive_sum(const std::vector<Edge>& edges, int node_count, const DenseMatrix<Scalar>& m,
                 std::vector<int>& assignment, int level) {
  const int d = static_cast<int>(m.rows());
  std::vector<Scalar> terms(static_cast<std::size_t>(d));
  for (int x = 0; x < d; ++x) {
    assignment[level] = x;
    if (level + 1 == node_count) {
      Scalar prod{1};
      for (const Edge& e : edges) prod *= m(assignment[e.source], assignment[e.target]);
      terms[x] = prod;
    } else {
      terms[x] = naive_sum(edges, node_count, m, assignment, level + 1);
    }
  }
  return pairwise_sum(std::span<const Scalar>(terms));
}

template <typename Scalar>
Scalar evaluate_component(const ComponentPlan& cp, const DenseMatrix<Scalar>& m) {
  const Observable& g = cp.graph;
  if (cp.requires_naive) {
    std::vector<int> assignment(g.node_count(), 0);
    return naive_sum(g.edges(), g.node_count(), m, assignment, 0);
  }
  const Eigen::Index d = m.rows();
  const int n = g.node_count();
  std::vector<DenseVector<Scalar>> unary(n);
  std::map<std::pair<int, int>, DenseMatrix<Scalar>> binary;  // key (u, w), u < w; rows index u

  auto mul_unary = [&](int v, const DenseVector<Scalar>& f) {
    if (unary[v].size() == 0) {
      unary[v] = f;
    } else {
      unary[v].array() *= f.array();
    }
  };
  auto mul_binary = [&](int u, int w, DenseMatrix<Scalar> f) {
    auto it = binary.find({u, w});
    if (it == binary.end()) {
      binary.emplace(std::make_pair(u, w), std::move(f));
    } else {
      it->second.array() *= f.array();
    }
  };
  // Factor between v and u with rows indexed by v.
  auto oriented = [&](int v, int u) -> DenseMatrix<Scalar> {
    if (v < u) return binary.at({v, u});
    return binary.at({u, v}).transpose();
  };

  for (const Edge& e : g.edges()) {
    if (e.source == e.target) {
      mul_unary(e.source, m.diagonal());
    } else if (e.source < e.target) {
      mul_binary(e.source, e.target, m);
    } else {
      mul_binary(e.target, e.source, m.transpose());
    }
  }

  Scalar value{1};
  for (const EliminationStep& step : cp.steps) {
    const int v = step.node;
    DenseVector<Scalar> f = unary[v].size() == 0 ? DenseVector<Scalar>::Ones(d) : unary[v];
    if (step.neighbors.empty()) {
      value *= f.sum();
    } else if (step.neighbors.size() == 1) {
      const int u = step.neighbors[0];
      DenseVector<Scalar> r = oriented(v, u).transpose() * f;
      mul_unary(u, r);
    } else {
      const int u = step.neighbors[0];
      const int w = step.neighbors[1];
      DenseMatrix<Scalar> a = oriented(v, u);
      DenseMatrix<Scalar> b = oriented(v, w);
      DenseMatrix<Scalar> r = a.transpose() * (f.asDiagonal() * b);
      mul_binary(u, w, std::move(r));
    }
    for (int u : step.neighbors) binary.erase(v < u ? std::make_pair(v, u) : std::make_pair(u, v));
  }
  return value;
}

}  // namespace detail

/// Brute-force sum over all D^nodes index assignments. Reference oracle;
/// practical for D <= 8.
template <typename Derived>
typename Derived::Scalar evaluate_naive(const Observable& obs, const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw NumericalError("observable evaluation needs a square matrix");
  if (m.rows() < 1) throw NumericalError("observable evaluation needs D >= 1");
  const detail::DenseMatrix<Scalar> mm = m;
  std::vector<int> assignment(obs.node_count(), 0);
  return detail::naive_sum(obs.edges(), obs.node_count(), mm, assignment, 0);
}

template <typename Derived>
typename Derived::Scalar evaluate(const ContractionPlan& p, const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw NumericalError("observable evaluation needs a square matrix");
  if (m.rows() < 1) throw NumericalError("observable evaluation needs D >= 1");
  const detail::DenseMatrix<Scalar> mm = m;
  Scalar value{1};
  for (const ComponentPlan& cp : p.components) value *= detail::evaluate_component(cp, mm);
  return value;
}

template <typename Derived>
typename Derived::Scalar evaluate(const Observable& obs, const Eigen::MatrixBase<Derived>& m) {
  return evaluate(plan(obs), m);
}

/// Evaluates a whole observable set, sharing connected components that
/// occur in several observables (keyed by canonical graph).
class SetEvaluator {
 public:
  explicit SetEvaluator(ObservableSet set);

  const ObservableSet& set() const { return set_; }
  std::size_t size() const { return set_.size(); }

  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> operator()(const Eigen::MatrixBase<Derived>& m) const {
    using Scalar = typename Derived::Scalar;
    if (m.rows() != m.cols()) throw NumericalError("observable evaluation needs a square matrix");
    const detail::DenseMatrix<Scalar> mm = m;
    std::vector<Scalar> component_values(unique_.size());
    for (std::size_t c = 0; c < unique_.size(); ++c) component_values[c] = detail::evaluate_component(unique_[c], mm);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(static_cast<Eigen::Index>(set_.size()));
    for (std::size_t k = 0; k < set_.size(); ++k) {
      Scalar v{1};
      for (std::size_t c : uses_[k]) v *= component_values[c];
      out[static_cast<Eigen::Index>(k)] = v;
    }
    return out;
  }

  std::size_t unique_component_count() const { return unique_.size(); }

 private:
  ObservableSet set_;
  std::vector<ComponentPlan> unique_;
  std::vector<std::vector<std::size_t>> uses_;
};

Eigen::VectorXd evaluate_all(const ObservableSet& set, const Eigen::MatrixXd& m);

}  // namespace pimo
