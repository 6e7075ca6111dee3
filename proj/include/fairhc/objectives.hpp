#pragma once

#include <optional>
#include <span>

#include "fairhc/hierarchy.hpp"
#include "fairhc/instance.hpp"

namespace fairhc {

struct ObjectiveValue {
  ObjectiveKind kind = ObjectiveKind::revenue;
  double value = 0.0;
  std::optional<double> upper_bound;
};

// Σ over unordered pairs of s(i,j)·(m(V) − m(leaves(T[i∨j])))
ObjectiveValue revenue(const Instance& inst, const Hierarchy& tree);
// Σ over unordered pairs of d(i,j)·m(leaves(T[i∨j]))
ObjectiveValue value(const Instance& inst, const Hierarchy& tree);
// Σ over unordered pairs of s(i,j)·|leaves(T[i∨j])|, leaf count unweighted
ObjectiveValue cost(const Instance& inst, const Hierarchy& tree);
ObjectiveValue evaluate(ObjectiveKind kind, const Instance& inst, const Hierarchy& tree);

// (m(V) − min pair weight)·s(V)
double revenue_upper_bound(const Instance& inst);
// m(V)·d(V)
double value_upper_bound(const Instance& inst);

// Σ over parts of the intra-part unordered pair distances
double fairlet_phi(const Instance& inst, std::span<const PointSet> parts);

struct BestTree {
  Hierarchy tree;
  ObjectiveValue objective;
};

inline constexpr std::size_t kBruteForceLimit = 8;

// Exhaustive search over every binary leaf-labelled tree; n <= 8.
BestTree brute_force_best(const Instance& inst, ObjectiveKind kind);

}  // namespace fairhc
