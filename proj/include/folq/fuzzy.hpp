#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "folq/common.hpp"

namespace folq {

/// Fuzzy set over the entity universe: one membership probability per entity.
struct FuzzySet {
  std::vector<double> values;

  FuzzySet() = default;
  explicit FuzzySet(size_t size, double fill = 0.0) : values(size, fill) {}
  explicit FuzzySet(std::vector<double> v) : values(std::move(v)) {}
  FuzzySet(std::initializer_list<double> v) : values(v) {}

  size_t size() const { return values.size(); }
  double operator[](size_t i) const { return values[i]; }
  double& operator[](size_t i) { return values[i]; }

  bool operator==(const FuzzySet& other) const = default;

  static FuzzySet zeros(size_t size) { return FuzzySet(size, 0.0); }
  static FuzzySet ones(size_t size) { return FuzzySet(size, 1.0); }
};

/// {entity} as a fuzzy set of the given universe size.
FuzzySet singleton(EntityId entity, size_t size);

/// Product-logic AND: elementwise x*y.
FuzzySet conj(const FuzzySet& x, const FuzzySet& y);

/// Product-logic OR: elementwise x + y - x*y, clamped into [0,1].
FuzzySet disj(const FuzzySet& x, const FuzzySet& y);

/// Complement: elementwise 1 - x.
FuzzySet neg(const FuzzySet& x);

enum class CardinalityMode {
  /// Sum the probabilities strictly above the threshold, round half up.
  kSumRounded,
  /// Count the entries strictly above the threshold.
  kCount,
};

long long cardinality(const FuzzySet& x, double threshold,
                      CardinalityMode mode = CardinalityMode::kSumRounded);

/// Up to k entries with probability strictly above min_prob, sorted by
/// descending probability, ties by ascending entity id.
std::vector<std::pair<EntityId, double>> top_k(const FuzzySet& x, size_t k,
                                               double min_prob);

}  // namespace folq
