#include "folq/fuzzy.hpp"

#include <algorithm>
#include <cmath>

namespace folq {

namespace {

void require_same_size(const FuzzySet& x, const FuzzySet& y, const char* op) {
  if (x.size() != y.size()) {
    raise(op, ": fuzzy-set length mismatch (", x.size(), " vs ", y.size(),
          ")");
  }
}

}  // namespace

FuzzySet singleton(EntityId entity, size_t size) {
  if (entity < 0 || static_cast<size_t>(entity) >= size) {
    raise("singleton: entity id ", entity, " out of range [0, ", size, ")");
  }
  FuzzySet s(size, 0.0);
  s[static_cast<size_t>(entity)] = 1.0;
  return s;
}

FuzzySet conj(const FuzzySet& x, const FuzzySet& y) {
  require_same_size(x, y, "conj");
  FuzzySet out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return out;
}

FuzzySet disj(const FuzzySet& x, const FuzzySet& y) {
  require_same_size(x, y, "disj");
  FuzzySet out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double v = x[i] + y[i] - x[i] * y[i];
    out[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

FuzzySet neg(const FuzzySet& x) {
  FuzzySet out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = 1.0 - x[i];
  return out;
}

long long cardinality(const FuzzySet& x, double threshold,
                      CardinalityMode mode) {
  if (threshold < 0.0 || threshold > 1.0) {
    raise("cardinality: threshold ", threshold, " outside [0, 1]");
  }
  if (mode == CardinalityMode::kCount) {
    long long count = 0;
    for (double v : x.values) count += v > threshold ? 1 : 0;
    return count;
  }
  double sum = 0.0;
  for (double v : x.values) {
    if (v > threshold) sum += v;
  }
  return static_cast<long long>(std::floor(sum + 0.5));
}

std::vector<std::pair<EntityId, double>> top_k(const FuzzySet& x, size_t k,
                                               double min_prob) {
  std::vector<std::pair<EntityId, double>> entries;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] > min_prob) entries.emplace_back(static_cast<EntityId>(i), x[i]);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  if (entries.size() > k) entries.resize(k);
  return entries;
}

}  // namespace folq
