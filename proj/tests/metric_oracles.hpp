#pragma once

#include <random>
#include <string>
#include <vector>

#include "mvqa/metrics.hpp"

// Definitional metric implementations that never sort: the rank of
// candidate i is 1 + (#higher scores) + (#equal scores earlier in input).
namespace mvqa::oracle {

inline std::size_t rank_of(const RankedGroup& g, std::size_t i) {
  std::size_t r = 1;
  for (std::size_t j = 0; j < g.candidates.size(); ++j) {
    const double a = g.candidates[j].score, b = g.candidates[i].score;
    if (a > b || (a == b && j < i)) ++r;
  }
  return r;
}

inline std::size_t top(const RankedGroup& g) {
  for (std::size_t i = 0; i < g.candidates.size(); ++i)
    if (rank_of(g, i) == 1) return i;
  return 0;
}

inline double p_at_1(const std::vector<RankedGroup>& groups) {
  double hits = 0;
  for (const auto& g : groups) hits += g.candidates[top(g)].label == 1;
  return hits / groups.size();
}

inline double accuracy(const std::vector<RankedGroup>& groups) {
  double hits = 0;
  for (const auto& g : groups) {
    const std::string& key = g.candidates[top(g)].key;
    bool ok = false;
    for (const auto& c : g.candidates) ok = ok || (c.label == 1 && c.key == key);
    hits += ok;
  }
  return hits / groups.size();
}

inline double mrr(const std::vector<RankedGroup>& groups) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < g.candidates.size(); ++i)
      if (g.candidates[i].label == 1 && (best == 0 || rank_of(g, i) < best)) best = rank_of(g, i);
    if (best == 0) continue;
    total += 1.0 / best;
    ++n;
  }
  return n ? total / n : 0.0;
}

inline double map(const std::vector<RankedGroup>& groups) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    double ap = 0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < g.candidates.size(); ++i) {
      if (g.candidates[i].label != 1) continue;
      const std::size_t k = rank_of(g, i);
      std::size_t above = 0;
      for (std::size_t j = 0; j < g.candidates.size(); ++j)
        above += g.candidates[j].label == 1 && rank_of(g, j) <= k;
      ap += static_cast<double>(above) / k;
      ++positives;
    }
    if (!positives) continue;
    total += ap / positives;
    ++n;
  }
  return n ? total / n : 0.0;
}

// Sizes 1..20, coarse scores so ties are common, keys with duplicates.
inline std::vector<RankedGroup> random_groups(std::mt19937_64& rng, std::size_t count) {
  std::vector<RankedGroup> groups;
  for (std::size_t g = 0; g < count; ++g) {
    RankedGroup group{"g" + std::to_string(g), {}};
    const std::size_t size = 1 + rng() % 20;
    for (std::size_t c = 0; c < size; ++c) {
      RankedCandidate cand;
      cand.score = static_cast<double>(rng() % 8) / 8.0;
      cand.label = rng() % 3 == 0;
      cand.key = "k" + std::to_string(rng() % (size + 2));
      group.candidates.push_back(cand);
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

}  // namespace mvqa::oracle
