#include "mvqa/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "mvqa/errors.hpp"

namespace mvqa {

std::vector<std::size_t> RankedGroup::order() const {
  std::vector<std::size_t> idx(candidates.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].score > candidates[b].score;
  });
  return idx;
}

bool RankedGroup::has_positive() const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [](const RankedCandidate& c) { return c.label == 1; });
}

namespace {

void check(std::span<const RankedGroup> groups) {
  if (groups.empty()) throw ContractViolation("metric over an empty group set");
  for (const auto& g : groups)
    if (g.candidates.empty())
      throw ContractViolation("group '" + g.group + "' has no candidates");
}

template <typename Fn>
MetricValue average(std::span<const RankedGroup> groups, bool skip_unlabeled,
                    Fn&& per_group) {
  check(groups);
  MetricValue m;
  double total = 0.0;
  for (const auto& g : groups) {
    if (skip_unlabeled && !g.has_positive()) {
      ++m.excluded_groups;
      continue;
    }
    total += per_group(g, g.order());
    ++m.n_groups;
  }
  m.value = m.n_groups ? total / static_cast<double>(m.n_groups) : 0.0;
  return m;
}

}  // namespace

MetricValue precision_at_1(std::span<const RankedGroup> groups) {
  return average(groups, false, [](const RankedGroup& g, const auto& order) {
    return g.candidates[order[0]].label == 1 ? 1.0 : 0.0;
  });
}

MetricValue mean_reciprocal_rank(std::span<const RankedGroup> groups) {
  return average(groups, true, [](const RankedGroup& g, const auto& order) {
    for (std::size_t k = 0; k < order.size(); ++k)
      if (g.candidates[order[k]].label == 1) return 1.0 / static_cast<double>(k + 1);
    return 0.0;
  });
}

MetricValue mean_average_precision(std::span<const RankedGroup> groups) {
  return average(groups, true, [](const RankedGroup& g, const auto& order) {
    double hits = 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (g.candidates[order[k]].label != 1) continue;
      hits += 1.0;
      sum += hits / static_cast<double>(k + 1);
    }
    return sum / hits;
  });
}

MetricValue accuracy(std::span<const RankedGroup> groups) {
  return average(groups, false, [](const RankedGroup& g, const auto& order) {
    const std::string& top = g.candidates[order[0]].key;
    for (const auto& c : g.candidates)
      if (c.label == 1 && c.key == top) return 1.0;
    return 0.0;
  });
}

}  // namespace mvqa
