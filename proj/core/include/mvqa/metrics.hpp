#pragma once

#include <span>
#include <string>
#include <vector>

namespace mvqa {

struct RankedCandidate {
  double score = 0.0;
  int label = 0;
  // Identity used by accuracy: a top candidate is correct when its key
  // equals the key of any positive in the group.
  std::string key;
};

struct RankedGroup {
  std::string group;
  std::vector<RankedCandidate> candidates;  // input order

  // Candidate indices by descending score, ties in input order.
  std::vector<std::size_t> order() const;
  bool has_positive() const;
};

struct MetricValue {
  double value = 0.0;
  std::size_t n_groups = 0;         // groups in the denominator
  std::size_t excluded_groups = 0;  // groups without a positive left out
};

// All throw ContractViolation on an empty group set or an empty group.
// Groups without a positive count as misses for P@1 and accuracy and are
// excluded from MRR and MAP.
MetricValue precision_at_1(std::span<const RankedGroup> groups);
MetricValue mean_reciprocal_rank(std::span<const RankedGroup> groups);
MetricValue mean_average_precision(std::span<const RankedGroup> groups);
MetricValue accuracy(std::span<const RankedGroup> groups);

}  // namespace mvqa
