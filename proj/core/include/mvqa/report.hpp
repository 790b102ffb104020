#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvqa/attention.hpp"
#include "mvqa/data.hpp"
#include "mvqa/metrics.hpp"

namespace mvqa {

struct MetricRecord {
  std::string task;
  std::string metric;
  double value = 0.0;
  std::size_t n_groups = 0;
  std::size_t excluded_groups = 0;
};

struct GroupDiagnostic {
  std::string task;
  std::string group;
  std::size_t candidates = 0;
  std::string top_candidate;
  double top_score = 0.0;
  std::size_t first_positive_rank = 0;  // 0 when the group has no positive
};

struct Report {
  std::vector<MetricRecord> results;
  std::vector<GroupDiagnostic> groups;
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
};

// Answer selection: P@1, MRR, MAP. KBQA: Accuracy, MRR.
void add_task_results(Report& report, const std::string& task, CorpusFormat format,
                      std::span<const RankedGroup> groups);

std::string report_json(const Report& report);
std::string report_table(const Report& report);

// Raw and min-max normalized weights for every view and the fused
// distribution, aligned with the valid tokens.
std::string attention_dump_json(const QAInstance& instance,
                                const AttentionBundle& question,
                                const AttentionBundle& answer, double score);

struct AblationRow {
  std::string label;                      // "full model" or "w/o X view"
  std::map<std::string, double> metrics;  // task -> headline dev metric
};

struct AblationTable {
  std::vector<std::string> tasks;
  std::map<std::string, std::string> metric_names;
  std::vector<AblationRow> rows;
};

std::string ablation_label(const std::set<View>& disabled);
std::string ablation_json(const AblationTable& table);
std::string ablation_text(const AblationTable& table);

}  // namespace mvqa
