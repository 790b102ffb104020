#include "mvqa/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace mvqa {

using nlohmann::json;

void add_task_results(Report& report, const std::string& task, CorpusFormat format,
                      std::span<const RankedGroup> groups) {
  auto put = [&](const char* name, const MetricValue& m) {
    report.results.push_back({task, name, m.value, m.n_groups, m.excluded_groups});
  };
  if (format == CorpusFormat::kAnswerSelection) {
    put("P@1", precision_at_1(groups));
    put("MRR", mean_reciprocal_rank(groups));
    put("MAP", mean_average_precision(groups));
  } else {
    put("Accuracy", accuracy(groups));
    put("MRR", mean_reciprocal_rank(groups));
  }
  for (const auto& g : groups) {
    GroupDiagnostic d;
    d.task = task;
    d.group = g.group;
    d.candidates = g.candidates.size();
    const auto order = g.order();
    d.top_candidate = g.candidates[order[0]].key;
    d.top_score = g.candidates[order[0]].score;
    for (std::size_t k = 0; k < order.size(); ++k)
      if (g.candidates[order[k]].label == 1) {
        d.first_positive_rank = k + 1;
        break;
      }
    report.groups.push_back(std::move(d));
  }
}

std::string report_json(const Report& report) {
  json results = json::array();
  for (const auto& r : report.results)
    results.push_back({{"task", r.task},
                       {"metric", r.metric},
                       {"value", r.value},
                       {"n_groups", r.n_groups},
                       {"excluded_groups", r.excluded_groups}});
  json groups = json::array();
  for (const auto& g : report.groups)
    groups.push_back({{"task", g.task},
                      {"group", g.group},
                      {"candidates", g.candidates},
                      {"top_candidate", g.top_candidate},
                      {"top_score", g.top_score},
                      {"first_positive_rank", g.first_positive_rank}});
  json config = json::object();
  for (const auto& [k, v] : report.config) config[k] = v;
  json j = {{"results", results},
            {"groups", groups},
            {"seed", report.seed},
            {"config", config},
            {"wall_clock_seconds", report.wall_clock_seconds}};
  return j.dump(2) + "\n";
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string report_table(const Report& report) {
  std::size_t tw = 4, mw = 6;
  for (const auto& r : report.results) {
    tw = std::max(tw, r.task.size());
    mw = std::max(mw, r.metric.size());
  }
  std::ostringstream out;
  out << pad("task", tw) << "  " << pad("metric", mw) << "  value   groups  excluded\n";
  for (const auto& r : report.results)
    out << pad(r.task, tw) << "  " << pad(r.metric, mw) << "  " << fixed(r.value) << "  "
        << pad(std::to_string(r.n_groups), 6) << "  " << r.excluded_groups << '\n';
  return out.str();
}

namespace {

json side_json(const TokenizedSentence& s, const AttentionBundle& b) {
  const std::size_t n = s.length();
  auto entry = [n](const Tensor& t) {
    std::vector<double> raw(t.data().begin(), t.data().begin() + static_cast<std::ptrdiff_t>(n));
    return json{{"raw", raw}, {"normalized", min_max_normalize(raw)}};
  };
  json views = json::object();
  for (View v : kAllViews)
    views[std::string(view_name(v))] = entry(b.views[static_cast<std::size_t>(v)]);
  return {{"tokens", s.surface}, {"views", views}, {"fused", entry(b.fused)}};
}

}  // namespace

std::string attention_dump_json(const QAInstance& inst, const AttentionBundle& q,
                                const AttentionBundle& a, double score) {
  json j = {{"task", inst.task},
            {"group", inst.group},
            {"candidate", inst.candidate},
            {"label", inst.label},
            {"score", score},
            {"question", side_json(inst.question, q)},
            {"answer", side_json(inst.answer, a)}};
  return j.dump(2) + "\n";
}

std::string ablation_label(const std::set<View>& disabled) {
  if (disabled.empty()) return "full model";
  std::string out = "w/o ";
  bool first = true;
  for (View v : disabled) {
    if (!first) out += " and ";
    out += view_name(v);
    first = false;
  }
  return out + (disabled.size() == 1 ? " view" : " views");
}

std::string ablation_json(const AblationTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) rows.push_back({{"label", r.label}, {"metrics", r.metrics}});
  json j = {{"tasks", table.tasks}, {"metric", table.metric_names}, {"rows", rows}};
  return j.dump(2) + "\n";
}

std::string ablation_text(const AblationTable& table) {
  std::size_t lw = 5;
  for (const auto& r : table.rows) lw = std::max(lw, r.label.size());
  std::vector<std::string> headers;
  for (const auto& t : table.tasks) {
    auto it = table.metric_names.find(t);
    headers.push_back(t + (it != table.metric_names.end() ? " " + it->second : ""));
  }
  std::ostringstream out;
  out << pad("model", lw);
  for (const auto& h : headers) out << "  " << pad(h, std::max<std::size_t>(h.size(), 6));
  out << '\n';
  for (const auto& r : table.rows) {
    out << pad(r.label, lw);
    for (std::size_t i = 0; i < table.tasks.size(); ++i) {
      auto it = r.metrics.find(table.tasks[i]);
      std::string cell = it == r.metrics.end() ? "-" : fixed(it->second);
      out << "  " << pad(cell, std::max<std::size_t>(headers[i].size(), 6));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace mvqa
