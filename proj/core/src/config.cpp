#include "mvqa/config.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "mvqa/errors.hpp"
#include "text_util.hpp"

namespace mvqa {

using detail::format_double;
using detail::split;
using detail::trim;

const TaskConfig& ModelConfig::task(std::string_view name) const {
  for (const auto& t : tasks)
    if (t.name == name) return t;
  throw LookupError("unknown task '" + std::string(name) + "'");
}

namespace {

std::size_t per_direction(std::size_t hidden, HiddenReading reading) {
  if (reading == HiddenReading::kPerDirection) return hidden;
  if (hidden % 2 != 0)
    throw ConfigError("hidden size " + std::to_string(hidden) +
                      " must be even when read as the total of both directions");
  return hidden / 2;
}

}  // namespace

std::size_t ModelConfig::direction_hidden(const TaskConfig& t) const {
  return per_direction(t.hidden.value_or(hidden), hidden_reading);
}

std::size_t ModelConfig::shared_direction_hidden() const {
  return per_direction(shared_hidden, hidden_reading);
}

std::size_t ModelConfig::task_feature_maps(const TaskConfig& t) const {
  return t.feature_maps.value_or(feature_maps);
}

std::vector<std::size_t> ModelConfig::task_filter_widths(const TaskConfig& t) const {
  return t.filter_widths.value_or(filter_widths);
}

ViewWeights ModelConfig::effective_weights_q() const {
  ViewWeights mask = view_ablation_mask(views);
  for (std::size_t i = 0; i < kViewCount; ++i) mask[i] *= view_weights_q[i];
  return mask;
}

ViewWeights ModelConfig::effective_weights_a() const {
  ViewWeights mask = view_ablation_mask(views);
  for (std::size_t i = 0; i < kViewCount; ++i) mask[i] *= view_weights_a[i];
  return mask;
}

void ModelConfig::validate() const {
  if (tasks.empty()) throw ConfigError("at least one task is required");
  if (mode == TrainingMode::kStl && tasks.size() != 1)
    throw ConfigError("single-task mode needs exactly one task, got " +
                      std::to_string(tasks.size()));
  std::set<std::string> names;
  for (const auto& t : tasks) {
    if (t.name.empty()) throw ConfigError("task with an empty name");
    if (!names.insert(t.name).second)
      throw ConfigError("duplicate task '" + t.name + "'");
    if (!(t.weight > 0)) throw ConfigError("task weight must be positive");
  }
  auto positive = [](double v, const char* what) {
    if (!(v > 0)) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(learning_rate, "learning_rate");
  positive(init_range, "init_range");
  positive(adam_epsilon, "adam_epsilon");
  positive(static_cast<double>(word_dim), "word_dim");
  positive(static_cast<double>(knowledge_dim), "knowledge_dim");
  positive(static_cast<double>(shared_direction_hidden()), "shared_hidden");
  positive(static_cast<double>(batch_size), "batch_size");
  positive(static_cast<double>(max_length), "max_length");
  positive(static_cast<double>(epochs), "epochs");
  if (l2 < 0) throw ConfigError("l2 must be nonnegative");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
    throw ConfigError("Adam betas must be in [0, 1)");
  if (link_threshold < 0 || link_threshold > 1)
    throw ConfigError("link_threshold must be in [0, 1]");
  if (views.empty()) throw ConfigError("at least one attention view must be enabled");
  for (std::size_t i = 0; i < kViewCount; ++i)
    if (view_weights_q[i] < 0 || view_weights_a[i] < 0)
      throw ConfigError("view weights must be nonnegative");
  double sum_q = 0, sum_a = 0;
  for (double w : effective_weights_q()) sum_q += w;
  for (double w : effective_weights_a()) sum_a += w;
  if (fusion == FusionMode::kConvex && (sum_q <= 0 || sum_a <= 0))
    throw ConfigError("convex fusion needs a positive enabled view weight");

  // The shared layer and attention parameters need one encoder layout.
  const TaskConfig& first = tasks.front();
  for (const auto& t : tasks) {
    for (auto w : task_filter_widths(t))
      if (w == 0) throw ConfigError("filter widths must be positive");
    if (task_filter_widths(t).empty())
      throw ConfigError("task '" + t.name + "' has no filter widths");
    positive(static_cast<double>(direction_hidden(t)), "hidden");
    positive(static_cast<double>(task_feature_maps(t)), "feature_maps");
    const std::size_t word_a = direction_hidden(first), word_b = direction_hidden(t);
    const std::size_t cnn_a = task_filter_widths(first).size() * task_feature_maps(first);
    const std::size_t cnn_b = task_filter_widths(t).size() * task_feature_maps(t);
    if (word_a != word_b || cnn_a != cnn_b)
      throw ConfigError("encoder output widths differ between tasks '" +
                        first.name + "' and '" + t.name + "'");
  }
}

std::string variant_tag(Variant v) { return v == Variant::kMva ? "mva" : "mtqa"; }
std::string mode_tag(TrainingMode m) { return m == TrainingMode::kMtl ? "mtl" : "stl"; }

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_weights(const ViewWeights& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ',';
    out += format_double(w[i]);
  }
  return out;
}

std::string view_key(View v) {
  std::string s(view_name(v));
  for (char& c : s)
    if (c == ' ' || c == '-') c = '_';
  return s;
}

std::string bool_tag(bool b) { return b ? "true" : "false"; }

std::string fail_value(const std::string& key, const std::string& value) {
  return "invalid value '" + value + "' for '" + key + "'";
}

std::size_t to_size(const std::string& key, const std::string& value) {
  auto v = detail::parse_int<std::size_t>(trim(value));
  if (!v) throw ConfigError(fail_value(key, value));
  return *v;
}

double to_double(const std::string& key, const std::string& value) {
  auto v = detail::parse_double(trim(value));
  if (!v) throw ConfigError(fail_value(key, value));
  return *v;
}

bool to_bool(const std::string& key, const std::string& value) {
  const auto v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(fail_value(key, value));
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  for (auto part : split(value, ',')) out.push_back(to_size(key, std::string(part)));
  if (out.empty()) throw ConfigError(fail_value(key, value));
  return out;
}

ViewWeights to_weights(const std::string& key, const std::string& value) {
  auto parts = split(value, ',');
  ViewWeights w{};
  if (parts.size() == 1) {
    w.fill(to_double(key, value));
  } else if (parts.size() == kViewCount) {
    for (std::size_t i = 0; i < kViewCount; ++i)
      w[i] = to_double(key, std::string(parts[i]));
  } else {
    throw ConfigError("'" + key + "' needs 1 or 5 comma separated weights");
  }
  return w;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> ModelConfig::to_kv() const {
  std::vector<std::pair<std::string, std::string>> kv;
  auto put = [&](std::string k, std::string v) { kv.emplace_back(std::move(k), std::move(v)); };
  put("variant", variant_tag(variant));
  put("mode", mode_tag(mode));
  std::string task_list;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (i) task_list += ',';
    task_list += tasks[i].name;
  }
  put("tasks", task_list);
  for (const auto& t : tasks) {
    const std::string p = "task." + t.name + ".";
    put(p + "format", format_tag(t.format));
    put(p + "train", t.train);
    put(p + "dev", t.dev);
    put(p + "weight", format_double(t.weight));
    if (t.hidden) put(p + "hidden", std::to_string(*t.hidden));
    if (t.feature_maps) put(p + "feature_maps", std::to_string(*t.feature_maps));
    if (t.filter_widths) put(p + "filter_widths", join_sizes(*t.filter_widths));
  }
  put("word_dim", std::to_string(word_dim));
  put("knowledge_dim", std::to_string(knowledge_dim));
  put("hidden", std::to_string(hidden));
  put("hidden_reading",
      hidden_reading == HiddenReading::kPerDirection ? "per_direction" : "total");
  put("shared_hidden", std::to_string(shared_hidden));
  put("filter_widths", join_sizes(filter_widths));
  put("feature_maps", std::to_string(feature_maps));
  put("max_length", std::to_string(max_length));
  put("init_range", format_double(init_range));
  put("optimizer", optimizer == OptimizerKind::kAdam ? "adam" : "sgd");
  put("learning_rate", format_double(learning_rate));
  put("adam_beta1", format_double(adam_beta1));
  put("adam_beta2", format_double(adam_beta2));
  put("adam_epsilon", format_double(adam_epsilon));
  put("dropout", format_double(dropout));
  put("batch_size", std::to_string(batch_size));
  put("l2", format_double(l2));
  put("epochs", std::to_string(epochs));
  put("patience", std::to_string(patience));
  put("seed", std::to_string(seed));
  std::string view_list;
  for (View v : views) {
    if (!view_list.empty()) view_list += ',';
    view_list += view_key(v);
  }
  put("views", view_list);
  put("view_weights_q", join_weights(view_weights_q));
  put("view_weights_a", join_weights(view_weights_a));
  put("learn_view_weights", bool_tag(learn_view_weights));
  put("fusion", fusion == FusionMode::kSoftmax ? "softmax" : "convex");
  put("overlap_features", bool_tag(overlap_features));
  put("word_trainable", bool_tag(word_trainable));
  put("knowledge_trainable", bool_tag(knowledge_trainable));
  put("word_vectors", word_vectors);
  put("knowledge_vectors", knowledge_vectors);
  put("gazetteer", gazetteer);
  put("names", names);
  put("stopwords", stopwords);
  put("link_threshold", format_double(link_threshold));
  return kv;
}

ModelConfig ModelConfig::from_kv(
    const std::vector<std::pair<std::string, std::string>>& kv) {
  ModelConfig c;
  std::map<std::string, std::string> values;
  for (const auto& [k, v] : kv)
    if (!values.emplace(k, v).second) throw ConfigError("duplicate key '" + k + "'");

  if (auto it = values.find("tasks"); it != values.end()) {
    for (auto part : split(it->second, ',')) {
      auto name = trim(part);
      if (name.empty()) continue;
      TaskConfig t;
      t.name = std::string(name);
      c.tasks.push_back(std::move(t));
    }
    values.erase(it);
  }

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"variant", [&](auto& k, auto& v) {
         if (v == "mva") c.variant = Variant::kMva;
         else if (v == "mtqa") c.variant = Variant::kMtqa;
         else throw ConfigError(fail_value(k, v));
       }},
      {"mode", [&](auto& k, auto& v) {
         if (v == "mtl") c.mode = TrainingMode::kMtl;
         else if (v == "stl") c.mode = TrainingMode::kStl;
         else throw ConfigError(fail_value(k, v));
       }},
      {"word_dim", [&](auto& k, auto& v) { c.word_dim = to_size(k, v); }},
      {"knowledge_dim", [&](auto& k, auto& v) { c.knowledge_dim = to_size(k, v); }},
      {"hidden", [&](auto& k, auto& v) { c.hidden = to_size(k, v); }},
      {"hidden_reading", [&](auto& k, auto& v) {
         if (v == "per_direction") c.hidden_reading = HiddenReading::kPerDirection;
         else if (v == "total") c.hidden_reading = HiddenReading::kTotal;
         else throw ConfigError(fail_value(k, v));
       }},
      {"shared_hidden", [&](auto& k, auto& v) { c.shared_hidden = to_size(k, v); }},
      {"filter_widths", [&](auto& k, auto& v) { c.filter_widths = to_sizes(k, v); }},
      {"feature_maps", [&](auto& k, auto& v) { c.feature_maps = to_size(k, v); }},
      {"max_length", [&](auto& k, auto& v) { c.max_length = to_size(k, v); }},
      {"init_range", [&](auto& k, auto& v) { c.init_range = to_double(k, v); }},
      {"optimizer", [&](auto& k, auto& v) {
         if (v == "adam") c.optimizer = OptimizerKind::kAdam;
         else if (v == "sgd") c.optimizer = OptimizerKind::kSgd;
         else throw ConfigError(fail_value(k, v));
       }},
      {"learning_rate", [&](auto& k, auto& v) { c.learning_rate = to_double(k, v); }},
      {"adam_beta1", [&](auto& k, auto& v) { c.adam_beta1 = to_double(k, v); }},
      {"adam_beta2", [&](auto& k, auto& v) { c.adam_beta2 = to_double(k, v); }},
      {"adam_epsilon", [&](auto& k, auto& v) { c.adam_epsilon = to_double(k, v); }},
      {"dropout", [&](auto& k, auto& v) { c.dropout = to_double(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = to_size(k, v); }},
      {"l2", [&](auto& k, auto& v) { c.l2 = to_double(k, v); }},
      {"epochs", [&](auto& k, auto& v) { c.epochs = to_size(k, v); }},
      {"patience", [&](auto& k, auto& v) { c.patience = to_size(k, v); }},
      {"seed", [&](auto& k, auto& v) {
         auto s = detail::parse_int<std::uint64_t>(trim(v));
         if (!s) throw ConfigError(fail_value(k, v));
         c.seed = *s;
       }},
      {"views", [&](auto&, auto& v) {
         c.views.clear();
         for (auto part : split(v, ',')) {
           auto name = trim(part);
           if (!name.empty()) c.views.insert(parse_view(name));
         }
       }},
      {"view_weights_q", [&](auto& k, auto& v) { c.view_weights_q = to_weights(k, v); }},
      {"view_weights_a", [&](auto& k, auto& v) { c.view_weights_a = to_weights(k, v); }},
      {"learn_view_weights", [&](auto& k, auto& v) { c.learn_view_weights = to_bool(k, v); }},
      {"fusion", [&](auto& k, auto& v) {
         if (v == "softmax") c.fusion = FusionMode::kSoftmax;
         else if (v == "convex") c.fusion = FusionMode::kConvex;
         else throw ConfigError(fail_value(k, v));
       }},
      {"overlap_features", [&](auto& k, auto& v) { c.overlap_features = to_bool(k, v); }},
      {"word_trainable", [&](auto& k, auto& v) { c.word_trainable = to_bool(k, v); }},
      {"knowledge_trainable", [&](auto& k, auto& v) { c.knowledge_trainable = to_bool(k, v); }},
      {"word_vectors", [&](auto&, auto& v) { c.word_vectors = v; }},
      {"knowledge_vectors", [&](auto&, auto& v) { c.knowledge_vectors = v; }},
      {"gazetteer", [&](auto&, auto& v) { c.gazetteer = v; }},
      {"names", [&](auto&, auto& v) { c.names = v; }},
      {"stopwords", [&](auto&, auto& v) { c.stopwords = v; }},
      {"link_threshold", [&](auto& k, auto& v) { c.link_threshold = to_double(k, v); }},
  };

  for (const auto& [key, value] : values) {
    if (key.rfind("task.", 0) == 0) {
      const auto rest = std::string_view(key).substr(5);
      const auto dot = rest.rfind('.');
      if (dot == std::string_view::npos) throw ConfigError("unknown key '" + key + "'");
      const std::string name(rest.substr(0, dot));
      const std::string field(rest.substr(dot + 1));
      TaskConfig* task = nullptr;
      for (auto& t : c.tasks)
        if (t.name == name) task = &t;
      if (!task) throw ConfigError("key '" + key + "' names a task missing from 'tasks'");
      if (field == "format") {
        task->format = parse_corpus_format(value);
      } else if (field == "train") {
        task->train = value;
      } else if (field == "dev") {
        task->dev = value;
      } else if (field == "weight") {
        task->weight = to_double(key, value);
      } else if (field == "hidden") {
        task->hidden = to_size(key, value);
      } else if (field == "feature_maps") {
        task->feature_maps = to_size(key, value);
      } else if (field == "filter_widths") {
        task->filter_widths = to_sizes(key, value);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
      continue;
    }
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key '" + key + "'");
    it->second(key, value);
  }
  return c;
}

namespace {

void resolve(std::string& path, const std::string& base) {
  if (path.empty() || base.empty()) return;
  std::filesystem::path p(path);
  if (p.is_relative()) path = (std::filesystem::path(base) / p).lexically_normal().string();
}

void resolve_list(std::string& paths, const std::string& base) {
  std::string out;
  for (auto part : split(paths, ',')) {
    std::string p(trim(part));
    if (p.empty()) continue;
    resolve(p, base);
    if (!out.empty()) out += ',';
    out += p;
  }
  paths = out;
}

}  // namespace

ModelConfig parse_config(std::istream& in, const std::string& base_dir) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = detail::strip_cr(std::move(line));
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto text = trim(line);
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("expected 'key = value', got '" + std::string(text) + "'", number);
    auto key = trim(text.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", number);
    kv.emplace_back(std::string(key), std::string(trim(text.substr(eq + 1))));
  }
  ModelConfig c = ModelConfig::from_kv(kv);
  for (auto& t : c.tasks) {
    resolve(t.train, base_dir);
    resolve(t.dev, base_dir);
  }
  resolve_list(c.word_vectors, base_dir);
  resolve_list(c.knowledge_vectors, base_dir);
  resolve(c.gazetteer, base_dir);
  resolve(c.names, base_dir);
  resolve(c.stopwords, base_dir);
  return c;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_config(in, std::filesystem::path(path).parent_path().string());
}

void write_config(std::ostream& out, const ModelConfig& config) {
  for (const auto& [k, v] : config.to_kv()) out << k << " = " << v << '\n';
}

}  // namespace mvqa
