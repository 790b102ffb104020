#include "mvqa/pipeline.hpp"

#include <random>
#include <set>

#include "mvqa/errors.hpp"
#include "text_util.hpp"

namespace mvqa {

Resources load_resources(const ModelConfig& config) {
  Resources r;
  if (!config.gazetteer.empty()) {
    auto in = open_input(config.gazetteer);
    r.gazetteer = Gazetteer::load(in);
  }
  if (!config.names.empty()) {
    auto in = open_input(config.names);
    r.names = NameTable::load(in);
  }
  if (!config.stopwords.empty()) {
    auto in = open_input(config.stopwords);
    r.stopwords = load_stopwords(in);
  }
  return r;
}

namespace {

std::vector<CorpusRow> read_rows(const std::string& path, CorpusFormat format,
                                 bool require_label = true) {
  auto in = open_input(path);
  return read_corpus(in, format, require_label);
}

std::vector<QAInstance> to_instances(const std::vector<CorpusRow>& rows,
                                     const Preprocessor& pre, const std::string& task) {
  std::vector<QAInstance> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(pre.instance(row, task));
  return out;
}

void load_vectors(const std::string& paths, Parameter& table, const VocabTable& vocab) {
  if (paths.empty()) return;
  EmbeddingTable t{vocab, table.value, table.trainable};
  for (auto part : detail::split(paths, ',')) {
    auto in = open_input(std::string(detail::trim(part)));
    read_vectors_into(in, t);
  }
  table.value = std::move(t.vectors);
}

}  // namespace

Experiment prepare_experiment(const ModelConfig& config, const Resources& resources) {
  config.validate();
  Experiment e;
  std::vector<std::vector<CorpusRow>> train_rows, dev_rows;
  for (const auto& t : config.tasks) {
    if (t.train.empty()) throw ConfigError("task '" + t.name + "' has no train file");
    train_rows.push_back(read_rows(t.train, t.format));
    add_corpus_words(e.words, train_rows.back(), resources.names);
    dev_rows.push_back(t.dev.empty() ? std::vector<CorpusRow>{}
                                     : read_rows(t.dev, t.format));
  }
  e.knowledge = build_knowledge_vocab(resources.names, resources.gazetteer);
  Preprocessor pre(e.words, e.knowledge, resources.gazetteer, resources.names,
                   config.max_length, config.link_threshold);
  for (std::size_t i = 0; i < config.tasks.size(); ++i) {
    const std::string& name = config.tasks[i].name;
    e.train[name] = to_instances(train_rows[i], pre, name);
    e.dev[name] = to_instances(dev_rows[i], pre, name);
  }
  return e;
}

Model build_model(const ModelConfig& config, const Experiment& experiment,
                  const Resources& resources) {
  Model model(config, experiment.words, experiment.knowledge);
  load_vectors(config.word_vectors, model.word_table(), model.words());
  load_vectors(config.knowledge_vectors, model.knowledge_table(), model.knowledge());
  std::vector<QAInstance> all;
  for (const auto& [name, data] : experiment.train) all.insert(all.end(), data.begin(), data.end());
  model.set_idf(IdfTable::build(all));
  model.set_stopwords(resources.stopwords);
  return model;
}

std::vector<QAInstance> load_task_corpus(const Model& model, const Resources& resources,
                                         const std::string& path, const std::string& task,
                                         bool require_label) {
  const TaskModule& t = model.task(task);
  Preprocessor pre(model.words(), model.knowledge(), resources.gazetteer,
                   resources.names, model.config().max_length,
                   model.config().link_threshold);
  return to_instances(read_rows(path, t.settings.format, require_label), pre, task);
}

void evaluate_task(Report& report, const Model& model, const std::string& task,
                   std::span<const QAInstance> instances) {
  const TaskModule& t = model.task(task);
  auto groups = score_groups(model, instances);
  add_task_results(report, task, t.settings.format, groups);
}

AblationTable run_ablation(const ModelConfig& config, const Experiment& experiment,
                           const Resources& resources, const AblationOptions& options) {
  if (config.variant != Variant::kMva)
    throw UnsupportedOperation("view ablation needs the multi-view attention variant");
  AblationTable table;
  for (const auto& t : config.tasks) {
    table.tasks.push_back(t.name);
    table.metric_names[t.name] = headline_metric_name(t.format);
  }
  std::vector<std::set<View>> variants{{}};
  for (View v : options.views) variants.push_back({v});
  for (const auto& disabled : variants) {
    ModelConfig c = config;
    for (View v : disabled) c.views.erase(v);
    if (c.views.empty())
      throw ConfigError("ablation would disable every attention view");
    Model model = build_model(c, experiment, resources);
    TrainOptions train_options;
    train_options.epochs = options.epochs;
    TrainingResult result = train(model, experiment.train, experiment.dev, train_options);
    AblationRow row;
    row.label = ablation_label(disabled);
    for (const auto& t : config.tasks) {
      auto dev = experiment.dev.find(t.name);
      const auto& data = (dev != experiment.dev.end() && !dev->second.empty())
                             ? dev->second
                             : experiment.train.at(t.name);
      row.metrics[t.name] = headline_metric(t.format, score_groups(model, data));
    }
    if (options.on_model) options.on_model(row.label, result);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace mvqa
