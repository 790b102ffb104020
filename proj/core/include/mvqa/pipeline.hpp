#pragma once

#include <string>
#include <vector>

#include "mvqa/config.hpp"
#include "mvqa/data.hpp"
#include "mvqa/model.hpp"
#include "mvqa/report.hpp"

namespace mvqa {

// Linking and overlap resources named by a config. Missing paths give
// empty tables.
struct Resources {
  Gazetteer gazetteer;
  NameTable names;
  StopwordSet stopwords;
};

Resources load_resources(const ModelConfig& config);

struct Experiment {
  VocabTable words;      // from the training splits of every task
  VocabTable knowledge;  // name table ids and gazetteer entities
  TaskData train;
  TaskData dev;
};

// Reads every task's train and dev corpus.
Experiment prepare_experiment(const ModelConfig& config, const Resources& resources);

// Fresh model with optional pretrained vectors, IDF from the training
// data and the stopword list.
Model build_model(const ModelConfig& config, const Experiment& experiment,
                  const Resources& resources);

// Instances for an existing model's vocabularies.
std::vector<QAInstance> load_task_corpus(const Model& model,
                                         const Resources& resources,
                                         const std::string& path,
                                         const std::string& task,
                                         bool require_label = true);

// Metrics for one task on labeled instances.
void evaluate_task(Report& report, const Model& model, const std::string& task,
                   std::span<const QAInstance> instances);

struct AblationOptions {
  std::vector<View> views = {kAllViews.begin(), kAllViews.end()};
  std::optional<std::size_t> epochs;
  std::function<void(const std::string& label, const TrainingResult&)> on_model;
};

// Trains the full model and one model per disabled view and reports the
// headline dev metric of every task (training split when a task has no
// dev data).
AblationTable run_ablation(const ModelConfig& config, const Experiment& experiment,
                           const Resources& resources, const AblationOptions& options = {});

}  // namespace mvqa
