#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvqa/attention.hpp"
#include "mvqa/data.hpp"

namespace mvqa {

enum class Variant { kMtqa, kMva };
enum class TrainingMode { kStl, kMtl };
enum class OptimizerKind { kAdam, kSgd };
// Whether `hidden` is the size of one LSTM direction or of both together.
enum class HiddenReading { kPerDirection, kTotal };

struct TaskConfig {
  std::string name;
  CorpusFormat format = CorpusFormat::kAnswerSelection;
  std::string train;
  std::string dev;
  double weight = 1.0;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> feature_maps;
  std::optional<std::vector<std::size_t>> filter_widths;

  bool operator==(const TaskConfig&) const = default;
};

struct ModelConfig {
  Variant variant = Variant::kMva;
  TrainingMode mode = TrainingMode::kMtl;
  std::vector<TaskConfig> tasks;

  std::size_t word_dim = 300;
  std::size_t knowledge_dim = 100;
  std::size_t hidden = 200;
  HiddenReading hidden_reading = HiddenReading::kPerDirection;
  std::size_t shared_hidden = 200;
  std::vector<std::size_t> filter_widths{2, 3};
  std::size_t feature_maps = 100;
  std::size_t max_length = kDefaultMaxLength;
  double init_range = 0.1;

  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 0.0005;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double dropout = 0.5;
  std::size_t batch_size = 128;
  double l2 = 0.0001;
  std::size_t epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 1;

  std::set<View> views = all_views();
  ViewWeights view_weights_q{1, 1, 1, 1, 1};
  ViewWeights view_weights_a{1, 1, 1, 1, 1};
  bool learn_view_weights = false;
  FusionMode fusion = FusionMode::kSoftmax;
  bool overlap_features = true;

  bool word_trainable = true;
  bool knowledge_trainable = false;
  // Comma separated vector files.
  std::string word_vectors;
  std::string knowledge_vectors;
  std::string gazetteer;
  std::string names;
  std::string stopwords;
  double link_threshold = kDefaultLinkThreshold;

  const TaskConfig& task(std::string_view name) const;  // LookupError
  // LSTM size per direction for a task-specific encoder.
  std::size_t direction_hidden(const TaskConfig& task) const;
  std::size_t shared_direction_hidden() const;
  std::size_t task_feature_maps(const TaskConfig& task) const;
  std::vector<std::size_t> task_filter_widths(const TaskConfig& task) const;
  // lambda after disabling views outside `views`.
  ViewWeights effective_weights_q() const;
  ViewWeights effective_weights_a() const;

  // ConfigError on invalid values or incompatible widths across tasks.
  void validate() const;

  std::vector<std::pair<std::string, std::string>> to_kv() const;
  // Unknown keys and malformed values raise ConfigError.
  static ModelConfig from_kv(const std::vector<std::pair<std::string, std::string>>& kv);

  bool operator==(const ModelConfig&) const = default;
};

std::string variant_tag(Variant v);
std::string mode_tag(TrainingMode m);

// `key = value` lines, '#' starts a comment. Relative file paths are
// resolved against `base_dir` when it is non-empty.
ModelConfig parse_config(std::istream& in, const std::string& base_dir = "");
ModelConfig load_config(const std::string& path);
void write_config(std::ostream& out, const ModelConfig& config);

}  // namespace mvqa
