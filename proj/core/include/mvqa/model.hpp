#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mvqa/attention.hpp"
#include "mvqa/config.hpp"
#include "mvqa/data.hpp"
#include "mvqa/embeddings.hpp"
#include "mvqa/encoders.hpp"
#include "mvqa/graph.hpp"
#include "mvqa/metrics.hpp"
#include "mvqa/parameters.hpp"

namespace mvqa {

inline constexpr std::size_t kOverlapFeatureCount = 6;

// word, non-stop word, weighted word, non-stop weighted word, knowledge,
// weighted knowledge; each a Jaccard ratio in [0, 1].
struct OverlapFeatures {
  std::array<double, kOverlapFeatureCount> values{};
};

using StopwordSet = std::unordered_set<std::string>;
StopwordSet load_stopwords(std::istream& in);

// Smoothed inverse document frequency, log((1 + N) / (1 + df)) + 1.
class IdfTable {
 public:
  IdfTable() = default;
  IdfTable(std::unordered_map<std::string, double> words,
           std::unordered_map<std::size_t, double> knowledge,
           double default_weight);

  // Documents: every question once per group and every candidate answer.
  static IdfTable build(std::span<const QAInstance> instances);

  double word(std::string_view token) const;
  double knowledge(std::size_t id) const;
  double default_weight() const { return default_; }
  const std::unordered_map<std::string, double>& words() const { return words_; }
  const std::unordered_map<std::size_t, double>& knowledge_weights() const {
    return knowledge_;
  }

 private:
  std::unordered_map<std::string, double> words_;
  std::unordered_map<std::size_t, double> knowledge_;
  double default_ = 1.0;
};

// Words are compared by surface token, knowledge by id; reserved ids
// (PAD, UNK, NIL) never count. An empty union yields 0.
OverlapFeatures overlap_features(const TokenizedSentence& q,
                                 const TokenizedSentence& a,
                                 const IdfTable& idf,
                                 const StopwordSet& stopwords);

struct TaskModule {
  TaskConfig settings;
  TaskEncoderParams encoder;
  Parameter* head_weight = nullptr;  // [d_x x 2]
  Parameter* head_bias = nullptr;    // [2]
};

struct ForwardOptions {
  // Replaces the fused attention by uniform weights.
  bool uniform_attention = false;
  std::optional<Variant> variant;  // overrides the configured one
};

struct ForwardResult {
  EncodedPair encoded;
  Var shared_q;
  Var shared_a;
  Var pooled_q;  // s_q before dropout
  Var pooled_a;
  Var features;       // x = [s_q, s_a, x_ol]
  Var probabilities;  // [p_negative, p_positive]
  Var positive;       // scalar p_positive
  std::optional<MultiViewAttention> attention;
};

// Siamese shared Bi-LSTM over task encoder outputs.
std::pair<Var, Var> shared_encode(Var h_q, Var h_a, const Mask& q_mask,
                                  const Mask& a_mask, const BiLstmParams& shared);

class Model {
 public:
  // Builds and randomly initializes every parameter from config.seed.
  Model(ModelConfig config, VocabTable words, VocabTable knowledge);
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  const VocabTable& words() const { return words_; }
  const VocabTable& knowledge() const { return knowledge_; }
  ParameterSet& parameters() { return *params_; }
  const ParameterSet& parameters() const { return *params_; }
  Parameter& word_table() const { return *word_table_; }
  Parameter& knowledge_table() const { return *knowledge_table_; }
  const BiLstmParams& shared_lstm() const { return shared_; }
  const std::optional<AttentionParams>& attention_params() const { return attention_; }
  const TaskModule& task(std::string_view name) const;  // LookupError
  std::vector<std::string> task_names() const;

  const IdfTable& idf() const { return idf_; }
  void set_idf(IdfTable idf) { idf_ = std::move(idf); }
  const StopwordSet& stopwords() const { return stopwords_; }
  void set_stopwords(StopwordSet s) { stopwords_ = std::move(s); }

  // Width of the head input.
  std::size_t feature_dim() const;

  ForwardResult forward(Graph& graph, const QAInstance& instance,
                        const ForwardOptions& options = {}) const;
  // Evaluation-mode probability of the positive class.
  double score(const QAInstance& instance) const;
  // UnsupportedOperation for the mean-pooling variant.
  std::pair<AttentionBundle, AttentionBundle> attention(const QAInstance& instance) const;

 private:
  ModelConfig config_;
  VocabTable words_;
  VocabTable knowledge_;
  std::unique_ptr<ParameterSet> params_;
  Parameter* word_table_ = nullptr;
  Parameter* knowledge_table_ = nullptr;
  std::vector<TaskModule> tasks_;
  BiLstmParams shared_;
  std::optional<AttentionParams> attention_;
  IdfTable idf_;
  StopwordSet stopwords_;
};

struct LossTerm {
  Var p;
  int label = 0;
  double weight = 1.0;  // task weight
};

// -sum_i w_i [y log p + (1 - y) log(1 - p)], p clamped to [1e-12, 1 - 1e-12].
Var multitask_loss(Graph& graph, std::span<const LossTerm> terms);
// strength * sum of squares over the trainable, regularized parameters
// that have a leaf in `graph`; embedding PAD rows are skipped.
Var l2_penalty(Graph& graph, double strength);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, double beta1 = 0.9,
            double beta2 = 0.999, double epsilon = 1e-8);
  static Optimizer from_config(const ModelConfig& config);

  // Updates every trainable parameter that received a gradient.
  void step(const GradientStore& grads);

 private:
  struct State {
    Tensor m, v;
    std::uint64_t t = 0;
  };
  OptimizerKind kind_;
  double lr_, beta1_, beta2_, eps_;
  std::unordered_map<const Parameter*, State> state_;
};

using TaskData = std::map<std::string, std::vector<QAInstance>>;

struct EpochLog {
  std::size_t epoch = 0;
  std::map<std::string, double> train_loss;  // mean per instance, before L2
  std::map<std::string, double> dev_metric;  // headline metric per task
  double selection = 0.0;                    // mean of dev_metric
  bool improved = false;
  double seconds = 0.0;
};

struct TrainingResult {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_selection = 0.0;
};

struct TrainOptions {
  std::function<void(const EpochLog&)> on_epoch;
  // Overrides config.epochs when set.
  std::optional<std::size_t> epochs;
};

// Mini-batch training with task-pure batches; a task is drawn with
// probability proportional to its unseen examples in the epoch. The best
// dev snapshot is restored before returning. Tasks without dev data are
// selected on their training split.
TrainingResult train(Model& model, const TaskData& train_sets,
                     const TaskData& dev_sets, const TrainOptions& options = {});

// Groups by group id in first-appearance order; candidate keys are
// QAInstance::candidate.
std::vector<RankedGroup> score_groups(const Model& model,
                                      std::span<const QAInstance> instances);
// MAP for answer selection, accuracy for KBQA.
double headline_metric(CorpusFormat format, std::span<const RankedGroup> groups);
std::string headline_metric_name(CorpusFormat format);

struct RankedResult {
  std::size_t index = 0;  // position in the input
  double score = 0.0;
};
// Stable: equal scores keep input order.
std::vector<RankedResult> rank(const Model& model,
                               std::span<const QAInstance> candidates);

// Self-describing JSON with config, vocabularies, IDF, stopwords and
// every parameter. Loading restores bit-identical values.
void save_checkpoint(const Model& model, std::ostream& out);
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(std::istream& in);
Model load_checkpoint(const std::string& path);

}  // namespace mvqa
