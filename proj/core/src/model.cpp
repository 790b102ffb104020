#include "mvqa/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "json.hpp"
#include "mvqa/errors.hpp"
#include "mvqa/ops.hpp"
#include "text_util.hpp"

namespace mvqa {

StopwordSet load_stopwords(std::istream& in) {
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::strip_cr(std::move(line));
    auto word = detail::trim(line);
    if (word.empty() || word.front() == '#') continue;
    std::string w(word);
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.insert(std::move(w));
  }
  return out;
}

IdfTable::IdfTable(std::unordered_map<std::string, double> words,
                   std::unordered_map<std::size_t, double> knowledge,
                   double default_weight)
    : words_(std::move(words)), knowledge_(std::move(knowledge)), default_(default_weight) {}

namespace {

std::set<std::string> word_types(const TokenizedSentence& s) {
  return {s.surface.begin(), s.surface.end()};
}

std::set<std::size_t> knowledge_types(const TokenizedSentence& s) {
  std::set<std::size_t> out;
  const std::size_t n = std::min(s.length(), s.knowledge.size());
  for (std::size_t i = 0; i < n; ++i)
    if (s.knowledge[i] >= VocabTable::kReserved) out.insert(s.knowledge[i]);
  return out;
}

}  // namespace

IdfTable IdfTable::build(std::span<const QAInstance> instances) {
  std::unordered_map<std::string, std::size_t> word_df;
  std::unordered_map<std::size_t, std::size_t> know_df;
  std::set<std::pair<std::string, std::string>> seen_questions;
  std::size_t documents = 0;
  auto add = [&](const TokenizedSentence& s) {
    ++documents;
    for (const auto& w : word_types(s)) ++word_df[w];
    for (auto k : knowledge_types(s)) ++know_df[k];
  };
  for (const auto& inst : instances) {
    if (seen_questions.emplace(inst.task, inst.group).second) add(inst.question);
    add(inst.answer);
  }
  const double n = static_cast<double>(documents);
  auto idf = [n](std::size_t df) {
    return std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0;
  };
  std::unordered_map<std::string, double> words;
  for (const auto& [w, df] : word_df) words.emplace(w, idf(df));
  std::unordered_map<std::size_t, double> knowledge;
  for (const auto& [k, df] : know_df) knowledge.emplace(k, idf(df));
  return IdfTable(std::move(words), std::move(knowledge), idf(0));
}

double IdfTable::word(std::string_view token) const {
  auto it = words_.find(std::string(token));
  return it == words_.end() ? default_ : it->second;
}

double IdfTable::knowledge(std::size_t id) const {
  auto it = knowledge_.find(id);
  return it == knowledge_.end() ? default_ : it->second;
}

namespace {

template <typename T, typename Weight>
std::pair<double, double> jaccard(const std::set<T>& a, const std::set<T>& b,
                                  Weight&& weight) {
  double inter = 0, uni = 0, winter = 0, wuni = 0;
  for (const auto& x : a) {
    const double w = weight(x);
    uni += 1;
    wuni += w;
    if (b.count(x)) {
      inter += 1;
      winter += w;
    }
  }
  for (const auto& x : b) {
    if (a.count(x)) continue;
    uni += 1;
    wuni += weight(x);
  }
  return {uni > 0 ? inter / uni : 0.0, wuni > 0 ? winter / wuni : 0.0};
}

std::set<std::string> without(const std::set<std::string>& s, const StopwordSet& stop) {
  std::set<std::string> out;
  for (const auto& w : s)
    if (!stop.count(w)) out.insert(w);
  return out;
}

}  // namespace

OverlapFeatures overlap_features(const TokenizedSentence& q,
                                 const TokenizedSentence& a,
                                 const IdfTable& idf,
                                 const StopwordSet& stopwords) {
  auto word_weight = [&](const std::string& w) { return idf.word(w); };
  auto know_weight = [&](std::size_t k) { return idf.knowledge(k); };
  const auto qw = word_types(q), aw = word_types(a);
  const auto [word, weighted_word] = jaccard(qw, aw, word_weight);
  const auto [content, weighted_content] =
      jaccard(without(qw, stopwords), without(aw, stopwords), word_weight);
  const auto [know, weighted_know] =
      jaccard(knowledge_types(q), knowledge_types(a), know_weight);
  OverlapFeatures f;
  f.values = {word, content, weighted_word, weighted_content, know, weighted_know};
  return f;
}

std::pair<Var, Var> shared_encode(Var h_q, Var h_a, const Mask& q_mask,
                                  const Mask& a_mask, const BiLstmParams& shared) {
  return {bilstm_encode(h_q, q_mask, shared), bilstm_encode(h_a, a_mask, shared)};
}

namespace {

Parameter& embedding_table(ParameterSet& params, const std::string& name,
                           std::size_t rows, std::size_t dim, double range,
                           bool trainable, std::mt19937_64& rng) {
  Parameter& p = params.uniform(name, {rows, dim}, range, rng);
  for (auto& x : p.value.row(VocabTable::kPad)) x = 0.0;
  p.pad_row = true;
  p.trainable = trainable;
  return p;
}

}  // namespace

Model::Model(ModelConfig config, VocabTable words, VocabTable knowledge)
    : config_(std::move(config)),
      words_(std::move(words)),
      knowledge_(std::move(knowledge)),
      params_(std::make_unique<ParameterSet>()) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const double range = config_.init_range;
  word_table_ = &embedding_table(*params_, "embed.word", words_.size(),
                                 config_.word_dim, range, config_.word_trainable, rng);
  knowledge_table_ =
      &embedding_table(*params_, "embed.knowledge", knowledge_.size(),
                       config_.knowledge_dim, range, config_.knowledge_trainable, rng);

  const TaskConfig& first = config_.tasks.front();
  const std::size_t word_state = 2 * config_.direction_hidden(first);
  const std::size_t know_state =
      config_.task_filter_widths(first).size() * config_.task_feature_maps(first);
  shared_ = BiLstmParams::create(*params_, "shared.lstm", word_state + know_state,
                                 config_.shared_direction_hidden(), range, rng);
  if (config_.variant == Variant::kMva) {
    AttentionDims dims{config_.word_dim, config_.knowledge_dim, word_state,
                       know_state, shared_.output_dim()};
    attention_ = AttentionParams::create(
        *params_, "shared.attention", dims, config_.effective_weights_q(),
        config_.effective_weights_a(), config_.learn_view_weights, range, rng);
  }
  for (const auto& task_cfg : config_.tasks) {
    TaskModule t;
    t.settings = task_cfg;
    const std::string prefix = "task." + task_cfg.name;
    t.encoder.word =
        BiLstmParams::create(*params_, prefix + ".word_lstm", config_.word_dim,
                             config_.direction_hidden(task_cfg), range, rng);
    t.encoder.knowledge = KnowledgeCnnParams::create(
        *params_, prefix + ".cnn", config_.task_filter_widths(task_cfg),
        config_.task_feature_maps(task_cfg), config_.knowledge_dim, range, rng);
    t.head_weight = &params_->uniform(prefix + ".head.weight", {feature_dim(), 2},
                                      range, rng);
    t.head_bias = &params_->uniform(prefix + ".head.bias", {2}, range, rng, false);
    tasks_.push_back(std::move(t));
  }
}

const TaskModule& Model::task(std::string_view name) const {
  for (const auto& t : tasks_)
    if (t.settings.name == name) return t;
  throw LookupError("unknown task '" + std::string(name) + "'");
}

std::vector<std::string> Model::task_names() const {
  std::vector<std::string> out;
  for (const auto& t : tasks_) out.push_back(t.settings.name);
  return out;
}

std::size_t Model::feature_dim() const {
  return 4 * config_.shared_direction_hidden() +
         (config_.overlap_features ? kOverlapFeatureCount : 0);
}

namespace {

Var uniform_weights(Graph& g, std::size_t n) {
  return g.constant(Tensor(Shape{n}, 1.0 / static_cast<double>(n)));
}

}  // namespace

ForwardResult Model::forward(Graph& g, const QAInstance& inst,
                             const ForwardOptions& options) const {
  const TaskModule& t = task(inst.task);
  ForwardResult r;
  r.encoded = encode_pair(g, inst.question, inst.answer, *word_table_,
                          *knowledge_table_, t.encoder, config_.max_length);
  const Mask& qm = r.encoded.question.mask;
  const Mask& am = r.encoded.answer.mask;
  std::tie(r.shared_q, r.shared_a) = shared_encode(
      r.encoded.question.encoded, r.encoded.answer.encoded, qm, am, shared_);

  const Variant variant = options.variant.value_or(config_.variant);
  if (variant == Variant::kMtqa) {
    r.pooled_q = ops::pool(r.shared_q, qm, ops::PoolKind::kMean);
    r.pooled_a = ops::pool(r.shared_a, am, ops::PoolKind::kMean);
  } else if (options.uniform_attention) {
    r.pooled_q = attend(r.shared_q, uniform_weights(g, qm.length()));
    r.pooled_a = attend(r.shared_a, uniform_weights(g, am.length()));
  } else {
    if (!attention_)
      throw UnsupportedOperation("model was built without attention parameters");
    r.attention = multi_view_attention(g, r.encoded, r.shared_q, r.shared_a,
                                       *attention_, config_.fusion);
    r.pooled_q = attend(r.shared_q, r.attention->question.fused);
    r.pooled_a = attend(r.shared_a, r.attention->answer.fused);
  }

  std::vector<Var> parts{ops::dropout(r.pooled_q, config_.dropout),
                         ops::dropout(r.pooled_a, config_.dropout)};
  if (config_.overlap_features) {
    OverlapFeatures f = overlap_features(inst.question, inst.answer, idf_, stopwords_);
    parts.push_back(g.constant(Tensor(Shape{kOverlapFeatureCount},
                                      std::vector<double>(f.values.begin(), f.values.end()))));
  }
  r.features = ops::concat(parts);
  Var logits = ops::affine(r.features, g.parameter(*t.head_weight),
                           g.parameter(*t.head_bias));
  r.probabilities = ops::binary_softmax(logits);
  r.positive = ops::pick(r.probabilities, 1);
  return r;
}

double Model::score(const QAInstance& inst) const {
  Graph g(false);
  return forward(g, inst).positive.value()[0];
}

std::pair<AttentionBundle, AttentionBundle> Model::attention(const QAInstance& inst) const {
  if (config_.variant != Variant::kMva || !attention_)
    throw UnsupportedOperation("attention weights need the multi-view attention variant");
  Graph g(false);
  ForwardResult r = forward(g, inst);
  return {to_bundle(r.attention->question, inst.question.words.size()),
          to_bundle(r.attention->answer, inst.answer.words.size())};
}

Var multitask_loss(Graph& g, std::span<const LossTerm> terms) {
  if (terms.empty()) throw ContractViolation("multitask_loss: empty batch");
  Var total;
  for (const auto& term : terms) {
    if (term.label != 0 && term.label != 1)
      throw ContractViolation("multitask_loss: labels must be 0 or 1");
    Var l = ops::binary_cross_entropy(term.p, term.label);
    if (term.weight != 1.0) l = ops::scale(l, term.weight);
    total = total.valid() ? ops::add(total, l) : l;
  }
  (void)g;
  return total;
}

Var l2_penalty(Graph& g, double strength) {
  Var total;
  for (Parameter* p : g.parameters()) {
    if (!p->trainable || !p->regularized) continue;
    Var s = ops::sum_squares(g.parameter(*p), p->pad_row ? 1 : 0);
    total = total.valid() ? ops::add(total, s) : s;
  }
  if (!total.valid()) return g.constant(Tensor::scalar(0.0));
  return ops::scale(total, strength);
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, double beta1,
                     double beta2, double epsilon)
    : kind_(kind), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

Optimizer Optimizer::from_config(const ModelConfig& c) {
  return Optimizer(c.optimizer, c.learning_rate, c.adam_beta1, c.adam_beta2,
                   c.adam_epsilon);
}

void Optimizer::step(const GradientStore& grads) {
  grads.for_each_parameter([&](Parameter& p, const Tensor& g) {
    if (!p.trainable) return;
    auto value = p.value.data();
    auto grad = g.data();
    const std::size_t skip = p.pad_row ? p.value.cols() : 0;
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t i = skip; i < value.size(); ++i) value[i] -= lr_ * grad[i];
      return;
    }
    State& s = state_[&p];
    if (s.m.empty()) {
      s.m = Tensor(p.value.shape());
      s.v = Tensor(p.value.shape());
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
    auto m = s.m.data();
    auto v = s.v.data();
    for (std::size_t i = skip; i < value.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
      value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  });
}

std::vector<RankedGroup> score_groups(const Model& model,
                                      std::span<const QAInstance> instances) {
  std::vector<RankedGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& inst : instances) {
    auto [it, fresh] = index.emplace(inst.group, groups.size());
    if (fresh) groups.push_back(RankedGroup{inst.group, {}});
    groups[it->second].candidates.push_back(
        RankedCandidate{model.score(inst), inst.label, inst.candidate});
  }
  return groups;
}

double headline_metric(CorpusFormat format, std::span<const RankedGroup> groups) {
  return format == CorpusFormat::kAnswerSelection ? mean_average_precision(groups).value
                                                  : accuracy(groups).value;
}

std::string headline_metric_name(CorpusFormat format) {
  return format == CorpusFormat::kAnswerSelection ? "MAP" : "Accuracy";
}

std::vector<RankedResult> rank(const Model& model, std::span<const QAInstance> candidates) {
  std::vector<RankedResult> out;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    out.push_back({i, model.score(candidates[i])});
  std::stable_sort(out.begin(), out.end(), [](const RankedResult& a, const RankedResult& b) {
    return a.score > b.score;
  });
  return out;
}

TrainingResult train(Model& model, const TaskData& train_sets,
                     const TaskData& dev_sets, const TrainOptions& options) {
  const ModelConfig& config = model.config();
  if (train_sets.empty()) throw ContractViolation("train: no training data");
  if (config.mode == TrainingMode::kStl) {
    for (const auto& [name, data] : train_sets)
      if (name != config.tasks.front().name)
        throw ConfigError("single-task mode for '" + config.tasks.front().name +
                          "' was given data for task '" + name + "'");
  }
  struct TaskState {
    std::string name;
    const std::vector<QAInstance>* data;
    const TaskModule* module;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    double loss = 0.0;
  };
  std::vector<TaskState> tasks;
  for (const auto& [name, data] : train_sets) {
    if (data.empty()) throw ContractViolation("train: empty dataset for task '" + name + "'");
    const TaskModule& module = model.task(name);
    for (const auto& inst : data)
      if (inst.task != name)
        throw ContractViolation("train: instance of task '" + inst.task +
                                "' in the dataset for '" + name + "'");
    TaskState s{name, &data, &module, {}, 0, 0.0};
    s.order.resize(data.size());
    tasks.push_back(std::move(s));
  }

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Optimizer optimizer = Optimizer::from_config(config);
  const auto& attention = model.attention_params();
  TrainingResult result;
  result.best_selection = -std::numeric_limits<double>::infinity();
  std::vector<Tensor> best = model.parameters().snapshot();
  std::size_t stale = 0;
  const std::size_t epochs = options.epochs.value_or(config.epochs);

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::size_t remaining = 0;
    for (auto& t : tasks) {
      std::iota(t.order.begin(), t.order.end(), 0);
      std::shuffle(t.order.begin(), t.order.end(), rng);
      t.cursor = 0;
      t.loss = 0.0;
      remaining += t.order.size();
    }
    while (remaining > 0) {
      std::uniform_int_distribution<std::size_t> pick(0, remaining - 1);
      std::size_t r = pick(rng);
      TaskState* chosen = nullptr;
      for (auto& t : tasks) {
        const std::size_t left = t.order.size() - t.cursor;
        if (r < left) {
          chosen = &t;
          break;
        }
        r -= left;
      }
      const std::size_t count =
          std::min(config.batch_size, chosen->order.size() - chosen->cursor);
      Graph g(true, rng());
      std::vector<LossTerm> terms;
      terms.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        const QAInstance& inst = (*chosen->data)[chosen->order[chosen->cursor + i]];
        ForwardResult fr = model.forward(g, inst);
        terms.push_back({fr.positive, inst.label, chosen->module->settings.weight});
      }
      chosen->cursor += count;
      remaining -= count;
      Var loss = multitask_loss(g, terms);
      chosen->loss += loss.value()[0] / chosen->module->settings.weight;
      Var objective = config.l2 > 0 ? ops::add(loss, l2_penalty(g, config.l2)) : loss;
      optimizer.step(g.backward(objective));
      if (attention && config.learn_view_weights) {
        for (Parameter* p : {attention->lambda_q, attention->lambda_a})
          for (auto& x : p->value.data()) x = std::max(x, 0.0);
      }
    }

    EpochLog log;
    log.epoch = epoch;
    double total = 0.0;
    for (const auto& t : tasks) {
      log.train_loss[t.name] = t.loss / static_cast<double>(t.order.size());
      auto dev = dev_sets.find(t.name);
      const auto& eval = (dev != dev_sets.end() && !dev->second.empty()) ? dev->second
                                                                          : *t.data;
      const double metric =
          headline_metric(t.module->settings.format, score_groups(model, eval));
      log.dev_metric[t.name] = metric;
      total += metric;
    }
    log.selection = total / static_cast<double>(tasks.size());
    log.improved = log.selection > result.best_selection;
    if (log.improved) {
      result.best_selection = log.selection;
      result.best_epoch = epoch;
      best = model.parameters().snapshot();
      stale = 0;
    } else {
      ++stale;
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(log);
    if (options.on_epoch) options.on_epoch(log);
    if (config.patience > 0 && stale >= config.patience) break;
  }
  model.parameters().restore(best);
  return result;
}

namespace {

using nlohmann::json;

constexpr const char* kCheckpointFormat = "mvqa-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const Model& model, std::ostream& out) {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  json config = json::array();
  for (const auto& [k, v] : model.config().to_kv()) config.push_back({k, v});
  j["config"] = config;
  j["words"] = model.words().symbols();
  j["knowledge"] = model.knowledge().symbols();
  json idf_words = json::object();
  for (const auto& [w, v] : model.idf().words()) idf_words[w] = v;
  json idf_know = json::object();
  for (const auto& [k, v] : model.idf().knowledge_weights())
    idf_know[model.knowledge().symbol(k)] = v;
  j["idf"] = {{"default", model.idf().default_weight()},
              {"words", idf_words},
              {"knowledge", idf_know}};
  std::vector<std::string> stop(model.stopwords().begin(), model.stopwords().end());
  std::sort(stop.begin(), stop.end());
  j["stopwords"] = stop;
  json params = json::array();
  for (const Parameter* p : model.parameters().all()) {
    std::vector<double> data(p->value.data().begin(), p->value.data().end());
    params.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"data", data}});
  }
  j["parameters"] = params;
  out << j.dump() << '\n';
  if (!out) throw ConfigError("failed to write checkpoint");
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  save_checkpoint(model, out);
}

Model load_checkpoint(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
  }
  try {
    if (j.at("format") != kCheckpointFormat || j.at("version") != kCheckpointVersion)
      throw ParseError("unsupported checkpoint format", 0);
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& item : j.at("config"))
      kv.emplace_back(item.at(0).get<std::string>(), item.at(1).get<std::string>());
    ModelConfig config = ModelConfig::from_kv(kv);
    VocabTable words(j.at("words").get<std::vector<std::string>>());
    VocabTable knowledge(j.at("knowledge").get<std::vector<std::string>>());
    Model model(std::move(config), std::move(words), std::move(knowledge));

    std::unordered_map<std::string, double> idf_words;
    for (const auto& [w, v] : j.at("idf").at("words").items()) idf_words[w] = v.get<double>();
    std::unordered_map<std::size_t, double> idf_know;
    for (const auto& [k, v] : j.at("idf").at("knowledge").items())
      idf_know[model.knowledge().at(k)] = v.get<double>();
    model.set_idf(IdfTable(std::move(idf_words), std::move(idf_know),
                           j.at("idf").at("default").get<double>()));
    StopwordSet stop;
    for (const auto& w : j.at("stopwords")) stop.insert(w.get<std::string>());
    model.set_stopwords(std::move(stop));

    const auto& params = j.at("parameters");
    if (params.size() != model.parameters().size())
      throw ParseError("checkpoint has " + std::to_string(params.size()) +
                       " parameters, configuration builds " +
                       std::to_string(model.parameters().size()), 0);
    for (const auto& item : params) {
      const std::string name = item.at("name").get<std::string>();
      Parameter* p = model.parameters().find(name);
      if (!p) throw ParseError("checkpoint parameter '" + name + "' is unknown", 0);
      const Shape shape = item.at("shape").get<Shape>();
      if (shape != p->value.shape())
        throw ParseError("checkpoint parameter '" + name + "' has shape " +
                         shape_string(shape) + ", expected " +
                         shape_string(p->value.shape()), 0);
      p->value = Tensor(shape, item.at("data").get<std::vector<double>>());
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
  } catch (const LookupError& e) {
    throw ParseError(std::string("inconsistent checkpoint: ") + e.what(), 0);
  }
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in = open_input(path);
  return load_checkpoint(in);
}

}  // namespace mvqa
