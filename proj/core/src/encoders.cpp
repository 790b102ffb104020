#include "mvqa/encoders.hpp"

#include <algorithm>

#include "mvqa/errors.hpp"
#include "mvqa/ops.hpp"

namespace mvqa {

BiLstmParams BiLstmParams::create(ParameterSet& params,
                                  const std::string& prefix,
                                  std::size_t input_dim, std::size_t hidden,
                                  double init_range, std::mt19937_64& rng) {
  if (input_dim == 0 || hidden == 0)
    throw ConfigError(prefix + ": LSTM sizes must be positive");
  BiLstmParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  auto make = [&](const std::string& dir) {
    Direction d;
    d.w_x = &params.uniform(prefix + "." + dir + ".w_x", {input_dim, 4 * hidden},
                            init_range, rng);
    d.w_h = &params.uniform(prefix + "." + dir + ".w_h", {hidden, 4 * hidden},
                            init_range, rng);
    d.bias = &params.uniform(prefix + "." + dir + ".bias", {4 * hidden},
                             init_range, rng, false);
    return d;
  };
  p.forward = make("fwd");
  p.backward = make("bwd");
  return p;
}

KnowledgeCnnParams KnowledgeCnnParams::create(
    ParameterSet& params, const std::string& prefix,
    std::vector<std::size_t> widths, std::size_t feature_maps,
    std::size_t input_dim, double init_range, std::mt19937_64& rng) {
  if (widths.empty()) throw ConfigError(prefix + ": no filter widths");
  for (auto w : widths)
    if (w == 0) throw ContractViolation(prefix + ": filter width must be >= 1");
  if (feature_maps == 0 || input_dim == 0)
    throw ConfigError(prefix + ": CNN sizes must be positive");
  std::sort(widths.begin(), widths.end());
  KnowledgeCnnParams p;
  p.widths = widths;
  p.feature_maps = feature_maps;
  p.input_dim = input_dim;
  for (auto w : widths) {
    const std::string base = prefix + ".w" + std::to_string(w);
    p.kernels.push_back(&params.uniform(base + ".kernel",
                                        {w * input_dim, feature_maps},
                                        init_range, rng));
    p.biases.push_back(
        &params.uniform(base + ".bias", {feature_maps}, init_range, rng, false));
  }
  return p;
}

namespace {

Var run_direction(Var projected, const Mask& mask,
                  const BiLstmParams::Direction& dir, std::size_t hidden,
                  bool reverse) {
  Graph& g = projected.graph();
  const std::size_t len = mask.length();
  std::vector<std::size_t> steps;
  for (std::size_t t = 0; t < len; ++t)
    if (mask[t]) steps.push_back(t);
  if (reverse) std::reverse(steps.begin(), steps.end());
  Var w_h = g.parameter(*dir.w_h);
  Var bias = g.parameter(*dir.bias);
  Var state = g.constant(Tensor(Shape{2 * hidden}));
  std::vector<Var> outputs;
  outputs.reserve(steps.size());
  for (std::size_t t : steps) {
    state = ops::lstm_cell(ops::row(projected, t), state, w_h, bias);
    outputs.push_back(ops::slice(state, 0, hidden));
  }
  return ops::scatter_rows(outputs, steps, len);
}

}  // namespace

Var bilstm_encode(Var input, const Mask& mask, const BiLstmParams& params) {
  const Tensor& x = input.value();
  if (x.rank() != 2)
    throw DimensionError("bilstm_encode: input must be a matrix, got " +
                         shape_string(x.shape()));
  if (x.shape()[1] != params.input_dim)
    throw DimensionError("bilstm_encode: input width " +
                         std::to_string(x.shape()[1]) + " != parameter width " +
                         std::to_string(params.input_dim));
  if (mask.length() != x.shape()[0])
    throw DimensionError("bilstm_encode: mask length mismatch");
  if (!mask.any()) throw ContractViolation("bilstm_encode: empty sequence");
  Graph& g = input.graph();
  Var fwd = run_direction(ops::matmul(input, g.parameter(*params.forward.w_x)),
                          mask, params.forward, params.hidden, false);
  Var bwd = run_direction(ops::matmul(input, g.parameter(*params.backward.w_x)),
                          mask, params.backward, params.hidden, true);
  return ops::concat({fwd, bwd});
}

Var knowledge_cnn(Var input, const Mask& mask, const KnowledgeCnnParams& params) {
  const Tensor& x = input.value();
  if (x.rank() != 2 || x.shape()[1] != params.input_dim)
    throw DimensionError("knowledge_cnn: input " + shape_string(x.shape()) +
                         " vs kernel input width " +
                         std::to_string(params.input_dim));
  if (mask.length() != x.shape()[0])
    throw DimensionError("knowledge_cnn: mask length mismatch");
  Graph& g = input.graph();
  std::vector<Var> maps;
  for (std::size_t i = 0; i < params.widths.size(); ++i) {
    Var windows = ops::unfold(input, params.widths[i]);
    maps.push_back(ops::tanh(ops::affine(windows, g.parameter(*params.kernels[i]),
                                         g.parameter(*params.biases[i]))));
  }
  return ops::mask_rows(ops::concat(maps), mask);
}

EncodedSide encode_sentence(Graph& graph, const TokenizedSentence& sentence,
                            Parameter& word_table, Parameter& knowledge_table,
                            const TaskEncoderParams& params,
                            std::size_t max_length) {
  if (sentence.words.size() > max_length ||
      sentence.knowledge.size() != sentence.words.size() ||
      sentence.mask.length() != sentence.words.size())
    throw ContractViolation("encode: sentence longer than " +
                            std::to_string(max_length) +
                            " or with inconsistent channels");
  const std::size_t n = sentence.mask.count();
  if (n == 0) throw ContractViolation("encode: sentence has no valid token");
  for (std::size_t i = 0; i < n; ++i)
    if (!sentence.mask[i])
      throw ContractViolation("encode: padding must follow the valid tokens");
  std::vector<std::size_t> words(sentence.words.begin(),
                                 sentence.words.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<std::size_t> knowledge(
      sentence.knowledge.begin(),
      sentence.knowledge.begin() + static_cast<std::ptrdiff_t>(n));
  EncodedSide side;
  side.mask = Mask(n, true);
  side.word_embeddings = ops::gather_rows(graph.parameter(word_table), words);
  side.knowledge_embeddings =
      ops::gather_rows(graph.parameter(knowledge_table), knowledge);
  side.word_states = bilstm_encode(side.word_embeddings, side.mask, params.word);
  side.knowledge_states =
      knowledge_cnn(side.knowledge_embeddings, side.mask, params.knowledge);
  side.encoded = ops::concat({side.word_states, side.knowledge_states});
  return side;
}

EncodedPair encode_pair(Graph& graph, const TokenizedSentence& question,
                        const TokenizedSentence& answer,
                        Parameter& word_table, Parameter& knowledge_table,
                        const TaskEncoderParams& params,
                        std::size_t max_length) {
  return {encode_sentence(graph, question, word_table, knowledge_table, params,
                          max_length),
          encode_sentence(graph, answer, word_table, knowledge_table, params,
                          max_length)};
}

}  // namespace mvqa
