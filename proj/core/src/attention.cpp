#include "mvqa/attention.hpp"

#include <algorithm>

#include "mvqa/errors.hpp"
#include "mvqa/ops.hpp"

namespace mvqa {

std::string_view view_name(View view) {
  switch (view) {
    case View::kWord: return "word";
    case View::kKnowledge: return "knowledge";
    case View::kSemantic: return "semantic";
    case View::kKnowledgeSemantic: return "knowledge semantic";
    case View::kCoAttention: return "co-attention";
  }
  return "?";
}

View parse_view(std::string_view text) {
  std::string s(text);
  std::replace(s.begin(), s.end(), '_', ' ');
  if (s == "knowledge-semantic") s = "knowledge semantic";
  if (s == "co attention" || s == "coattention") s = "co-attention";
  for (View v : kAllViews)
    if (view_name(v) == s) return v;
  throw ConfigError("unknown attention view '" + std::string(text) + "'");
}

std::set<View> all_views() { return {kAllViews.begin(), kAllViews.end()}; }

ViewWeights view_ablation_mask(const std::set<View>& enabled, double weight) {
  if (enabled.empty()) throw ContractViolation("at least one view must be enabled");
  ViewWeights w{};
  for (View v : enabled) w[static_cast<std::size_t>(v)] = weight;
  return w;
}

AttentionParams AttentionParams::create(ParameterSet& params,
                                        const std::string& prefix,
                                        const AttentionDims& dims,
                                        const ViewWeights& lambda_q,
                                        const ViewWeights& lambda_a,
                                        bool learn_lambda, double init_range,
                                        std::mt19937_64& rng) {
  for (double l : lambda_q)
    if (l < 0) throw ConfigError("view weights must be nonnegative");
  for (double l : lambda_a)
    if (l < 0) throw ConfigError("view weights must be nonnegative");
  AttentionParams p;
  p.dims = dims;
  auto square = [&](const std::string& name, std::size_t d) {
    return &params.uniform(prefix + "." + name, {d, d}, init_range, rng);
  };
  auto vec = [&](const std::string& name, std::size_t d) {
    return &params.uniform(prefix + "." + name, {d}, init_range, rng);
  };
  p.u_word = square("u_word", dims.word_embedding);
  p.u_knowledge = square("u_knowledge", dims.knowledge_embedding);
  p.u_shared = square("u_shared", dims.shared_state);
  p.w_word_q_self = square("word_q.w_self", dims.word_state);
  p.w_word_q_other = square("word_q.w_other", dims.word_state);
  p.v_word_q = vec("word_q.v", dims.word_state);
  p.w_word_a_self = square("word_a.w_self", dims.word_state);
  p.w_word_a_other = square("word_a.w_other", dims.word_state);
  p.v_word_a = vec("word_a.v", dims.word_state);
  p.w_know_q_self = square("know_q.w_self", dims.knowledge_state);
  p.w_know_q_other = square("know_q.w_other", dims.knowledge_state);
  p.v_know_q = vec("know_q.v", dims.knowledge_state);
  p.w_know_a_self = square("know_a.w_self", dims.knowledge_state);
  p.w_know_a_other = square("know_a.w_other", dims.knowledge_state);
  p.v_know_a = vec("know_a.v", dims.knowledge_state);
  p.lambda_q = &params.add(prefix + ".lambda_q",
                           Tensor({kViewCount}, {lambda_q.begin(), lambda_q.end()}),
                           false);
  p.lambda_a = &params.add(prefix + ".lambda_a",
                           Tensor({kViewCount}, {lambda_a.begin(), lambda_a.end()}),
                           false);
  p.lambda_q->trainable = learn_lambda;
  p.lambda_a->trainable = learn_lambda;
  return p;
}

AttentionPair two_way_attention(Var x, Var y, Var u, const Mask& x_mask,
                                const Mask& y_mask) {
  const Shape& xs = x.shape();
  const Shape& ys = y.shape();
  if (xs.size() != 2 || ys.size() != 2 || xs[1] != ys[1])
    throw DimensionError("two_way_attention: feature widths differ: " +
                         shape_string(xs) + " vs " + shape_string(ys));
  Var m = ops::tanh(ops::matmul(ops::matmul(x, u), ops::transpose(y)));
  Var rows = ops::masked_row_max(m, x_mask, y_mask);
  Var cols = ops::masked_row_max(ops::transpose(m), y_mask, x_mask);
  return {ops::masked_softmax(rows, x_mask), ops::masked_softmax(cols, y_mask)};
}

PooledContext pooled_context(Var word_states, Var knowledge_states, const Mask& mask) {
  if (!mask.any()) throw ContractViolation("pooled_context: no valid position");
  return {ops::pool(word_states, mask, ops::PoolKind::kMean),
          ops::pool(knowledge_states, mask, ops::PoolKind::kMax)};
}

Var additive_attention(Var states, Var other_context, Var w_self, Var w_other,
                       Var v, const Mask& mask) {
  Var self = ops::matmul(states, w_self);
  Var other = ops::matmul(other_context, w_other);
  Var scores = ops::matmul(ops::tanh(ops::add(self, other)), v);
  return ops::masked_softmax(scores, mask);
}

AttentionPair co_attention(Var shared_q, Var shared_a, Var u, const Mask& q_mask,
                           const Mask& a_mask) {
  return two_way_attention(shared_q, shared_a, u, q_mask, a_mask);
}

Var fuse_views(std::span<const Var> views, Var lambda, const Mask& mask,
               FusionMode mode) {
  if (views.size() != kViewCount || lambda.shape() != Shape{kViewCount})
    throw DimensionError("fuse_views: expected five views and five weights");
  for (const Var& v : views)
    if (v.shape() != Shape{mask.length()})
      throw DimensionError("fuse_views: view length " + shape_string(v.shape()) +
                           " vs mask length " + std::to_string(mask.length()));
  if (mode == FusionMode::kConvex)
    return ops::weighted_sum(views, ops::normalize_sum(lambda));
  return ops::masked_softmax(ops::weighted_sum(views, lambda), mask);
}

Var attend(Var states, Var weights) {
  if (states.shape().size() != 2 || weights.shape() != Shape{states.shape()[0]})
    throw DimensionError("attend: " + shape_string(weights.shape()) +
                         " weights for states " + shape_string(states.shape()));
  return ops::matmul(weights, states);
}

MultiViewAttention multi_view_attention(Graph& g, const EncodedPair& enc,
                                        Var shared_q, Var shared_a,
                                        const AttentionParams& p,
                                        FusionMode mode) {
  const EncodedSide& q = enc.question;
  const EncodedSide& a = enc.answer;
  MultiViewAttention out;
  auto& vq = out.question.views;
  auto& va = out.answer.views;

  AttentionPair word = two_way_attention(q.word_embeddings, a.word_embeddings,
                                         g.parameter(*p.u_word), q.mask, a.mask);
  vq[0] = word.x;
  va[0] = word.y;
  AttentionPair know =
      two_way_attention(q.knowledge_embeddings, a.knowledge_embeddings,
                        g.parameter(*p.u_knowledge), q.mask, a.mask);
  vq[1] = know.x;
  va[1] = know.y;

  PooledContext oq = pooled_context(q.word_states, q.knowledge_states, q.mask);
  PooledContext oa = pooled_context(a.word_states, a.knowledge_states, a.mask);
  vq[2] = additive_attention(q.word_states, oa.word, g.parameter(*p.w_word_q_self),
                             g.parameter(*p.w_word_q_other),
                             g.parameter(*p.v_word_q), q.mask);
  va[2] = additive_attention(a.word_states, oq.word, g.parameter(*p.w_word_a_self),
                             g.parameter(*p.w_word_a_other),
                             g.parameter(*p.v_word_a), a.mask);
  vq[3] = additive_attention(q.knowledge_states, oa.knowledge,
                             g.parameter(*p.w_know_q_self),
                             g.parameter(*p.w_know_q_other),
                             g.parameter(*p.v_know_q), q.mask);
  va[3] = additive_attention(a.knowledge_states, oq.knowledge,
                             g.parameter(*p.w_know_a_self),
                             g.parameter(*p.w_know_a_other),
                             g.parameter(*p.v_know_a), a.mask);

  AttentionPair co = co_attention(shared_q, shared_a, g.parameter(*p.u_shared),
                                  q.mask, a.mask);
  vq[4] = co.x;
  va[4] = co.y;

  out.question.fused = fuse_views(vq, g.parameter(*p.lambda_q), q.mask, mode);
  out.answer.fused = fuse_views(va, g.parameter(*p.lambda_a), a.mask, mode);
  return out;
}

namespace {

Tensor pad_to(const Tensor& t, std::size_t length) {
  Tensor out(Shape{length});
  const std::size_t n = std::min(length, t.size());
  for (std::size_t i = 0; i < n; ++i) out[i] = t[i];
  return out;
}

}  // namespace

AttentionBundle to_bundle(const SideAttention& side, std::size_t length) {
  AttentionBundle b;
  for (std::size_t i = 0; i < kViewCount; ++i)
    b.views[i] = pad_to(side.views[i].value(), length);
  b.fused = pad_to(side.fused.value(), length);
  return b;
}

std::vector<double> min_max_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 1.0);
  if (values.empty()) return out;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = (values[i] - *lo) / range;
  return out;
}

}  // namespace mvqa
