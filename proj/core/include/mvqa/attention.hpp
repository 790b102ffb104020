#pragma once

#include <array>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvqa/encoders.hpp"
#include "mvqa/graph.hpp"
#include "mvqa/parameters.hpp"

namespace mvqa {

enum class View { kWord = 0, kKnowledge, kSemantic, kKnowledgeSemantic, kCoAttention };
inline constexpr std::size_t kViewCount = 5;
inline constexpr std::array<View, kViewCount> kAllViews = {
    View::kWord, View::kKnowledge, View::kSemantic, View::kKnowledgeSemantic,
    View::kCoAttention};

// "word", "knowledge", "semantic", "knowledge semantic", "co-attention".
std::string_view view_name(View view);
// Accepts the display names and their underscore/dash spellings.
View parse_view(std::string_view text);  // ConfigError
std::set<View> all_views();

using ViewWeights = std::array<double, kViewCount>;

// Disabled views get 0, enabled ones `weight`. ContractViolation on an
// empty set.
ViewWeights view_ablation_mask(const std::set<View>& enabled, double weight = 1.0);

enum class FusionMode {
  kSoftmax,  // masked_softmax(sum_i lambda_i alpha_i)
  kConvex,   // sum_i (lambda_i / sum lambda) alpha_i
};

struct AttentionDims {
  std::size_t word_embedding = 0;
  std::size_t knowledge_embedding = 0;
  std::size_t word_state = 0;       // word encoder output width
  std::size_t knowledge_state = 0;  // CNN output width
  std::size_t shared_state = 0;
};

struct AttentionParams {
  Parameter* u_word = nullptr;
  Parameter* u_knowledge = nullptr;
  Parameter* u_shared = nullptr;
  // Semantic view, question side (self, other, score vector) and answer side.
  Parameter* w_word_q_self = nullptr;
  Parameter* w_word_q_other = nullptr;
  Parameter* v_word_q = nullptr;
  Parameter* w_word_a_self = nullptr;
  Parameter* w_word_a_other = nullptr;
  Parameter* v_word_a = nullptr;
  // Knowledge-semantic view.
  Parameter* w_know_q_self = nullptr;
  Parameter* w_know_q_other = nullptr;
  Parameter* v_know_q = nullptr;
  Parameter* w_know_a_self = nullptr;
  Parameter* w_know_a_other = nullptr;
  Parameter* v_know_a = nullptr;
  Parameter* lambda_q = nullptr;  // [5]
  Parameter* lambda_a = nullptr;  // [5]
  AttentionDims dims;

  static AttentionParams create(ParameterSet& params, const std::string& prefix,
                                const AttentionDims& dims,
                                const ViewWeights& lambda_q,
                                const ViewWeights& lambda_a, bool learn_lambda,
                                double init_range, std::mt19937_64& rng);
};

struct AttentionPair {
  Var x;  // over rows of the first input
  Var y;  // over rows of the second input
};

// M = tanh(X U Y^T); x attends by row maxima over valid columns, y by
// column maxima over valid rows.
AttentionPair two_way_attention(Var x, Var y, Var u, const Mask& x_mask,
                                const Mask& y_mask);

struct PooledContext {
  Var word;       // masked mean of word encoder states
  Var knowledge;  // masked max of knowledge encoder states
};
PooledContext pooled_context(Var word_states, Var knowledge_states, const Mask& mask);

// masked_softmax over l of v . tanh(H_l W_self + o_other W_other).
Var additive_attention(Var states, Var other_context, Var w_self, Var w_other,
                       Var v, const Mask& mask);

AttentionPair co_attention(Var shared_q, Var shared_a, Var u, const Mask& q_mask,
                           const Mask& a_mask);

// views: five [L] distributions; lambda: [5].
Var fuse_views(std::span<const Var> views, Var lambda, const Mask& mask,
               FusionMode mode = FusionMode::kSoftmax);

// Weighted row sum S^T alpha.
Var attend(Var states, Var weights);

struct SideAttention {
  std::array<Var, kViewCount> views;
  Var fused;
};

struct MultiViewAttention {
  SideAttention question;
  SideAttention answer;
};

MultiViewAttention multi_view_attention(Graph& graph, const EncodedPair& encoded,
                                        Var shared_q, Var shared_a,
                                        const AttentionParams& params,
                                        FusionMode mode);

// Plain values for one side, padded back to the sentence length.
struct AttentionBundle {
  std::array<Tensor, kViewCount> views;
  Tensor fused;
};

AttentionBundle to_bundle(const SideAttention& side, std::size_t length);

// Display scaling to [0, 1]; a constant vector maps to all ones.
std::vector<double> min_max_normalize(std::span<const double> values);

}  // namespace mvqa
