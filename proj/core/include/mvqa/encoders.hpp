#pragma once

#include <random>
#include <string>
#include <vector>

#include "mvqa/data.hpp"
#include "mvqa/graph.hpp"
#include "mvqa/parameters.hpp"

namespace mvqa {

// Independent forward and backward LSTMs. Gate blocks within w_x, w_h and
// bias are ordered input, forget, output, cell.
struct BiLstmParams {
  struct Direction {
    Parameter* w_x = nullptr;   // [input_dim x 4h]
    Parameter* w_h = nullptr;   // [h x 4h]
    Parameter* bias = nullptr;  // [4h]
  };
  Direction forward;
  Direction backward;
  std::size_t input_dim = 0;
  std::size_t hidden = 0;  // per direction

  std::size_t output_dim() const { return 2 * hidden; }

  static BiLstmParams create(ParameterSet& params, const std::string& prefix,
                             std::size_t input_dim, std::size_t hidden,
                             double init_range, std::mt19937_64& rng);
};

struct KnowledgeCnnParams {
  std::vector<std::size_t> widths;  // ascending
  std::size_t feature_maps = 0;
  std::size_t input_dim = 0;
  std::vector<Parameter*> kernels;  // [width * input_dim x feature_maps]
  std::vector<Parameter*> biases;   // [feature_maps]

  std::size_t output_dim() const { return widths.size() * feature_maps; }

  static KnowledgeCnnParams create(ParameterSet& params,
                                   const std::string& prefix,
                                   std::vector<std::size_t> widths,
                                   std::size_t feature_maps,
                                   std::size_t input_dim, double init_range,
                                   std::mt19937_64& rng);
};

struct TaskEncoderParams {
  BiLstmParams word;
  KnowledgeCnnParams knowledge;

  std::size_t output_dim() const {
    return word.output_dim() + knowledge.output_dim();
  }
};

// Row l is [forward h_l : backward h_l]. Padded steps carry the state
// through unchanged and emit zero rows.
Var bilstm_encode(Var input, const Mask& mask, const BiLstmParams& params);

// Same-length convolution per width with tanh, concatenated on the
// feature axis in ascending width order; padded rows are zero.
Var knowledge_cnn(Var input, const Mask& mask, const KnowledgeCnnParams& params);

// One sentence after the task-specific encoder.
struct EncodedSide {
  Var word_embeddings;       // [n x d_ew]
  Var knowledge_embeddings;  // [n x d_ek]
  Var word_states;           // [n x 2h]
  Var knowledge_states;      // [n x d_f]
  Var encoded;               // [n x (2h + d_f)]
  Mask mask;                 // all valid, length n
};

struct EncodedPair {
  EncodedSide question;
  EncodedSide answer;
};

// Only the valid prefix of each right-padded sentence is encoded; the
// outputs equal the valid rows of a full-length masked pass.
EncodedSide encode_sentence(Graph& graph, const TokenizedSentence& sentence,
                            Parameter& word_table, Parameter& knowledge_table,
                            const TaskEncoderParams& params,
                            std::size_t max_length);

// Siamese: question and answer share `params`.
EncodedPair encode_pair(Graph& graph, const TokenizedSentence& question,
                        const TokenizedSentence& answer,
                        Parameter& word_table, Parameter& knowledge_table,
                        const TaskEncoderParams& params,
                        std::size_t max_length = kDefaultMaxLength);

}  // namespace mvqa
