#pragma once

#include <random>
#include <string>
#include <vector>

#include "mvqa/config.hpp"
#include "mvqa/data.hpp"
#include "mvqa/embeddings.hpp"
#include "mvqa/model.hpp"

namespace mvqa::test {

inline ModelConfig tiny_config(Variant variant = Variant::kMva, std::uint64_t seed = 3) {
  ModelConfig c;
  c.variant = variant;
  c.mode = TrainingMode::kMtl;
  TaskConfig as{"as", CorpusFormat::kAnswerSelection};
  TaskConfig kb{"kbqa", CorpusFormat::kKbqa};
  c.tasks = {as, kb};
  c.word_dim = 5;
  c.knowledge_dim = 4;
  c.hidden = 4;
  c.shared_hidden = 4;
  c.filter_widths = {2, 3};
  c.feature_maps = 3;
  c.max_length = 6;
  c.dropout = 0.0;
  c.init_range = 0.5;
  c.seed = seed;
  return c;
}

inline VocabTable tiny_vocab(std::size_t n, const std::string& prefix) {
  VocabTable v;
  for (std::size_t i = 0; i < n; ++i) v.add(prefix + std::to_string(i));
  return v;
}

// Random sentence of `length` valid tokens in a `max_length` window.
inline TokenizedSentence random_sentence(std::mt19937_64& rng, std::size_t length,
                                         std::size_t max_length, std::size_t words,
                                         std::size_t knowledge) {
  TokenizedSentence s;
  std::uniform_int_distribution<std::size_t> w(VocabTable::kUnk, words - 1);
  std::uniform_int_distribution<std::size_t> k(VocabTable::kNil, knowledge - 1);
  for (std::size_t i = 0; i < max_length; ++i) {
    const bool valid = i < length;
    s.words.push_back(valid ? w(rng) : VocabTable::kPad);
    s.knowledge.push_back(valid ? k(rng) : VocabTable::kPad);
    if (valid) s.surface.push_back("t" + std::to_string(s.words.back()));
  }
  s.mask = Mask::prefix(max_length, length);
  return s;
}

inline QAInstance random_instance(std::mt19937_64& rng, const ModelConfig& c,
                                  const std::string& task, std::size_t words,
                                  std::size_t knowledge) {
  std::uniform_int_distribution<std::size_t> len(1, c.max_length);
  QAInstance inst;
  inst.question = random_sentence(rng, len(rng), c.max_length, words, knowledge);
  inst.answer = random_sentence(rng, len(rng), c.max_length, words, knowledge);
  inst.label = static_cast<int>(rng() % 2);
  inst.task = task;
  inst.group = "g" + std::to_string(rng() % 1000);
  inst.candidate = "c" + std::to_string(rng());
  return inst;
}

}  // namespace mvqa::test
