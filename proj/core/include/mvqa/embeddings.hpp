#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mvqa/tensor.hpp"

namespace mvqa {

// Symbol <-> id map with three reserved ids.
class VocabTable {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kNil = 2;
  static constexpr std::size_t kReserved = 3;

  VocabTable();
  explicit VocabTable(const std::vector<std::string>& symbols);

  // Id of `symbol`, inserting it if new.
  std::size_t add(std::string_view symbol);
  std::optional<std::size_t> find(std::string_view symbol) const;
  // UNK for unknown words.
  std::size_t lookup(std::string_view symbol) const;
  // NIL for unlinked or unknown knowledge symbols.
  std::size_t knowledge_lookup(std::string_view symbol) const;
  // Throws LookupError for unknown symbols.
  std::size_t at(std::string_view symbol) const;

  const std::string& symbol(std::size_t id) const;
  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  bool operator==(const VocabTable& other) const {
    return symbols_ == other.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EmbeddingTable {
  VocabTable vocab;
  Tensor vectors;  // [vocab.size() x dim], row kPad all zero
  bool trainable = true;

  std::size_t dim() const { return vectors.cols(); }
  std::span<const double> row(std::string_view symbol) const {
    return vectors.row(vocab.at(symbol));
  }
};

// Uniform [-range, range] rows, zero PAD row.
EmbeddingTable random_embeddings(const VocabTable& vocab, std::size_t dim,
                                 double range, std::mt19937_64& rng,
                                 bool trainable = true);

// Text vector file: `token v1 ... vd` per line. Tokens absent from the
// file keep uniform [-0.1, 0.1] initial values; tokens absent from
// `vocab` are skipped.
EmbeddingTable load_word_vectors(std::istream& in, const VocabTable& vocab,
                                 std::size_t dim, std::mt19937_64& rng,
                                 bool trainable = true);
// Overwrites rows of `table` found in the file. Returns rows replaced.
std::size_t read_vectors_into(std::istream& in, EmbeddingTable& table);
// Writes every non-reserved row in the same text format.
void write_vectors(std::ostream& out, const EmbeddingTable& table);

struct KBTriple {
  std::size_t head = 0;
  std::size_t relation = 0;
  std::size_t tail = 0;
  bool operator==(const KBTriple&) const = default;
};

struct KnowledgeGraph {
  VocabTable entities;
  VocabTable relations;
  std::vector<KBTriple> triples;
};

// TSV `head<TAB>relation<TAB>tail`.
KnowledgeGraph load_triples(std::istream& in);

enum class DistanceNorm { kL1, kL2 };

struct TransEConfig {
  std::size_t dim = 100;
  double margin = 1.0;
  double learning_rate = 0.01;
  std::size_t epochs = 1000;
  std::size_t negatives = 1;
  DistanceNorm norm = DistanceNorm::kL2;
  std::uint64_t seed = 1;
};

struct TransEModel {
  EmbeddingTable entities;
  EmbeddingTable relations;
  // Summed margin loss per epoch.
  std::vector<double> epoch_loss;
};

// ||v_h + v_r - v_t|| under `norm`.
double transe_distance(std::size_t head, std::size_t relation, std::size_t tail,
                       const EmbeddingTable& entities,
                       const EmbeddingTable& relations,
                       DistanceNorm norm = DistanceNorm::kL2);

// max(0, margin + positive - negative)
double margin_loss(double positive, double negative, double margin);

// SGD on the margin ranking loss with filtered uniform head/tail
// corruption. Entity rows are renormalized to unit L2 norm after every
// epoch. When every corruption of a triple is itself a known triple, the
// positive distance is minimized alone.
TransEModel train_transe(const std::vector<KBTriple>& triples,
                         const VocabTable& entities,
                         const VocabTable& relations,
                         const TransEConfig& config);

}  // namespace mvqa
