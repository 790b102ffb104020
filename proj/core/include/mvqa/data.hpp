#pragma once

#include <cstddef>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mvqa/embeddings.hpp"
#include "mvqa/tensor.hpp"

namespace mvqa {

inline constexpr std::size_t kDefaultMaxLength = 40;
inline constexpr double kDefaultLinkThreshold = 0.2;

// Parallel word / knowledge id sequences, right-padded to a fixed length.
struct TokenizedSentence {
  std::vector<std::size_t> words;
  std::vector<std::size_t> knowledge;  // VocabTable::kNil where unlinked
  Mask mask;
  std::vector<std::string> surface;  // the valid tokens

  std::size_t length() const { return surface.size(); }
  bool operator==(const TokenizedSentence&) const = default;
};

// Lowercases, splits on whitespace and peels leading/trailing ASCII
// punctuation and a trailing "'s"-style clitic into separate tokens.
std::vector<std::string> tokenize(std::string_view text);
// Relation names: '.' and '_' act as separators before tokenize().
std::vector<std::string> tokenize_relation(std::string_view name);

struct GazetteerEntry {
  std::string entity;
  double confidence = 0;
};

// Surface n-gram -> entity dictionary standing in for a web linker.
class Gazetteer {
 public:
  // The surface form is normalized with tokenize().
  void add(std::string_view surface, std::string entity, double confidence);
  const GazetteerEntry* find(std::string_view normalized_ngram) const;
  std::size_t max_ngram() const { return max_ngram_; }
  std::size_t size() const { return entries_.size(); }
  // Entity ids in insertion order, without duplicates.
  const std::vector<std::string>& entities() const { return entity_order_; }

  // TSV `surface<TAB>entity-id<TAB>confidence`.
  static Gazetteer load(std::istream& in);

 private:
  std::unordered_map<std::string, GazetteerEntry> entries_;
  std::vector<std::string> entity_order_;
  std::size_t max_ngram_ = 0;
};

struct Mention {
  std::size_t begin = 0;  // token span [begin, end)
  std::size_t end = 0;
  std::string entity;
  double confidence = 0;
  bool operator==(const Mention&) const = default;
};

// Greedy longest-match-first, left to right, non-overlapping. Keeps
// mentions whose confidence is strictly above `threshold`.
std::vector<Mention> link_entities(const std::vector<std::string>& tokens,
                                   const Gazetteer& gazetteer,
                                   double threshold = kDefaultLinkThreshold);

// Truncates to max_length, then pads. Mentions are clipped with their
// tokens.
TokenizedSentence build_sentence(const std::vector<std::string>& tokens,
                                 const std::vector<Mention>& mentions,
                                 const VocabTable& words,
                                 const VocabTable& knowledge,
                                 std::size_t max_length = kDefaultMaxLength);

// id -> surface name for entities and relations.
class NameTable {
 public:
  void add(std::string id, std::string name);
  const std::string& name(std::string_view id) const;  // LookupError
  bool contains(std::string_view id) const;
  const std::vector<std::string>& ids() const { return order_; }

  // TSV `id<TAB>surface name`.
  static NameTable load(std::istream& in);

 private:
  std::unordered_map<std::string, std::string> names_;
  std::vector<std::string> order_;
};

struct FactTriple {
  std::string head, relation, tail;
  bool operator==(const FactTriple&) const = default;
};

// Word sequence from the tokenized head name, relation name and tail
// name; each token carries the id it came from.
TokenizedSentence fact_to_pair(const FactTriple& fact, const NameTable& names,
                               const VocabTable& words,
                               const VocabTable& knowledge,
                               std::size_t max_length = kDefaultMaxLength);
std::vector<std::string> fact_tokens(const FactTriple& fact,
                                     const NameTable& names);

enum class CorpusFormat { kAnswerSelection, kKbqa };

// "as" or "kbqa"; ConfigError otherwise.
CorpusFormat parse_corpus_format(std::string_view tag);
std::string format_tag(CorpusFormat format);

// One row of a corpus file, before preprocessing.
struct CorpusRow {
  std::string group;
  std::string question;
  std::string answer;               // answer selection only
  std::optional<FactTriple> fact;   // KBQA only
  int label = 0;
  std::size_t line = 0;
};

// AS:   group-id<TAB>question<TAB>answer<TAB>label
// KBQA: group-id<TAB>question<TAB>head<TAB>relation<TAB>tail<TAB>label
// With `require_label == false` a missing trailing label reads as 0.
std::vector<CorpusRow> read_corpus(std::istream& in, CorpusFormat format,
                                   bool require_label = true);

struct QAInstance {
  TokenizedSentence question;
  TokenizedSentence answer;
  int label = 0;
  std::string task;
  std::string group;
  // Candidate identity within its group: answer text or the fact ids.
  std::string candidate;
  std::optional<FactTriple> fact;
  bool operator==(const QAInstance&) const = default;
};

// Everything needed to turn raw rows into id sequences.
class Preprocessor {
 public:
  Preprocessor(const VocabTable& words, const VocabTable& knowledge,
               const Gazetteer& gazetteer, const NameTable& names,
               std::size_t max_length = kDefaultMaxLength,
               double threshold = kDefaultLinkThreshold);

  TokenizedSentence sentence(std::string_view text) const;
  TokenizedSentence fact(const FactTriple& fact) const;
  QAInstance instance(const CorpusRow& row, const std::string& task) const;
  std::size_t max_length() const { return max_length_; }

 private:
  const VocabTable& words_;
  const VocabTable& knowledge_;
  const Gazetteer& gazetteer_;
  const NameTable& names_;
  std::size_t max_length_;
  double threshold_;
};

std::vector<QAInstance> load_corpus(std::istream& in, CorpusFormat format,
                                    const std::string& task,
                                    const Preprocessor& pre);
std::vector<QAInstance> load_corpus(const std::string& path,
                                    CorpusFormat format,
                                    const std::string& task,
                                    const Preprocessor& pre);
// Writes instances back in the corpus format they came from.
void write_corpus(std::ostream& out, const std::vector<QAInstance>& instances,
                  CorpusFormat format);

// Adds every token of the rows (KBQA facts via their names) to `vocab`.
void add_corpus_words(VocabTable& vocab, const std::vector<CorpusRow>& rows,
                      const NameTable& names);
// Knowledge vocabulary: every id known to the names table or gazetteer.
VocabTable build_knowledge_vocab(const NameTable& names,
                                 const Gazetteer& gazetteer);

// Opens `path` for reading or throws ParseError.
std::ifstream open_input(const std::string& path);

}  // namespace mvqa
