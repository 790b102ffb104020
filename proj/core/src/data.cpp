#include "mvqa/data.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include "mvqa/errors.hpp"
#include "text_util.hpp"

namespace mvqa {
namespace {

bool is_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u);
}

bool all_punct(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_punct);
}

constexpr std::string_view kClitics[] = {"'s", "'re", "'ve", "'ll", "'d", "'m"};

bool is_clitic(std::string_view s) {
  return std::find(std::begin(kClitics), std::end(kClitics), s) !=
         std::end(kClitics);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (static_cast<unsigned char>(c) < 128)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin,
                 std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  return join(tokens, 0, tokens.size());
}

void check_field(std::string_view field, std::size_t line) {
  if (field.empty()) throw ParseError("empty field", line);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (std::string_view chunk : detail::split_whitespace(text)) {
    std::string word = lower(chunk);
    if (all_punct(word) || is_clitic(word)) {
      out.push_back(word);
      continue;
    }
    std::string_view core = word;
    while (!core.empty() && is_punct(core.front()) && !is_clitic(core)) {
      out.emplace_back(1, core.front());
      core.remove_prefix(1);
    }
    std::vector<std::string> suffix;
    while (!core.empty() && is_punct(core.back())) {
      suffix.emplace_back(1, core.back());
      core.remove_suffix(1);
    }
    std::string clitic;
    for (std::string_view c : kClitics)
      if (core.size() > c.size() && core.ends_with(c)) {
        clitic = std::string(c);
        core.remove_suffix(c.size());
        break;
      }
    if (!core.empty()) out.emplace_back(core);
    if (!clitic.empty()) out.push_back(clitic);
    out.insert(out.end(), suffix.rbegin(), suffix.rend());
  }
  return out;
}

std::vector<std::string> tokenize_relation(std::string_view name) {
  std::string spaced(name);
  std::replace(spaced.begin(), spaced.end(), '.', ' ');
  std::replace(spaced.begin(), spaced.end(), '_', ' ');
  return tokenize(spaced);
}

void Gazetteer::add(std::string_view surface, std::string entity,
                    double confidence) {
  if (!(confidence >= 0.0 && confidence <= 1.0))
    throw ContractViolation("gazetteer confidence outside [0, 1]");
  auto tokens = tokenize(surface);
  if (tokens.empty()) throw ContractViolation("empty gazetteer surface form");
  if (entity.empty()) throw ContractViolation("empty gazetteer entity id");
  if (std::find(entity_order_.begin(), entity_order_.end(), entity) ==
      entity_order_.end())
    entity_order_.push_back(entity);
  max_ngram_ = std::max(max_ngram_, tokens.size());
  std::string key = join(tokens);
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.confidence < confidence)
    entries_[key] = GazetteerEntry{std::move(entity), confidence};
}

const GazetteerEntry* Gazetteer::find(std::string_view normalized_ngram) const {
  auto it = entries_.find(std::string(normalized_ngram));
  return it == entries_.end() ? nullptr : &it->second;
}

Gazetteer Gazetteer::load(std::istream& in) {
  Gazetteer g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(std::move(line));
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 3)
      throw ParseError("expected surface<TAB>entity<TAB>confidence", line_no);
    for (auto f : fields) check_field(f, line_no);
    auto conf = detail::parse_double(fields[2]);
    if (!conf || *conf < 0.0 || *conf > 1.0)
      throw ParseError("confidence must be a number in [0, 1]", line_no);
    try {
      g.add(fields[0], std::string(fields[1]), *conf);
    } catch (const ContractViolation& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return g;
}

std::vector<Mention> link_entities(const std::vector<std::string>& tokens,
                                   const Gazetteer& gazetteer,
                                   double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw ContractViolation("link threshold outside [0, 1]");
  std::vector<Mention> mentions;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    const std::size_t longest = std::min(gazetteer.max_ngram(), tokens.size() - i);
    for (std::size_t n = longest; n >= 1; --n) {
      const GazetteerEntry* e = gazetteer.find(join(tokens, i, i + n));
      if (e && e->confidence > threshold) {
        mentions.push_back({i, i + n, e->entity, e->confidence});
        i += n;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return mentions;
}

TokenizedSentence build_sentence(const std::vector<std::string>& tokens,
                                 const std::vector<Mention>& mentions,
                                 const VocabTable& words,
                                 const VocabTable& knowledge,
                                 std::size_t max_length) {
  if (max_length == 0) throw ContractViolation("max_length must be positive");
  const std::size_t n = std::min(tokens.size(), max_length);
  TokenizedSentence s;
  s.words.assign(max_length, VocabTable::kPad);
  s.knowledge.assign(max_length, VocabTable::kPad);
  s.mask = Mask::prefix(max_length, n);
  s.surface.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    s.words[i] = words.lookup(tokens[i]);
    s.knowledge[i] = VocabTable::kNil;
  }
  std::size_t last_end = 0;
  for (const Mention& m : mentions) {
    if (m.begin < last_end || m.end <= m.begin || m.end > tokens.size())
      throw ContractViolation("mentions must be ordered, non-empty and disjoint");
    last_end = m.end;
    const std::size_t id = knowledge.knowledge_lookup(m.entity);
    for (std::size_t p = m.begin; p < std::min(m.end, n); ++p)
      s.knowledge[p] = id;
  }
  return s;
}

void NameTable::add(std::string id, std::string name) {
  if (id.empty()) throw ContractViolation("empty id in name table");
  if (!names_.count(id)) order_.push_back(id);
  names_[std::move(id)] = std::move(name);
}

const std::string& NameTable::name(std::string_view id) const {
  auto it = names_.find(std::string(id));
  if (it == names_.end())
    throw LookupError("no name for id '" + std::string(id) + "'");
  return it->second;
}

bool NameTable::contains(std::string_view id) const {
  return names_.count(std::string(id)) > 0;
}

NameTable NameTable::load(std::istream& in) {
  NameTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(std::move(line));
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 2) throw ParseError("expected id<TAB>name", line_no);
    for (auto f : fields) check_field(f, line_no);
    t.add(std::string(fields[0]), std::string(fields[1]));
  }
  return t;
}

namespace {

struct FactPieces {
  std::vector<std::string> tokens;
  std::vector<std::string> sources;
};

FactPieces split_fact(const FactTriple& fact, const NameTable& names) {
  FactPieces p;
  auto append = [&](std::vector<std::string> toks, const std::string& id) {
    for (auto& t : toks) {
      p.tokens.push_back(std::move(t));
      p.sources.push_back(id);
    }
  };
  append(tokenize(names.name(fact.head)), fact.head);
  append(tokenize_relation(names.name(fact.relation)), fact.relation);
  append(tokenize(names.name(fact.tail)), fact.tail);
  return p;
}

}  // namespace

std::vector<std::string> fact_tokens(const FactTriple& fact,
                                     const NameTable& names) {
  return split_fact(fact, names).tokens;
}

TokenizedSentence fact_to_pair(const FactTriple& fact, const NameTable& names,
                               const VocabTable& words,
                               const VocabTable& knowledge,
                               std::size_t max_length) {
  FactPieces p = split_fact(fact, names);
  TokenizedSentence s = build_sentence(p.tokens, {}, words, knowledge, max_length);
  for (std::size_t i = 0; i < s.length(); ++i)
    s.knowledge[i] = knowledge.knowledge_lookup(p.sources[i]);
  return s;
}

CorpusFormat parse_corpus_format(std::string_view tag) {
  if (tag == "as") return CorpusFormat::kAnswerSelection;
  if (tag == "kbqa") return CorpusFormat::kKbqa;
  throw ConfigError("unknown corpus format '" + std::string(tag) +
                    "' (expected as or kbqa)");
}

std::string format_tag(CorpusFormat format) {
  return format == CorpusFormat::kAnswerSelection ? "as" : "kbqa";
}

std::vector<CorpusRow> read_corpus(std::istream& in, CorpusFormat format,
                                   bool require_label) {
  const std::size_t columns = format == CorpusFormat::kAnswerSelection ? 4 : 6;
  std::vector<CorpusRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(std::move(line));
    if (line.empty()) continue;
    auto f = detail::split(line, '\t');
    const bool label_missing = !require_label && f.size() == columns - 1;
    if (f.size() != columns && !label_missing)
      throw ParseError("expected " + std::to_string(columns) +
                           " tab-separated fields, got " +
                           std::to_string(f.size()),
                       line_no);
    CorpusRow row;
    row.line = line_no;
    for (std::size_t i = 0; i + 1 < columns && i < f.size(); ++i)
      check_field(f[i], line_no);
    row.group = std::string(f[0]);
    row.question = std::string(f[1]);
    if (format == CorpusFormat::kAnswerSelection)
      row.answer = std::string(f[2]);
    else
      row.fact = FactTriple{std::string(f[2]), std::string(f[3]),
                            std::string(f[4])};
    if (!label_missing) {
      auto label = detail::parse_int<int>(detail::trim(f[columns - 1]));
      if (!label || (*label != 0 && *label != 1))
        throw ParseError("label must be 0 or 1", line_no);
      row.label = *label;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Preprocessor::Preprocessor(const VocabTable& words, const VocabTable& knowledge,
                           const Gazetteer& gazetteer, const NameTable& names,
                           std::size_t max_length, double threshold)
    : words_(words),
      knowledge_(knowledge),
      gazetteer_(gazetteer),
      names_(names),
      max_length_(max_length),
      threshold_(threshold) {}

TokenizedSentence Preprocessor::sentence(std::string_view text) const {
  auto tokens = tokenize(text);
  auto mentions = link_entities(tokens, gazetteer_, threshold_);
  return build_sentence(tokens, mentions, words_, knowledge_, max_length_);
}

TokenizedSentence Preprocessor::fact(const FactTriple& fact) const {
  return fact_to_pair(fact, names_, words_, knowledge_, max_length_);
}

QAInstance Preprocessor::instance(const CorpusRow& row,
                                  const std::string& task) const {
  QAInstance inst;
  inst.task = task;
  inst.group = row.group;
  inst.label = row.label;
  inst.question = sentence(row.question);
  if (inst.question.length() == 0)
    throw ParseError("question has no tokens", row.line);
  if (row.fact) {
    try {
      inst.answer = fact(*row.fact);
    } catch (const LookupError& e) {
      throw ParseError(e.what(), row.line);
    }
    inst.fact = row.fact;
    inst.candidate =
        row.fact->head + " " + row.fact->relation + " " + row.fact->tail;
  } else {
    inst.answer = sentence(row.answer);
    inst.candidate = join(inst.answer.surface);
  }
  if (inst.answer.length() == 0)
    throw ParseError("answer has no tokens", row.line);
  return inst;
}

std::vector<QAInstance> load_corpus(std::istream& in, CorpusFormat format,
                                    const std::string& task,
                                    const Preprocessor& pre) {
  std::vector<QAInstance> out;
  for (const CorpusRow& row : read_corpus(in, format))
    out.push_back(pre.instance(row, task));
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return in;
}

std::vector<QAInstance> load_corpus(const std::string& path,
                                    CorpusFormat format,
                                    const std::string& task,
                                    const Preprocessor& pre) {
  auto in = open_input(path);
  return load_corpus(in, format, task, pre);
}

void write_corpus(std::ostream& out, const std::vector<QAInstance>& instances,
                  CorpusFormat format) {
  for (const QAInstance& inst : instances) {
    out << inst.group << '\t' << join(inst.question.surface) << '\t';
    if (format == CorpusFormat::kKbqa) {
      if (!inst.fact)
        throw ContractViolation("KBQA output needs fact triples");
      out << inst.fact->head << '\t' << inst.fact->relation << '\t'
          << inst.fact->tail;
    } else {
      out << join(inst.answer.surface);
    }
    out << '\t' << inst.label << '\n';
  }
}

void add_corpus_words(VocabTable& vocab, const std::vector<CorpusRow>& rows,
                      const NameTable& names) {
  for (const CorpusRow& row : rows) {
    for (const auto& t : tokenize(row.question)) vocab.add(t);
    if (row.fact) {
      try {
        for (const auto& t : fact_tokens(*row.fact, names)) vocab.add(t);
      } catch (const LookupError& e) {
        throw ParseError(e.what(), row.line);
      }
    } else {
      for (const auto& t : tokenize(row.answer)) vocab.add(t);
    }
  }
}

VocabTable build_knowledge_vocab(const NameTable& names,
                                 const Gazetteer& gazetteer) {
  VocabTable v;
  for (const auto& id : names.ids()) v.add(id);
  for (const auto& id : gazetteer.entities()) v.add(id);
  return v;
}

}  // namespace mvqa
