#include "mvqa/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "mvqa/errors.hpp"
#include "text_util.hpp"

namespace mvqa {

namespace {
const char* const kReservedSymbols[] = {"<pad>", "<unk>", "<nil>"};
}

VocabTable::VocabTable() {
  for (const char* s : kReservedSymbols) add(s);
}

VocabTable::VocabTable(const std::vector<std::string>& symbols) : VocabTable() {
  for (const auto& s : symbols) add(s);
}

std::size_t VocabTable::add(std::string_view symbol) {
  std::string key(symbol);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const std::size_t id = symbols_.size();
  symbols_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<std::size_t> VocabTable::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t VocabTable::lookup(std::string_view symbol) const {
  return find(symbol).value_or(kUnk);
}

std::size_t VocabTable::knowledge_lookup(std::string_view symbol) const {
  auto id = find(symbol);
  if (!id || *id < kReserved) return kNil;
  return *id;
}

std::size_t VocabTable::at(std::string_view symbol) const {
  auto id = find(symbol);
  if (!id) throw LookupError("unknown symbol '" + std::string(symbol) + "'");
  return *id;
}

const std::string& VocabTable::symbol(std::size_t id) const {
  if (id >= symbols_.size())
    throw LookupError("symbol id " + std::to_string(id) + " out of range");
  return symbols_[id];
}

EmbeddingTable random_embeddings(const VocabTable& vocab, std::size_t dim,
                                 double range, std::mt19937_64& rng,
                                 bool trainable) {
  if (dim == 0) throw ContractViolation("embedding dimension must be positive");
  EmbeddingTable table{vocab, Tensor(Shape{vocab.size(), dim}), trainable};
  std::uniform_real_distribution<double> unif(-range, range);
  for (std::size_t r = VocabTable::kPad + 1; r < vocab.size(); ++r)
    for (auto& x : table.vectors.row(r)) x = unif(rng);
  return table;
}

std::size_t read_vectors_into(std::istream& in, EmbeddingTable& table) {
  const std::size_t dim = table.dim();
  std::string line;
  std::size_t line_no = 0, replaced = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = detail::split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != dim + 1)
      throw ParseError("expected token and " + std::to_string(dim) +
                           " values, got " + std::to_string(fields.size()) +
                           " fields",
                       line_no);
    std::vector<double> values(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      auto v = detail::parse_double(fields[j + 1]);
      if (!v || !std::isfinite(*v))
        throw ParseError("bad number '" + std::string(fields[j + 1]) + "'",
                         line_no);
      values[j] = *v;
    }
    auto id = table.vocab.find(fields[0]);
    if (!id || *id == VocabTable::kPad) continue;
    std::copy(values.begin(), values.end(), table.vectors.row(*id).begin());
    ++replaced;
  }
  return replaced;
}

EmbeddingTable load_word_vectors(std::istream& in, const VocabTable& vocab,
                                 std::size_t dim, std::mt19937_64& rng,
                                 bool trainable) {
  EmbeddingTable table = random_embeddings(vocab, dim, 0.1, rng, trainable);
  read_vectors_into(in, table);
  return table;
}

void write_vectors(std::ostream& out, const EmbeddingTable& table) {
  for (std::size_t r = VocabTable::kReserved; r < table.vocab.size(); ++r) {
    out << table.vocab.symbol(r);
    for (double x : table.vectors.row(r)) out << ' ' << detail::format_double(x);
    out << '\n';
  }
}

KnowledgeGraph load_triples(std::istream& in) {
  KnowledgeGraph kg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(std::move(line));
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 3)
      throw ParseError("expected head<TAB>relation<TAB>tail", line_no);
    for (auto f : fields)
      if (f.empty()) throw ParseError("empty field", line_no);
    kg.triples.push_back({kg.entities.add(fields[0]),
                          kg.relations.add(fields[1]),
                          kg.entities.add(fields[2])});
  }
  return kg;
}

namespace {

double norm_of(std::span<const double> x, DistanceNorm norm) {
  double s = 0;
  if (norm == DistanceNorm::kL1) {
    for (double v : x) s += std::abs(v);
    return s;
  }
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void difference(std::span<const double> h, std::span<const double> r,
                std::span<const double> t, std::vector<double>& out) {
  out.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] + r[i] - t[i];
}

// d ||x|| / dx
void distance_gradient(std::vector<double>& x, DistanceNorm norm) {
  if (norm == DistanceNorm::kL1) {
    for (auto& v : x) v = v > 0 ? 1.0 : v < 0 ? -1.0 : 0.0;
    return;
  }
  double n = norm_of(x, norm);
  if (n == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return;
  }
  for (auto& v : x) v /= n;
}

void normalize_row(std::span<double> row) {
  double n = norm_of(row, DistanceNorm::kL2);
  if (n == 0.0) return;
  for (auto& v : row) v /= n;
}

}  // namespace

double transe_distance(std::size_t head, std::size_t relation, std::size_t tail,
                       const EmbeddingTable& entities,
                       const EmbeddingTable& relations, DistanceNorm norm) {
  const std::size_t ne = entities.vocab.size(), nr = relations.vocab.size();
  if (head >= ne || tail >= ne || relation >= nr)
    throw LookupError("transe_distance: id out of range");
  if (entities.dim() != relations.dim())
    throw DimensionError("entity and relation dimensions differ");
  std::vector<double> diff;
  difference(entities.vectors.row(head), relations.vectors.row(relation),
             entities.vectors.row(tail), diff);
  return norm_of(diff, norm);
}

double margin_loss(double positive, double negative, double margin) {
  return std::max(0.0, margin + positive - negative);
}

TransEModel train_transe(const std::vector<KBTriple>& triples,
                         const VocabTable& entities,
                         const VocabTable& relations,
                         const TransEConfig& config) {
  if (triples.empty()) throw ContractViolation("train_transe: no triples");
  if (config.margin <= 0) throw ContractViolation("train_transe: margin <= 0");
  if (config.learning_rate <= 0)
    throw ContractViolation("train_transe: learning rate <= 0");
  for (const auto& t : triples)
    if (t.head >= entities.size() || t.tail >= entities.size() ||
        t.relation >= relations.size() || t.head < VocabTable::kReserved ||
        t.tail < VocabTable::kReserved || t.relation < VocabTable::kReserved)
      throw LookupError("train_transe: triple references unknown id");

  std::mt19937_64 rng(config.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(config.dim));
  TransEModel model{random_embeddings(entities, config.dim, bound, rng, false),
                    random_embeddings(relations, config.dim, bound, rng, false),
                    {}};
  Tensor& ent = model.entities.vectors;
  Tensor& rel = model.relations.vectors;
  for (std::size_t r = 1; r < rel.rows(); ++r) normalize_row(rel.row(r));
  for (std::size_t e = 1; e < ent.rows(); ++e) normalize_row(ent.row(e));

  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> known;
  for (const auto& t : triples) known.emplace(t.head, t.relation, t.tail);

  const std::size_t first = VocabTable::kReserved;
  const std::size_t n_entities = entities.size() - first;
  std::uniform_int_distribution<std::size_t> pick_entity(0, n_entities - 1);
  std::bernoulli_distribution pick_head(0.5);
  const double lr = config.learning_rate;

  // A corruption of `t`, or nullopt when every corruption is known.
  auto corrupt = [&](const KBTriple& t) -> std::optional<KBTriple> {
    for (int attempt = 0; attempt < 64; ++attempt) {
      KBTriple c = t;
      (pick_head(rng) ? c.head : c.tail) = first + pick_entity(rng);
      if (!known.count({c.head, c.relation, c.tail})) return c;
    }
    std::vector<KBTriple> all;
    for (std::size_t e = first; e < entities.size(); ++e) {
      if (!known.count({e, t.relation, t.tail})) all.push_back({e, t.relation, t.tail});
      if (!known.count({t.head, t.relation, e})) all.push_back({t.head, t.relation, e});
    }
    if (all.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
    return all[pick(rng)];
  };

  // Moves (h, r, t) by -step * d||h + r - t|| / d(.)
  std::vector<double> grad;
  auto descend = [&](const KBTriple& t, double step) {
    difference(ent.row(t.head), rel.row(t.relation), ent.row(t.tail), grad);
    distance_gradient(grad, config.norm);
    auto h = ent.row(t.head);
    auto r = rel.row(t.relation);
    auto tl = ent.row(t.tail);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      h[i] -= step * grad[i];
      r[i] -= step * grad[i];
      tl[i] += step * grad[i];
    }
  };

  std::vector<std::size_t> order(triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t idx : order) {
      const KBTriple& pos = triples[idx];
      for (std::size_t k = 0; k < std::max<std::size_t>(1, config.negatives);
           ++k) {
        auto neg = corrupt(pos);
        const double d_pos = transe_distance(pos.head, pos.relation, pos.tail,
                                             model.entities, model.relations,
                                             config.norm);
        if (!neg) {
          total += d_pos;
          descend(pos, lr);
          continue;
        }
        const double d_neg = transe_distance(neg->head, neg->relation,
                                             neg->tail, model.entities,
                                             model.relations, config.norm);
        const double loss = margin_loss(d_pos, d_neg, config.margin);
        total += loss;
        if (loss <= 0) continue;
        descend(pos, lr);
        descend(*neg, -lr);
      }
    }
    for (std::size_t e = first; e < ent.rows(); ++e) normalize_row(ent.row(e));
    model.epoch_loss.push_back(total);
  }
  return model;
}

}  // namespace mvqa
