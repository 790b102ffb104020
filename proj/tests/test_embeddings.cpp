#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mvqa/embeddings.hpp"
#include "mvqa/errors.hpp"
#include "test_support.hpp"

using namespace mvqa;

TEST_CASE("vocab reserved ids and lookups") {
  VocabTable v;
  CHECK(v.size() == VocabTable::kReserved);
  const auto a = v.add("apple");
  CHECK(a == VocabTable::kReserved);
  CHECK(v.add("apple") == a);
  CHECK(v.lookup("pear") == VocabTable::kUnk);
  CHECK(v.knowledge_lookup("pear") == VocabTable::kNil);
  CHECK(v.symbol(a) == "apple");
  CHECK_THROWS_AS(v.at("pear"), LookupError);
  VocabTable w({"x", "y", "x"});
  CHECK(w.size() == VocabTable::kReserved + 2);
  for (std::size_t id = VocabTable::kReserved; id < w.size(); ++id)
    CHECK(w.at(w.symbol(id)) == id);
}

TEST_CASE("word vector loading") {
  VocabTable v({"a", "b"});
  std::mt19937_64 rng(1);
  std::istringstream one("a 1 2 3\n");
  auto t = load_word_vectors(one, v, 3, rng);
  CHECK(t.row("a")[0] == 1.0);
  CHECK(t.row("a")[1] == 2.0);
  CHECK(t.row("a")[2] == 3.0);
  for (double x : t.vectors.row(VocabTable::kPad)) CHECK(x == 0.0);

  std::istringstream empty("");
  auto e = load_word_vectors(empty, v, 4, rng);
  for (std::size_t r = VocabTable::kUnk; r < v.size(); ++r)
    for (double x : e.vectors.row(r)) CHECK(std::abs(x) <= 0.1);

  std::istringstream full("a 0.5 0.25\nb -1 7\nzzz 3 3\n");
  auto f = load_word_vectors(full, v, 2, rng);
  CHECK(f.row("b")[1] == 7.0);
  CHECK(f.row("a")[0] == 0.5);

  std::istringstream bad("a 1 2\n");
  CHECK_THROWS_AS(load_word_vectors(bad, v, 3, rng), ParseError);
}

TEST_CASE("vector files round trip") {
  VocabTable v({"a", "b", "c"});
  std::mt19937_64 rng(2);
  auto t = random_embeddings(v, 3, 0.5, rng);
  std::stringstream buf;
  write_vectors(buf, t);
  auto back = load_word_vectors(buf, v, 3, rng);
  for (std::size_t r = VocabTable::kReserved; r < v.size(); ++r)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(back.vectors.at(r, c) == doctest::Approx(t.vectors.at(r, c)).epsilon(1e-15));
}

TEST_CASE("transe distance") {
  VocabTable ents({"h", "t"}), rels({"r"});
  EmbeddingTable e{ents, Tensor({ents.size(), 2})};
  EmbeddingTable r{rels, Tensor({rels.size(), 2})};
  const auto h = ents.at("h"), t = ents.at("t"), rr = rels.at("r");
  e.vectors.at(t, 0) = 1.0;
  CHECK(transe_distance(h, rr, t, e, r) == 1.0);
  e.vectors.at(h, 0) = 0.3;
  e.vectors.at(h, 1) = -0.2;
  r.vectors.at(rr, 0) = 0.7;
  r.vectors.at(rr, 1) = 0.2;
  CHECK(transe_distance(h, rr, t, e, r) == doctest::Approx(0.0));
  CHECK(transe_distance(h, rr, t, e, r, DistanceNorm::kL1) == doctest::Approx(0.0));
  CHECK(margin_loss(0.0, 1.5, 1.0) == 0.0);
  CHECK(margin_loss(0.5, 1.0, 1.0) == 0.5);
}

TEST_CASE("transe distance matches direct norms and is rotation invariant") {
  std::mt19937_64 rng(4);
  VocabTable ents({"a", "b", "c"}), rels({"p", "q"});
  auto e = random_embeddings(ents, 2, 1.0, rng);
  auto r = random_embeddings(rels, 2, 1.0, rng);
  const double angle = 0.83;
  auto rotate = [&](EmbeddingTable t) {
    for (std::size_t i = 0; i < t.vectors.rows(); ++i) {
      const double x = t.vectors.at(i, 0), y = t.vectors.at(i, 1);
      t.vectors.at(i, 0) = std::cos(angle) * x - std::sin(angle) * y;
      t.vectors.at(i, 1) = std::sin(angle) * x + std::cos(angle) * y;
    }
    return t;
  };
  auto er = rotate(e), rr = rotate(r);
  for (std::size_t h = 3; h < 6; ++h)
    for (std::size_t rel = 3; rel < 5; ++rel)
      for (std::size_t t = 3; t < 6; ++t) {
        double l1 = 0, l2 = 0;
        for (std::size_t c = 0; c < 2; ++c) {
          const double d = e.vectors.at(h, c) + r.vectors.at(rel, c) - e.vectors.at(t, c);
          l1 += std::abs(d);
          l2 += d * d;
        }
        CHECK(std::abs(transe_distance(h, rel, t, e, r) - std::sqrt(l2)) < 1e-12);
        CHECK(std::abs(transe_distance(h, rel, t, e, r, DistanceNorm::kL1) - l1) < 1e-12);
        CHECK(std::abs(transe_distance(h, rel, t, er, rr) - std::sqrt(l2)) < 1e-12);
      }
}

TEST_CASE("transe training keeps unit entity norms and a zero pad row") {
  std::istringstream in("a\tr1\tb\nc\tr1\td\nb\tr2\ta\n");
  KnowledgeGraph kg = load_triples(in);
  CHECK(kg.triples.size() == 3);
  TransEConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 20;
  auto m = train_transe(kg.triples, kg.entities, kg.relations, cfg);
  CHECK(m.epoch_loss.size() == 20);
  for (std::size_t r = VocabTable::kReserved; r < kg.entities.size(); ++r) {
    double n = 0;
    for (double x : m.entities.vectors.row(r)) n += x * x;
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-9);
  }
  for (double x : m.entities.vectors.row(VocabTable::kPad)) CHECK(x == 0.0);
  for (double x : m.relations.vectors.row(VocabTable::kPad)) CHECK(x == 0.0);
}

TEST_CASE("malformed triples") {
  std::istringstream in("a\tr1\n");
  CHECK_THROWS_AS(load_triples(in), ParseError);
}
