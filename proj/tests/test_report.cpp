#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "mvqa/report.hpp"

using namespace mvqa;
using nlohmann::json;

TEST_CASE("display normalization") {
  std::vector<double> w{0.1, 0.3, 0.6};
  auto n = min_max_normalize(w);
  CHECK(n[0] == 0.0);
  CHECK(n[1] == doctest::Approx(0.4));
  CHECK(n[2] == 1.0);
}

TEST_CASE("attention dump of a single-token sentence") {
  ModelConfig c = test::tiny_config();
  auto words = test::tiny_vocab(12, "w"), know = test::tiny_vocab(9, "k");
  Model model(c, words, know);
  std::mt19937_64 rng(3);
  auto inst = test::random_instance(rng, c, "as", words.size(), know.size());
  inst.question = test::random_sentence(rng, 1, c.max_length, words.size(), know.size());
  auto [q, a] = model.attention(inst);
  json j = json::parse(attention_dump_json(inst, q, a, model.score(inst)));
  const auto& side = j["question"];
  CHECK(side["tokens"].size() == 1);
  for (const auto& [name, view] : side["views"].items()) {
    CHECK(view["raw"] == json::array({1.0}));
    CHECK(view["normalized"] == json::array({1.0}));
  }
  CHECK(j["answer"]["tokens"].size() == inst.answer.length());
  CHECK(j["answer"]["views"].contains("knowledge semantic"));
}

TEST_CASE("ablation labels") {
  CHECK(ablation_label({}) == "full model");
  CHECK(ablation_label({View::kWord}) == "w/o word view");
  CHECK(ablation_label({View::kCoAttention}) == "w/o co-attention view");
  CHECK(ablation_label({View::kKnowledgeSemantic}) == "w/o knowledge semantic view");
}

TEST_CASE("report fields") {
  Report r;
  r.seed = 9;
  std::vector<RankedGroup> groups{RankedGroup{"g1", {{0.9, 1, "a"}, {0.2, 0, "b"}}},
                                  RankedGroup{"g2", {{0.9, 0, "c"}, {0.2, 1, "d"}}},
                                  RankedGroup{"g3", {{0.5, 0, "e"}}}};
  add_task_results(r, "as", CorpusFormat::kAnswerSelection, groups);
  add_task_results(r, "kbqa", CorpusFormat::kKbqa, groups);
  json j = json::parse(report_json(r));
  CHECK(j["seed"] == 9);
  REQUIRE(j["results"].size() == 5);
  std::vector<std::string> metrics;
  for (const auto& m : j["results"]) {
    metrics.push_back(m["metric"]);
    for (const auto* key : {"task", "metric", "value", "n_groups", "excluded_groups"})
      CHECK(m.contains(key));
  }
  CHECK(metrics == std::vector<std::string>{"P@1", "MRR", "MAP", "Accuracy", "MRR"});
  CHECK(j["results"][1]["excluded_groups"] == 1);
  CHECK(j["results"][0]["value"] == doctest::Approx(1.0 / 3));
  CHECK(j["groups"].size() == 6);
  CHECK(j["groups"][2]["first_positive_rank"] == 0);
  CHECK(report_table(r).find("Accuracy") != std::string::npos);
}
