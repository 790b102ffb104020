#include <sstream>

#include "doctest.h"
#include "mvqa/config.hpp"
#include "mvqa/errors.hpp"

using namespace mvqa;

namespace {

ModelConfig parse(const std::string& text, const std::string& base = "") {
  std::istringstream in(text);
  return parse_config(in, base);
}

const std::string kTwoTasks =
    "tasks = as, kbqa\ntask.as.format = as\ntask.as.train = a.tsv\n"
    "task.kbqa.format = kbqa\ntask.kbqa.train = k.tsv\n";

}  // namespace

TEST_CASE("defaults") {
  ModelConfig c;
  CHECK(c.hidden == 200);
  CHECK(c.filter_widths == std::vector<std::size_t>{2, 3});
  CHECK(c.feature_maps == 100);
  CHECK(c.learning_rate == 0.0005);
  CHECK(c.dropout == 0.5);
  CHECK(c.batch_size == 128);
  CHECK(c.l2 == 0.0001);
  CHECK(c.max_length == 40);
  CHECK(c.init_range == 0.1);
  CHECK(c.knowledge_dim == 100);
  CHECK(c.word_dim == 300);
  CHECK(c.patience == 5);
  CHECK(!c.knowledge_trainable);
  CHECK(c.views.size() == 5);
}

TEST_CASE("parsing") {
  ModelConfig c = parse("# comment\n" + kTwoTasks +
                            "hidden = 8\nvariant = mtqa\nviews = word, co-attention\n"
                            "task.kbqa.hidden = 8\ntask.as.weight = 2\n",
                        "/data");
  CHECK(c.hidden == 8);
  CHECK(c.variant == Variant::kMtqa);
  CHECK(c.tasks.size() == 2);
  CHECK(c.task("as").train == "/data/a.tsv");
  CHECK(c.task("as").weight == 2.0);
  CHECK(c.views == std::set<View>{View::kWord, View::kCoAttention});
  CHECK_THROWS_AS(c.task("x"), LookupError);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parse errors") {
  try {
    parse("hidden = 4\nno equals here\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse(kTwoTasks + "colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse(kTwoTasks + "hidden = 4\nhidden = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse(kTwoTasks + "hidden = lots\n"), ConfigError);
  CHECK_THROWS_AS(parse(kTwoTasks + "task.other.hidden = 4\n"), ConfigError);
}

TEST_CASE("validation") {
  ModelConfig c = parse(kTwoTasks);
  c.validate();
  auto bad = [&](auto mutate) {
    ModelConfig m = c;
    mutate(m);
    CHECK_THROWS_AS(m.validate(), ConfigError);
  };
  bad([](ModelConfig& m) { m.tasks.clear(); });
  bad([](ModelConfig& m) { m.learning_rate = 0; });
  bad([](ModelConfig& m) { m.dropout = 1.0; });
  bad([](ModelConfig& m) { m.mode = TrainingMode::kStl; });
  bad([](ModelConfig& m) { m.tasks[1].hidden = 7; });
  bad([](ModelConfig& m) { m.views.clear(); });
  bad([](ModelConfig& m) { m.view_weights_q[0] = -1; });
}

TEST_CASE("round trip") {
  ModelConfig c = parse(kTwoTasks + "fusion = convex\nseed = 99\nlearn_view_weights = true\n");
  ModelConfig back = ModelConfig::from_kv(c.to_kv());
  CHECK(back == c);
  std::stringstream buf;
  write_config(buf, c);
  CHECK(parse_config(buf) == c);
}

TEST_CASE("hidden readings and view weights") {
  ModelConfig c = parse(kTwoTasks + "hidden = 10\nhidden_reading = total\n");
  CHECK(c.direction_hidden(c.task("as")) == 5);
  c.views.erase(View::kWord);
  CHECK(c.effective_weights_q() == ViewWeights{0, 1, 1, 1, 1});
}
