// One PASS/FAIL line per acceptance criterion. Exit status 1 when a
// gating criterion fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "gradient_cases.hpp"
#include "json.hpp"
#include "metric_oracles.hpp"
#include "mvqa/cli.hpp"
#include "mvqa/pipeline.hpp"

using namespace mvqa;
namespace fs = std::filesystem;

namespace {

const std::string kRoot = MVQA_SOURCE_DIR;
const std::string kSynthetic = kRoot + "/data/synthetic/";

struct Outcome {
  enum Kind { kPass, kFail, kNotApplicable } kind;
  std::string detail;
  bool gating = true;
};

Outcome pass(std::string d) { return {Outcome::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::kFail, std::move(d)}; }
Outcome check(bool ok, std::string d) { return ok ? pass(std::move(d)) : fail(std::move(d)); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Outcome paper_numbers() {
  return {Outcome::kNotApplicable,
          "benchmark corpora and GPU-scale training are unavailable; acceptance is "
          "property-based",
          false};
}

Outcome gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  double worst_op = 0;
  std::string worst_op_name;
  std::size_t ops_checked = 0;
  for (const auto& c : test::op_gradient_cases()) {
    const double e = test::gradient_check(c.fn, c.inputs, 1e-5, c.training);
    ++ops_checked;
    if (e > worst_op) {
      worst_op = e;
      worst_op_name = c.name;
    }
  }
  double worst_e2e = 0;
  std::string worst_e2e_name;
  std::size_t scalars = 0;
  for (auto variant : {Variant::kMva, Variant::kMtqa}) {
    auto r = test::end_to_end_gradients(variant, 31, 1);
    scalars += r.checked;
    if (r.worst > worst_e2e) {
      worst_e2e = r.worst;
      worst_e2e_name = r.worst_name;
    }
  }
  const double secs = seconds_since(start);
  return check(worst_op < 1e-4 && worst_e2e < 1e-3 && secs < 120,
               std::to_string(ops_checked) + " op cases, worst " + fmt(worst_op) + " (" +
                   worst_op_name + ") < 1e-4; end-to-end worst " + fmt(worst_e2e) + " over " +
                   std::to_string(scalars) + " scalars < 1e-3; " + fmt(secs, 3) + "s < 120s");
}

bool distribution(const Tensor& p, std::size_t valid) {
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0 || (i >= valid && p[i] != 0.0)) return false;
    total += p[i];
  }
  return std::abs(total - 1.0) <= 1e-12;
}

Outcome attention_invariants() {
  ModelConfig c = test::tiny_config(Variant::kMva, 41);
  c.max_length = 8;
  const auto words = test::tiny_vocab(20, "w"), know = test::tiny_vocab(12, "k");
  Model model(c, words, know);
  std::mt19937_64 rng(41);
  std::size_t bad_dist = 0, bad_sym = 0, bad_uniform = 0;
  const AttentionParams& ap = *model.attention_params();
  for (int i = 0; i < 200; ++i) {
    auto inst = test::random_instance(rng, c, i % 2 ? "as" : "kbqa", words.size(), know.size());
    auto [q, a] = model.attention(inst);
    for (std::size_t v = 0; v < kViewCount; ++v) {
      bad_dist += !distribution(q.views[v], inst.question.length());
      bad_dist += !distribution(a.views[v], inst.answer.length());
    }
    bad_dist += !distribution(q.fused, inst.question.length());
    bad_dist += !distribution(a.fused, inst.answer.length());

    // Identical inputs with a symmetric bilinear form.
    Graph g;
    const std::size_t n = inst.question.length();
    Var x = g.constant(test::random_tensor({n, 4}, rng));
    Tensor u = test::random_tensor({4, 4}, rng);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t s = 0; s < r; ++s) u.at(r, s) = u.at(s, r);
    Mask m(n);
    for (auto pair : {two_way_attention(x, x, g.constant(u), m, m),
                      co_attention(x, x, g.constant(u), m, m)})
      for (std::size_t k = 0; k < n; ++k)
        bad_sym += std::abs(pair.x.value()[k] - pair.y.value()[k]) > 1e-12;

    // Uniform views fuse to uniform under any nonnegative weights.
    const std::size_t len = c.max_length;
    Mask valid = Mask::prefix(len, n);
    Tensor flat({len});
    for (std::size_t k = 0; k < n; ++k) flat[k] = 1.0 / n;
    std::vector<Var> views(kViewCount, g.constant(flat));
    for (Var lambda : {g.parameter(*ap.lambda_q), g.constant(test::random_tensor({5}, rng, 0, 3))}) {
      Tensor f = fuse_views(views, lambda, valid).value();
      for (std::size_t k = 0; k < len; ++k)
        bad_uniform += k < n ? std::abs(f[k] - 1.0 / n) > 1e-12 : f[k] != 0.0;
    }
  }
  return check(bad_dist + bad_sym + bad_uniform == 0,
               "200 instances: " + std::to_string(bad_dist) + " invalid distributions, " +
                   std::to_string(bad_sym) + " symmetry mismatches, " +
                   std::to_string(bad_uniform) + " uniform-fusion mismatches");
}

Outcome reduction() {
  ModelConfig c = test::tiny_config(Variant::kMva, 51);
  const auto words = test::tiny_vocab(20, "w"), know = test::tiny_vocab(12, "k");
  Model model(c, words, know);
  std::mt19937_64 rng(51);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    auto inst = test::random_instance(rng, c, i % 2 ? "as" : "kbqa", words.size(), know.size());
    Graph g;
    ForwardOptions uniform, mean;
    uniform.uniform_attention = true;
    mean.variant = Variant::kMtqa;
    ForwardResult a = model.forward(g, inst, uniform), b = model.forward(g, inst, mean);
    for (auto [x, y] : {std::pair{a.pooled_q, b.pooled_q}, std::pair{a.pooled_a, b.pooled_a},
                        std::pair{a.probabilities, b.probabilities}})
      for (std::size_t k = 0; k < x.value().size(); ++k)
        worst = std::max(worst, std::abs(x.value()[k] - y.value()[k]));
  }
  return check(worst <= 1e-10, "50 instances, max |difference| " + fmt(worst) + " <= 1e-10");
}

struct Trained {
  Model model;
  TrainingResult result;
};

Trained train_config(ModelConfig c, const Experiment& e, const Resources& r,
                     std::optional<std::size_t> epochs = {}) {
  Model m = build_model(c, e, r);
  TrainOptions opts;
  opts.epochs = epochs;
  TrainingResult result = train(m, e.train, e.dev, opts);
  return {std::move(m), std::move(result)};
}

Outcome overfit() {
  const auto start = std::chrono::steady_clock::now();
  ModelConfig c = load_config(kSynthetic + "overfit.conf");
  Resources r = load_resources(c);
  Experiment e = prepare_experiment(c, r);
  const std::size_t questions = e.train.at("as").size() / 5 + e.train.at("kbqa").size() / 5;
  Trained t = train_config(c, e, r);
  const double p1 = precision_at_1(score_groups(t.model, e.train.at("as"))).value;
  const double acc = accuracy(score_groups(t.model, e.train.at("kbqa"))).value;
  const double secs = seconds_since(start);
  return check(p1 >= 0.95 && acc >= 0.95 && t.result.epochs.size() <= 50 && secs < 600,
               std::to_string(questions) + " questions, vocabulary " +
                   std::to_string(e.words.size()) + ": train P@1 " + fmt(p1) +
                   " >= 0.95, train Accuracy " + fmt(acc) + " >= 0.95 after " +
                   std::to_string(t.result.epochs.size()) + " epochs, " + fmt(secs, 3) + "s");
}

double dev_headline(const Model& m, const Experiment& e, const std::string& task,
                    CorpusFormat format) {
  return headline_metric(format, score_groups(m, e.dev.at(task)));
}

Outcome mtl_vs_stl() {
  ModelConfig base = load_config(kSynthetic + "small.conf");
  Resources r = load_resources(base);
  Experiment e = prepare_experiment(base, r);
  const std::size_t epochs = 25;
  int wins = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ModelConfig mtl = base;
    mtl.seed = seed;
    Trained joint = train_config(mtl, e, r, epochs);
    bool both = true;
    per_seed << " seed " << seed << ":";
    for (const auto& task : base.tasks) {
      ModelConfig stl = mtl;
      stl.mode = TrainingMode::kStl;
      stl.tasks = {task};
      Experiment single;
      single.words = e.words;
      single.knowledge = e.knowledge;
      single.train[task.name] = e.train.at(task.name);
      single.dev[task.name] = e.dev.at(task.name);
      Trained alone = train_config(stl, single, r, epochs);
      const double a = dev_headline(joint.model, e, task.name, task.format);
      const double b = dev_headline(alone.model, e, task.name, task.format);
      both = both && a >= b;
      per_seed << ' ' << task.name << ' ' << fmt(a, 3) << (a >= b ? ">=" : "<") << fmt(b, 3);
    }
    wins += both;
  }
  Outcome o = check(wins >= 3, std::to_string(wins) + "/5 seeds with MTL >= STL on both tasks (" +
                                   std::to_string(epochs) + " epochs);" + per_seed.str());
  o.gating = false;
  return o;
}

Outcome metric_oracles() {
  std::mt19937_64 rng(71);
  auto groups = oracle::random_groups(rng, 1000);
  const bool ok = precision_at_1(groups).value == oracle::p_at_1(groups) &&
                  mean_reciprocal_rank(groups).value == oracle::mrr(groups) &&
                  mean_average_precision(groups).value == oracle::map(groups) &&
                  accuracy(groups).value == oracle::accuracy(groups);
  return check(ok, "1000 groups of size 1-20: P@1, MRR, MAP, Accuracy equal the oracles exactly");
}

Outcome transe_toy() {
  auto in = open_input(kRoot + "/data/toy/triples.tsv");
  KnowledgeGraph kg = load_triples(in);
  TransEConfig cfg;
  cfg.dim = 20;
  cfg.seed = 3;
  TransEModel m = train_transe(kg.triples, kg.entities, kg.relations, cfg);
  std::size_t hits = 0, queries = 0;
  auto known = [&](KBTriple t) {
    return std::find(kg.triples.begin(), kg.triples.end(), t) != kg.triples.end();
  };
  for (const auto& t : kg.triples) {
    for (bool tail : {true, false}) {
      const double target = transe_distance(t.head, t.relation, t.tail, m.entities, m.relations);
      bool best = true;
      for (std::size_t e = VocabTable::kReserved; e < kg.entities.size(); ++e) {
        KBTriple c = t;
        (tail ? c.tail : c.head) = e;
        if (c == t || known(c)) continue;
        if (transe_distance(c.head, c.relation, c.tail, m.entities, m.relations) <= target)
          best = false;
      }
      hits += best;
      ++queries;
    }
  }
  const double h1 = static_cast<double>(hits) / queries;

  auto loop_in = open_input(kRoot + "/data/toy/self_loop.tsv");
  KnowledgeGraph loop = load_triples(loop_in);
  TransEModel lm = train_transe(loop.triples, loop.entities, loop.relations, cfg);
  const auto& t = loop.triples.front();
  const double d = transe_distance(t.head, t.relation, t.tail, lm.entities, lm.relations);
  return check(h1 >= 0.9 && d < 0.1, std::to_string(kg.entities.size() - VocabTable::kReserved) +
                                         " entities: filtered hits@1 " + fmt(h1) +
                                         " >= 0.9; self-loop distance " + fmt(d) + " < 0.1");
}

Outcome ablation() {
  const fs::path out = fs::temp_directory_path() / "mvqa_acceptance_ablation.json";
  std::ostringstream log, err;
  const std::size_t epochs = 10;
  const int code = run_cli({"ablate", "-c", kSynthetic + "small.conf", "--epochs",
                            std::to_string(epochs), "-o", out.string()},
                           log, err);
  if (code != kExitOk) return fail("ablate exited with " + std::to_string(code) + ": " + err.str());
  std::ifstream in(out);
  auto j = nlohmann::json::parse(in);
  std::size_t cells = 0, completed = 0;
  for (const auto& row : j["rows"])
    for (const auto& task : {"as", "kbqa"})
      cells += row["metrics"].contains(task) && row["metrics"][task].is_number();
  std::istringstream lines(log.str());
  std::string line;
  while (std::getline(lines, line))
    completed += line.find(": " + std::to_string(epochs) + " epochs") != std::string::npos;
  const bool labels = j["rows"].size() == 6 && j["rows"][0]["label"] == "full model" &&
                      j["rows"][1]["label"] == "w/o word view";
  return check(labels && cells == 12 && completed == 6,
               std::to_string(j["rows"].size()) + " rows x 2 tasks, " + std::to_string(cells) +
                   "/12 cells populated, " + std::to_string(completed) + "/6 models ran all " +
                   std::to_string(epochs) + " epochs");
}

Outcome determinism() {
  ModelConfig c = load_config(kSynthetic + "small.conf");
  Resources r = load_resources(c);
  Experiment e = prepare_experiment(c, r);
  Trained a = train_config(c, e, r, 3), b = train_config(c, e, r, 3);
  std::vector<double> ma, mb;
  for (const auto& task : c.tasks) {
    ma.push_back(dev_headline(a.model, e, task.name, task.format));
    mb.push_back(dev_headline(b.model, e, task.name, task.format));
  }
  const bool loss = a.result.epochs[0].train_loss == b.result.epochs[0].train_loss;
  const bool params = a.model.parameters().snapshot() == b.model.parameters().snapshot();
  return check(loss && ma == mb && params,
               std::string("epoch-1 loss ") + (loss ? "bit-identical" : "differs") +
                   ", final metrics " + (ma == mb ? "identical" : "differ") + ", parameters " +
                   (params ? "identical" : "differ"));
}

Outcome golden() {
  const std::string dir = kRoot + "/data/golden/";
  auto gin = open_input(dir + "gazetteer.tsv");
  Gazetteer gaz = Gazetteer::load(gin);
  auto nin = open_input(dir + "names.tsv");
  NameTable names = NameTable::load(nin);
  VocabTable know = build_knowledge_vocab(names, gaz);
  std::vector<std::string> problems;
  auto expect = [&](const std::string& what, const TokenizedSentence& s,
                    const std::vector<std::string>& words,
                    const std::vector<std::string>& knowledge, const VocabTable& vocab) {
    std::vector<std::string> w, k;
    for (std::size_t i = 0; i < s.length(); ++i) {
      w.push_back(vocab.symbol(s.words[i]));
      k.push_back(s.knowledge[i] == VocabTable::kNil ? "-" : know.symbol(s.knowledge[i]));
    }
    if (w != words || k != knowledge) problems.push_back(what);
  };
  using S = std::vector<std::string>;
  {
    auto in = open_input(dir + "as_example.tsv");
    auto rows = read_corpus(in, CorpusFormat::kAnswerSelection);
    VocabTable words;
    add_corpus_words(words, rows, names);
    Preprocessor pre(words, know, gaz, names);
    QAInstance inst = pre.instance(rows.at(0), "as");
    expect("AS question", inst.question, S{"what", "was", "johnny", "appleseed", "'s", "real", "name", "?"},
           S{"-", "-", "johnny_appleseed", "johnny_appleseed", "-", "-", "-", "-"}, words);
    expect("AS answer", inst.answer,
           S{"john", "chapman", ",", "aka", "american", "folk", "hero", "johnny", "appleseed", "."},
           S{"john_chapman", "john_chapman", "-", "-", "-", "-", "-", "johnny_appleseed",
             "johnny_appleseed", "-"},
           words);
  }
  {
    auto in = open_input(dir + "kbqa_example.tsv");
    auto rows = read_corpus(in, CorpusFormat::kKbqa);
    VocabTable words;
    add_corpus_words(words, rows, names);
    Preprocessor pre(words, know, gaz, names);
    QAInstance inst = pre.instance(rows.at(0), "kbqa");
    expect("KBQA question", inst.question,
           S{"what", "is", "the", "name", "of", "a", "track", "created", "by", "katy", "perry", "?"},
           S{"-", "-", "-", "-", "-", "-", "-", "-", "-", "katy_perry", "katy_perry", "-"}, words);
    expect("KBQA answer", inst.answer, S{"katy", "perry", "music", "artist", "track", "witness"},
           S{"katy_perry", "katy_perry", "music.artist.track", "music.artist.track",
             "music.artist.track", "witness"},
           words);
  }
  std::string detail = "AS and KBQA examples: word and knowledge sequences ";
  if (problems.empty()) return pass(detail + "match exactly");
  for (const auto& p : problems) detail += "[" + p + " differs] ";
  return fail(detail);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"paper-number reproduction", paper_numbers},
      {"gradient suite", gradient_suite},
      {"attention invariants", attention_invariants},
      {"reduction equivalence", reduction},
      {"overfit smoke test", overfit},
      {"MTL interaction (advisory)", mtl_vs_stl},
      {"metric oracles", metric_oracles},
      {"TransE toy", transe_toy},
      {"ablation harness", ablation},
      {"determinism", determinism},
      {"preprocessing golden files", golden},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("threw: ") + e.what());
    }
    const char* tag = o.kind == Outcome::kPass ? "PASS" : o.kind == Outcome::kFail ? "FAIL" : "N/A ";
    std::cout << tag << "  [" << std::setw(2) << i + 1 << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
    if (o.kind == Outcome::kFail && o.gating) ++failures;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " gating failure(s)"
                         : "acceptance: all gating criteria pass")
            << std::endl;
  return failures ? 1 : 0;
}
