#include "mvqa/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvqa/errors.hpp"
#include "mvqa/pipeline.hpp"
#include "text_util.hpp"

namespace mvqa {

namespace {

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
      return;
    }
    file_.open(path);
    if (!file_) throw ConfigError("cannot open '" + path + "' for writing");
    stream_ = &file_;
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string epoch_line(const EpochLog& log) {
  std::ostringstream s;
  s << "epoch " << log.epoch << "  loss";
  for (const auto& [task, loss] : log.train_loss) s << ' ' << task << '=' << fixed(loss);
  s << "  dev";
  for (const auto& [task, metric] : log.dev_metric) s << ' ' << task << '=' << fixed(metric);
  s << "  " << fixed(log.seconds) << 's';
  if (log.improved) s << "  *";
  return s.str();
}

nlohmann::json epoch_json(const EpochLog& log) {
  return {{"epoch", log.epoch},
          {"train_loss", log.train_loss},
          {"dev_metric", log.dev_metric},
          {"selection", log.selection},
          {"improved", log.improved},
          {"seconds", log.seconds}};
}

struct ResourceFlags {
  std::string gazetteer;
  std::string names;
};

Resources model_resources(const Model& model, const ResourceFlags& flags) {
  ModelConfig c = model.config();
  if (!flags.gazetteer.empty()) c.gazetteer = flags.gazetteer;
  if (!flags.names.empty()) c.names = flags.names;
  c.stopwords.clear();
  Resources r = load_resources(c);
  r.stopwords = model.stopwords();
  return r;
}

struct TrainArgs {
  std::string config, output, log;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  ModelConfig config = load_config(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.epochs) config.epochs = *a.epochs;
  Resources resources = load_resources(config);
  Experiment experiment = prepare_experiment(config, resources);
  Model model = build_model(config, experiment, resources);
  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log);
    if (!log) throw ConfigError("cannot open '" + a.log + "' for writing");
  }
  TrainOptions options;
  options.on_epoch = [&](const EpochLog& e) {
    out << epoch_line(e) << std::endl;
    if (log.is_open()) log << epoch_json(e).dump() << std::endl;
  };
  TrainingResult result = train(model, experiment.train, experiment.dev, options);
  save_checkpoint(model, a.output);
  out << "best epoch " << result.best_epoch << "  selection "
      << fixed(result.best_selection) << "\ncheckpoint " << a.output << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, corpus, task, json;
  ResourceFlags resources;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  Model model = load_checkpoint(a.checkpoint);
  Resources resources = model_resources(model, a.resources);
  auto data = load_task_corpus(model, resources, a.corpus, a.task);
  if (data.empty()) throw ContractViolation("corpus '" + a.corpus + "' is empty");
  Report report;
  evaluate_task(report, model, a.task, data);
  report.config = model.config().to_kv();
  report.seed = model.config().seed;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (a.json.empty()) {
    out << report_json(report);
  } else {
    Output json(a.json, out);
    *json << report_json(report);
  }
  out << report_table(report);
  return kExitOk;
}

struct RankArgs {
  std::string checkpoint, input, task, output;
  ResourceFlags resources;
};

int cmd_rank(const RankArgs& a, std::ostream& out) {
  Model model = load_checkpoint(a.checkpoint);
  Resources resources = model_resources(model, a.resources);
  auto data = load_task_corpus(model, resources, a.input, a.task, false);
  if (data.empty()) throw ContractViolation("no candidates in '" + a.input + "'");
  Output dst(a.output, out);
  // Candidates keep their groups; each group is ranked on its own.
  std::vector<std::string> order;
  std::map<std::string, std::vector<QAInstance>> groups;
  for (auto& inst : data) {
    if (!groups.count(inst.group)) order.push_back(inst.group);
    groups[inst.group].push_back(std::move(inst));
  }
  for (const auto& g : order) {
    const auto& candidates = groups[g];
    auto ranked = rank(model, candidates);
    for (std::size_t k = 0; k < ranked.size(); ++k)
      *dst << g << '\t' << (k + 1) << '\t' << detail::format_double(ranked[k].score)
           << '\t' << candidates[ranked[k].index].candidate << '\n';
  }
  return kExitOk;
}

struct AttnArgs {
  std::string checkpoint, input, task, output;
  std::size_t index = 0;
  ResourceFlags resources;
};

int cmd_attn(const AttnArgs& a, std::ostream& out) {
  Model model = load_checkpoint(a.checkpoint);
  if (model.config().variant != Variant::kMva)
    throw UnsupportedOperation("attention dumps need the multi-view attention variant");
  Resources resources = model_resources(model, a.resources);
  auto data = load_task_corpus(model, resources, a.input, a.task, false);
  if (a.index >= data.size())
    throw ContractViolation("instance index " + std::to_string(a.index) + " out of range (" +
                            std::to_string(data.size()) + " instances)");
  const QAInstance& inst = data[a.index];
  auto [q, ans] = model.attention(inst);
  Output dst(a.output, out);
  *dst << attention_dump_json(inst, q, ans, model.score(inst));
  return kExitOk;
}

struct AblateArgs {
  std::string config, output;
  std::vector<std::string> views;
  std::optional<std::size_t> epochs;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  ModelConfig config = load_config(a.config);
  Resources resources = load_resources(config);
  Experiment experiment = prepare_experiment(config, resources);
  AblationOptions options;
  options.epochs = a.epochs;
  if (!a.views.empty()) {
    options.views.clear();
    for (const auto& v : a.views)
      for (auto part : detail::split(v, ','))
        if (!detail::trim(part).empty()) options.views.push_back(parse_view(detail::trim(part)));
  }
  options.on_model = [&](const std::string& label, const TrainingResult& r) {
    out << label << ": " << r.epochs.size() << " epochs, best " << r.best_epoch << std::endl;
  };
  AblationTable table = run_ablation(config, experiment, resources, options);
  if (!a.output.empty()) {
    Output dst(a.output, out);
    *dst << ablation_json(table);
  }
  out << ablation_text(table);
  return kExitOk;
}

struct TransEArgs {
  std::string triples, entities, relations, norm = "l2";
  TransEConfig config;
};

int cmd_transe(const TransEArgs& a, std::ostream& out) {
  auto in = open_input(a.triples);
  KnowledgeGraph kg = load_triples(in);
  if (kg.triples.empty()) throw ContractViolation("no triples in '" + a.triples + "'");
  TransEConfig config = a.config;
  config.norm = a.norm == "l1" ? DistanceNorm::kL1 : DistanceNorm::kL2;
  TransEModel m = train_transe(kg.triples, kg.entities, kg.relations, config);
  {
    Output e(a.entities, out);
    write_vectors(*e, m.entities);
  }
  {
    Output r(a.relations, out);
    write_vectors(*r, m.relations);
  }
  if (!m.epoch_loss.empty())
    out << "final epoch loss " << detail::format_double(m.epoch_loss.back()) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view attention QA: training, evaluation and analysis", "mvqa"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("-c,--config", train_args.config, "Config file")->required();
  train_cmd->add_option("-o,--output", train_args.output, "Checkpoint to write")->required();
  train_cmd->add_option("--log", train_args.log, "Per-epoch JSON lines log");
  train_cmd->add_option("--epochs", train_args.epochs, "Override the epoch budget");
  train_cmd->add_option("--seed", train_args.seed, "Override the seed");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled corpus");
  eval_cmd->add_option("-m,--checkpoint", eval_args.checkpoint, "Checkpoint")->required();
  eval_cmd->add_option("-i,--corpus", eval_args.corpus, "Corpus file")->required();
  eval_cmd->add_option("-t,--task", eval_args.task, "Task name")->required();
  eval_cmd->add_option("--json", eval_args.json, "Write the JSON report here instead of stdout");
  eval_cmd->add_option("--gazetteer", eval_args.resources.gazetteer, "Override the gazetteer");
  eval_cmd->add_option("--names", eval_args.resources.names, "Override the name table");

  RankArgs rank_args;
  auto* rank_cmd = app.add_subcommand("rank", "Rank candidates by model score");
  rank_cmd->add_option("-m,--checkpoint", rank_args.checkpoint, "Checkpoint")->required();
  rank_cmd->add_option("-i,--input", rank_args.input, "Question file (labels optional)")->required();
  rank_cmd->add_option("-t,--task", rank_args.task, "Task name")->required();
  rank_cmd->add_option("-o,--output", rank_args.output, "TSV output (default stdout)");
  rank_cmd->add_option("--gazetteer", rank_args.resources.gazetteer, "Override the gazetteer");
  rank_cmd->add_option("--names", rank_args.resources.names, "Override the name table");

  AttnArgs attn_args;
  auto* attn_cmd = app.add_subcommand("attn", "Dump attention weights for one instance");
  attn_cmd->add_option("-m,--checkpoint", attn_args.checkpoint, "Checkpoint")->required();
  attn_cmd->add_option("-i,--input", attn_args.input, "Corpus file")->required();
  attn_cmd->add_option("-t,--task", attn_args.task, "Task name")->required();
  attn_cmd->add_option("--index", attn_args.index, "Row of the instance in the file");
  attn_cmd->add_option("-o,--output", attn_args.output, "JSON output (default stdout)");
  attn_cmd->add_option("--gazetteer", attn_args.resources.gazetteer, "Override the gazetteer");
  attn_cmd->add_option("--names", attn_args.resources.names, "Override the name table");

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "Retrain with each attention view disabled");
  ablate_cmd->add_option("-c,--config", ablate_args.config, "Config file")->required();
  ablate_cmd->add_option("--views", ablate_args.views,
                         "Views to ablate one by one (default all five)")
      ->delimiter(',');
  ablate_cmd->add_option("-o,--output", ablate_args.output, "JSON matrix output");
  ablate_cmd->add_option("--epochs", ablate_args.epochs, "Override the epoch budget");

  TransEArgs transe_args;
  auto* transe_cmd = app.add_subcommand("transe", "Train TransE knowledge embeddings");
  transe_cmd->add_option("-i,--triples", transe_args.triples, "Triple TSV")->required();
  transe_cmd->add_option("--entities", transe_args.entities, "Entity vector output")->required();
  transe_cmd->add_option("--relations", transe_args.relations, "Relation vector output")
      ->required();
  transe_cmd->add_option("--dim", transe_args.config.dim, "Embedding size");
  transe_cmd->add_option("--epochs", transe_args.config.epochs, "Epochs");
  transe_cmd->add_option("--margin", transe_args.config.margin, "Ranking margin");
  transe_cmd->add_option("--lr", transe_args.config.learning_rate, "SGD learning rate");
  transe_cmd->add_option("--negatives", transe_args.config.negatives, "Negatives per triple");
  transe_cmd->add_option("--seed", transe_args.config.seed, "Seed");
  transe_cmd->add_option("--norm", transe_args.norm, "Distance norm")
      ->check(CLI::IsMember({"l1", "l2"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*rank_cmd) return cmd_rank(rank_args, out);
    if (*attn_cmd) return cmd_attn(attn_args, out);
    if (*ablate_cmd) return cmd_ablate(ablate_args, out);
    if (*transe_cmd) return cmd_transe(transe_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace mvqa
