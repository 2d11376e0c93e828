#include "folq/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "folq/bench.hpp"
#include "folq/gnn.hpp"
#include "folq/kg.hpp"
#include "folq/symbolic.hpp"
#include "folq/threading.hpp"
#include "folq/trainer.hpp"
#include "folq/vm.hpp"

namespace folq {

namespace {

namespace fs = std::filesystem;

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void info(const std::string& msg) {
  if (g_log_level >= 1) std::cerr << msg << "\n";
}

struct GlobalFlags {
  uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  std::string log_level = "info";

  int resolved_threads() const {
    return threads > 0 ? threads : default_threads();
  }
};

SplitSet load_dataset_splits(const std::string& dataset_dir) {
  return load_splits_manifest((fs::path(dataset_dir) / "manifest.json").string());
}

std::vector<QuerySample> load_dataset_split(const std::string& dataset_dir,
                                            const std::string& split,
                                            const Vocabulary& vocab) {
  const auto path = fs::path(dataset_dir) / (split + ".jsonl");
  return samples_from_jsonl(read_file(path.string()), vocab);
}

std::unique_ptr<Projector> make_projector(
    const std::string& checkpoint, bool symbolic, int threads,
    const KnowledgeGraph& graph, std::optional<GnnParameters>& params_out) {
  if (symbolic) return std::make_unique<SymbolicProjector>();
  if (checkpoint.empty()) {
    raise("need either --checkpoint or --symbolic");
  }
  params_out = load_checkpoint(checkpoint);
  if (params_out->num_relations !=
      static_cast<int>(graph.num_relations())) {
    raise("checkpoint was trained with ", params_out->num_relations,
          " relations but the graph has ", graph.num_relations());
  }
  return std::make_unique<NeuralProjector>(*params_out, threads);
}

// ---------------------------------------------------------------- generate

int cmd_generate(const GlobalFlags& global, const std::string& manifest,
                 const std::string& out_dir, int per_type,
                 const std::vector<std::string>& count_overrides,
                 int max_answers) {
  SplitSet splits = load_splits_manifest(manifest);

  GenerationConfig cfg;
  cfg.seed = global.seed;
  cfg.threads = global.resolved_threads();
  cfg.max_answers = max_answers;
  for (const auto& tmpl : query_templates()) {
    cfg.counts[tmpl.name] = per_type;
  }
  for (const std::string& override_spec : count_overrides) {
    const auto eq = override_spec.find('=');
    if (eq == std::string::npos) {
      raise("--count expects type=N, got '", override_spec, "'");
    }
    const std::string type = override_spec.substr(0, eq);
    template_by_name(type);  // validates the name
    cfg.counts[type] = std::stoi(override_spec.substr(eq + 1));
  }

  info("generating queries...");
  const Dataset dataset = generate_dataset(splits, cfg);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  // Self-contained dataset directory: graph files plus query files.
  const nlohmann::json manifest_json =
      nlohmann::json::parse(read_file(manifest));
  const fs::path manifest_dir = fs::path(manifest).parent_path();
  nlohmann::ordered_json local_manifest;
  for (const char* split : {"train", "valid", "test"}) {
    fs::path src(manifest_json.at(split).get<std::string>());
    if (src.is_relative()) src = manifest_dir / src;
    const std::string name = std::string(split) + ".txt";
    write_file((out / name).string(), read_file(src.string()));
    local_manifest[split] = name;
  }
  write_file((out / "manifest.json").string(), local_manifest.dump(2) + "\n");

  for (const char* split : {"train", "valid", "test"}) {
    const auto& samples = dataset.by_name(split);
    write_file((out / (std::string(split) + ".jsonl")).string(),
               samples_to_jsonl(samples, *splits.vocab));
  }

  // Per-type statistics table.
  std::ostringstream stats;
  stats << "| type | train | valid | test |\n|---|---|---|---|\n";
  for (const auto& tmpl : query_templates()) {
    auto count_of = [&tmpl](const std::vector<QuerySample>& samples) {
      size_t c = 0;
      for (const auto& s : samples) c += s.qtype == tmpl.name ? 1 : 0;
      return c;
    };
    stats << "| " << tmpl.name << " | " << count_of(dataset.train) << " | "
          << count_of(dataset.valid) << " | " << count_of(dataset.test)
          << " |\n";
  }
  write_file((out / "stats.md").string(), stats.str());

  info(concat("wrote dataset to ", out_dir, " (", dataset.train.size(),
              "/", dataset.valid.size(), "/", dataset.test.size(),
              " train/valid/test queries)"));
  return 0;
}

// ------------------------------------------------------------------- train

struct TrainFlags {
  std::string dataset_dir;
  std::string out_checkpoint;
  std::string config_path;
  std::string log_csv;
  int checkpoint_every = 0;
  int eval_interval = 0;
  int eval_samples = 200;
  TrainConfig train;
  GnnConfig gnn;
};

void apply_config_file(TrainFlags& flags, const CLI::App* cmd) {
  if (flags.config_path.empty()) return;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(flags.config_path));
  } catch (const nlohmann::json::exception& e) {
    raise("config ", flags.config_path, ": ", e.what());
  }
  auto set_if_unset = [&](const char* flag, auto& target, const char* key) {
    if (!j.contains(key)) return;
    if (cmd->count(flag) > 0) return;  // explicit flags win
    j.at(key).get_to(target);
  };
  set_if_unset("--dropout-p", flags.train.dropout_p, "dropout_p");
  set_if_unset("--learning-rate", flags.train.learning_rate, "learning_rate");
  set_if_unset("--batch-size", flags.train.batch_size, "batch_size");
  set_if_unset("--iterations", flags.train.iterations, "iterations");
  set_if_unset("--adv-temperature", flags.train.adversarial_temperature,
               "adversarial_temperature");
  set_if_unset("--layers", flags.gnn.num_layers, "num_layers");
  set_if_unset("--hidden-dim", flags.gnn.hidden_dim, "hidden_dim");
  set_if_unset("--mlp-layers", flags.gnn.mlp_layers, "mlp_layers");
  set_if_unset("--mlp-hidden", flags.gnn.mlp_hidden, "mlp_hidden");
  if (j.contains("pair_inverse_dropout") &&
      cmd->count("--no-pair-inverse-dropout") == 0) {
    j.at("pair_inverse_dropout").get_to(flags.train.pair_inverse_dropout);
  }
  if (j.contains("sample_weighting") && cmd->count("--sample-weighting") == 0) {
    const auto mode = j.at("sample_weighting").get<std::string>();
    if (mode == "uniform-queries") {
      flags.train.weighting = TrainConfig::SampleWeighting::kUniformQueries;
    } else if (mode == "uniform-answers") {
      flags.train.weighting = TrainConfig::SampleWeighting::kUniformAnswers;
    } else {
      raise("config: unknown sample_weighting '", mode, "'");
    }
  }
}

int cmd_train(const GlobalFlags& global, TrainFlags& flags,
              const CLI::App* cmd) {
  apply_config_file(flags, cmd);
  flags.train.seed = global.seed;
  flags.train.threads = global.resolved_threads();

  const SplitSet splits = load_dataset_splits(flags.dataset_dir);
  const auto train_samples =
      load_dataset_split(flags.dataset_dir, "train", *splits.vocab);
  if (train_samples.empty()) raise("train: dataset has no training queries");

  std::vector<QuerySample> valid_samples;
  if (flags.eval_interval > 0) {
    valid_samples = load_dataset_split(flags.dataset_dir, "valid",
                                       *splits.vocab);
    if (valid_samples.size() > static_cast<size_t>(flags.eval_samples)) {
      valid_samples.resize(static_cast<size_t>(flags.eval_samples));
    }
  }

  const std::string csv_path =
      flags.log_csv.empty() ? flags.out_checkpoint + ".loss.csv"
                            : flags.log_csv;
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) raise("cannot write loss log: ", csv_path);
  csv << "step,loss,wall_ms\n";
  const auto start = std::chrono::steady_clock::now();

  TrainRun run;
  run.train = flags.train;
  run.gnn = flags.gnn;
  run.eval_interval = flags.eval_interval;
  double last_loss = 0.0;
  run.on_step = [&](int64_t step, double loss) {
    last_loss = loss;
    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    csv << step << "," << loss << "," << wall << "\n";
    if (g_log_level >= 2 || (g_log_level >= 1 && (step + 1) % 100 == 0)) {
      info(concat("step ", step + 1, "/", flags.train.iterations, " loss ",
                  loss));
    }
  };
  if (flags.eval_interval > 0 && !valid_samples.empty()) {
    run.on_eval = [&](int64_t step, const GnnParameters& params) {
      NeuralProjector projector(params, flags.train.threads);
      const GraphView observed(*splits.train);
      const auto preds = predict_all(valid_samples, projector, observed,
                                     static_cast<size_t>(flags.train.batch_size));
      const MetricsReport report = evaluate(valid_samples, preds);
      info(concat("step ", step, " valid avg_p ", report.avg_p, " avg_n ",
                  report.avg_n));
      return true;
    };
  }
  if (flags.checkpoint_every > 0) {
    run.snapshot_interval = flags.checkpoint_every;
    run.on_snapshot = [&](int64_t step, const GnnParameters& params) {
      const std::string path =
          concat(flags.out_checkpoint, ".step", step);
      save_checkpoint(params, path);
      info(concat("snapshot: ", path));
    };
  }

  GnnParameters params = run_training(train_samples, *splits.train, run);
  save_checkpoint(params, flags.out_checkpoint);
  info(concat("saved checkpoint to ", flags.out_checkpoint, " (final loss ",
              last_loss, ")"));
  return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const GlobalFlags& global, const std::string& dataset_dir,
             const std::string& checkpoint, bool symbolic,
             const std::string& split, const std::string& out_dir,
             int batch_size) {
  const SplitSet splits = load_dataset_splits(dataset_dir);
  const auto samples = load_dataset_split(dataset_dir, split, *splits.vocab);
  if (samples.empty()) raise("eval: split '", split, "' has no queries");
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].hard.empty()) {
      raise("eval: sample ", i, " in split '", split,
            "' has no hard answers; refusing to evaluate a degenerate split");
    }
  }

  const KnowledgeGraph* observed = split_graph_pair(splits, split).first;
  std::optional<GnnParameters> params;
  auto projector = make_projector(checkpoint, symbolic,
                                  global.resolved_threads(), *splits.train,
                                  params);

  info(concat("evaluating ", samples.size(), " ", split, " queries..."));
  const auto preds = predict_all(samples, *projector, GraphView(*observed),
                                 static_cast<size_t>(batch_size));
  const MetricsReport report = evaluate(samples, preds);

  const std::string json = metrics_to_json(report);
  const std::string markdown = metrics_to_markdown(report);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "metrics.json").string(), json);
    write_file((fs::path(out_dir) / "metrics.md").string(), markdown);
  }
  std::cout << json;
  return 0;
}

// ------------------------------------------------------------------ answer

int cmd_answer(const GlobalFlags& global, const std::string& triples_path,
               const std::string& query, const std::string& checkpoint,
               bool symbolic, int k) {
  const KnowledgeGraph graph = load_triples_file(triples_path);
  std::optional<GnnParameters> params;
  auto projector = make_projector(checkpoint, symbolic,
                                  global.resolved_threads(), graph, params);

  const QueryAST ast = parse_query(query, graph.vocab());
  const PostfixProgram program = compile_postfix(ast);
  const GraphView view(graph);
  const FuzzySet result = execute(program, *projector, view);

  const auto ranked = top_k(result, static_cast<size_t>(k), 0.0);
  for (const auto& [id, prob] : ranked) {
    std::printf("%s\t%.6f\n", graph.vocab().entity_name(id).c_str(), prob);
  }
  return 0;
}

// ----------------------------------------------------------------- inspect

int cmd_inspect(const GlobalFlags& global, const std::string& dataset_dir,
                size_t index, const std::string& split,
                const std::string& checkpoint, bool symbolic) {
  const SplitSet splits = load_dataset_splits(dataset_dir);
  auto samples = load_dataset_split(dataset_dir, split, *splits.vocab);
  if (index >= samples.size()) {
    raise("inspect: index ", index, " out of range (split has ",
          samples.size(), " samples)");
  }
  const QuerySample& sample = samples[index];

  const auto [smaller, larger] = split_graph_pair(splits, split);
  std::optional<GnnParameters> params;
  auto projector = make_projector(checkpoint, symbolic,
                                  global.resolved_threads(), *splits.train,
                                  params);

  const PostfixProgram program = compile_postfix(sample.ast);
  ExecutionTrace trace;
  const GraphView observed(*smaller);
  execute(program, *projector, observed, &trace);
  std::cout << inspect(sample, trace, GraphView(*smaller), GraphView(*larger),
                       *splits.vocab);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"folq: first-order logic queries on knowledge graphs with "
               "fuzzy sets and a learned relation projector"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags global;
  app.add_option("--seed", global.seed, "random seed for the run");
  app.add_option("--threads", global.threads,
                 "worker threads (0 = hardware concurrency)");
  app.add_option("--log-level", global.log_level,
                 "quiet, info or debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));

  // generate
  auto* generate = app.add_subcommand("generate",
                                      "sample queries over a split manifest");
  generate->fallthrough();
  std::string manifest, gen_out;
  int per_type = 10;
  int max_answers = 100;
  std::vector<std::string> count_overrides;
  generate->add_option("--manifest", manifest,
                       "JSON manifest with train/valid/test triple files")
      ->required();
  generate->add_option("--out", gen_out, "output dataset directory")
      ->required();
  generate->add_option("--per-type", per_type,
                       "queries per type and split");
  generate->add_option("--count", count_overrides,
                       "per-type override, e.g. --count 1p=100");
  generate->add_option("--max-answers", max_answers,
                       "reject queries with more answers than this");

  // train
  auto* train = app.add_subcommand("train", "train the neural projector");
  train->fallthrough();
  TrainFlags train_flags;
  train->add_option("--dataset", train_flags.dataset_dir,
                    "dataset directory from `generate`")
      ->required();
  train->add_option("--out", train_flags.out_checkpoint,
                    "checkpoint output path")
      ->required();
  train->add_option("--config", train_flags.config_path,
                    "JSON config mirroring the training options");
  train->add_option("--iterations", train_flags.train.iterations,
                    "optimizer steps");
  train->add_option("--batch-size", train_flags.train.batch_size,
                    "queries per step");
  train->add_option("--learning-rate", train_flags.train.learning_rate,
                    "adaptive-moment learning rate");
  train->add_option("--dropout-p", train_flags.train.dropout_p,
                    "traversal dropout probability");
  train->add_option("--adv-temperature",
                    train_flags.train.adversarial_temperature,
                    "self-adversarial negative weighting (0 = off)");
  train->add_option_function<std::string>(
           "--sample-weighting",
           [&train_flags](const std::string& mode) {
             if (mode == "uniform-queries") {
               train_flags.train.weighting =
                   TrainConfig::SampleWeighting::kUniformQueries;
             } else if (mode == "uniform-answers") {
               train_flags.train.weighting =
                   TrainConfig::SampleWeighting::kUniformAnswers;
             } else {
               throw CLI::ValidationError(
                   "--sample-weighting",
                   "expected uniform-queries or uniform-answers");
             }
           },
           "uniform-queries or uniform-answers");
  train->add_flag_callback(
      "--no-pair-inverse-dropout",
      [&train_flags]() { train_flags.train.pair_inverse_dropout = false; },
      "mask only the traversed direction of dropped edges");
  train->add_option("--layers", train_flags.gnn.num_layers,
                    "message-passing iterations");
  train->add_option("--hidden-dim", train_flags.gnn.hidden_dim,
                    "entity state width");
  train->add_option("--mlp-layers", train_flags.gnn.mlp_layers,
                    "output MLP depth");
  train->add_option("--mlp-hidden", train_flags.gnn.mlp_hidden,
                    "output MLP hidden width");
  train->add_option("--log-csv", train_flags.log_csv,
                    "loss log path (default: <out>.loss.csv)");
  train->add_option("--eval-interval", train_flags.eval_interval,
                    "steps between validation MRR reports (0 = off)");
  train->add_option("--eval-samples", train_flags.eval_samples,
                    "validation queries per report");
  train->add_option("--checkpoint-every", train_flags.checkpoint_every,
                    "steps between checkpoint snapshots (0 = off)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "run the ranking protocol");
  eval_cmd->fallthrough();
  std::string eval_dataset, eval_checkpoint, eval_split = "test", eval_out;
  bool eval_symbolic = false;
  int eval_batch = 64;
  eval_cmd->add_option("--dataset", eval_dataset, "dataset directory")
      ->required();
  auto* eval_ckpt_opt =
      eval_cmd->add_option("--checkpoint", eval_checkpoint,
                           "trained projector checkpoint");
  eval_cmd->add_flag("--symbolic", eval_symbolic,
                     "use the exact traversal projector instead")
      ->excludes(eval_ckpt_opt);
  eval_cmd->add_option("--split", eval_split, "valid or test")
      ->check(CLI::IsMember({"valid", "test"}));
  eval_cmd->add_option("--out", eval_out, "directory for metrics files");
  eval_cmd->add_option("--batch-size", eval_batch, "queries per batch");

  // answer
  auto* answer = app.add_subcommand("answer", "answer one query");
  answer->fallthrough();
  std::string ans_triples, ans_query, ans_checkpoint;
  bool ans_symbolic = false;
  int ans_k = 10;
  answer->add_option("--triples", ans_triples, "triple file (the graph)")
      ->required();
  answer->add_option("--query", ans_query, "query s-expression")->required();
  auto* ans_ckpt_opt =
      answer->add_option("--checkpoint", ans_checkpoint, "projector checkpoint");
  answer->add_flag("--symbolic", ans_symbolic, "use the traversal projector")
      ->excludes(ans_ckpt_opt);
  answer->add_option("-k,--top-k", ans_k, "entities to print");

  // inspect
  auto* inspect_cmd =
      app.add_subcommand("inspect", "per-node report for one sample");
  inspect_cmd->fallthrough();
  std::string ins_dataset, ins_checkpoint, ins_split = "test";
  bool ins_symbolic = false;
  size_t ins_index = 0;
  inspect_cmd->add_option("--dataset", ins_dataset, "dataset directory")
      ->required();
  inspect_cmd->add_option("--index", ins_index, "sample index")->required();
  inspect_cmd->add_option("--split", ins_split, "train, valid or test")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  auto* ins_ckpt_opt = inspect_cmd->add_option("--checkpoint", ins_checkpoint,
                                               "projector checkpoint");
  inspect_cmd->add_flag("--symbolic", ins_symbolic,
                        "use the traversal projector")
      ->excludes(ins_ckpt_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  g_log_level = global.log_level == "quiet" ? 0
                : global.log_level == "debug" ? 2
                                              : 1;

  try {
    if (generate->parsed()) {
      return cmd_generate(global, manifest, gen_out, per_type,
                          count_overrides, max_answers);
    }
    if (train->parsed()) {
      return cmd_train(global, train_flags, train);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(global, eval_dataset, eval_checkpoint, eval_symbolic,
                      eval_split, eval_out, eval_batch);
    }
    if (answer->parsed()) {
      return cmd_answer(global, ans_triples, ans_query, ans_checkpoint,
                        ans_symbolic, ans_k);
    }
    if (inspect_cmd->parsed()) {
      return cmd_inspect(global, ins_dataset, ins_index, ins_split,
                         ins_checkpoint, ins_symbolic);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace folq
