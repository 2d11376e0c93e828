#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "folq/trainer.hpp"
#include "helpers.hpp"

using namespace folq;

TEST_CASE("bce_loss hand values") {
  const BceLoss even = bce_loss(FuzzySet{{0.5, 0.5}}, std::vector<EntityId>{0});
  CHECK(even.loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  const BceLoss sharp =
      bce_loss(FuzzySet{{1.0, 0.0}}, std::vector<EntityId>{0});
  CHECK(sharp.loss == doctest::Approx(0.0).epsilon(1e-6));

  CHECK_THROWS_AS(bce_loss(FuzzySet{{0.5, 0.5}}, std::vector<EntityId>{}),
                  Error);
  CHECK_THROWS_AS(bce_loss(FuzzySet{{0.5, 0.5}}, std::vector<EntityId>{0, 1}),
                  Error);
  CHECK_THROWS_AS(bce_loss(FuzzySet{{0.5}}, std::vector<EntityId>{7}), Error);
}

TEST_CASE("bce_loss gradient matches finite differences") {
  Rng rng(50);
  for (double tau : {0.0, 0.2}) {
    FuzzySet pred(12);
    for (auto& v : pred.values) v = rng.uniform(0.1, 0.9);
    const std::vector<EntityId> answers = {1, 4, 9};

    const BceLoss analytic = bce_loss(pred, answers, tau);
    for (size_t v = 0; v < pred.size(); ++v) {
      const double numeric = test::central_diff(
          [&]() { return bce_loss(pred, answers, tau).loss; },
          &pred.values[v], 1e-6);
      if (tau == 0.0) {
        CHECK(test::rel_err(analytic.grad[v], numeric) <= 1e-6);
      } else {
        // adversarial weights are detached constants, so the analytic
        // gradient deliberately drops the weight-through term; compare
        // only where the weights do not move (positives).
        const bool is_answer = std::find(answers.begin(), answers.end(),
                                         static_cast<EntityId>(v)) !=
                               answers.end();
        if (is_answer) {
          CHECK(test::rel_err(analytic.grad[v], numeric) <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("adversarial weighting emphasizes confident negatives") {
  FuzzySet pred{{0.9, 0.8, 0.1, 0.1}};
  const std::vector<EntityId> answers = {0};
  const BceLoss plain = bce_loss(pred, answers, 0.0);
  const BceLoss adv = bce_loss(pred, answers, 0.2);
  // entity 1 is the confident negative; adversarial gradient should give it
  // a larger share of the negative mass than the uniform 1/3
  const double plain_share =
      plain.grad[1] / (plain.grad[1] + plain.grad[2] + plain.grad[3]);
  const double adv_share =
      adv.grad[1] / (adv.grad[1] + adv.grad[2] + adv.grad[3]);
  CHECK(adv_share > plain_share);
  CHECK(adv_share > 0.99);  // tau 0.2 makes the softmax nearly one-hot here
}

TEST_CASE("adaptive moment update") {
  GnnConfig config;
  config.num_layers = 1;
  config.hidden_dim = 2;
  config.mlp_layers = 1;
  GnnParameters params = init_params(config, 1, 3);
  OptimizerState opt = make_optimizer(params);

  SUBCASE("first step moves by about lr in the large-gradient regime") {
    std::vector<double> grads(params.data.size(), 0.0);
    grads[0] = 2.5;
    const double before = params.data[0];
    adaptive_moment_update(params, grads, opt, 1e-2);
    CHECK(std::abs(params.data[0] - (before - 1e-2)) <= 1e-8);
    CHECK(opt.step == 1);
  }

  SUBCASE("zero gradient leaves parameters untouched") {
    const std::vector<double> before = params.data;
    std::vector<double> grads(params.data.size(), 0.0);
    adaptive_moment_update(params, grads, opt, 1e-2);
    CHECK(params.data == before);
  }

  SUBCASE("identical gradient sequences give identical trajectories") {
    GnnParameters p1 = params, p2 = params;
    OptimizerState o1 = make_optimizer(p1), o2 = make_optimizer(p2);
    Rng rng(9);
    for (int step = 0; step < 5; ++step) {
      std::vector<double> grads(params.data.size());
      for (auto& g : grads) g = rng.uniform(-1.0, 1.0);
      adaptive_moment_update(p1, grads, o1, 5e-3);
      adaptive_moment_update(p2, grads, o2, 5e-3);
    }
    CHECK(p1.data == p2.data);
  }
}

TEST_CASE("dropout plan edge cases") {
  Rng graph_rng(60);
  const KnowledgeGraph g = test::random_graph(graph_rng, 12, 2, 30);
  const GraphView view(g);
  const QueryAST ast = test::random_template_instance(
      template_by_name("2p"), graph_rng, static_cast<int>(g.num_entities()),
      static_cast<int>(g.num_edge_relations()));
  const EdgeUsageRecord usage = collect_traversed_edges(ast, view);

  SUBCASE("p=0 masks nothing") {
    Rng rng(1);
    const DropoutPlan plan = make_dropout_plan(usage, 0.0, false, g, rng);
    for (const auto& [node, edges] : plan.masked) CHECK(edges.empty());
  }

  SUBCASE("p=1 without pairing masks exactly the record") {
    Rng rng(2);
    const DropoutPlan plan = make_dropout_plan(usage, 1.0, false, g, rng);
    CHECK(plan.masked == usage.edges_by_node);
  }

  SUBCASE("pairing adds the inverse twins") {
    Rng rng(3);
    const DropoutPlan plan = make_dropout_plan(usage, 1.0, true, g, rng);
    for (const auto& [node, edges] : usage.edges_by_node) {
      const auto& masked = plan.masked.at(node);
      for (EdgeId e : edges) {
        CHECK(std::binary_search(masked.begin(), masked.end(), e));
        CHECK(std::binary_search(masked.begin(), masked.end(),
                                 g.inverse_edge(e)));
      }
    }
  }
}

TEST_CASE("dropout masks about p of a large synthetic record") {
  // synthetic ids; pairing off so no graph lookups happen
  const KnowledgeGraph g = load_triples("a\tr\tb\n");
  EdgeUsageRecord usage;
  auto& edges = usage.edges_by_node[0];
  const int total = 100000;
  edges.resize(total);
  for (int i = 0; i < total; ++i) edges[static_cast<size_t>(i)] = i;

  Rng rng(4);
  const DropoutPlan plan = make_dropout_plan(usage, 0.25, false, g, rng);
  const double fraction =
      static_cast<double>(plan.masked.at(0).size()) / total;
  CHECK(fraction > 0.24);
  CHECK(fraction < 0.26);
}

namespace {

struct ChainFixture {
  KnowledgeGraph graph;
  GnnParameters params;
  QuerySample sample;
  std::vector<TrainItem> items;

  ChainFixture()
      : graph(load_triples(
            "a\tr0\tb\n"
            "b\tr1\tc\n"
            "b\tr1\td\n"
            "a\tr0\tc\n"
            "c\tr1\td\n"
            "d\tr0\ta\n")),
        params({}) {
    GnnConfig config;
    config.num_layers = 2;
    config.hidden_dim = 3;
    config.mlp_hidden = 4;
    params = init_params(config, static_cast<int>(graph.num_relations()), 21);
    // keep ReLU pre-activations off their kinks for the fd comparisons
    Rng jitter(22);
    for (auto& p : params.data) p += jitter.uniform(-0.05, 0.05);

    sample.qtype = "2p";
    sample.ast = parse_query("(P r1 fwd (P r0 fwd (E a)))", graph.vocab());
    const GraphView view(graph);
    sample.easy = ground_enumerate(sample.ast, view);
    REQUIRE(!sample.easy.empty());
    sample.usage = collect_traversed_edges(sample.ast, view);
    items = prepare_training_items({&sample, 1}, graph);
  }
};

}  // namespace

TEST_CASE("gradient gating matches the frozen-input surrogate") {
  ChainFixture fx;
  const GraphView view(fx.graph);
  NeuralProjector projector(fx.params);

  const std::vector<PostfixProgram> programs = {fx.items[0].program};
  auto view_for = [&view](size_t, NodeId) { return view; };
  const auto records = execute_batch_recorded(programs, projector, view_for,
                                              fx.graph.num_entities());
  const SampleRecord& record = records[0];

  const auto answers = fx.sample.all_answers();
  const BceLoss bce = bce_loss(record.result(), answers);
  const GnnShapes shapes = fx.params.shapes();

  std::vector<double> gated(shapes.total, 0.0);
  backpropagate_record(record, fx.params, bce.grad, true, gated);

  // Surrogate: hop-1 output frozen at its recorded value, only the final
  // projection depends on the parameters.
  const FuzzySet hop1 = record.values[1];  // PushAnchor, Project, Project
  const RelationId hop2_rel = programs[0].code[2].arg;
  GnnParameters probe = fx.params;
  auto surrogate = [&]() {
    const FuzzySet out = gnn_forward(hop1, hop2_rel, view, probe);
    return bce_loss(out, answers).loss;
  };
  double worst = 0.0;
  for (size_t i = 0; i < shapes.total; ++i) {
    const double numeric = test::central_diff(surrogate, &probe.data[i]);
    worst = std::max(worst, test::rel_err(gated[i], numeric));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("gating zeroes the early hop's query embedding gradient") {
  ChainFixture fx;
  const GraphView view(fx.graph);
  NeuralProjector projector(fx.params);
  const std::vector<PostfixProgram> programs = {fx.items[0].program};
  auto view_for = [&view](size_t, NodeId) { return view; };
  const auto records = execute_batch_recorded(programs, projector, view_for,
                                              fx.graph.num_entities());
  const BceLoss bce = bce_loss(records[0].result(), fx.sample.all_answers());
  const GnnShapes shapes = fx.params.shapes();
  const RelationId hop1_rel = programs[0].code[1].arg;
  const RelationId hop2_rel = programs[0].code[2].arg;
  REQUIRE(hop1_rel != hop2_rel);

  std::vector<double> gated(shapes.total, 0.0);
  backpropagate_record(records[0], fx.params, bce.grad, true, gated);
  std::vector<double> ungated(shapes.total, 0.0);
  backpropagate_record(records[0], fx.params, bce.grad, false, ungated);

  // The projection-relation embedding only enters through its own call, so
  // under gating hop-1's embedding gets nothing.
  double gated_hop1 = 0.0, ungated_hop1 = 0.0, gated_hop2 = 0.0;
  for (int k = 0; k < shapes.dim; ++k) {
    gated_hop1 += std::abs(gated[shapes.query_index(hop1_rel) + k]);
    ungated_hop1 += std::abs(ungated[shapes.query_index(hop1_rel) + k]);
    gated_hop2 += std::abs(gated[shapes.query_index(hop2_rel) + k]);
  }
  CHECK(gated_hop1 == 0.0);
  CHECK(ungated_hop1 > 0.0);
  CHECK(gated_hop2 > 0.0);
}

TEST_CASE("train_step is deterministic") {
  ChainFixture fx;
  TrainConfig config;
  config.batch_size = 1;
  config.iterations = 1;
  config.dropout_p = 0.3;
  config.seed = 5;
  config.threads = 1;

  GnnParameters p1 = fx.params, p2 = fx.params;
  OptimizerState o1 = make_optimizer(p1), o2 = make_optimizer(p2);
  const std::vector<const TrainItem*> batch = {&fx.items[0]};
  const double l1 = train_step(batch, p1, o1, config, fx.graph, 0);
  const double l2 = train_step(batch, p2, o2, config, fx.graph, 0);
  CHECK(l1 == l2);
  CHECK(p1.data == p2.data);
}

TEST_CASE("sample weighting modes differ when answer counts differ") {
  ChainFixture fx;
  QuerySample second = fx.sample;
  second.qtype = "1p";
  second.ast = parse_query("(P r0 fwd (E d))", fx.graph.vocab());
  second.easy = ground_enumerate(second.ast, GraphView(fx.graph));
  second.usage = collect_traversed_edges(second.ast, GraphView(fx.graph));
  REQUIRE(second.easy.size() != fx.sample.easy.size());

  const std::vector<QuerySample> samples = {fx.sample, second};
  const auto items = prepare_training_items(samples, fx.graph);
  const std::vector<const TrainItem*> batch = {&items[0], &items[1]};

  TrainConfig config;
  config.dropout_p = 0.0;
  config.seed = 1;
  GnnParameters pq = fx.params, pa = fx.params;
  OptimizerState oq = make_optimizer(pq), oa = make_optimizer(pa);
  config.weighting = TrainConfig::SampleWeighting::kUniformQueries;
  const double lq = train_step(batch, pq, oq, config, fx.graph, 0);
  config.weighting = TrainConfig::SampleWeighting::kUniformAnswers;
  const double la = train_step(batch, pa, oa, config, fx.graph, 0);
  CHECK(lq != la);
  CHECK(pq.data != pa.data);
}

TEST_CASE("loss decreases on a tiny graph") {
  Rng rng(77);
  const KnowledgeGraph g = test::random_graph(rng, 30, 2, 70);
  const GraphView view(g);

  // 1p training queries with nonempty answers
  std::vector<QuerySample> samples;
  while (samples.size() < 40) {
    const QueryAST ast = test::random_template_instance(
        template_by_name("1p"), rng, static_cast<int>(g.num_entities()),
        static_cast<int>(g.num_edge_relations()));
    auto answers = ground_enumerate(ast, view);
    if (answers.empty()) continue;
    QuerySample s;
    s.qtype = "1p";
    s.ast = ast;
    s.easy = std::move(answers);
    samples.push_back(std::move(s));
  }

  TrainRun run;
  run.train.iterations = 200;
  run.train.batch_size = 8;
  run.train.dropout_p = 0.0;
  run.train.seed = 3;
  run.train.threads = 2;
  run.gnn.num_layers = 2;
  run.gnn.hidden_dim = 8;
  run.gnn.mlp_hidden = 16;

  std::vector<double> losses;
  run.on_step = [&losses](int64_t, double loss) { losses.push_back(loss); };
  run_training(samples, g, run);

  auto median = [](std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return xs[xs.size() / 2];
  };
  const std::vector<double> head(losses.begin(), losses.begin() + 50);
  const std::vector<double> tail(losses.end() - 50, losses.end());
  CHECK(median(tail) < median(head));
}

TEST_CASE("prepare_training_items rejects evaluation-only types") {
  ChainFixture fx;
  QuerySample bad = fx.sample;
  bad.qtype = "2u";
  const std::vector<QuerySample> samples = {bad};
  CHECK_THROWS_WITH_AS(prepare_training_items(samples, fx.graph),
                       doctest::Contains("evaluation-only"), Error);
}
