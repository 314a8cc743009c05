#include <doctest.h>

#include <sstream>

#include "checks.hpp"
#include "helpers.hpp"
#include "punk/error.hpp"
#include "punk/graph.hpp"
#include "punk/synthetic.hpp"

using namespace punk;
using namespace punk::testing;

namespace {

struct Toy {
  Corpus corpus;
  std::vector<Concept> concepts;
  EmbeddingTable table{1};
};

Toy toy(int dim = 8) {
  Toy t;
  t.concepts = {make_concept("variance", 3, 1, 0), make_concept("covariance", 3, 2, 1)};
  auto p1 = make_problem("1", "What is the variance of X?", {"variance"});
  auto p2 = make_problem("2", "Find the covariance and variance.", {"variance", "covariance"});
  t.corpus = Corpus({p1, p2}, {answer_for(p1, "One half."), answer_for(p2, "Zero.")});
  t.table = fake_embeddings(t.corpus, t.concepts, 1, dim);
  return t;
}

using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

Sparse dense_to_sparse(const Matrix& a) {
  Sparse s = a.sparseView();
  return s;
}

}  // namespace

TEST_CASE("toy graph") {
  Toy t = toy();
  HeteroGraph g = build_graph(t.corpus, t.concepts, t.table);
  CHECK(g.size() == 6);
  CHECK(g.edges().size() == 6);
  auto e = g.edge_counts();
  CHECK(e[Relation::problem_has_type] == 3);
  CHECK(e[Relation::problem_has_answer] == 2);
  CHECK(e[Relation::same_chapter_as] == 1);
  CHECK(e[Relation::same_section_as] == 0);
  auto n = g.node_counts();
  CHECK(n[NodeKind::concept_] == 2);
  CHECK(n[NodeKind::problem] == 2);
  CHECK(n[NodeKind::answer] == 2);
  const auto c = g.index_of(NodeKind::concept_, "variance");
  CHECK((g.features().row(c).transpose() - t.table.pooled(ItemKey::concept_item("variance"))).norm() == 0);
  const auto p2 = g.index_of(NodeKind::problem, "2");
  CHECK(g.neighbors(p2).size() == 3);

  std::ostringstream nodes, edges, stats;
  write_graph(g, nodes, edges);
  write_graph_stats(g, stats);
  const std::string ns = nodes.str(), es = edges.str();
  CHECK(std::count(ns.begin(), ns.end(), '\n') == 6);
  CHECK(std::count(es.begin(), es.end(), '\n') == 6);
  CHECK(stats.str().find("edge,problem-has-type,3") != std::string::npos);
}

TEST_CASE("concept relations are exclusive") {
  Toy t = toy();
  t.concepts[1].section = 1;
  HeteroGraph g = build_graph(t.corpus, t.concepts, t.table);
  CHECK(g.edge_counts()[Relation::same_section_as] == 1);
  CHECK(g.edge_counts()[Relation::same_chapter_as] == 0);
  t.concepts[1].chapter = 4;
  HeteroGraph h = build_graph(t.corpus, t.concepts, t.table);
  CHECK(h.edge_counts()[Relation::mentioned_in_before_chapters] == 1);
  CHECK(h.edge_counts()[Relation::same_section_as] == 0);

  t.concepts.pop_back();
  CHECK_THROWS_AS(build_graph(t.corpus, t.concepts, t.table), ValidationError);
}

TEST_CASE("schema is enforced") {
  HeteroGraph g(1);
  auto a = g.add_node({NodeKind::concept_, "a", {}}, Vector::Zero(1));
  auto p = g.add_node({NodeKind::problem, "p", Split::train}, Vector::Zero(1));
  auto x = g.add_node({NodeKind::answer, "x", {}}, Vector::Zero(1));
  CHECK_THROWS(g.add_node({NodeKind::problem, "p", {}}, Vector::Zero(1)));
  CHECK_THROWS(g.add_edge(a, x, Relation::problem_has_type));
  CHECK_THROWS(g.add_edge(p, p, Relation::same_chapter_as));
  g.add_edge(x, p, Relation::problem_has_answer);
  CHECK(g.has_edge(p, x));
  CHECK(g.has_edge(x, p));
  CHECK_THROWS(g.add_edge(p, x, Relation::problem_has_answer));
  CHECK(g.edges()[0].u < g.edges()[0].v);
}

TEST_CASE("synthetic graph satisfies the schema") {
  SyntheticConfig sc;
  sc.problems = 80;
  auto data = make_synthetic(sc);
  auto labels = label_space(data.concepts, data.corpus.problems());
  EmbeddingTable table = fake_embeddings(data.corpus, labels, 2, 6);
  HeteroGraph g = build_graph(data.corpus, labels, table);
  CHECK(g.size() == labels.size() + data.corpus.problems().size() + data.corpus.answers().size());
  for (const Edge& e : g.edges()) {
    auto [k1, k2] = relation_endpoints(e.relation);
    const NodeKind a = g.node(e.u).kind, b = g.node(e.v).kind;
    CHECK(((a == k1 && b == k2) || (a == k2 && b == k1)));
  }
}

TEST_CASE("gcn_forward hand values") {
  Rng rng(1);
  GcnConfig cfg{1, 1, Activation::identity};
  Gcn single(cfg, 1, rng);
  single.weights[0].value << 1;
  single.biases[0].value << 0;
  Matrix a1 = Matrix::Ones(1, 1);
  Matrix x1(1, 1);
  x1 << 4.5;
  CHECK(single.forward(dense_to_sparse(a1), x1)(0, 0) == 4.5);

  GcnConfig relu{1, 1, Activation::relu};
  Gcn path(relu, 1, rng);
  path.weights[0].value << 1;
  path.biases[0].value << 0;
  Matrix a(3, 3);
  a << 1, 1, 0, 1, 1, 1, 0, 1, 1;
  Matrix x(3, 1);
  x << 1, 2, 3;
  Matrix h = path.forward(dense_to_sparse(a), x);
  CHECK(h(0, 0) == 3);
  CHECK(h(1, 0) == 6);
  CHECK(h(2, 0) == 5);

  Toy t = toy(16);
  HeteroGraph g = build_graph(t.corpus, t.concepts, t.table);
  Gcn full(GcnConfig{}, 16, rng);
  CHECK(full.weights.size() == 3);
  Matrix out = full.forward(message_structure(g), g.features());
  CHECK(out.rows() == 6);
  CHECK(out.cols() == 100);
}

TEST_CASE("gcn matches the dense oracle") {
  Rng rng(77);
  for (int t = 0; t < 20; ++t) {
    RandomGraph rg = random_graph(rng, 20, 3);
    for (bool eval_types : {false, true}) {
      GcnConfig cfg{1 + static_cast<int>(rng.below(3)), 4,
                    rng.bernoulli(0.5) ? Activation::relu : Activation::identity};
      Gcn gcn(cfg, 3, rng);
      for (auto& b : gcn.biases) b.value = random_matrix(rng, 4, 1, 0.3);
      Matrix fast = gcn.forward(message_structure(rg.graph, eval_types), rg.x);
      Matrix slow = dense_gcn(rg.graph, gcn, rg.x, eval_types);
      CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("node relabeling permutes outputs") {
  Rng rng(5);
  RandomGraph rg = random_graph(rng, 12, 3);
  const std::size_t n = rg.graph.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);  // new index perm[i] holds old node i
  std::vector<std::size_t> inv(n);
  for (std::size_t i = 0; i < n; ++i) inv[perm[i]] = i;
  HeteroGraph pg(3);
  Matrix px(n, 3);
  for (std::size_t k = 0; k < n; ++k) {
    pg.add_node(rg.graph.node(inv[k]), rg.x.row(inv[k]).transpose());
    px.row(k) = rg.x.row(inv[k]);
  }
  for (const Edge& e : rg.graph.edges()) pg.add_edge(perm[e.u], perm[e.v], e.relation);
  Gcn gcn(GcnConfig{2, 5, Activation::relu}, 3, rng);
  Matrix h = gcn.forward(message_structure(rg.graph, true), rg.x);
  Matrix hp = gcn.forward(message_structure(pg, true), px);
  for (std::size_t i = 0; i < n; ++i) CHECK((h.row(i) - hp.row(perm[i])).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gcn gradients") {
  Rng rng(9);
  for (int t = 0; t < 5; ++t) {
    RandomGraph rg = random_graph(rng, 8, 3);
    Gcn gcn(GcnConfig{2, 3, Activation::relu}, 3, rng);
    for (auto& b : gcn.biases) b.value = random_matrix(rng, 3, 1, 0.3);
    const Sparse adj = message_structure(rg.graph, true);
    Matrix c = random_matrix(rng, static_cast<int>(rg.graph.size()), 3);
    struct W {
      Gcn& g;
      void visit(const ParamVisitor& f) { g.visit(f); }
    } w{gcn};
    auto r = grad_check_params(
        w,
        [&](bool acc) {
          Gcn::Trace tr;
          Matrix h = gcn.forward(adj, rg.x, &tr);
          if (acc) gcn.backward(adj, tr, c);
          return (h.array() * c.array()).sum();
        },
        [&]() {
          Gcn::Trace tr;
          gcn.forward(adj, rg.x, &tr);
          double m = std::numeric_limits<double>::infinity();
          for (const auto& p : tr.pre) m = std::min(m, p.cwiseAbs().minCoeff());
          return m;
        });
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("link prediction") {
  Toy t = toy();
  HeteroGraph g = build_graph(t.corpus, t.concepts, t.table);
  Matrix zero = Matrix::Zero(6, 4);
  CHECK(link_score(zero, 0, 1) == 0.5);
  Rng rng(3);
  Matrix h = random_matrix(rng, 6, 4);
  CHECK(link_score(h, 2, 4) == link_score(h, 4, 2));

  auto pos = type_edges(g, Split::train);
  CHECK(pos.size() == 3);
  Rng r1(4), r2(4);
  auto n1 = sample_negatives(g, 3, r1), n2 = sample_negatives(g, 3, r2);
  CHECK(n1 == n2);
  for (auto [p, c] : n1) CHECK_FALSE(g.has_edge(p, c));

  LinkTrainConfig cfg;
  std::vector<LinkEpoch> log;
  LinkPredictor a = train_link_prediction(g, cfg, &log);
  LinkPredictor b = train_link_prediction(g, cfg);
  CHECK(log.size() == 200);
  CHECK(flatten_values(a) == flatten_values(b));
  Matrix emb = a.embed(g);
  double pos_mean = 0;
  for (auto [p, c] : pos) pos_mean += link_score(emb, p, c) / 3.0;
  const auto p1 = g.index_of(NodeKind::problem, "1"), cv = g.index_of(NodeKind::concept_, "covariance");
  CHECK(pos_mean > link_score(emb, p1, cv));

  TempDir dir("gcn");
  save_checkpoint(a.to_checkpoint(), dir / "g.ckpt");
  LinkPredictor back = LinkPredictor::from_checkpoint(load_checkpoint(dir / "g.ckpt"));
  CHECK(back.embed(g) == emb);

  CHECK(context_of(g, emb, "1") == Vector(emb.row(g.index_of(NodeKind::problem, "1")).transpose()));
  CHECK_THROWS_AS(context_of(g, emb, "variance"), ValidationError);
  CHECK_THROWS_AS(context_of(g, emb, "nope"), NotFoundError);
  EmbeddingTable ctx = context_table(g, emb);
  CHECK(ctx.size() == 2);
  CHECK(ctx.dim() == 100);

  Corpus dev_only({make_problem("9", "Hm.", {"variance"}, Split::dev)},
                  {answer_for(make_problem("9", "Hm.", {"variance"}))});
  HeteroGraph d = build_graph(dev_only, t.concepts, fake_embeddings(dev_only, t.concepts, 1, 8));
  CHECK_THROWS_AS(train_link_prediction(d, cfg), ValidationError);
}

TEST_CASE("identical nodes get identical contexts") {
  std::vector<Concept> concepts = {make_concept("variance", 1, 1, 0), make_concept("mean", 1, 2, 1)};
  auto p1 = make_problem("1", "Same words here.", {"variance"});
  auto p2 = make_problem("2", "Same words here.", {"variance"});
  Corpus corpus({p1, p2}, {answer_for(p1, "Yes."), answer_for(p2, "Yes.")});
  HeteroGraph g = build_graph(corpus, concepts, fake_embeddings(corpus, concepts, 1, 8));
  Rng rng(1);
  LinkTrainConfig cfg;
  cfg.epochs = 5;
  Matrix emb = train_link_prediction(g, cfg).embed(g);
  CHECK(context_of(g, emb, "1") == context_of(g, emb, "2"));
}
