#include "punk/graph.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "punk/config_io.hpp"
#include "punk/error.hpp"
#include "punk/loss.hpp"

namespace punk {

using nlohmann::json;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::concept_: return "concept";
    case NodeKind::problem: return "problem";
    case NodeKind::answer: return "answer";
  }
  return "problem";
}

NodeKind parse_node_kind(std::string_view name) {
  if (name == "concept") return NodeKind::concept_;
  if (name == "problem") return NodeKind::problem;
  if (name == "answer") return NodeKind::answer;
  throw ValidationError("unknown node kind '" + std::string(name) + "'");
}

std::string_view to_string(Relation relation) {
  switch (relation) {
    case Relation::problem_has_type: return "problem-has-type";
    case Relation::problem_has_answer: return "problem-has-answer";
    case Relation::same_section_as: return "same-section-as";
    case Relation::mentioned_in_before_chapters: return "mentioned-in-before-chapters";
    case Relation::same_chapter_as: return "same-chapter-as";
  }
  return "problem-has-type";
}

Relation parse_relation(std::string_view name) {
  for (Relation r : {Relation::problem_has_type, Relation::problem_has_answer,
                     Relation::same_section_as, Relation::mentioned_in_before_chapters,
                     Relation::same_chapter_as}) {
    if (to_string(r) == name) return r;
  }
  throw ValidationError("unknown relation '" + std::string(name) + "'");
}

std::pair<NodeKind, NodeKind> relation_endpoints(Relation relation) {
  switch (relation) {
    case Relation::problem_has_type: return {NodeKind::problem, NodeKind::concept_};
    case Relation::problem_has_answer: return {NodeKind::problem, NodeKind::answer};
    default: return {NodeKind::concept_, NodeKind::concept_};
  }
}

std::size_t HeteroGraph::add_node(Node node, const Vector& feature) {
  if (feature.size() != feature_dim_) {
    throw ValidationError("feature of node " + node.id + " has dimension " +
                          std::to_string(feature.size()) + ", expected " +
                          std::to_string(feature_dim_));
  }
  const std::size_t i = nodes_.size();
  if (!index_.emplace(std::make_pair(node.kind, node.id), i).second) {
    throw ConflictError("duplicate " + std::string(to_string(node.kind)) + " node " +
                        node.id);
  }
  nodes_.push_back(std::move(node));
  features_.push_back(feature);
  return i;
}

void HeteroGraph::add_edge(std::size_t a, std::size_t b, Relation relation) {
  if (a >= nodes_.size() || b >= nodes_.size()) throw ValidationError("edge endpoint out of range");
  if (a == b) throw ValidationError("self-edges are implicit");
  auto [ka, kb] = relation_endpoints(relation);
  const NodeKind na = nodes_[a].kind, nb = nodes_[b].kind;
  if (!((na == ka && nb == kb) || (na == kb && nb == ka))) {
    throw ValidationError(std::string(to_string(relation)) + " cannot connect " +
                          std::string(to_string(na)) + " and " +
                          std::string(to_string(nb)));
  }
  const auto key = std::minmax(a, b);
  if (!edge_set_.emplace(key, relation).second) {
    throw ConflictError("nodes " + nodes_[a].id + " and " + nodes_[b].id +
                        " are already connected");
  }
  edges_.push_back({key.first, key.second, relation});
}

std::optional<std::size_t> HeteroGraph::find(NodeKind kind, const std::string& id) const {
  auto it = index_.find({kind, id});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t HeteroGraph::index_of(NodeKind kind, const std::string& id) const {
  auto i = find(kind, id);
  if (!i) throw NotFoundError("no " + std::string(to_string(kind)) + " node " + id);
  return *i;
}

bool HeteroGraph::has_edge(std::size_t a, std::size_t b) const {
  return edge_set_.count(std::minmax(a, b)) > 0;
}

std::vector<std::size_t> HeteroGraph::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (const auto& e : edges_) {
    if (e.u == i) out.push_back(e.v);
    if (e.v == i) out.push_back(e.u);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Matrix HeteroGraph::features() const {
  Matrix x(static_cast<Eigen::Index>(nodes_.size()), feature_dim_);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = features_[i].transpose();
  }
  return x;
}

std::map<NodeKind, std::size_t> HeteroGraph::node_counts() const {
  std::map<NodeKind, std::size_t> out;
  for (const auto& n : nodes_) ++out[n.kind];
  return out;
}

std::map<Relation, std::size_t> HeteroGraph::edge_counts() const {
  std::map<Relation, std::size_t> out;
  for (const auto& e : edges_) ++out[e.relation];
  return out;
}

HeteroGraph build_graph(const Corpus& corpus, const std::vector<Concept>& concepts,
                        const EmbeddingTable& table) {
  HeteroGraph g(table.dim());
  std::map<std::string, std::size_t> tag_owner;
  std::vector<std::size_t> concept_nodes;
  for (const auto& c : concepts) {
    const std::size_t i =
        g.add_node({NodeKind::concept_, c.id, std::nullopt},
                   table.pooled(ItemKey::concept_item(c.id)));
    concept_nodes.push_back(i);
    for (const auto& t : c.tags) tag_owner[t] = i;
    tag_owner.emplace(c.id, i);
  }
  for (std::size_t a = 0; a < concepts.size(); ++a) {
    for (std::size_t b = a + 1; b < concepts.size(); ++b) {
      const Concept& ca = concepts[a];
      const Concept& cb = concepts[b];
      Relation r = Relation::mentioned_in_before_chapters;
      if (ca.chapter == cb.chapter) {
        r = ca.section == cb.section ? Relation::same_section_as : Relation::same_chapter_as;
      }
      g.add_edge(concept_nodes[a], concept_nodes[b], r);
    }
  }
  for (const auto& p : corpus.problems()) {
    const std::size_t pi = g.add_node({NodeKind::problem, p.id, p.split},
                                      table.pooled(ItemKey::problem(p.id)));
    std::set<std::size_t> linked;
    for (const auto& tag : p.concept_tags) {
      auto it = tag_owner.find(tag);
      if (it == tag_owner.end()) {
        throw ValidationError("problem " + p.id + " has tag '" + tag +
                              "' that is not in the concept list");
      }
      if (linked.insert(it->second).second) {
        g.add_edge(pi, it->second, Relation::problem_has_type);
      }
    }
    const std::size_t ai = g.add_node({NodeKind::answer, p.answer_id, std::nullopt},
                                      table.pooled(ItemKey::answer(p.answer_id)));
    g.add_edge(pi, ai, Relation::problem_has_answer);
  }
  return g;
}

namespace {

bool is_eval_type_edge(const HeteroGraph& g, const Edge& e) {
  if (e.relation != Relation::problem_has_type) return false;
  const Node& a = g.node(e.u);
  const Node& p = a.kind == NodeKind::problem ? a : g.node(e.v);
  return p.split.value_or(Split::train) != Split::train;
}

}  // namespace

SparseRows message_structure(const HeteroGraph& graph, bool include_eval_types) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
  }
  for (const auto& e : graph.edges()) {
    if (!include_eval_types && is_eval_type_edge(graph, e)) continue;
    triplets.emplace_back(static_cast<int>(e.u), static_cast<int>(e.v), 1.0);
    triplets.emplace_back(static_cast<int>(e.v), static_cast<int>(e.u), 1.0);
  }
  const auto n = static_cast<Eigen::Index>(graph.size());
  SparseRows a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Gcn::Gcn(const GcnConfig& config, int input_dim, Rng& rng)
    : config_(config), input_dim_(input_dim) {
  if (config.layers < 1 || config.hidden < 1 || input_dim < 1) {
    throw ValidationError("gcn needs layers, hidden and input_dim >= 1");
  }
  int in = input_dim;
  for (int k = 0; k < config.layers; ++k) {
    Param w(config.hidden, in);
    glorot_uniform(w, rng);
    weights.push_back(std::move(w));
    biases.emplace_back(config.hidden, 1);
    in = config.hidden;
  }
}

Matrix Gcn::forward(const SparseRows& adjacency, const Matrix& x, Trace* trace) const {
  if (x.cols() != input_dim_ || adjacency.rows() != x.rows() ||
      adjacency.cols() != x.rows()) {
    throw ValidationError("gcn input has shape " + std::to_string(x.rows()) + "x" +
                          std::to_string(x.cols()));
  }
  Matrix h = x;
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Matrix messages = h * weights[k].value.transpose();
    messages.rowwise() += biases[k].vec().transpose();
    Matrix summed = adjacency * messages;
    if (trace) {
      trace->inputs.push_back(h);
      trace->pre.push_back(summed);
    }
    h = config_.activation == Activation::relu ? Matrix(summed.cwiseMax(0.0)) : summed;
  }
  return h;
}

void Gcn::backward(const SparseRows& adjacency, const Trace& trace,
                   const Matrix& grad_out) {
  Matrix g = grad_out;
  for (std::size_t k = weights.size(); k-- > 0;) {
    if (config_.activation == Activation::relu) {
      g = g.cwiseProduct(Matrix((trace.pre[k].array() > 0.0).cast<double>()));
    }
    // The adjacency is symmetric, so its transpose is itself.
    Matrix d_messages = adjacency * g;
    weights[k].grad += d_messages.transpose() * trace.inputs[k];
    biases[k].grad_vec() += d_messages.colwise().sum().transpose();
    if (k > 0) g = d_messages * weights[k].value;
  }
}

void Gcn::visit(const ParamVisitor& f, const std::string& prefix) {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    f(prefix + ".l" + std::to_string(k) + ".weight", weights[k]);
    f(prefix + ".l" + std::to_string(k) + ".bias", biases[k]);
  }
}

json LinkTrainConfig::to_json() const {
  return {{"layers", gcn.layers},
          {"hidden", gcn.hidden},
          {"activation", gcn.activation == Activation::relu ? "relu" : "identity"},
          {"epochs", epochs},
          {"seed", seed},
          {"adam", punk::to_json(adam)},
          {"include_eval_types", include_eval_types}};
}

LinkTrainConfig LinkTrainConfig::from_json(const json& j) {
  LinkTrainConfig c;
  c.gcn.layers = j.value("layers", c.gcn.layers);
  c.gcn.hidden = j.value("hidden", c.gcn.hidden);
  const std::string act = j.value("activation", "relu");
  if (act != "relu" && act != "identity") {
    throw ValidationError("unknown activation '" + act + "'");
  }
  c.gcn.activation = act == "relu" ? Activation::relu : Activation::identity;
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  if (j.contains("adam")) c.adam = adam_config_from_json(j.at("adam"));
  c.include_eval_types = j.value("include_eval_types", c.include_eval_types);
  return c;
}

double link_score(const Matrix& h, std::size_t u, std::size_t v) {
  return sigmoid(h.row(static_cast<Eigen::Index>(u)).dot(h.row(static_cast<Eigen::Index>(v))));
}

std::vector<std::pair<std::size_t, std::size_t>> type_edges(const HeteroGraph& graph,
                                                            Split split) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : graph.edges()) {
    if (e.relation != Relation::problem_has_type) continue;
    std::size_t p = e.u, c = e.v;
    if (graph.node(p).kind != NodeKind::problem) std::swap(p, c);
    if (graph.node(p).split.value_or(Split::train) == split) out.emplace_back(p, c);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_negatives(
    const HeteroGraph& graph, std::size_t count, Rng& rng) {
  std::vector<std::size_t> problems, concepts;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.node(i);
    if (n.kind == NodeKind::concept_) concepts.push_back(i);
    if (n.kind == NodeKind::problem && n.split.value_or(Split::train) == Split::train) {
      problems.push_back(i);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (count == 0) return out;
  std::size_t free_pairs = 0;
  for (std::size_t p : problems) {
    for (std::size_t c : concepts) free_pairs += graph.has_edge(p, c) ? 0 : 1;
  }
  if (free_pairs == 0) throw ValidationError("no (problem, concept) non-edges to sample");
  while (out.size() < count) {
    const std::size_t p = problems[rng.below(problems.size())];
    const std::size_t c = concepts[rng.below(concepts.size())];
    if (!graph.has_edge(p, c)) out.emplace_back(p, c);
  }
  return out;
}

double link_loss(const Matrix& h, const LinkSample& sample, Matrix* grad_h) {
  const double n = static_cast<double>(sample.positives.size() + sample.negatives.size());
  if (n == 0) return 0.0;
  double loss = 0.0;
  auto add = [&](const std::pair<std::size_t, std::size_t>& e, double target) {
    const auto u = static_cast<Eigen::Index>(e.first);
    const auto v = static_cast<Eigen::Index>(e.second);
    LossGrad lg = sigmoid_bce(h.row(u).dot(h.row(v)), target);
    loss += lg.loss;
    if (grad_h) {
      const double g = lg.grad / n;
      grad_h->row(u) += g * h.row(v);
      grad_h->row(v) += g * h.row(u);
    }
  };
  for (const auto& e : sample.positives) add(e, 1.0);
  for (const auto& e : sample.negatives) add(e, 0.0);
  return loss / n;
}

Matrix LinkPredictor::embed(const HeteroGraph& graph) const {
  return gcn_.forward(message_structure(graph, config_.include_eval_types),
                      graph.features());
}

Checkpoint LinkPredictor::to_checkpoint() {
  json header = {{"kind", "gcn_link"},
                 {"config", config_.to_json()},
                 {"input_dim", gcn_.input_dim()}};
  return Checkpoint::capture(header, *this);
}

LinkPredictor LinkPredictor::from_checkpoint(const Checkpoint& ck) {
  if (ck.kind() != "gcn_link") {
    throw ValidationError("checkpoint is a '" + ck.kind() + "', not a graph model");
  }
  Rng rng(0);
  LinkPredictor model(LinkTrainConfig::from_json(ck.header.at("config")),
                      ck.header.at("input_dim").get<int>(), rng);
  ck.restore(model);
  return model;
}

LinkPredictor train_link_prediction(const HeteroGraph& graph, const LinkTrainConfig& config,
                                    std::vector<LinkEpoch>* log) {
  auto positives = type_edges(graph, Split::train);
  if (positives.empty()) throw ValidationError("no problem-has-type edges in the train split");
  if (config.epochs < 1) throw ValidationError("epochs must be positive");
  auto dev = type_edges(graph, Split::dev);

  Rng rng(config.seed);
  LinkPredictor model(config, graph.feature_dim(), rng);
  Adam adam(config.adam);
  const SparseRows adjacency = message_structure(graph, config.include_eval_types);
  const Matrix x = graph.features();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    LinkSample sample{positives, sample_negatives(graph, positives.size(), rng)};
    Gcn::Trace trace;
    Matrix h = model.gcn().forward(adjacency, x, &trace);
    Matrix grad_h = Matrix::Zero(h.rows(), h.cols());
    LinkEpoch entry;
    entry.train_loss = link_loss(h, sample, &grad_h);
    for (const auto& [p, c] : dev) entry.dev_positive_score += link_score(h, p, c);
    if (!dev.empty()) entry.dev_positive_score /= static_cast<double>(dev.size());
    zero_grads(model);
    model.gcn().backward(adjacency, trace, grad_h);
    adam.step(model);
    if (log) log->push_back(entry);
  }
  round_to_storage(model);
  return model;
}

Vector context_of(const HeteroGraph& graph, const Matrix& embeddings,
                  const std::string& problem_id) {
  auto i = graph.find(NodeKind::problem, problem_id);
  if (!i) {
    for (NodeKind k : {NodeKind::concept_, NodeKind::answer}) {
      if (graph.find(k, problem_id)) {
        throw ValidationError(std::string(to_string(k)) + " " + problem_id +
                              " has no problem context");
      }
    }
    throw NotFoundError("no problem node " + problem_id);
  }
  return embeddings.row(static_cast<Eigen::Index>(*i)).transpose();
}

EmbeddingTable context_table(const HeteroGraph& graph, const Matrix& embeddings) {
  EmbeddingTable table(static_cast<int>(embeddings.cols()));
  std::vector<float> row(static_cast<std::size_t>(embeddings.cols()));
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.node(i);
    if (n.kind != NodeKind::problem) continue;
    for (Eigen::Index k = 0; k < embeddings.cols(); ++k) {
      row[static_cast<std::size_t>(k)] =
          static_cast<float>(embeddings(static_cast<Eigen::Index>(i), k));
    }
    table.add(ItemKey::problem(n.id), 1, row);
  }
  return table;
}

void write_graph(const HeteroGraph& graph, std::ostream& nodes, std::ostream& edges) {
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Node& n = graph.node(i);
    json j = {{"index", i}, {"kind", to_string(n.kind)}, {"id", n.id}};
    if (n.split) j["split"] = to_string(*n.split);
    nodes << j.dump() << '\n';
  }
  for (const auto& e : graph.edges()) {
    edges << json{{"u", e.u}, {"v", e.v}, {"relation", to_string(e.relation)}}.dump()
          << '\n';
  }
}

void write_graph_stats(const HeteroGraph& graph, std::ostream& out) {
  out << "section,name,count\n";
  auto nodes = graph.node_counts();
  for (NodeKind k : {NodeKind::concept_, NodeKind::problem, NodeKind::answer}) {
    out << "node," << to_string(k) << ',' << nodes[k] << '\n';
  }
  out << "node,total," << graph.size() << '\n';
  auto edges = graph.edge_counts();
  for (Relation r : {Relation::problem_has_type, Relation::problem_has_answer,
                     Relation::same_section_as, Relation::mentioned_in_before_chapters,
                     Relation::same_chapter_as}) {
    out << "edge," << to_string(r) << ',' << edges[r] << '\n';
  }
  out << "edge,total," << graph.edges().size() << '\n';
}

}  // namespace punk
