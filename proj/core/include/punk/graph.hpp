#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "punk/adam.hpp"
#include "punk/checkpoint.hpp"
#include "punk/corpus.hpp"
#include "punk/embed_store.hpp"
#include "punk/layers.hpp"

namespace punk {

enum class NodeKind { concept_, problem, answer };

enum class Relation {
  problem_has_type,
  problem_has_answer,
  same_section_as,
  mentioned_in_before_chapters,
  same_chapter_as,
};

std::string_view to_string(NodeKind kind);
NodeKind parse_node_kind(std::string_view name);
std::string_view to_string(Relation relation);
Relation parse_relation(std::string_view name);

// Endpoint kinds a relation may connect (in either order).
std::pair<NodeKind, NodeKind> relation_endpoints(Relation relation);

struct Node {
  NodeKind kind = NodeKind::problem;
  std::string id;
  std::optional<Split> split;  // problems only
};

// Undirected: stored once with u < v.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  Relation relation = Relation::problem_has_type;
};

class HeteroGraph {
 public:
  explicit HeteroGraph(int feature_dim = 0) : feature_dim_(feature_dim) {}

  std::size_t add_node(Node node, const Vector& feature);
  // Throws when the endpoint kinds violate the schema, on self-edges and on
  // duplicates.
  void add_edge(std::size_t a, std::size_t b, Relation relation);

  std::size_t size() const { return nodes_.size(); }
  int feature_dim() const { return feature_dim_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  std::optional<std::size_t> find(NodeKind kind, const std::string& id) const;
  std::size_t index_of(NodeKind kind, const std::string& id) const;
  bool has_edge(std::size_t a, std::size_t b) const;
  std::vector<std::size_t> neighbors(std::size_t i) const;

  // n x feature_dim
  Matrix features() const;

  std::map<NodeKind, std::size_t> node_counts() const;
  std::map<Relation, std::size_t> edge_counts() const;

 private:
  int feature_dim_;
  std::vector<Node> nodes_;
  std::vector<Vector> features_;
  std::vector<Edge> edges_;
  std::map<std::pair<NodeKind, std::string>, std::size_t> index_;
  std::map<std::pair<std::size_t, std::size_t>, Relation> edge_set_;
};

// Concept, problem and answer nodes with pooled-token features from
// `table`. Problem tags resolve through Concept::tags.
HeteroGraph build_graph(const Corpus& corpus, const std::vector<Concept>& concepts,
                        const EmbeddingTable& table);

// Symmetric adjacency with a self-loop on every node. problem-has-type
// edges of non-train problems are left out unless `include_eval_types`.
Eigen::SparseMatrix<double, Eigen::RowMajor> message_structure(
    const HeteroGraph& graph, bool include_eval_types = false);

enum class Activation { relu, identity };

struct GcnConfig {
  int layers = 3;
  int hidden = 100;
  Activation activation = Activation::relu;
};

// h_u <- f(sum over v in N(u) of (W h_v + b)), one shared W, b per layer.
class Gcn {
 public:
  struct Trace {
    std::vector<Matrix> inputs;  // H^(k-1), n x in
    std::vector<Matrix> pre;     // summed messages, n x d
  };

  Gcn() = default;
  Gcn(const GcnConfig& config, int input_dim, Rng& rng);

  const GcnConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }

  Matrix forward(const Eigen::SparseMatrix<double, Eigen::RowMajor>& adjacency,
                 const Matrix& x, Trace* trace = nullptr) const;
  void backward(const Eigen::SparseMatrix<double, Eigen::RowMajor>& adjacency,
                const Trace& trace, const Matrix& grad_out);

  void visit(const ParamVisitor& f, const std::string& prefix = "gcn");

  std::vector<Param> weights;  // d x in
  std::vector<Param> biases;   // d x 1

 private:
  GcnConfig config_;
  int input_dim_ = 0;
};

struct LinkTrainConfig {
  GcnConfig gcn;
  int epochs = 200;
  std::uint64_t seed = 0;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  bool include_eval_types = false;

  nlohmann::json to_json() const;
  static LinkTrainConfig from_json(const nlohmann::json& j);
};

struct LinkEpoch {
  double train_loss = 0.0;
  double dev_positive_score = 0.0;  // mean score of dev problem-has-type edges
};

struct LinkSample {
  std::vector<std::pair<std::size_t, std::size_t>> positives;
  std::vector<std::pair<std::size_t, std::size_t>> negatives;
};

double link_score(const Matrix& h, std::size_t u, std::size_t v);

// problem-has-type edges whose problem lies in `split`, as (problem, concept).
std::vector<std::pair<std::size_t, std::size_t>> type_edges(const HeteroGraph& graph,
                                                            Split split);

// As many uniform (train problem, concept) non-edges as `count`.
std::vector<std::pair<std::size_t, std::size_t>> sample_negatives(
    const HeteroGraph& graph, std::size_t count, Rng& rng);

// Mean BCE over positives (target 1) and negatives (target 0); accumulates
// the gradient with respect to h.
double link_loss(const Matrix& h, const LinkSample& sample, Matrix* grad_h);

class LinkPredictor {
 public:
  LinkPredictor(const LinkTrainConfig& config, int input_dim, Rng& rng)
      : config_(config), gcn_(config.gcn, input_dim, rng) {}

  const LinkTrainConfig& config() const { return config_; }
  Gcn& gcn() { return gcn_; }
  const Gcn& gcn() const { return gcn_; }

  // Final-layer embeddings of every node.
  Matrix embed(const HeteroGraph& graph) const;

  void visit(const ParamVisitor& f) { gcn_.visit(f); }
  Checkpoint to_checkpoint();
  static LinkPredictor from_checkpoint(const Checkpoint& ck);

 private:
  LinkTrainConfig config_;
  Gcn gcn_;
};

LinkPredictor train_link_prediction(const HeteroGraph& graph, const LinkTrainConfig& config,
                                    std::vector<LinkEpoch>* log = nullptr);

// The problem node's final-layer embedding. Throws for unknown ids and for
// nodes that are not problems.
Vector context_of(const HeteroGraph& graph, const Matrix& embeddings,
                  const std::string& problem_id);

// One single-row item per problem node, for storage next to other
// embedding tables.
EmbeddingTable context_table(const HeteroGraph& graph, const Matrix& embeddings);

// JSONL: {"index","kind","id"[,"split"]} per node and {"u","v","relation"}
// per edge.
void write_graph(const HeteroGraph& graph, std::ostream& nodes, std::ostream& edges);
// CSV rows: section,name,count for node kinds then relations.
void write_graph_stats(const HeteroGraph& graph, std::ostream& out);

}  // namespace punk
