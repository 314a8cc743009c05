#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "punk/adam.hpp"
#include "punk/checkpoint.hpp"
#include "punk/corpus.hpp"
#include "punk/embed_store.hpp"
#include "punk/layers.hpp"

namespace punk {

enum class ConceptModelKind { maxent, mlp, lstm, gru, cnn };

std::string_view to_string(ConceptModelKind kind);
ConceptModelKind parse_concept_model_kind(std::string_view name);

struct ConceptTrainConfig {
  ConceptModelKind kind = ConceptModelKind::cnn;
  EncoderConfig encoder;     // sequence encoder (cnn/lstm/gru)
  int mlp_layers = 3;
  int mlp_hidden = 512;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;
  AdamConfig adam;

  // Best epochs/seed of the reference hyperparameter search per model kind.
  static ConceptTrainConfig defaults(ConceptModelKind kind);
  nlohmann::json to_json() const;
  static ConceptTrainConfig from_json(const nlohmann::json& j);
};

// Per-concept sigmoid heads over a problem encoding. MaxEnt and MLP read the
// mean-pooled problem embedding; LSTM, GRU and CNN read the token matrix.
class ConceptClassifier {
 public:
  ConceptClassifier(const ConceptTrainConfig& config,
                    std::vector<std::string> labels, int input_dim, Rng& rng);

  const ConceptTrainConfig& config() const { return config_; }
  const std::vector<std::string>& labels() const { return labels_; }
  int input_dim() const { return input_dim_; }

  Vector logits(const Matrix& tokens) const;
  Vector logits(const EmbeddingTable& table, const Problem& problem) const;
  // Concepts whose sigmoid score exceeds 0.5.
  std::set<std::string> predict(const EmbeddingTable& table,
                                const Problem& problem) const;

  // Summed BCE over heads for one example; accumulates gradients.
  double accumulate(const Matrix& tokens, const Vector& targets);

  void visit(const ParamVisitor& f);
  Checkpoint to_checkpoint();
  static ConceptClassifier from_checkpoint(const Checkpoint& ck);

 private:
  ConceptTrainConfig config_;
  std::vector<std::string> labels_;
  int input_dim_;
  TextEncoder encoder_;
  Mlp head_;  // no hidden layers except for the MLP model
};

// Thresholding rule shared by every multi-label prediction.
std::set<std::string> labels_above_threshold(const Vector& logits,
                                             const std::vector<std::string>& labels);

ConceptClassifier train_concept_classifier(const Corpus& corpus,
                                           const EmbeddingTable& table,
                                           const std::vector<Concept>& labels,
                                           const ConceptTrainConfig& config,
                                           TrainLog* log = nullptr);

// ------------------------------------------------------------ prototypes

struct EpisodeConfig {
  int n_way = 0;  // 0: every concept
  int support = 10;
  int query = 15;
  int episodes = 100;
};

struct ProtoTrainConfig {
  EpisodeConfig episode;
  EncoderConfig encoder{EncoderKind::cnn, {3, 4, 5, 6}, 192, 384, 3, 0.0};
  AdamConfig adam;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ProtoTrainConfig from_json(const nlohmann::json& j);
};

class PrototypicalNet {
 public:
  PrototypicalNet(const ProtoTrainConfig& config, std::vector<Concept> labels,
                  int input_dim, Rng& rng);

  const ProtoTrainConfig& config() const { return config_; }
  const std::vector<Concept>& labels() const { return labels_; }
  TextEncoder& encoder() { return encoder_; }
  const TextEncoder& encoder() const { return encoder_; }

  Vector encode(const EmbeddingTable& table, const Problem& problem) const;

  void visit(const ParamVisitor& f);
  Checkpoint to_checkpoint();
  static PrototypicalNet from_checkpoint(const Checkpoint& ck);

 private:
  ProtoTrainConfig config_;
  std::vector<Concept> labels_;
  int input_dim_;
  TextEncoder encoder_;
};

struct PrototypeSet {
  std::vector<std::string> concept_ids;
  std::vector<int> order_index;
  Matrix vectors;  // one prototype per row
  std::vector<std::vector<std::string>> support_ids;
};

// Index of the prototype with the smallest squared Euclidean distance;
// ties go to the smallest order_index.
std::size_t nearest_prototype(const Vector& query, const PrototypeSet& prototypes);

// Mean of the encoded support problems per concept.
PrototypeSet build_prototypes(const PrototypicalNet& net, const EmbeddingTable& table,
                              const Corpus& corpus,
                              const std::vector<std::vector<std::string>>& support_ids);

std::string classify_by_prototype(const PrototypicalNet& net,
                                  const PrototypeSet& prototypes,
                                  const EmbeddingTable& table,
                                  const Problem& query);

// Train-split problems carrying exactly one tag, grouped by label index.
std::vector<std::vector<const Problem*>> single_concept_pools(
    const Corpus& corpus, const std::vector<Concept>& labels, Split split);

PrototypicalNet train_prototypical(const Corpus& corpus, const EmbeddingTable& table,
                                   const std::vector<Concept>& labels,
                                   const ProtoTrainConfig& config,
                                   TrainLog* log = nullptr);

// Correct in at least 95% of the trials.
bool is_prototypical(int correct, int trials);

// Projects points onto their top two principal axes (centered). Each axis
// is signed so that its first non-zero loading is positive.
Matrix pca_2d(const Matrix& points);

struct ProjectedPoint {
  std::string kind;  // "prototype" or "example"
  std::string concept_id;
  double x = 0.0;
  double y = 0.0;
  std::string problem_id;
};

// Repeats random support draws `trials` times (>= 20), keeps the dev
// problems whose nearest prototype is gold in >= 95% of draws, then projects
// one randomly picked prototype per concept plus those examples to 2-D.
std::vector<ProjectedPoint> export_prototypes(const PrototypicalNet& net,
                                              const Corpus& corpus,
                                              const EmbeddingTable& table,
                                              int trials, std::uint64_t seed,
                                              Split eval_split = Split::dev);

void write_prototype_csv(const std::vector<ProjectedPoint>& points, std::ostream& out);

}  // namespace punk
