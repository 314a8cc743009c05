#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "punk/adam.hpp"
#include "punk/annotation.hpp"
#include "punk/checkpoint.hpp"
#include "punk/corpus.hpp"
#include "punk/embed_store.hpp"
#include "punk/layers.hpp"

namespace punk {

enum class ContextKind { none, bow, cnn, cnn_graph };

std::string_view to_string(ContextKind kind);
ContextKind parse_context_kind(std::string_view name);

struct SentenceInstance {
  std::string problem_id;
  int sentence_index = 0;
  int label = 0;

  friend bool operator==(const SentenceInstance&, const SentenceInstance&) = default;
};

// One instance per sentence of every annotated, non-unclear problem (in
// `split` when given). Problems without an annotation are skipped.
std::vector<SentenceInstance> build_sentence_dataset(
    const Corpus& corpus, const AnnotationMap& annotations,
    std::optional<Split> split = std::nullopt);

struct UnknownConfig {
  ContextKind context = ContextKind::cnn;
  EncoderKind sentence = EncoderKind::cnn;  // bow, cnn, lstm or gru
  std::vector<int> widths = {1, 2};
  int kernels = 192;
  int rnn_hidden = 384;
  bool mlp = false;  // 3 x 512 ReLU layers before the head
  int mlp_layers = 3;
  int mlp_hidden = 512;
  double dropout = 0.2;
  int epochs = 20;
  int batch_size = 32;  // problems per update
  std::uint64_t seed = 0;
  AdamConfig adam;

  // Methods of the comparison table: maxent, mlp, cnn, cnn_nocontext,
  // cnn_graph, cnn_graph_lstm, cnn_graph_gru, each with its best epochs
  // and seed.
  static UnknownConfig preset(std::string_view method);
  static const std::vector<std::string>& preset_names();
  void validate() const;

  nlohmann::json to_json() const;
  static UnknownConfig from_json(const nlohmann::json& j);
};

struct SentenceScore {
  int sentence_index = 0;
  std::string text;
  double p_u = 0.0;
  bool flagged = false;  // p_u > 0.5
};

// p_u = sigmoid(w . [c_i; x_ij] + b), optionally through an MLP first.
// Graph contexts come from a single-row-per-problem table (see
// context_table) whose width is fixed at construction.
class UnknownModel {
 public:
  UnknownModel(const UnknownConfig& config, int input_dim, int graph_dim, Rng& rng);

  const UnknownConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }
  int graph_dim() const { return graph_dim_; }
  int context_dim() const;
  int sentence_dim() const { return sentence_encoder_.output_dim(); }
  int head_input_dim() const { return context_dim() + sentence_dim(); }
  Mlp& head() { return head_; }

  Vector context(const EmbeddingTable& table, const EmbeddingTable* graph,
                 const Problem& problem) const;
  double logit(const Vector& context, const Matrix& sentence_tokens) const;

  double score_sentence(const EmbeddingTable& table, const EmbeddingTable* graph,
                        const Problem& problem, int j) const;
  std::vector<SentenceScore> extract(const EmbeddingTable& table,
                                     const EmbeddingTable* graph,
                                     const Problem& problem) const;

  // Summed BCE over the problem's sentences; accumulates gradients scaled
  // by `scale`. Dropout masks are drawn from `rng` when given.
  double accumulate(const EmbeddingTable& table, const EmbeddingTable* graph,
                    const Problem& problem, const std::vector<int>& labels,
                    double scale, Rng* rng);

  void visit(const ParamVisitor& f);
  Checkpoint to_checkpoint();
  static UnknownModel from_checkpoint(const Checkpoint& ck);

 private:
  UnknownConfig config_;
  int input_dim_;
  int graph_dim_;
  ConvTextEncoder context_cnn_;
  TextEncoder sentence_encoder_;
  Mlp head_;
};

UnknownModel train_unknown_model(const std::vector<SentenceInstance>& dataset,
                                 const Corpus& corpus, const EmbeddingTable& table,
                                 const UnknownConfig& config,
                                 const EmbeddingTable* graph = nullptr,
                                 TrainLog* log = nullptr);

using SentencePredictions = std::vector<std::vector<int>>;

// Sentence n (1-based) gets 1; shorter problems get all zeros.
SentencePredictions baseline_nth(const std::vector<const Problem*>& problems, int n);
SentencePredictions baseline_last(const std::vector<const Problem*>& problems);
SentencePredictions baseline_majority(const std::vector<const Problem*>& problems);

// JSONL rows {problem_id, sentence_index, p_u, flagged[, gold]}.
void write_predictions(const std::string& problem_id,
                       const std::vector<SentenceScore>& scores,
                       const std::vector<int>* gold, std::ostream& out);

}  // namespace punk
