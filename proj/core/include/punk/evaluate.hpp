#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "punk/annotation.hpp"
#include "punk/concept_models.hpp"
#include "punk/corpus.hpp"
#include "punk/embed_store.hpp"
#include "punk/metrics.hpp"
#include "punk/unknown.hpp"

namespace punk {

struct EvalReport {
  std::string task;   // "unknown", "concept" or "prototype"
  std::string split;
  F1Result result;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::optional<double> train_seconds;

  nlohmann::json to_json() const;
};

enum class Baseline { majority, nth, last };

// Gold sentence labels of the annotated, non-unclear problems of `split`,
// in corpus order. Throws when the split has none.
std::vector<std::pair<const Problem*, std::vector<int>>> labeled_problems(
    const Corpus& corpus, const AnnotationMap& annotations, Split split);

EvalReport evaluate_unknown(const UnknownModel& model, const Corpus& corpus,
                            const EmbeddingTable& table, const EmbeddingTable* graph,
                            const AnnotationMap& annotations, Split split);

EvalReport evaluate_baseline(Baseline baseline, int n, const Corpus& corpus,
                             const AnnotationMap& annotations, Split split);

EvalReport evaluate_concepts(const ConceptClassifier& model, const Corpus& corpus,
                             const EmbeddingTable& table, Split split);

// Nearest-prototype accuracy on single-concept problems of `split`, with
// prototypes averaged over every single-concept training problem.
EvalReport evaluate_prototypical(const PrototypicalNet& net, const Corpus& corpus,
                                 const EmbeddingTable& table, Split split);

}  // namespace punk
