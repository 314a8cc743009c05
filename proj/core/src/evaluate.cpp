#include "punk/evaluate.hpp"

#include "punk/error.hpp"

namespace punk {

using nlohmann::json;

json EvalReport::to_json() const {
  json classes = json::array();
  for (const auto& c : result.classes) {
    classes.push_back({{"name", c.name},
                       {"p", c.precision},
                       {"r", c.recall},
                       {"f1", c.f1},
                       {"support", c.support}});
  }
  json j = {{"task", task},
            {"split", split},
            {"classes", classes},
            {"macro_f1", result.macro_f1},
            {"seed", seed},
            {"config", config}};
  j["train_seconds"] = train_seconds ? json(*train_seconds) : json(nullptr);
  return j;
}

std::vector<std::pair<const Problem*, std::vector<int>>> labeled_problems(
    const Corpus& corpus, const AnnotationMap& annotations, Split split) {
  std::vector<std::pair<const Problem*, std::vector<int>>> out;
  for (const Problem* p : corpus.in_split(split)) {
    auto it = annotations.find(p->id);
    if (it == annotations.end() || it->second.unclear) continue;
    if (it->second.sentence_labels.size() != p->sentences.size()) {
      throw ValidationError("annotation of " + p->id + " does not match its sentences");
    }
    out.emplace_back(p, it->second.sentence_labels);
  }
  if (out.empty()) {
    throw ValidationError("split " + std::string(to_string(split)) + " has no labeled problems");
  }
  return out;
}

namespace {

void flatten_into(const std::vector<int>& ys, std::vector<int>& out) {
  out.insert(out.end(), ys.begin(), ys.end());
}

}  // namespace

EvalReport evaluate_unknown(const UnknownModel& model, const Corpus& corpus,
                            const EmbeddingTable& table, const EmbeddingTable* graph,
                            const AnnotationMap& annotations, Split split) {
  std::vector<int> gold, pred;
  for (const auto& [p, ys] : labeled_problems(corpus, annotations, split)) {
    flatten_into(ys, gold);
    for (const auto& s : model.extract(table, graph, *p)) pred.push_back(s.flagged ? 1 : 0);
  }
  EvalReport r;
  r.task = "unknown";
  r.split = to_string(split);
  r.result = binary_f1(gold, pred);
  r.seed = model.config().seed;
  r.config = model.config().to_json();
  return r;
}

EvalReport evaluate_baseline(Baseline baseline, int n, const Corpus& corpus,
                             const AnnotationMap& annotations, Split split) {
  auto labeled = labeled_problems(corpus, annotations, split);
  std::vector<const Problem*> problems;
  std::vector<int> gold, pred;
  for (const auto& [p, ys] : labeled) {
    problems.push_back(p);
    flatten_into(ys, gold);
  }
  SentencePredictions preds;
  json config;
  switch (baseline) {
    case Baseline::majority:
      preds = baseline_majority(problems);
      config = {{"baseline", "majority"}};
      break;
    case Baseline::nth:
      preds = baseline_nth(problems, n);
      config = {{"baseline", "nth"}, {"n", n}};
      break;
    case Baseline::last:
      preds = baseline_last(problems);
      config = {{"baseline", "last"}};
      break;
  }
  for (const auto& ys : preds) flatten_into(ys, pred);
  EvalReport r;
  r.task = "unknown";
  r.split = to_string(split);
  r.result = binary_f1(gold, pred);
  r.config = config;
  return r;
}

EvalReport evaluate_concepts(const ConceptClassifier& model, const Corpus& corpus,
                             const EmbeddingTable& table, Split split) {
  auto problems = corpus.in_split(split);
  if (problems.empty()) {
    throw ValidationError("split " + std::string(to_string(split)) + " is empty");
  }
  std::vector<std::set<std::string>> gold, pred;
  for (const Problem* p : problems) {
    gold.push_back(p->concept_tags);
    pred.push_back(model.predict(table, *p));
  }
  EvalReport r;
  r.task = "concept";
  r.split = to_string(split);
  r.result = multilabel_f1(gold, pred, model.labels());
  r.seed = model.config().seed;
  r.config = model.config().to_json();
  return r;
}

EvalReport evaluate_prototypical(const PrototypicalNet& net, const Corpus& corpus,
                                 const EmbeddingTable& table, Split split) {
  const auto& labels = net.labels();
  auto train = single_concept_pools(corpus, labels, Split::train);
  auto eval = single_concept_pools(corpus, labels, split);
  std::vector<std::vector<std::string>> support(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (train[c].empty()) {
      throw ValidationError("concept '" + labels[c].id +
                            "' has no single-concept training problems");
    }
    for (const Problem* p : train[c]) support[c].push_back(p->id);
  }
  PrototypeSet prototypes = build_prototypes(net, table, corpus, support);
  std::vector<std::string> gold, pred, classes;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    classes.push_back(labels[c].id);
    for (const Problem* p : eval[c]) {
      gold.push_back(labels[c].id);
      pred.push_back(classify_by_prototype(net, prototypes, table, *p));
    }
  }
  if (gold.empty()) {
    throw ValidationError("split " + std::string(to_string(split)) +
                          " has no single-concept problems");
  }
  EvalReport r;
  r.task = "prototype";
  r.split = to_string(split);
  r.result = multiclass_f1(gold, pred, classes);
  r.seed = net.config().seed;
  r.config = net.config().to_json();
  return r;
}

}  // namespace punk
