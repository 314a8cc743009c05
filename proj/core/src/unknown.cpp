#include "punk/unknown.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "punk/config_io.hpp"
#include "punk/error.hpp"
#include "punk/loss.hpp"

namespace punk {

using nlohmann::json;

std::string_view to_string(ContextKind kind) {
  switch (kind) {
    case ContextKind::none: return "none";
    case ContextKind::bow: return "bow";
    case ContextKind::cnn: return "cnn";
    case ContextKind::cnn_graph: return "cnn+graph";
  }
  return "none";
}

ContextKind parse_context_kind(std::string_view name) {
  if (name == "none") return ContextKind::none;
  if (name == "bow") return ContextKind::bow;
  if (name == "cnn") return ContextKind::cnn;
  if (name == "cnn+graph") return ContextKind::cnn_graph;
  throw ValidationError("unknown context kind '" + std::string(name) + "'");
}

std::vector<SentenceInstance> build_sentence_dataset(const Corpus& corpus,
                                                     const AnnotationMap& annotations,
                                                     std::optional<Split> split) {
  std::vector<SentenceInstance> out;
  for (const auto& p : corpus.problems()) {
    if (split && p.split != *split) continue;
    auto it = annotations.find(p.id);
    if (it == annotations.end() || it->second.unclear) continue;
    const auto& labels = it->second.sentence_labels;
    if (labels.size() != p.sentences.size()) {
      throw ValidationError("annotation of " + p.id + " has " +
                            std::to_string(labels.size()) + " sentence labels, problem has " +
                            std::to_string(p.sentences.size()) + " sentences");
    }
    for (std::size_t j = 0; j < labels.size(); ++j) {
      out.push_back({p.id, static_cast<int>(j), labels[j]});
    }
  }
  return out;
}

const std::vector<std::string>& UnknownConfig::preset_names() {
  static const std::vector<std::string> names = {
      "maxent", "mlp", "cnn", "cnn_nocontext", "cnn_graph", "cnn_graph_lstm", "cnn_graph_gru"};
  return names;
}

UnknownConfig UnknownConfig::preset(std::string_view method) {
  UnknownConfig c;
  if (method == "maxent") {
    c.context = ContextKind::bow;
    c.sentence = EncoderKind::bow;
    c.epochs = 30;
    c.seed = 3;
  } else if (method == "mlp") {
    c.context = ContextKind::bow;
    c.sentence = EncoderKind::bow;
    c.mlp = true;
    c.epochs = 30;
    c.seed = 10;
  } else if (method == "cnn") {
    c.epochs = 20;
    c.seed = 4;
  } else if (method == "cnn_nocontext") {
    c.context = ContextKind::none;
    c.epochs = 30;
    c.seed = 0;
  } else if (method == "cnn_graph") {
    c.context = ContextKind::cnn_graph;
    c.epochs = 30;
    c.seed = 0;
  } else if (method == "cnn_graph_lstm") {
    c.context = ContextKind::cnn_graph;
    c.sentence = EncoderKind::lstm;
    c.epochs = 30;
    c.seed = 10000;
  } else if (method == "cnn_graph_gru") {
    c.context = ContextKind::cnn_graph;
    c.sentence = EncoderKind::gru;
    c.epochs = 30;
    c.seed = 10;
  } else {
    throw ValidationError("unknown method '" + std::string(method) + "'");
  }
  return c;
}

void UnknownConfig::validate() const {
  if (sentence == EncoderKind::mlp) throw ValidationError("sentence encoder cannot be mlp");
  if (widths.empty() || kernels < 1 || rnn_hidden < 1) {
    throw ValidationError("encoder sizes must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("dropout must be in [0, 1)");
  if (epochs < 1 || batch_size < 1) throw ValidationError("epochs and batch_size must be positive");
  if (mlp && (mlp_layers < 1 || mlp_hidden < 1)) throw ValidationError("bad mlp shape");
}

json UnknownConfig::to_json() const {
  return {{"context", punk::to_string(context)},
          {"sentence", punk::to_string(sentence)},
          {"widths", widths},
          {"kernels", kernels},
          {"rnn_hidden", rnn_hidden},
          {"mlp", mlp},
          {"mlp_layers", mlp_layers},
          {"mlp_hidden", mlp_hidden},
          {"dropout", dropout},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"seed", seed},
          {"adam", punk::to_json(adam)}};
}

UnknownConfig UnknownConfig::from_json(const json& j) {
  UnknownConfig c = j.contains("method") ? preset(j.at("method").get<std::string>())
                                         : UnknownConfig{};
  if (j.contains("context")) c.context = parse_context_kind(j.at("context").get<std::string>());
  if (j.contains("sentence")) c.sentence = parse_encoder_kind(j.at("sentence").get<std::string>());
  c.widths = j.value("widths", c.widths);
  c.kernels = j.value("kernels", c.kernels);
  c.rnn_hidden = j.value("rnn_hidden", c.rnn_hidden);
  c.mlp = j.value("mlp", c.mlp);
  c.mlp_layers = j.value("mlp_layers", c.mlp_layers);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  if (j.contains("adam")) c.adam = adam_config_from_json(j.at("adam"));
  return c;
}

UnknownModel::UnknownModel(const UnknownConfig& config, int input_dim, int graph_dim,
                           Rng& rng)
    : config_(config), input_dim_(input_dim), graph_dim_(graph_dim) {
  config_.validate();
  if (config_.context == ContextKind::cnn_graph && graph_dim_ < 1) {
    throw ValidationError("cnn+graph context needs a graph context width");
  }
  if (config_.context != ContextKind::cnn_graph) graph_dim_ = 0;
  if (config_.context == ContextKind::cnn || config_.context == ContextKind::cnn_graph) {
    context_cnn_ = ConvTextEncoder(input_dim, config_.widths, config_.kernels, rng);
  }
  EncoderConfig enc;
  enc.kind = config_.sentence;
  enc.widths = config_.widths;
  enc.kernels_per_width = config_.kernels;
  enc.hidden = config_.rnn_hidden;
  sentence_encoder_ = TextEncoder(enc, input_dim, rng);
  std::vector<int> hidden;
  if (config_.mlp) hidden.assign(static_cast<std::size_t>(config_.mlp_layers), config_.mlp_hidden);
  head_ = Mlp(head_input_dim(), hidden, 1, rng);
}

int UnknownModel::context_dim() const {
  switch (config_.context) {
    case ContextKind::none: return 0;
    case ContextKind::bow: return input_dim_;
    case ContextKind::cnn: return context_cnn_.output_dim();
    case ContextKind::cnn_graph: return context_cnn_.output_dim() + graph_dim_;
  }
  return 0;
}

namespace {

Vector graph_context(const EmbeddingTable* graph, int graph_dim, const Problem& problem) {
  if (!graph) throw ValidationError("cnn+graph context needs graph contexts");
  if (graph->dim() != graph_dim) {
    throw ValidationError("graph contexts have width " + std::to_string(graph->dim()) +
                          ", model expects " + std::to_string(graph_dim));
  }
  const ItemKey key = ItemKey::problem(problem.id);
  if (!graph->contains(key)) throw NotFoundError("no graph context for problem " + problem.id);
  return graph->pooled(key);
}

Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace

Vector UnknownModel::context(const EmbeddingTable& table, const EmbeddingTable* graph,
                             const Problem& problem) const {
  switch (config_.context) {
    case ContextKind::none: return Vector(0);
    case ContextKind::bow: return table.pooled(ItemKey::problem(problem.id));
    case ContextKind::cnn: return context_cnn_.forward(table.matrix(ItemKey::problem(problem.id)));
    case ContextKind::cnn_graph:
      return concat(context_cnn_.forward(table.matrix(ItemKey::problem(problem.id))),
                    graph_context(graph, graph_dim_, problem));
  }
  return Vector(0);
}

double UnknownModel::logit(const Vector& ctx, const Matrix& sentence_tokens) const {
  return head_.forward(concat(ctx, sentence_encoder_.forward(sentence_tokens)))[0];
}

double UnknownModel::score_sentence(const EmbeddingTable& table, const EmbeddingTable* graph,
                                    const Problem& problem, int j) const {
  if (j < 0 || j >= static_cast<int>(problem.sentences.size())) {
    throw NotFoundError("problem " + problem.id + " has no sentence " + std::to_string(j));
  }
  return sigmoid(logit(context(table, graph, problem),
                       table.matrix(ItemKey::sentence(problem.id, j))));
}

std::vector<SentenceScore> UnknownModel::extract(const EmbeddingTable& table,
                                                 const EmbeddingTable* graph,
                                                 const Problem& problem) const {
  const Vector ctx = context(table, graph, problem);
  std::vector<SentenceScore> out;
  for (const auto& s : problem.sentences) {
    const double p = sigmoid(logit(ctx, table.matrix(ItemKey::sentence(problem.id, s.index))));
    out.push_back({s.index, s.text, p, p > 0.5});
  }
  return out;
}

double UnknownModel::accumulate(const EmbeddingTable& table, const EmbeddingTable* graph,
                                const Problem& problem, const std::vector<int>& labels,
                                double scale, Rng* rng) {
  if (labels.size() != problem.sentences.size()) {
    throw ValidationError("label count does not match the sentences of " + problem.id);
  }
  const bool conv_context =
      config_.context == ContextKind::cnn || config_.context == ContextKind::cnn_graph;
  ConvTextEncoder::Trace ctx_trace;
  Vector ctx;
  if (conv_context) {
    ctx = context_cnn_.forward(table.matrix(ItemKey::problem(problem.id)), &ctx_trace);
    if (config_.context == ContextKind::cnn_graph) {
      ctx = concat(ctx, graph_context(graph, graph_dim_, problem));
    }
  } else {
    ctx = context(table, graph, problem);
  }
  Vector d_ctx = Vector::Zero(ctx.size());
  double loss = 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    TextEncoder::Trace s_trace;
    Vector x = sentence_encoder_.forward(
        table.matrix(ItemKey::sentence(problem.id, static_cast<int>(j))), &s_trace);
    Vector z = concat(ctx, x);
    Vector mask;
    if (rng) z = dropout(z, config_.dropout, *rng, &mask);
    Mlp::Trace h_trace;
    const double out = head_.forward(z, &h_trace)[0];
    LossGrad lg = sigmoid_bce(out, labels[j]);
    loss += lg.loss;
    Vector dz = head_.backward(h_trace, Vector::Constant(1, lg.grad * scale));
    if (rng) dz = dz.cwiseProduct(mask);
    d_ctx += dz.head(ctx.size());
    sentence_encoder_.backward(s_trace, dz.tail(x.size()));
  }
  if (conv_context) context_cnn_.backward(ctx_trace, d_ctx.head(context_cnn_.output_dim()));
  return loss;
}

void UnknownModel::visit(const ParamVisitor& f) {
  if (config_.context == ContextKind::cnn || config_.context == ContextKind::cnn_graph) {
    context_cnn_.visit(f, "context.cnn");
  }
  sentence_encoder_.visit(f, "sentence");
  head_.visit(f, "head");
}

Checkpoint UnknownModel::to_checkpoint() {
  json header = {{"kind", "unknown_extractor"},
                 {"config", config_.to_json()},
                 {"input_dim", input_dim_},
                 {"graph_dim", graph_dim_}};
  return Checkpoint::capture(header, *this);
}

UnknownModel UnknownModel::from_checkpoint(const Checkpoint& ck) {
  if (ck.kind() != "unknown_extractor") {
    throw ValidationError("checkpoint is a '" + ck.kind() + "', not an unknown extractor");
  }
  Rng rng(0);
  UnknownModel model(UnknownConfig::from_json(ck.header.at("config")),
                     ck.header.at("input_dim").get<int>(),
                     ck.header.at("graph_dim").get<int>(), rng);
  ck.restore(model);
  return model;
}

UnknownModel train_unknown_model(const std::vector<SentenceInstance>& dataset,
                                 const Corpus& corpus, const EmbeddingTable& table,
                                 const UnknownConfig& config, const EmbeddingTable* graph,
                                 TrainLog* log) {
  if (dataset.empty()) throw ValidationError("sentence dataset is empty");
  config.validate();
  if (config.context == ContextKind::cnn_graph && !graph) {
    throw ValidationError("cnn+graph training needs graph contexts");
  }
  // Problems in first-appearance order with their per-sentence labels.
  std::vector<const Problem*> problems;
  std::map<std::string, std::vector<int>> labels;
  for (const auto& inst : dataset) {
    auto it = labels.find(inst.problem_id);
    if (it == labels.end()) {
      const Problem& p = corpus.problem(inst.problem_id);
      problems.push_back(&p);
      it = labels.emplace(inst.problem_id, std::vector<int>(p.sentences.size(), -1)).first;
    }
    if (inst.sentence_index < 0 || inst.sentence_index >= static_cast<int>(it->second.size())) {
      throw ValidationError("instance points at sentence " +
                            std::to_string(inst.sentence_index) + " of " + inst.problem_id);
    }
    it->second[static_cast<std::size_t>(inst.sentence_index)] = inst.label;
  }
  for (const auto& [id, ys] : labels) {
    if (std::count(ys.begin(), ys.end(), -1) > 0) {
      throw ValidationError("dataset covers only part of the sentences of " + id);
    }
  }

  Rng rng(config.seed);
  UnknownModel model(config, table.dim(), graph ? graph->dim() : 0, rng);
  Adam adam(config.adam);
  std::vector<std::size_t> order(problems.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t sentences = 0;
      for (std::size_t k = start; k < end; ++k) sentences += problems[order[k]]->sentences.size();
      const double scale = 1.0 / static_cast<double>(sentences);
      zero_grads(model);
      for (std::size_t k = start; k < end; ++k) {
        const Problem& p = *problems[order[k]];
        epoch_loss += model.accumulate(table, graph, p, labels.at(p.id), scale, &rng);
      }
      adam.step(model);
    }
    if (log) log->losses.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  round_to_storage(model);
  return model;
}

SentencePredictions baseline_nth(const std::vector<const Problem*>& problems, int n) {
  if (n < 1) throw ValidationError("n must be >= 1");
  SentencePredictions out;
  for (const Problem* p : problems) {
    std::vector<int> y(p->sentences.size(), 0);
    if (static_cast<std::size_t>(n) <= y.size()) y[static_cast<std::size_t>(n - 1)] = 1;
    out.push_back(std::move(y));
  }
  return out;
}

SentencePredictions baseline_last(const std::vector<const Problem*>& problems) {
  SentencePredictions out;
  for (const Problem* p : problems) {
    std::vector<int> y(p->sentences.size(), 0);
    if (!y.empty()) y.back() = 1;
    out.push_back(std::move(y));
  }
  return out;
}

SentencePredictions baseline_majority(const std::vector<const Problem*>& problems) {
  SentencePredictions out;
  for (const Problem* p : problems) out.emplace_back(p->sentences.size(), 0);
  return out;
}

void write_predictions(const std::string& problem_id, const std::vector<SentenceScore>& scores,
                       const std::vector<int>* gold, std::ostream& out) {
  for (std::size_t j = 0; j < scores.size(); ++j) {
    json row = {{"problem_id", problem_id},
                {"sentence_index", scores[j].sentence_index},
                {"p_u", scores[j].p_u},
                {"flagged", scores[j].flagged}};
    if (gold) row["gold"] = gold->at(j);
    out << row.dump() << '\n';
  }
}

}  // namespace punk
