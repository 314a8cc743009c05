#include "punk/concept_models.hpp"

#include <algorithm>

#include "punk/config_io.hpp"
#include "punk/error.hpp"
#include "punk/loss.hpp"

namespace punk {

using nlohmann::json;

std::string_view to_string(ConceptModelKind kind) {
  switch (kind) {
    case ConceptModelKind::maxent: return "maxent";
    case ConceptModelKind::mlp: return "mlp";
    case ConceptModelKind::lstm: return "lstm";
    case ConceptModelKind::gru: return "gru";
    case ConceptModelKind::cnn: return "cnn";
  }
  return "cnn";
}

ConceptModelKind parse_concept_model_kind(std::string_view name) {
  if (name == "maxent") return ConceptModelKind::maxent;
  if (name == "mlp") return ConceptModelKind::mlp;
  if (name == "lstm") return ConceptModelKind::lstm;
  if (name == "gru") return ConceptModelKind::gru;
  if (name == "cnn") return ConceptModelKind::cnn;
  throw ValidationError("unknown concept model '" + std::string(name) + "'");
}

ConceptTrainConfig ConceptTrainConfig::defaults(ConceptModelKind kind) {
  ConceptTrainConfig c;
  c.kind = kind;
  switch (kind) {
    case ConceptModelKind::maxent:
      c.encoder.kind = EncoderKind::bow;
      c.epochs = 300;
      c.seed = 3;
      break;
    case ConceptModelKind::mlp:
      c.encoder.kind = EncoderKind::bow;
      c.epochs = 300;
      c.seed = 1;
      break;
    case ConceptModelKind::lstm:
      c.encoder.kind = EncoderKind::lstm;
      c.encoder.hidden = 384;
      c.epochs = 300;
      c.seed = 2;
      break;
    case ConceptModelKind::gru:
      c.encoder.kind = EncoderKind::gru;
      c.encoder.hidden = 384;
      c.epochs = 300;
      c.seed = 2;
      break;
    case ConceptModelKind::cnn:
      c.encoder.kind = EncoderKind::cnn;
      c.encoder.widths = {3, 4, 5, 6};
      c.encoder.kernels_per_width = 192;
      c.epochs = 20;
      c.seed = 10000;
      break;
  }
  return c;
}

json ConceptTrainConfig::to_json() const {
  return {{"kind", punk::to_string(kind)},
          {"encoder", punk::to_json(encoder)},
          {"mlp_layers", mlp_layers},
          {"mlp_hidden", mlp_hidden},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"seed", seed},
          {"adam", punk::to_json(adam)}};
}

ConceptTrainConfig ConceptTrainConfig::from_json(const json& j) {
  ConceptTrainConfig c = defaults(parse_concept_model_kind(j.at("kind").get<std::string>()));
  if (j.contains("encoder")) c.encoder = encoder_config_from_json(j.at("encoder"));
  c.mlp_layers = j.value("mlp_layers", c.mlp_layers);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  if (j.contains("adam")) c.adam = adam_config_from_json(j.at("adam"));
  return c;
}

ConceptClassifier::ConceptClassifier(const ConceptTrainConfig& config,
                                     std::vector<std::string> labels,
                                     int input_dim, Rng& rng)
    : config_(config), labels_(std::move(labels)), input_dim_(input_dim) {
  if (labels_.empty()) throw ValidationError("concept classifier needs labels");
  const bool pooled = config_.kind == ConceptModelKind::maxent ||
                      config_.kind == ConceptModelKind::mlp;
  if (pooled) config_.encoder.kind = EncoderKind::bow;
  encoder_ = TextEncoder(config_.encoder, input_dim, rng);
  std::vector<int> hidden;
  if (config_.kind == ConceptModelKind::mlp) {
    hidden.assign(static_cast<std::size_t>(config_.mlp_layers), config_.mlp_hidden);
  }
  head_ = Mlp(encoder_.output_dim(), hidden, static_cast<int>(labels_.size()), rng);
}

Vector ConceptClassifier::logits(const Matrix& tokens) const {
  return head_.forward(encoder_.forward(tokens));
}

Vector ConceptClassifier::logits(const EmbeddingTable& table,
                                 const Problem& problem) const {
  return logits(table.matrix(ItemKey::problem(problem.id)));
}

std::set<std::string> labels_above_threshold(const Vector& logits,
                                             const std::vector<std::string>& labels) {
  std::set<std::string> out;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (sigmoid(logits[i]) > 0.5) out.insert(labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::set<std::string> ConceptClassifier::predict(const EmbeddingTable& table,
                                                 const Problem& problem) const {
  return labels_above_threshold(logits(table, problem), labels_);
}

double ConceptClassifier::accumulate(const Matrix& tokens, const Vector& targets) {
  TextEncoder::Trace enc_trace;
  Mlp::Trace head_trace;
  Vector encoded = encoder_.forward(tokens, &enc_trace);
  Vector z = head_.forward(encoded, &head_trace);
  double loss = 0.0;
  Vector dz(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    LossGrad lg = sigmoid_bce(z[i], targets[i]);
    loss += lg.loss;
    dz[i] = lg.grad;
  }
  Vector d_enc = head_.backward(head_trace, dz);
  encoder_.backward(enc_trace, d_enc);
  return loss;
}

void ConceptClassifier::visit(const ParamVisitor& f) {
  encoder_.visit(f, "encoder");
  head_.visit(f, "head");
}

Checkpoint ConceptClassifier::to_checkpoint() {
  json header = {{"kind", "concept_classifier"},
                 {"config", config_.to_json()},
                 {"labels", labels_},
                 {"input_dim", input_dim_}};
  return Checkpoint::capture(header, *this);
}

ConceptClassifier ConceptClassifier::from_checkpoint(const Checkpoint& ck) {
  if (ck.kind() != "concept_classifier") {
    throw ValidationError("checkpoint is a '" + ck.kind() + "', not a concept classifier");
  }
  Rng rng(0);
  ConceptClassifier model(ConceptTrainConfig::from_json(ck.header.at("config")),
                          ck.header.at("labels").get<std::vector<std::string>>(),
                          ck.header.at("input_dim").get<int>(), rng);
  ck.restore(model);
  return model;
}

ConceptClassifier train_concept_classifier(const Corpus& corpus,
                                           const EmbeddingTable& table,
                                           const std::vector<Concept>& labels,
                                           const ConceptTrainConfig& config,
                                           TrainLog* log) {
  auto train = corpus.in_split(Split::train);
  if (train.empty()) throw ValidationError("training split is empty");
  if (config.epochs < 1 || config.batch_size < 1) {
    throw ValidationError("epochs and batch_size must be positive");
  }
  std::vector<std::string> names;
  for (const auto& c : labels) names.push_back(c.id);

  Rng rng(config.seed);
  ConceptClassifier model(config, names, table.dim(), rng);
  Adam adam(config.adam);

  std::vector<Matrix> inputs;
  std::vector<Vector> targets;
  for (const Problem* p : train) {
    inputs.push_back(table.matrix(ItemKey::problem(p->id)));
    Vector y = Vector::Zero(static_cast<Eigen::Index>(names.size()));
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (p->concept_tags.count(names[k])) y[static_cast<Eigen::Index>(k)] = 1.0;
    }
    targets.push_back(std::move(y));
  }

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      zero_grads(model);
      for (std::size_t k = start; k < end; ++k) {
        epoch_loss += model.accumulate(inputs[order[k]], targets[order[k]]);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      model.visit([&](const std::string&, Param& p) { p.grad *= scale; });
      adam.step(model);
    }
    if (log) log->losses.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  round_to_storage(model);
  return model;
}

}  // namespace punk
