#include "punk/concept_models.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <ostream>

#include "punk/config_io.hpp"
#include "punk/error.hpp"
#include "punk/loss.hpp"

namespace punk {

using nlohmann::json;

json ProtoTrainConfig::to_json() const {
  return {{"n_way", episode.n_way},
          {"support", episode.support},
          {"query", episode.query},
          {"episodes", episode.episodes},
          {"encoder", punk::to_json(encoder)},
          {"adam", punk::to_json(adam)},
          {"seed", seed}};
}

ProtoTrainConfig ProtoTrainConfig::from_json(const json& j) {
  ProtoTrainConfig c;
  c.episode.n_way = j.value("n_way", c.episode.n_way);
  c.episode.support = j.value("support", c.episode.support);
  c.episode.query = j.value("query", c.episode.query);
  c.episode.episodes = j.value("episodes", c.episode.episodes);
  if (j.contains("encoder")) c.encoder = encoder_config_from_json(j.at("encoder"));
  if (j.contains("adam")) c.adam = adam_config_from_json(j.at("adam"));
  c.seed = j.value("seed", c.seed);
  return c;
}

PrototypicalNet::PrototypicalNet(const ProtoTrainConfig& config,
                                 std::vector<Concept> labels, int input_dim, Rng& rng)
    : config_(config), labels_(std::move(labels)), input_dim_(input_dim),
      encoder_(config.encoder, input_dim, rng) {}

Vector PrototypicalNet::encode(const EmbeddingTable& table, const Problem& problem) const {
  return encoder_.forward(table.matrix(ItemKey::problem(problem.id)));
}

void PrototypicalNet::visit(const ParamVisitor& f) { encoder_.visit(f, "encoder"); }

Checkpoint PrototypicalNet::to_checkpoint() {
  json labels = json::array();
  for (const auto& c : labels_) labels.push_back(concept_to_json(c));
  json header = {{"kind", "prototypical"},
                 {"config", config_.to_json()},
                 {"labels", labels},
                 {"input_dim", input_dim_}};
  return Checkpoint::capture(header, *this);
}

PrototypicalNet PrototypicalNet::from_checkpoint(const Checkpoint& ck) {
  if (ck.kind() != "prototypical") {
    throw ValidationError("checkpoint is a '" + ck.kind() + "', not a prototypical network");
  }
  std::vector<Concept> labels;
  for (const auto& j : ck.header.at("labels")) labels.push_back(concept_from_json(j));
  Rng rng(0);
  PrototypicalNet net(ProtoTrainConfig::from_json(ck.header.at("config")),
                      std::move(labels), ck.header.at("input_dim").get<int>(), rng);
  ck.restore(net);
  return net;
}

std::size_t nearest_prototype(const Vector& query, const PrototypeSet& prototypes) {
  if (prototypes.vectors.rows() == 0) throw ValidationError("no prototypes");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < prototypes.vectors.rows(); ++c) {
    const double d = (prototypes.vectors.row(c).transpose() - query).squaredNorm();
    const auto k = static_cast<std::size_t>(c);
    if (d < best_dist ||
        (d == best_dist && prototypes.order_index[k] < prototypes.order_index[best])) {
      best = k;
      best_dist = d;
    }
  }
  return best;
}

namespace {

const Concept& find_label(const std::vector<Concept>& labels, const std::string& id) {
  for (const auto& c : labels) {
    if (c.id == id) return c;
  }
  throw NotFoundError("concept '" + id + "' is not a label of this network");
}

PrototypeSet prototypes_from_encodings(
    const std::vector<Concept>& labels, const std::map<std::string, Vector>& encoded,
    const std::vector<std::string>& concept_ids,
    const std::vector<std::vector<std::string>>& support_ids, int dim) {
  PrototypeSet set;
  set.vectors = Matrix::Zero(static_cast<Eigen::Index>(concept_ids.size()), dim);
  for (std::size_t c = 0; c < concept_ids.size(); ++c) {
    if (support_ids[c].empty()) {
      throw ValidationError("concept '" + concept_ids[c] + "' has no support problems");
    }
    Vector sum = Vector::Zero(dim);
    for (const auto& id : support_ids[c]) sum += encoded.at(id);
    set.vectors.row(static_cast<Eigen::Index>(c)) =
        (sum / static_cast<double>(support_ids[c].size())).transpose();
    set.concept_ids.push_back(concept_ids[c]);
    set.order_index.push_back(find_label(labels, concept_ids[c]).order_index);
  }
  set.support_ids = support_ids;
  return set;
}

}  // namespace

PrototypeSet build_prototypes(const PrototypicalNet& net, const EmbeddingTable& table,
                              const Corpus& corpus,
                              const std::vector<std::vector<std::string>>& support_ids) {
  if (support_ids.size() != net.labels().size()) {
    throw ValidationError("need one support list per label");
  }
  std::map<std::string, Vector> encoded;
  std::vector<std::string> ids;
  for (std::size_t c = 0; c < support_ids.size(); ++c) {
    ids.push_back(net.labels()[c].id);
    for (const auto& pid : support_ids[c]) {
      if (!encoded.count(pid)) encoded[pid] = net.encode(table, corpus.problem(pid));
    }
  }
  return prototypes_from_encodings(net.labels(), encoded, ids, support_ids,
                                   net.encoder().output_dim());
}

std::string classify_by_prototype(const PrototypicalNet& net,
                                  const PrototypeSet& prototypes,
                                  const EmbeddingTable& table, const Problem& query) {
  return prototypes.concept_ids[nearest_prototype(net.encode(table, query), prototypes)];
}

std::vector<std::vector<const Problem*>> single_concept_pools(
    const Corpus& corpus, const std::vector<Concept>& labels, Split split) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i].id] = i;
  std::vector<std::vector<const Problem*>> pools(labels.size());
  for (const Problem* p : corpus.in_split(split)) {
    if (p->concept_tags.size() != 1) continue;
    auto it = index.find(*p->concept_tags.begin());
    if (it != index.end()) pools[it->second].push_back(p);
  }
  return pools;
}

PrototypicalNet train_prototypical(const Corpus& corpus, const EmbeddingTable& table,
                                   const std::vector<Concept>& labels,
                                   const ProtoTrainConfig& config, TrainLog* log) {
  const EpisodeConfig& ep = config.episode;
  if (ep.support < 1 || ep.query < 1 || ep.episodes < 1 || ep.n_way < 0) {
    throw ValidationError("support, query and episodes must be positive");
  }
  if (labels.size() < 2) throw ValidationError("prototypical training needs >= 2 concepts");
  auto pools = single_concept_pools(corpus, labels, Split::train);
  const auto need = static_cast<std::size_t>(ep.support + ep.query);
  std::string short_classes;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (pools[c].size() < need) {
      if (!short_classes.empty()) short_classes += ", ";
      short_classes += labels[c].id + " (" + std::to_string(pools[c].size()) + ")";
    }
  }
  if (!short_classes.empty()) {
    throw ValidationError("concepts with fewer than " + std::to_string(need) +
                          " single-concept training problems: " + short_classes);
  }
  const std::size_t n_way =
      ep.n_way == 0 ? labels.size() : std::min<std::size_t>(ep.n_way, labels.size());
  if (n_way < 2) throw ValidationError("n_way must be >= 2");

  Rng rng(config.seed);
  PrototypicalNet net(config, labels, table.dim(), rng);
  Adam adam(config.adam);
  std::vector<std::size_t> all_classes(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) all_classes[c] = c;
  const int dim = net.encoder().output_dim();

  for (int e = 0; e < ep.episodes; ++e) {
    auto classes = rng.sample(all_classes, n_way);
    std::vector<std::vector<const Problem*>> draws;
    for (std::size_t c : classes) draws.push_back(rng.sample(pools[c], need));

    std::vector<TextEncoder::Trace> support_traces, query_traces;
    Matrix prototypes = Matrix::Zero(static_cast<Eigen::Index>(n_way), dim);
    Matrix queries(static_cast<Eigen::Index>(n_way * ep.query), dim);
    std::vector<int> gold;
    for (std::size_t k = 0; k < n_way; ++k) {
      for (std::size_t i = 0; i < need; ++i) {
        TextEncoder::Trace trace;
        Vector v = net.encoder().forward(table.matrix(ItemKey::problem(draws[k][i]->id)),
                                         &trace);
        if (i < static_cast<std::size_t>(ep.support)) {
          prototypes.row(static_cast<Eigen::Index>(k)) += v.transpose();
          support_traces.push_back(std::move(trace));
        } else {
          queries.row(static_cast<Eigen::Index>(gold.size())) = v.transpose();
          gold.push_back(static_cast<int>(k));
          query_traces.push_back(std::move(trace));
        }
      }
    }
    prototypes /= static_cast<double>(ep.support);
    PrototypeLossResult r = prototype_loss(queries, gold, prototypes);

    zero_grads(net);
    for (std::size_t k = 0; k < n_way; ++k) {
      Vector g = r.grad_prototypes.row(static_cast<Eigen::Index>(k)).transpose() /
                 static_cast<double>(ep.support);
      for (int i = 0; i < ep.support; ++i) {
        net.encoder().backward(support_traces[k * ep.support + i], g);
      }
    }
    for (std::size_t q = 0; q < query_traces.size(); ++q) {
      net.encoder().backward(query_traces[q],
                             r.grad_queries.row(static_cast<Eigen::Index>(q)).transpose());
    }
    adam.step(net);
    if (log) log->losses.push_back(r.loss);
  }
  round_to_storage(net);
  return net;
}

bool is_prototypical(int correct, int trials) {
  return trials > 0 && 100 * static_cast<long>(correct) >= 95 * static_cast<long>(trials);
}

Matrix pca_2d(const Matrix& points) {
  const Eigen::Index n = points.rows();
  Matrix out = Matrix::Zero(n, 2);
  if (n == 0) return out;
  Matrix centered = points.rowwise() - points.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(centered), Eigen::ComputeThinV);
  const Eigen::MatrixXd& v = svd.matrixV();
  for (Eigen::Index axis = 0; axis < std::min<Eigen::Index>(2, v.cols()); ++axis) {
    Vector loading = v.col(axis);
    for (Eigen::Index i = 0; i < loading.size(); ++i) {
      if (std::abs(loading[i]) > 1e-12) {
        if (loading[i] < 0) loading = -loading;
        break;
      }
    }
    out.col(axis) = centered * loading;
  }
  return out;
}

std::vector<ProjectedPoint> export_prototypes(const PrototypicalNet& net,
                                              const Corpus& corpus,
                                              const EmbeddingTable& table, int trials,
                                              std::uint64_t seed, Split eval_split) {
  if (trials < 20) throw ValidationError("export needs at least 20 trials");
  const auto& labels = net.labels();
  auto train_pools = single_concept_pools(corpus, labels, Split::train);
  auto eval_pools = single_concept_pools(corpus, labels, eval_split);

  std::vector<std::size_t> active;  // labels with at least one support problem
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (!train_pools[c].empty()) active.push_back(c);
  }
  if (active.empty()) throw ValidationError("no concept has single-concept training problems");

  std::map<std::string, Vector> encoded;
  auto encode = [&](const Problem* p) {
    auto it = encoded.find(p->id);
    if (it == encoded.end()) it = encoded.emplace(p->id, net.encode(table, *p)).first;
    return it->second;
  };
  std::vector<std::string> active_ids;
  for (std::size_t c : active) {
    active_ids.push_back(labels[c].id);
    for (const Problem* p : train_pools[c]) encode(p);
  }
  struct Candidate {
    const Problem* problem;
    std::string gold;
    int correct = 0;
  };
  std::vector<Candidate> candidates;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    for (const Problem* p : eval_pools[c]) {
      encode(p);
      candidates.push_back({p, labels[c].id, 0});
    }
  }

  Rng rng(seed);
  const auto support = static_cast<std::size_t>(net.config().episode.support);
  const int dim = net.encoder().output_dim();
  std::vector<PrototypeSet> draws;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::vector<std::string>> ids;
    for (std::size_t c : active) {
      auto picked = rng.sample(train_pools[c], std::min(support, train_pools[c].size()));
      std::vector<std::string> names;
      for (const Problem* p : picked) names.push_back(p->id);
      ids.push_back(std::move(names));
    }
    PrototypeSet set = prototypes_from_encodings(labels, encoded, active_ids, ids, dim);
    for (auto& cand : candidates) {
      if (set.concept_ids[nearest_prototype(encoded.at(cand.problem->id), set)] == cand.gold) {
        ++cand.correct;
      }
    }
    draws.push_back(std::move(set));
  }

  std::vector<ProjectedPoint> points;
  std::vector<Vector> rows;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const PrototypeSet& pick = draws[rng.below(draws.size())];
    rows.push_back(pick.vectors.row(static_cast<Eigen::Index>(k)).transpose());
    points.push_back({"prototype", active_ids[k], 0.0, 0.0, ""});
  }
  for (const auto& cand : candidates) {
    if (!is_prototypical(cand.correct, trials)) continue;
    rows.push_back(encoded.at(cand.problem->id));
    points.push_back({"example", cand.gold, 0.0, 0.0, cand.problem->id});
  }
  Matrix stacked(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    stacked.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  Matrix xy = pca_2d(stacked);
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i].x = xy(static_cast<Eigen::Index>(i), 0);
    points[i].y = xy(static_cast<Eigen::Index>(i), 1);
  }
  return points;
}

void write_prototype_csv(const std::vector<ProjectedPoint>& points, std::ostream& out) {
  out << "kind,concept_id,x,y,problem_id\n";
  const auto old_precision = out.precision(17);
  for (const auto& p : points) {
    out << p.kind << ',' << p.concept_id << ',' << p.x << ',' << p.y << ','
        << p.problem_id << '\n';
  }
  out.precision(old_precision);
}

}  // namespace punk
