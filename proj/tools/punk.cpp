#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "punk/annotation.hpp"
#include "punk/annotation_store.hpp"
#include "punk/concept_models.hpp"
#include "punk/corpus.hpp"
#include "punk/embed_store.hpp"
#include "punk/error.hpp"
#include "punk/evaluate.hpp"
#include "punk/graph.hpp"
#include "punk/service.hpp"
#include "punk/synthetic.hpp"
#include "punk/unknown.hpp"

#ifndef PUNK_DEFAULT_CONCEPTS
#define PUNK_DEFAULT_CONCEPTS "concepts.jsonl"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace punk;

namespace {

struct Common {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "PRNG seed")->each([&c](const std::string&) {
    c.seed_set = true;
  });
  cmd->add_option("--config", c.config, "JSON file of configuration overrides");
  cmd->add_option("--out", c.out, "Output path");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// Config JSON merged with the --config file, if any.
json overlay(json base, const std::string& config_path) {
  if (!config_path.empty()) base.merge_patch(read_json_file(config_path));
  return base;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

std::string require_out(const Common& c, const char* what) {
  if (c.out.empty()) throw ValidationError(std::string("--out is required (") + what + ")");
  return c.out;
}

std::vector<Concept> load_labels(const std::string& concepts, const Corpus& corpus) {
  return label_space(load_concepts_file(concepts), corpus.problems());
}

fs::path sidecar(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p += suffix;
  return p;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Wall-clock time lives next to the checkpoint so checkpoints and reports
// stay bit-identical across runs.
void write_timing(const fs::path& out, double seconds) {
  write_text(sidecar(out, ".timing.json"), json{{"train_seconds", seconds}}.dump() + "\n");
}

std::optional<double> read_timing(const fs::path& ckpt) {
  const fs::path p = sidecar(ckpt, ".timing.json");
  if (!fs::exists(p)) return std::nullopt;
  return read_json_file(p).at("train_seconds").get<double>();
}

void write_report(const fs::path& path, const EvalReport& report) {
  write_text(path, report.to_json().dump(2) + "\n");
}

std::optional<EmbeddingTable> maybe_table(const std::string& prefix) {
  if (prefix.empty()) return std::nullopt;
  return read_table(TablePaths::from_prefix(prefix));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corpus, concept, graph and unknown-extraction pipeline for probability problems"};
  app.require_subcommand(1);

  std::string corpus_dir, concepts = PUNK_DEFAULT_CONCEPTS, embeddings, annotations, dump,
                          policy = "default", model_path, graph_context, split_name = "dev",
                          store_path, static_dir, host = "127.0.0.1", task = "unknown",
                          method, import_path, predictions;
  int dim = 768, epochs = 0, episodes = 0, support = 0, query = 0, trials = 100, port = 8080,
      nth = 0, problems = 500;
  bool last = false, majority = false, include_eval_types = false;
  std::vector<double> fractions(kReferenceSplit.begin(), kReferenceSplit.end());

  Common ingest_c, split_c, concepts_c, embed_c, stats_c, gbuild_c, gtrain_c, tconcept_c,
      tproto_c, xproto_c, tunk_c, base_c, eval_c, serve_c, xann_c, iann_c, synth_c;

  auto* ingest = app.add_subcommand("ingest", "Parse and filter a forum dump into a corpus");
  add_common(ingest, ingest_c);
  ingest->add_option("--dump", dump, "XML rows or JSONL dump")->required();
  ingest->add_option("--concepts", concepts, "Concept catalog JSONL");
  ingest->add_option("--policy", policy, "'default' or a JSON tag policy file");

  auto* split = app.add_subcommand("split", "Assign train/dev/test splits");
  add_common(split, split_c);
  split->add_option("--corpus", corpus_dir)->required();
  split->add_option("--fractions", fractions, "train dev test")->expected(3);

  auto* concepts_cmd = app.add_subcommand("concepts", "Validate the catalog and list labels");
  add_common(concepts_cmd, concepts_c);
  concepts_cmd->add_option("--concepts", concepts);
  concepts_cmd->add_option("--corpus", corpus_dir, "Emit the corpus label space instead");

  auto* embed = app.add_subcommand("embed-fake", "Deterministic stand-in embeddings");
  add_common(embed, embed_c);
  embed->add_option("--corpus", corpus_dir)->required();
  embed->add_option("--concepts", concepts);
  embed->add_option("--dim", dim);

  auto* stats = app.add_subcommand("stats", "Corpus statistics as CSV");
  add_common(stats, stats_c);
  stats->add_option("--corpus", corpus_dir)->required();
  stats->add_option("--annotations", annotations);

  auto* gbuild = app.add_subcommand("graph-build", "Build and export the concept/problem/answer graph");
  add_common(gbuild, gbuild_c);
  gbuild->add_option("--corpus", corpus_dir)->required();
  gbuild->add_option("--concepts", concepts);
  gbuild->add_option("--embeddings", embeddings)->required();

  auto* gtrain = app.add_subcommand("graph-train", "Train the GCN by problem-has-type link prediction");
  add_common(gtrain, gtrain_c);
  gtrain->add_option("--corpus", corpus_dir)->required();
  gtrain->add_option("--concepts", concepts);
  gtrain->add_option("--embeddings", embeddings)->required();
  gtrain->add_option("--epochs", epochs);
  gtrain->add_flag("--include-eval-types", include_eval_types,
                   "Keep dev/test problem-has-type edges in the message structure");

  auto* tconcept = app.add_subcommand("train-concept", "Train a multi-label concept classifier");
  add_common(tconcept, tconcept_c);
  tconcept->add_option("--corpus", corpus_dir)->required();
  tconcept->add_option("--concepts", concepts);
  tconcept->add_option("--embeddings", embeddings)->required();
  tconcept->add_option("--model", method, "maxent, mlp, lstm, gru or cnn")->required();
  tconcept->add_option("--epochs", epochs);

  auto* tproto = app.add_subcommand("train-proto", "Train a prototypical network encoder");
  add_common(tproto, tproto_c);
  tproto->add_option("--corpus", corpus_dir)->required();
  tproto->add_option("--concepts", concepts);
  tproto->add_option("--embeddings", embeddings)->required();
  tproto->add_option("--episodes", episodes);
  tproto->add_option("--support", support);
  tproto->add_option("--query", query);

  auto* xproto = app.add_subcommand("export-prototypes", "Project prototypes and prototypical examples to 2-D");
  add_common(xproto, xproto_c);
  xproto->add_option("--model", model_path)->required();
  xproto->add_option("--corpus", corpus_dir)->required();
  xproto->add_option("--embeddings", embeddings)->required();
  xproto->add_option("--trials", trials);
  xproto->add_option("--split", split_name);

  auto* tunk = app.add_subcommand("train-unknown", "Train an unknown-sentence extractor");
  add_common(tunk, tunk_c);
  tunk->add_option("--corpus", corpus_dir)->required();
  tunk->add_option("--embeddings", embeddings)->required();
  tunk->add_option("--annotations", annotations)->required();
  tunk->add_option("--method", method, "maxent, mlp, cnn, cnn_nocontext, cnn_graph, cnn_graph_lstm, cnn_graph_gru")
      ->default_val("cnn");
  tunk->add_option("--graph-context", graph_context, "Context table prefix from graph-train");
  tunk->add_option("--epochs", epochs);

  auto* base = app.add_subcommand("baseline", "Score a non-learning baseline");
  add_common(base, base_c);
  base->add_option("--task", task)->check(CLI::IsMember({"unknown"}));
  base->add_option("--corpus", corpus_dir)->required();
  base->add_option("--annotations", annotations)->required();
  base->add_option("--split", split_name);
  auto* nth_opt = base->add_option("--nth", nth, "Mark the n-th sentence");
  auto* last_opt = base->add_flag("--last", last, "Mark the last sentence");
  auto* maj_opt = base->add_flag("--majority", majority, "Mark nothing");
  nth_opt->excludes(last_opt)->excludes(maj_opt);
  last_opt->excludes(maj_opt);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  add_common(eval, eval_c);
  eval->add_option("--model", model_path)->required();
  eval->add_option("--corpus", corpus_dir)->required();
  eval->add_option("--embeddings", embeddings)->required();
  eval->add_option("--annotations", annotations);
  eval->add_option("--graph-context", graph_context);
  eval->add_option("--split", split_name);
  eval->add_option("--predictions", predictions, "Per-sentence predictions JSONL");

  auto* serve = app.add_subcommand("serve", "Run the annotation HTTP service");
  add_common(serve, serve_c);
  serve->add_option("--corpus", corpus_dir)->required();
  serve->add_option("--store", store_path, "Annotation journal")->required();
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--static", static_dir, "Directory with the labeling UI");

  auto* xann = app.add_subcommand("export-annotations", "Write the annotation store as JSONL");
  add_common(xann, xann_c);
  xann->add_option("--corpus", corpus_dir)->required();
  xann->add_option("--store", store_path)->required();

  auto* iann = app.add_subcommand("import-annotations", "Load annotation JSONL into the store");
  add_common(iann, iann_c);
  iann->add_option("--corpus", corpus_dir)->required();
  iann->add_option("--store", store_path)->required();
  iann->add_option("--in", import_path)->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dump with planted unknowns");
  add_common(synth, synth_c);
  synth->add_option("--problems", problems);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*ingest) {
      const std::string out = require_out(ingest_c, "corpus directory");
      auto catalog = load_concepts_file(concepts);
      TagPolicy tp = TagPolicy::defaults(catalog);
      if (policy != "default") {
        json j = read_json_file(policy);
        tp.excluded = j.value("excluded", tp.excluded);
        tp.ignored = j.value("ignored", tp.ignored);
        tp.allowed_concepts = j.value("allowed_concepts", tp.allowed_concepts);
        tp.max_tags = j.value("max_tags", tp.max_tags);
      }
      FilterResult r = filter_problems(parse_dump_file(dump), tp);
      save_corpus(r.corpus, out);
      const FilterReport& f = r.report;
      json report = {{"questions", f.questions},
                     {"kept", f.kept},
                     {"excluded_tag", f.excluded_tag},
                     {"no_concept_tags", f.no_concept_tags},
                     {"ignored_only", f.ignored_only},
                     {"too_many_tags", f.too_many_tags},
                     {"no_accepted_answer", f.no_accepted_answer},
                     {"empty_text", f.empty_text},
                     {"dangling_answer_refs", f.dangling_answer_refs}};
      write_text(fs::path(out) / "filter_report.json", report.dump(2) + "\n");
      std::cerr << "kept " << f.kept << " of " << f.questions << " questions\n";
    } else if (*split) {
      Corpus corpus = load_corpus(corpus_dir);
      std::vector<std::string> ids;
      for (const auto& p : corpus.problems()) ids.push_back(p.id);
      corpus.set_splits(
          assign_splits(ids, {fractions[0], fractions[1], fractions[2]}, split_c.seed));
      save_corpus(corpus, split_c.out.empty() ? corpus_dir : split_c.out);
      std::map<std::string, std::size_t> counts;
      for (const auto& p : corpus.problems()) ++counts[std::string(to_string(p.split))];
      std::cerr << "train " << counts["train"] << ", dev " << counts["dev"] << ", test "
                << counts["test"] << "\n";
    } else if (*concepts_cmd) {
      auto catalog = load_concepts_file(concepts);
      std::ostringstream out;
      if (corpus_dir.empty()) {
        save_concepts(catalog, out);
      } else {
        save_concepts(load_labels(concepts, load_corpus(corpus_dir)), out);
      }
      emit(concepts_c.out, out.str());
    } else if (*embed) {
      Corpus corpus = load_corpus(corpus_dir);
      EmbeddingTable table =
          fake_embeddings(corpus, load_labels(concepts, corpus), embed_c.seed, dim);
      write_table(table, TablePaths::from_prefix(require_out(embed_c, "table prefix")));
    } else if (*stats) {
      Corpus corpus = load_corpus(corpus_dir);
      std::ostringstream out;
      out << "section,key,count\n";
      std::map<std::string, std::size_t> splits;
      std::map<std::size_t, std::size_t> lengths;
      std::map<std::pair<std::string, std::string>, std::size_t> tags;
      for (const auto& p : corpus.problems()) {
        ++splits[std::string(to_string(p.split))];
        ++lengths[p.sentences.size()];
        for (const auto& t : p.concept_tags) ++tags[{t, std::string(to_string(p.split))}];
      }
      for (const auto& [k, n] : splits) out << "split," << k << ',' << n << '\n';
      for (const auto& [k, n] : lengths) out << "sentences_per_problem," << k << ',' << n << '\n';
      for (const auto& [k, n] : tags) out << "concept_" << k.second << ',' << k.first << ',' << n << '\n';
      if (!annotations.empty()) {
        AnnotationMap ann = read_annotations_file(annotations);
        std::map<std::size_t, std::size_t> positions, per_problem;
        std::size_t unclear = 0;
        for (const auto& [id, r] : ann) {
          if (r.unclear) {
            ++unclear;
            continue;
          }
          std::size_t n = 0;
          for (std::size_t j = 0; j < r.sentence_labels.size(); ++j) {
            if (r.sentence_labels[j]) {
              ++positions[j];
              ++n;
            }
          }
          ++per_problem[n];
        }
        for (const auto& [k, n] : positions) out << "unknown_position," << k << ',' << n << '\n';
        for (const auto& [k, n] : per_problem) out << "unknown_sentences_per_problem," << k << ',' << n << '\n';
        out << "annotations,unclear," << unclear << '\n';
      }
      emit(stats_c.out, out.str());
    } else if (*gbuild) {
      const fs::path out = require_out(gbuild_c, "graph directory");
      Corpus corpus = load_corpus(corpus_dir);
      HeteroGraph g = build_graph(corpus, load_labels(concepts, corpus),
                                  read_table(TablePaths::from_prefix(embeddings)));
      fs::create_directories(out);
      std::ofstream nodes(out / "nodes.jsonl"), edges(out / "edges.jsonl"),
          stats_out(out / "stats.csv");
      write_graph(g, nodes, edges);
      write_graph_stats(g, stats_out);
      std::cerr << g.size() << " nodes, " << g.edges().size() << " edges\n";
    } else if (*gtrain) {
      const fs::path out = require_out(gtrain_c, "graph model directory");
      Corpus corpus = load_corpus(corpus_dir);
      HeteroGraph g = build_graph(corpus, load_labels(concepts, corpus),
                                  read_table(TablePaths::from_prefix(embeddings)));
      LinkTrainConfig cfg = LinkTrainConfig::from_json(overlay(LinkTrainConfig{}.to_json(), gtrain_c.config));
      if (gtrain_c.seed_set) cfg.seed = gtrain_c.seed;
      if (epochs > 0) cfg.epochs = epochs;
      if (include_eval_types) cfg.include_eval_types = true;
      Stopwatch clock;
      std::vector<LinkEpoch> log;
      LinkPredictor model = train_link_prediction(g, cfg, &log);
      const double seconds = clock.seconds();
      Checkpoint ck = model.to_checkpoint();
      json losses = json::array(), dev = json::array();
      for (const auto& e : log) {
        losses.push_back(e.train_loss);
        dev.push_back(e.dev_positive_score);
      }
      ck.header["train_log"] = {{"losses", losses}, {"dev_positive_score", dev}};
      fs::create_directories(out);
      save_checkpoint(ck, out / "gcn.ckpt");
      write_table(context_table(g, model.embed(g)), TablePaths::from_prefix(out / "contexts"));
      write_timing(out / "gcn.ckpt", seconds);
    } else if (*tconcept) {
      const fs::path out = require_out(tconcept_c, "checkpoint path");
      Corpus corpus = load_corpus(corpus_dir);
      EmbeddingTable table = read_table(TablePaths::from_prefix(embeddings));
      auto labels = load_labels(concepts, corpus);
      ConceptTrainConfig cfg = ConceptTrainConfig::from_json(overlay(
          ConceptTrainConfig::defaults(parse_concept_model_kind(method)).to_json(),
          tconcept_c.config));
      if (tconcept_c.seed_set) cfg.seed = tconcept_c.seed;
      if (epochs > 0) cfg.epochs = epochs;
      Stopwatch clock;
      TrainLog log;
      ConceptClassifier model = train_concept_classifier(corpus, table, labels, cfg, &log);
      const double seconds = clock.seconds();
      Checkpoint ck = model.to_checkpoint();
      ck.header["train_log"] = log.to_json();
      save_checkpoint(ck, out);
      write_timing(out, seconds);
      if (!corpus.in_split(Split::dev).empty()) {
        write_report(sidecar(out, ".report.json"), evaluate_concepts(model, corpus, table, Split::dev));
      }
    } else if (*tproto) {
      const fs::path out = require_out(tproto_c, "checkpoint path");
      Corpus corpus = load_corpus(corpus_dir);
      EmbeddingTable table = read_table(TablePaths::from_prefix(embeddings));
      auto labels = load_labels(concepts, corpus);
      ProtoTrainConfig cfg =
          ProtoTrainConfig::from_json(overlay(ProtoTrainConfig{}.to_json(), tproto_c.config));
      if (tproto_c.seed_set) cfg.seed = tproto_c.seed;
      if (episodes > 0) cfg.episode.episodes = episodes;
      if (support > 0) cfg.episode.support = support;
      if (query > 0) cfg.episode.query = query;
      Stopwatch clock;
      TrainLog log;
      PrototypicalNet net = train_prototypical(corpus, table, labels, cfg, &log);
      const double seconds = clock.seconds();
      Checkpoint ck = net.to_checkpoint();
      ck.header["train_log"] = log.to_json();
      save_checkpoint(ck, out);
      write_timing(out, seconds);
    } else if (*xproto) {
      Corpus corpus = load_corpus(corpus_dir);
      PrototypicalNet net = PrototypicalNet::from_checkpoint(load_checkpoint(model_path));
      auto points = export_prototypes(net, corpus, read_table(TablePaths::from_prefix(embeddings)),
                                      trials, xproto_c.seed, parse_split(split_name));
      std::ostringstream out;
      write_prototype_csv(points, out);
      emit(xproto_c.out, out.str());
    } else if (*tunk) {
      const fs::path out = require_out(tunk_c, "checkpoint path");
      Corpus corpus = load_corpus(corpus_dir);
      EmbeddingTable table = read_table(TablePaths::from_prefix(embeddings));
      AnnotationMap ann = read_annotations_file(annotations);
      auto graph = maybe_table(graph_context);
      UnknownConfig cfg = UnknownConfig::from_json(
          overlay(UnknownConfig::preset(method).to_json(), tunk_c.config));
      if (tunk_c.seed_set) cfg.seed = tunk_c.seed;
      if (epochs > 0) cfg.epochs = epochs;
      auto dataset = build_sentence_dataset(corpus, ann, Split::train);
      Stopwatch clock;
      TrainLog log;
      UnknownModel model = train_unknown_model(dataset, corpus, table, cfg,
                                               graph ? &*graph : nullptr, &log);
      const double seconds = clock.seconds();
      Checkpoint ck = model.to_checkpoint();
      ck.header["method"] = method;
      ck.header["train_log"] = log.to_json();
      save_checkpoint(ck, out);
      write_timing(out, seconds);
      try {
        write_report(sidecar(out, ".report.json"),
                     evaluate_unknown(model, corpus, table, graph ? &*graph : nullptr, ann,
                                      Split::dev));
      } catch (const ValidationError&) {
        // no labeled dev problems: nothing to report
      }
    } else if (*base) {
      if (nth == 0 && !last && !majority) throw ValidationError("choose --nth, --last or --majority");
      Corpus corpus = load_corpus(corpus_dir);
      AnnotationMap ann = read_annotations_file(annotations);
      Baseline b = majority ? Baseline::majority : last ? Baseline::last : Baseline::nth;
      EvalReport r = evaluate_baseline(b, nth, corpus, ann, parse_split(split_name));
      emit(base_c.out, r.to_json().dump(2) + "\n");
    } else if (*eval) {
      Corpus corpus = load_corpus(corpus_dir);
      EmbeddingTable table = read_table(TablePaths::from_prefix(embeddings));
      Checkpoint ck = load_checkpoint(model_path);
      const Split s = parse_split(split_name);
      EvalReport r;
      if (ck.kind() == "unknown_extractor") {
        if (annotations.empty()) throw ValidationError("--annotations is required for this model");
        AnnotationMap ann = read_annotations_file(annotations);
        auto graph = maybe_table(graph_context);
        UnknownModel model = UnknownModel::from_checkpoint(ck);
        r = evaluate_unknown(model, corpus, table, graph ? &*graph : nullptr, ann, s);
        if (!predictions.empty()) {
          ensure_parent(predictions);
          std::ofstream pout(predictions);
          for (const auto& [p, gold] : labeled_problems(corpus, ann, s)) {
            write_predictions(p->id, model.extract(table, graph ? &*graph : nullptr, *p), &gold, pout);
          }
        }
      } else if (ck.kind() == "concept_classifier") {
        r = evaluate_concepts(ConceptClassifier::from_checkpoint(ck), corpus, table, s);
      } else if (ck.kind() == "prototypical") {
        r = evaluate_prototypical(PrototypicalNet::from_checkpoint(ck), corpus, table, s);
      } else {
        throw ValidationError("cannot evaluate a '" + ck.kind() + "' checkpoint");
      }
      r.train_seconds = read_timing(model_path);
      emit(eval_c.out, r.to_json().dump(2) + "\n");
    } else if (*serve) {
      Corpus corpus = load_corpus(corpus_dir);
      AnnotationStore store(corpus, store_path);
      AnnotationApi api(corpus, store);
      ServeOptions opt;
      opt.host = host;
      opt.port = port;
      if (!static_dir.empty()) opt.static_dir = static_dir;
      AnnotationServer server(api, opt);
      const int bound = server.start();
      std::cerr << "serving " << corpus.problems().size() << " problems on http://" << host
                << ':' << bound << "\n";
      server.wait();
    } else if (*xann) {
      Corpus corpus = load_corpus(corpus_dir);
      AnnotationStore store(corpus, store_path);
      std::ostringstream out;
      write_annotations(store.snapshot(), out);
      emit(xann_c.out, out.str());
    } else if (*iann) {
      Corpus corpus = load_corpus(corpus_dir);
      AnnotationStore store(corpus, store_path);
      store.import(read_annotations_file(import_path));
      std::cerr << "store holds " << store.snapshot().size() << " annotations\n";
    } else if (*synth) {
      const fs::path out = require_out(synth_c, "output directory");
      SyntheticConfig cfg;
      cfg.problems = problems;
      cfg.seed = synth_c.seed;
      SyntheticData data = make_synthetic(cfg);
      fs::create_directories(out);
      std::ofstream dump_out(out / "dump.xml"), concepts_out(out / "concepts.jsonl"),
          ann_out(out / "annotations.jsonl");
      write_dump_xml(data.posts, dump_out);
      save_concepts(data.concepts, concepts_out);
      write_annotations(data.annotations, ann_out);
      save_corpus(data.corpus, out / "corpus");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
