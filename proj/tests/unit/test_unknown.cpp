#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "checks.hpp"
#include "helpers.hpp"
#include "punk/annotation.hpp"
#include "punk/error.hpp"
#include "punk/evaluate.hpp"
#include "punk/unknown.hpp"

using namespace punk;
using namespace punk::testing;

namespace {

AnnotationSpan span_of(const Problem& p, const std::string& needle) {
  const auto pos = p.text.find(needle);
  REQUIRE(pos != std::string::npos);
  int j = 0;
  for (const auto& s : p.sentences) {
    if (s.span.contains(pos)) j = s.index;
  }
  return {j, pos, pos + needle.size(), ""};
}

struct Fixture {
  Corpus corpus;
  AnnotationMap annotations;
  EmbeddingTable table{1};
};

// Each problem has exactly one "Compute" sentence, the unknown.
Fixture cue_fixture(int n, int dim) {
  std::vector<Problem> problems;
  std::vector<Answer> answers;
  const char* filler[] = {"A box holds red balls.", "Two coins are tossed.", "The die is fair.",
                          "Each trial is independent."};
  for (int i = 0; i < n; ++i) {
    std::string text;
    const int len = 2 + i % 3, cue = i % len;
    for (int j = 0; j < len; ++j) {
      if (!text.empty()) text += " ";
      text += j == cue ? "Compute the chance of two heads." : filler[(i + j) % 4];
    }
    problems.push_back(make_problem("u" + std::to_string(i), text, {"c0"},
                                    i % 5 == 4 ? Split::dev : Split::train));
    answers.push_back(answer_for(problems.back()));
  }
  Fixture f;
  for (const auto& p : problems) {
    f.annotations[p.id] = make_annotation(p, {span_of(p, "Compute the chance of two heads")}, false, 1);
  }
  f.corpus = Corpus(problems, answers);
  f.table = fake_embeddings(f.corpus, {make_concept("c0", 1, 1, 0)}, 5, dim);
  return f;
}

UnknownConfig tiny(ContextKind ctx, EncoderKind sentence) {
  UnknownConfig c;
  c.context = ctx;
  c.sentence = sentence;
  c.widths = {1, 2};
  c.kernels = 3;
  c.rnn_hidden = 2;
  c.epochs = 2;
  c.batch_size = 4;
  return c;
}

}  // namespace

TEST_CASE("annotation spans and labels") {
  auto p = make_problem("1", "A die is rolled. Two coins are tossed. What is the probability that both are heads? Done.",
                        {"c0"});
  REQUIRE(p.sentences.size() == 4);
  auto s = span_of(p, "What is the probability that both are heads");
  AnnotationRecord r = make_annotation(p, {s}, false);
  CHECK(r.sentence_labels == std::vector<int>{0, 0, 1, 0});
  CHECK(r.spans[0].text == "What is the probability that both are heads");

  auto q = make_problem("2", "Let X be given. Find the mean.", {"c0"});
  CHECK(make_annotation(q, {span_of(q, "Find the mean")}, false).sentence_labels == std::vector<int>{0, 1});

  AnnotationSpan empty = s;
  empty.char_end = empty.char_start;
  CHECK_THROWS_AS(make_annotation(p, {empty}, false), ValidationError);
  AnnotationSpan cross = {1, s.char_start - 5, s.char_end, ""};
  CHECK_THROWS_AS(make_annotation(p, {cross}, false), ValidationError);
  AnnotationSpan mid_word = {2, s.char_start + 1, s.char_end, ""};
  CHECK_THROWS_AS(make_annotation(p, {mid_word}, false), ValidationError);
  AnnotationSpan wrong_sentence = s;
  wrong_sentence.sentence_index = 0;
  CHECK_THROWS_AS(make_annotation(p, {wrong_sentence}, false), ValidationError);
  CHECK_THROWS_AS(make_annotation(p, {s}, true), ValidationError);
  AnnotationRecord unclear = make_annotation(p, {}, true);
  CHECK(unclear.unclear);
  CHECK(unclear.sentence_labels == std::vector<int>{0, 0, 0, 0});

  std::ostringstream out;
  write_annotations({{"1", r}}, out);
  std::istringstream in(out.str());
  auto back = read_annotations(in);
  CHECK(back.at("1") == r);
  CHECK_NOTHROW(validate_annotation(p, back.at("1")));
  AnnotationRecord bad = r;
  bad.sentence_labels = {1, 0, 1, 0};
  CHECK_THROWS_AS(validate_annotation(p, bad), ValidationError);
}

TEST_CASE("build_sentence_dataset") {
  auto a = make_problem("a", "One here. Two here. Three here.", {"c0"});
  auto b = make_problem("b", "Four here. Five here.", {"c0"});
  auto c = make_problem("c", "Six here. Seven here.", {"c0"});
  Corpus corpus({a, b, c}, {answer_for(a), answer_for(b), answer_for(c)});
  AnnotationMap ann;
  ann["a"] = make_annotation(a, {span_of(a, "One here")}, false);
  ann["b"] = make_annotation(b, {span_of(b, "Five")}, false);
  ann["c"] = make_annotation(c, {}, true);
  auto ds = build_sentence_dataset(corpus, ann);
  REQUIRE(ds.size() == 5);
  CHECK(ds[0] == SentenceInstance{"a", 0, 1});
  CHECK(ds[1].label == 0);
  CHECK(ds[4] == SentenceInstance{"b", 1, 1});

  ann["b"].sentence_labels.push_back(0);
  CHECK_THROWS_AS(build_sentence_dataset(corpus, ann), ValidationError);
}

TEST_CASE("head dimension bookkeeping") {
  Rng rng(1);
  const int d = 6;
  for (auto ctx : {ContextKind::none, ContextKind::bow, ContextKind::cnn, ContextKind::cnn_graph}) {
    for (auto sent : {EncoderKind::bow, EncoderKind::cnn, EncoderKind::lstm, EncoderKind::gru}) {
      UnknownModel m(tiny(ctx, sent), d, 5, rng);
      const int c = ctx == ContextKind::none ? 0 : ctx == ContextKind::bow ? d : ctx == ContextKind::cnn ? 6 : 11;
      const int x = sent == EncoderKind::bow ? d : sent == EncoderKind::cnn ? 6 : 4;
      CHECK(m.context_dim() == c);
      CHECK(m.head_input_dim() == c + x);
      CHECK(m.head().in_dim() == c + x);
    }
  }
}

TEST_CASE("maxent head has 1537 parameters") {
  Rng rng(0);
  UnknownModel m(UnknownConfig::preset("maxent"), 768, 0, rng);
  CHECK(count_parameters(m) == 1537);
  UnknownModel mlp(UnknownConfig::preset("mlp"), 768, 0, rng);
  CHECK(count_parameters(mlp) == 1312769);
  UnknownConfig cnn = UnknownConfig::preset("cnn");
  CHECK(cnn.widths == std::vector<int>{1, 2});
  CHECK(cnn.kernels == 192);
  UnknownModel cm(cnn, 768, 0, rng);
  CHECK(cm.context_dim() == 384);
  CHECK(cm.sentence_dim() == 384);
}

TEST_CASE("score_sentence closed forms") {
  Fixture f = cue_fixture(4, 6);
  Rng rng(2);
  UnknownModel m(tiny(ContextKind::bow, EncoderKind::bow), 6, 0, rng);
  Linear& head = m.head().layers().back();
  head.weight.value.setZero();
  head.bias.value.setZero();
  const Problem& p = f.corpus.problems()[0];
  CHECK(m.score_sentence(f.table, nullptr, p, 0) == 0.5);

  head.bias.value(0, 0) = std::log(3.0);
  CHECK(m.score_sentence(f.table, nullptr, p, 1) == doctest::Approx(0.75).epsilon(1e-15));

  head.bias.value(0, 0) = -10;
  for (const auto& s : m.extract(f.table, nullptr, p)) CHECK_FALSE(s.flagged);

  head.weight.value = random_matrix(rng, 1, 12);
  head.bias.value(0, 0) = 0.1;
  auto scores = m.extract(f.table, nullptr, p);
  REQUIRE(scores.size() == p.sentences.size());
  for (const auto& s : scores) {
    CHECK(s.p_u == m.score_sentence(f.table, nullptr, p, s.sentence_index));
    CHECK(s.flagged == (s.p_u > 0.5));
    CHECK(s.text == p.sentences[s.sentence_index].text);
  }
  CHECK_THROWS_AS(m.score_sentence(f.table, nullptr, p, 99), NotFoundError);
  Problem ghost = p;
  ghost.id = "ghost";
  CHECK_THROWS_AS(m.score_sentence(f.table, nullptr, ghost, 0), NotFoundError);

  UnknownModel g(tiny(ContextKind::cnn_graph, EncoderKind::cnn), 6, 3, rng);
  CHECK_THROWS_AS(g.score_sentence(f.table, nullptr, p, 0), ValidationError);
}

TEST_CASE("unknown model gradients") {
  Fixture f = cue_fixture(3, 4);
  EmbeddingTable graph = make_table({{ItemKey::problem("u0"), 1, {0.3f, -0.2f}},
                                     {ItemKey::problem("u1"), 1, {0.1f, 0.5f}},
                                     {ItemKey::problem("u2"), 1, {-0.4f, 0.2f}}});
  Rng rng(3);
  for (auto ctx : {ContextKind::bow, ContextKind::cnn, ContextKind::cnn_graph}) {
    for (auto sent : {EncoderKind::cnn, EncoderKind::gru}) {
      UnknownConfig cfg = tiny(ctx, sent);
      cfg.mlp = ctx == ContextKind::bow;
      cfg.mlp_layers = 1;
      cfg.mlp_hidden = 3;
      UnknownModel m(cfg, 4, 2, rng);
      const Problem& p = f.corpus.problems()[1];
      auto labels = f.annotations.at(p.id).sentence_labels;
      auto r = grad_check_params(m, [&](bool acc) {
        if (acc) return m.accumulate(f.table, &graph, p, labels, 1.0, nullptr);
        double loss = 0;
        for (const auto& s : m.extract(f.table, &graph, p)) {
          const double y = labels[s.sentence_index];
          loss -= y * std::log(s.p_u) + (1 - y) * std::log(1 - s.p_u);
        }
        return loss;
      });
      CAPTURE(to_string(ctx));
      CAPTURE(to_string(sent));
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("train_unknown_model") {
  Fixture f = cue_fixture(4, 8);
  auto ds = build_sentence_dataset(f.corpus, f.annotations);
  CHECK(ds.size() == 2 + 3 + 4 + 2);

  SUBCASE("overfits a small fixture") {
    UnknownConfig cfg = UnknownConfig::preset("maxent");
    cfg.epochs = 400;
    cfg.dropout = 0;
    cfg.adam.lr = 0.05;
    TrainLog log;
    UnknownModel m = train_unknown_model(ds, f.corpus, f.table, cfg, nullptr, &log);
    REQUIRE(log.losses.size() == 400);
    CHECK(log.losses.back() < 0.05);
    EvalReport r = evaluate_unknown(m, f.corpus, f.table, nullptr, f.annotations, Split::train);
    CHECK(r.result.macro_f1 == 1.0);
  }

  SUBCASE("deterministic per seed") {
    UnknownConfig cfg = tiny(ContextKind::cnn, EncoderKind::cnn);
    UnknownModel a = train_unknown_model(ds, f.corpus, f.table, cfg);
    UnknownModel b = train_unknown_model(ds, f.corpus, f.table, cfg);
    CHECK(flatten_values(a) == flatten_values(b));
    TempDir dir("unknown");
    save_checkpoint(a.to_checkpoint(), dir / "a.ckpt");
    save_checkpoint(b.to_checkpoint(), dir / "b.ckpt");
    std::ifstream ia(dir / "a.ckpt", std::ios::binary), ib(dir / "b.ckpt", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(ia)), {}), sb((std::istreambuf_iterator<char>(ib)), {});
    CHECK(sa == sb);
    UnknownModel back = UnknownModel::from_checkpoint(load_checkpoint(dir / "a.ckpt"));
    const Problem& p = f.corpus.problems()[0];
    CHECK(back.score_sentence(f.table, nullptr, p, 0) == a.score_sentence(f.table, nullptr, p, 0));
  }

  CHECK_THROWS_AS(train_unknown_model({}, f.corpus, f.table, tiny(ContextKind::bow, EncoderKind::bow)),
                  ValidationError);
  CHECK_THROWS_AS(train_unknown_model(ds, f.corpus, f.table, tiny(ContextKind::cnn_graph, EncoderKind::cnn)),
                  ValidationError);
}

TEST_CASE("presets and config json") {
  for (const auto& name : UnknownConfig::preset_names()) {
    UnknownConfig c = UnknownConfig::preset(name);
    CHECK(UnknownConfig::from_json(c.to_json()).to_json() == c.to_json());
    CHECK(c.dropout == 0.2);
  }
  CHECK(UnknownConfig::preset("cnn_graph_lstm").sentence == EncoderKind::lstm);
  CHECK(UnknownConfig::preset("cnn_nocontext").context == ContextKind::none);
  CHECK_THROWS(UnknownConfig::preset("svm"));
  UnknownConfig bad;
  bad.sentence = EncoderKind::mlp;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("baselines") {
  auto three = make_problem("t", "One. Two. Three.", {"c0"});
  auto one = make_problem("o", "Only one here.", {"c0"});
  std::vector<const Problem*> ps = {&three, &one};
  CHECK(baseline_nth(ps, 1) == SentencePredictions{{1, 0, 0}, {1}});
  CHECK(baseline_nth(ps, 2) == SentencePredictions{{0, 1, 0}, {0}});
  CHECK(baseline_last(ps) == SentencePredictions{{0, 0, 1}, {1}});
  CHECK(baseline_majority(ps) == SentencePredictions{{0, 0, 0}, {0}});
  CHECK(baseline_majority({}).empty());
}

TEST_CASE("baseline reports") {
  Fixture f = cue_fixture(10, 4);
  auto labeled = labeled_problems(f.corpus, f.annotations, Split::train);
  std::size_t neg = 0, total = 0;
  for (const auto& [p, ys] : labeled) {
    for (int y : ys) {
      ++total;
      neg += y == 0;
    }
  }
  const double q = static_cast<double>(neg) / static_cast<double>(total);
  EvalReport maj = evaluate_baseline(Baseline::majority, 0, f.corpus, f.annotations, Split::train);
  CHECK(maj.result.macro_f1 == doctest::Approx(q / (q + 1)).epsilon(1e-12));
  EvalReport first = evaluate_baseline(Baseline::nth, 1, f.corpus, f.annotations, Split::train);
  auto j = first.to_json();
  CHECK(j["task"] == "unknown");
  CHECK(j["split"] == "train");
  CHECK(j["classes"].size() == 2);
  CHECK(j["train_seconds"].is_null());
  CHECK(j["config"]["n"] == 1);

  AnnotationMap none;
  CHECK_THROWS_AS(evaluate_baseline(Baseline::majority, 0, f.corpus, none, Split::dev), ValidationError);
}

TEST_CASE("prediction export") {
  std::vector<SentenceScore> scores = {{0, "a", 0.25, false}, {1, "b", 0.75, true}};
  std::vector<int> gold = {0, 1};
  std::ostringstream out;
  write_predictions("p1", scores, &gold, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  auto j = nlohmann::json::parse(line);
  CHECK(j["problem_id"] == "p1");
  CHECK(j["sentence_index"] == 0);
  CHECK(j["p_u"] == 0.25);
  CHECK(j["flagged"] == false);
  CHECK(j["gold"] == 0);
  std::ostringstream plain;
  write_predictions("p1", scores, nullptr, plain);
  CHECK(plain.str().find("gold") == std::string::npos);
}
