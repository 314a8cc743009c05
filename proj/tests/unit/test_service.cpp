#include <doctest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "helpers.hpp"
#include "punk/annotation_store.hpp"
#include "punk/error.hpp"
#include "punk/service.hpp"

// after Eigen: resolv.h defines a _res macro
#include <httplib.h>

using namespace punk;
using namespace punk::testing;
using nlohmann::json;

namespace {

Corpus small_corpus() {
  std::vector<Problem> ps = {
      make_problem("10", "A coin is tossed twice. What is the probability of two heads?", {"c0"}),
      make_problem("11", "Let X be normal. Find the mean of X. Then find its variance.", {"c0"}),
      make_problem("12", "Hmm what.", {"c0"}, Split::dev),
  };
  std::vector<Answer> as;
  for (const auto& p : ps) as.push_back(answer_for(p));
  return Corpus(ps, as);
}

json span_json(const Problem& p, const std::string& needle) {
  const auto pos = p.text.find(needle);
  int j = 0;
  for (const auto& s : p.sentences) {
    if (s.span.contains(pos)) j = s.index;
  }
  return {{"sentence_index", j}, {"char_start", pos}, {"char_end", pos + needle.size()}};
}

AnnotationSpan span_of(const Problem& p, const std::string& needle) {
  json j = span_json(p, needle);
  return {j["sentence_index"].get<int>(), j["char_start"].get<std::size_t>(),
          j["char_end"].get<std::size_t>(), ""};
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("store revisions and conflicts") {
  TempDir dir("store");
  Corpus c = small_corpus();
  const Problem& p = c.problem("10");
  AnnotationStore store(c, dir / "journal.jsonl");
  CHECK(store.revision("10") == 0);
  CHECK(store.status("10") == LabelStatus::unlabeled);
  auto r1 = store.put("10", {span_of(p, "What is the probability of two heads")}, false, 0);
  CHECK(r1.revision == 1);
  CHECK(r1.sentence_labels == std::vector<int>{0, 1});
  CHECK(store.status("10") == LabelStatus::labeled);
  CHECK_THROWS_AS(store.put("10", {}, true, 0), ConflictError);
  CHECK(store.put("10", {}, true, 1).revision == 2);
  CHECK(store.status("10") == LabelStatus::unclear);
  CHECK_THROWS_AS(store.put("99", {}, true, 0), NotFoundError);
  AnnotationSpan bad = span_of(p, "coin");
  bad.char_end = bad.char_start;
  CHECK_THROWS_AS(store.put("11", {bad}, false, 0), ValidationError);
  CHECK(store.revision("11") == 0);
  Progress pr = store.progress();
  CHECK(pr.total == 3);
  CHECK(pr.unclear == 1);
  CHECK(pr.unlabeled == 2);
}

TEST_CASE("journal replay, torn tail and compaction") {
  TempDir dir("journal");
  Corpus c = small_corpus();
  const auto path = dir / "j.jsonl";
  {
    AnnotationStore store(c, path, 3);
    store.put("10", {span_of(c.problem("10"), "A coin is tossed twice")}, false, 0);
    store.put("10", {}, true, 1);
    store.put("11", {span_of(c.problem("11"), "Find the mean of X")}, false, 0);
    store.put("11", {span_of(c.problem("11"), "find its variance")}, false, 1);
  }
  {
    std::ofstream torn(path, std::ios::app);
    torn << R"({"problem_id":"12","spans":[)";
  }
  AnnotationStore again(c, path);
  CHECK(again.revision("10") == 2);
  CHECK(again.status("10") == LabelStatus::unclear);
  CHECK(again.get("11")->sentence_labels == std::vector<int>{0, 0, 1});
  CHECK_FALSE(again.get("12").has_value());
  // compacted at open: one line per record
  const std::string text = slurp(path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("export and import round trip") {
  TempDir dir("roundtrip");
  Corpus c = small_corpus();
  AnnotationStore a(c, dir / "a.jsonl");
  {
    std::ostringstream empty;
    write_annotations(a.snapshot(), empty);
    CHECK(empty.str().empty());
  }
  a.put("11", {span_of(c.problem("11"), "Find the mean of X")}, false, 0);
  a.put("10", {}, true, 0);
  std::ostringstream first;
  write_annotations(a.snapshot(), first);
  CHECK(first.str().find("\"10\"") < first.str().find("\"11\""));

  AnnotationStore b(c, dir / "b.jsonl");
  std::istringstream in(first.str());
  b.import(read_annotations(in));
  std::ostringstream second;
  write_annotations(b.snapshot(), second);
  CHECK(second.str() == first.str());

  // a bad record aborts the whole import
  AnnotationMap broken = b.snapshot();
  broken["12"] = broken["11"];
  broken["12"].problem_id = "12";
  AnnotationStore fresh(c, dir / "c.jsonl");
  CHECK_THROWS_AS(fresh.import(broken), ValidationError);
  CHECK(fresh.snapshot().empty());
}

TEST_CASE("api handlers") {
  TempDir dir("api");
  Corpus c = small_corpus();
  AnnotationStore store(c, dir / "j.jsonl");
  AnnotationApi api(c, store);

  auto list = json::parse(api.list_problems({}).body);
  CHECK(list["total"] == 3);
  CHECK(list["items"].size() == 3);
  CHECK(list["items"][0]["status"] == "unlabeled");
  CHECK(json::parse(api.list_problems({{"offset", "10"}}).body)["items"].empty());
  CHECK(api.list_problems({{"limit", "x"}}).status == 422);
  CHECK(api.list_problems({{"status", "weird"}}).status == 422);

  auto got = api.get_problem("11");
  CHECK(got.status == 200);
  auto gj = json::parse(got.body);
  CHECK(gj["sentences"].size() == 3);
  CHECK(gj["annotation"].is_null());
  CHECK(gj["revision"] == 0);
  CHECK(api.get_problem("404").status == 404);

  const Problem& p = c.problem("11");
  json body = {{"spans", {span_json(p, "Find the mean of X")}}, {"unclear", false}, {"revision", 0}};
  auto put = api.put_annotation("11", body.dump());
  CHECK(put.status == 200);
  CHECK(json::parse(put.body)["sentence_labels"] == json::array({0, 1, 0}));
  CHECK(json::parse(put.body)["spans"][0]["text"] == "Find the mean of X");

  auto stale = api.put_annotation("11", body.dump());
  CHECK(stale.status == 409);
  CHECK(json::parse(stale.body)["revision"] == 1);

  json empty_span = {{"spans", {{{"sentence_index", 0}, {"char_start", 3}, {"char_end", 3}}}},
                     {"revision", 1}};
  auto r422 = api.put_annotation("11", empty_span.dump());
  CHECK(r422.status == 422);
  CHECK(json::parse(r422.body)["error"].get<std::string>().find("span") != std::string::npos);
  CHECK(api.put_annotation("11", "{nope").status == 400);
  CHECK(api.put_annotation("11", R"({"spans":[]})").status == 422);
  CHECK(api.put_annotation("404", body.dump()).status == 404);

  auto unclear = api.put_annotation("10", R"({"spans":[],"unclear":true,"revision":0})");
  CHECK(unclear.status == 200);
  auto prog = json::parse(api.progress().body);
  CHECK(prog["unclear"] == 1);
  CHECK(prog["labeled"] == 1);
  CHECK(prog["unlabeled"] == 1);
  auto unl = json::parse(api.list_problems({{"status", "unclear"}}).body);
  CHECK(unl["total"] == 1);
  CHECK(unl["items"][0]["id"] == "10");

  auto exp = api.export_annotations();
  CHECK(exp.content_type == "application/x-ndjson");
  CHECK(std::count(exp.body.begin(), exp.body.end(), '\n') == 2);
}

TEST_CASE("http server and concurrent writers") {
  TempDir dir("http");
  Corpus c = small_corpus();
  AnnotationStore store(c, dir / "j.jsonl");
  AnnotationApi api(c, store);
  ServeOptions opt;
  opt.port = 0;
  AnnotationServer server(api, opt);
  const int port = server.start();
  REQUIRE(port > 0);

  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/api/problems?limit=2");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["items"].size() == 2);
  CHECK(cli.Get("/api/problems/nope")->status == 404);

  const Problem& p = c.problem("10");
  for (int round = 0; round < 5; ++round) {
    const long base = store.revision("10");
    std::atomic<int> ok{0}, conflict{0};
    auto client = [&](const std::string& needle) {
      httplib::Client local("127.0.0.1", port);
      json body = {{"spans", {span_json(p, needle)}}, {"unclear", false}, {"revision", base}};
      auto r = local.Put("/api/problems/10/annotation", body.dump(), "application/json");
      if (r && r->status == 200) ++ok;
      if (r && r->status == 409) ++conflict;
    };
    std::thread t1(client, "A coin is tossed twice"), t2(client, "What is the probability");
    t1.join();
    t2.join();
    CHECK(ok == 1);
    CHECK(conflict == 1);
    CHECK(store.revision("10") == base + 1);
  }
  auto exp = cli.Get("/api/export");
  REQUIRE(exp);
  CHECK(exp->body.find("\"10\"") != std::string::npos);
  CHECK(json::parse(cli.Get("/api/progress")->body)["labeled"] == 1);
  server.stop();
}
