#include <doctest.h>
#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "punk/annotation.hpp"

using namespace punk;
using punk::testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PUNK_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("cli usage errors") {
  if (std::string(PUNK_CLI).empty()) return;
  CHECK(run("").code != 0);
  Run bad = run("stats --corpus x --bogus");
  CHECK(bad.code == 2);
  CHECK(bad.out.find("Usage") != std::string::npos);
  Run missing = run("stats --corpus /nonexistent/dir");
  CHECK(missing.code == 1);
  CHECK(missing.out.find("error:") != std::string::npos);
}

TEST_CASE("cli pipeline on the fixture dump") {
  if (std::string(PUNK_CLI).empty()) return;
  TempDir dir("cli");
  const std::string corpus = (dir / "corpus").string();
  Run ingest = run("ingest --dump " + std::string(PUNK_FIXTURES) + "/posts12.xml --policy default --out " + corpus);
  REQUIRE(ingest.code == 0);
  Corpus c = load_corpus(corpus);
  CHECK(c.problems().size() == 2);
  auto report = nlohmann::json::parse(slurp(dir / "corpus" / "filter_report.json"));
  CHECK(report["questions"] == 6);
  CHECK(report["kept"] == 2);

  CHECK(run("split --corpus " + corpus + " --fractions 1 0 0 --seed 3").code == 0);
  Run labels = run("concepts --corpus " + corpus);
  CHECK(labels.code == 0);
  CHECK(std::count(labels.out.begin(), labels.out.end(), '\n') == 4);

  Run stats = run("stats --corpus " + corpus);
  CHECK(stats.code == 0);
  CHECK(stats.out.find("sentences_per_problem,") != std::string::npos);

  CHECK(run("embed-fake --corpus " + corpus + " --dim 8 --seed 1 --out " + (dir / "emb").string()).code == 0);
  CHECK(std::filesystem::exists(dir / "emb.bin"));
  CHECK(run("graph-build --corpus " + corpus + " --embeddings " + (dir / "emb").string() + " --out " +
            (dir / "graph").string()).code == 0);
  const std::string gstats = slurp(dir / "graph" / "stats.csv");
  CHECK(gstats.find("node,problem,2") != std::string::npos);
}

TEST_CASE("cli annotations and baseline") {
  if (std::string(PUNK_CLI).empty()) return;
  TempDir dir("cli-ann");
  Run synth = run("synth --problems 40 --seed 2 --out " + dir.path().string());
  REQUIRE(synth.code == 0);
  const std::string corpus = (dir / "corpus").string();
  const std::string ann = (dir / "annotations.jsonl").string();
  Run base = run("baseline --task unknown --nth 1 --split dev --corpus " + corpus + " --annotations " + ann);
  REQUIRE(base.code == 0);
  auto j = nlohmann::json::parse(base.out);
  CHECK(j["config"]["n"] == 1);
  CHECK(j["classes"].size() == 2);

  const std::string store = (dir / "store.jsonl").string();
  CHECK(run("import-annotations --corpus " + corpus + " --store " + store + " --in " + ann).code == 0);
  CHECK(run("export-annotations --corpus " + corpus + " --store " + store + " --out " +
            (dir / "export.jsonl").string()).code == 0);
  const std::string store2 = (dir / "store2.jsonl").string();
  CHECK(run("import-annotations --corpus " + corpus + " --store " + store2 + " --in " +
            (dir / "export.jsonl").string()).code == 0);
  Run again = run("export-annotations --corpus " + corpus + " --store " + store2);
  CHECK(again.code == 0);
  CHECK(again.out == slurp(dir / "export.jsonl"));
  CHECK(read_annotations_file(dir / "export.jsonl").size() == read_annotations_file(ann).size());
}
