#pragma once

#include <filesystem>
#include <unistd.h>

#include <random>
#include <string>

#include "punk/corpus.hpp"
#include "punk/embed_store.hpp"
#include "punk/text.hpp"

namespace punk::testing {

// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("punk-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Problem make_problem(std::string id, std::string text, std::set<std::string> tags,
                            Split split = Split::train) {
  Problem p;
  p.id = std::move(id);
  p.text = std::move(text);
  p.sentences = segment_sentences(p.text);
  p.concept_tags = std::move(tags);
  p.answer_id = "a" + p.id;
  p.split = split;
  return p;
}

inline Answer answer_for(const Problem& p, std::string text = "See above.") {
  return {p.answer_id, p.id, std::move(text)};
}

inline Concept make_concept(std::string id, int chapter, int section, int order) {
  Concept c;
  c.id = id;
  c.name = id;
  c.chapter = chapter;
  c.section = section;
  c.order_index = order;
  c.definitions = {"The " + id + " of a random quantity."};
  c.tags = {id};
  return c;
}

// `classes` concepts c0, c1, ... with `per_class` single-tag problems each
// written from a class-specific vocabulary. The last `dev_per_class`
// problems of every class go to dev.
struct ClusterFixture {
  Corpus corpus;
  std::vector<Concept> labels;
  EmbeddingTable table{1};
};

inline ClusterFixture cluster_fixture(int classes, int per_class, int dim,
                                      std::uint64_t seed = 1, int dev_per_class = 0) {
  std::vector<Problem> problems;
  std::vector<Answer> answers;
  ClusterFixture f;
  for (int c = 0; c < classes; ++c) {
    const std::string w = "w" + std::to_string(c);
    f.labels.push_back(make_concept("c" + std::to_string(c), 1, c + 1, c));
    for (int k = 0; k < per_class; ++k) {
      const std::string text = "The " + w + "a item shows " + w + "b behaviour number " +
                               std::to_string(k % 7) + ". Find the " + w + "c value.";
      const Split s = k >= per_class - dev_per_class ? Split::dev : Split::train;
      problems.push_back(make_problem("p" + std::to_string(c) + "_" + std::to_string(k), text,
                                      {"c" + std::to_string(c)}, s));
      answers.push_back(answer_for(problems.back()));
    }
  }
  f.corpus = Corpus(std::move(problems), std::move(answers));
  f.table = fake_embeddings(f.corpus, f.labels, seed, dim);
  return f;
}

}  // namespace punk::testing
