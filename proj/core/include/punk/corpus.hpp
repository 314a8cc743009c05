#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "punk/text.hpp"

namespace punk {

enum class PostType { question, answer };

struct RawPost {
  std::string post_id;
  PostType type = PostType::question;
  std::string body;
  std::vector<std::string> tags;                  // questions only
  std::optional<std::string> accepted_answer_id;  // questions only
  std::optional<std::string> parent_id;           // answers only
};

enum class Split { train, dev, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct Problem {
  std::string id;
  std::string text;
  std::vector<Sentence> sentences;
  std::set<std::string> concept_tags;
  std::string answer_id;
  Split split = Split::train;
};

struct Answer {
  std::string id;
  std::string problem_id;
  std::string text;
};

struct Concept {
  std::string id;
  std::string name;
  int chapter = 1;
  int section = 1;
  int order_index = 0;
  std::vector<std::string> definitions;
  std::vector<std::string> examples;
  // Dump tags that denote this concept. Defaults to {id}.
  std::vector<std::string> tags;
};

struct TagPolicy {
  std::set<std::string> excluded;
  std::set<std::string> ignored;
  std::set<std::string> allowed_concepts;
  int max_tags = 3;

  // matlab/r excluded, the generic tags ignored, every catalog tag allowed.
  static TagPolicy defaults(const std::vector<Concept>& catalog);
  void validate() const;
};

// Accepted-answer problems dropped during filtering, by reason.
struct FilterReport {
  std::size_t questions = 0;
  std::size_t kept = 0;
  std::size_t excluded_tag = 0;
  std::size_t no_concept_tags = 0;
  std::size_t ignored_only = 0;
  std::size_t too_many_tags = 0;
  std::size_t no_accepted_answer = 0;
  std::size_t empty_text = 0;
  std::vector<std::string> dangling_answer_refs;  // question ids
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Problem> problems, std::vector<Answer> answers);

  const std::vector<Problem>& problems() const { return problems_; }
  const std::vector<Answer>& answers() const { return answers_; }

  const Problem& problem(std::string_view id) const;
  const Answer& answer(std::string_view id) const;
  bool has_problem(std::string_view id) const;

  std::vector<const Problem*> in_split(Split split) const;
  void set_splits(const std::vector<Split>& splits);

 private:
  void reindex();

  std::vector<Problem> problems_;
  std::vector<Answer> answers_;
  std::map<std::string, std::size_t, std::less<>> problem_index_;
  std::map<std::string, std::size_t, std::less<>> answer_index_;
};

struct FilterResult {
  Corpus corpus;
  FilterReport report;
};

// Reads an XML rows dump or the JSONL mirror (format detected from the first
// non-blank character). Throws ParseError naming the offending line.
std::vector<RawPost> parse_dump(std::istream& in);
std::vector<RawPost> parse_dump_file(const std::filesystem::path& path);

FilterResult filter_problems(const std::vector<RawPost>& posts,
                             const TagPolicy& policy);

// Split sizes are round(dev*N) and round(test*N); train takes the rest.
// The result is aligned with `ids` and depends only on the id set, the
// fractions and the seed.
std::vector<Split> assign_splits(const std::vector<std::string>& ids,
                                 const std::array<double, 3>& fractions,
                                 std::uint64_t seed);

// Train/dev/test fractions of the 904/110/157 reference split.
inline constexpr std::array<double, 3> kReferenceSplit = {
    904.0 / 1171.0, 110.0 / 1171.0, 157.0 / 1171.0};

nlohmann::json concept_to_json(const Concept& c);
Concept concept_from_json(const nlohmann::json& j);

std::vector<Concept> load_concepts(std::istream& in);
std::vector<Concept> load_concepts_file(const std::filesystem::path& path);
void save_concepts(const std::vector<Concept>& concepts, std::ostream& out);

// One concept per distinct problem tag, carrying the chapter, section and
// definitions of the catalog entry that owns the tag. order_index is the
// rank under (catalog order, tag). Throws if a tag has no catalog entry.
std::vector<Concept> label_space(const std::vector<Concept>& catalog,
                                 const std::vector<Problem>& problems);

// <dir>/problems.jsonl and <dir>/answers.jsonl.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace punk
