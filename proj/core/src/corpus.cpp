#include "punk/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "punk/error.hpp"
#include "punk/rng.hpp"

namespace punk {

using nlohmann::json;

namespace {

std::string normalize_tag(std::string_view tag) {
  return to_lower_ascii(trim(tag));
}

std::string read_line_attr(const std::map<std::string, std::string>& attrs,
                           const std::string& key) {
  auto it = attrs.find(key);
  return it == attrs.end() ? std::string() : it->second;
}

std::vector<std::string> parse_tag_field(std::string_view field) {
  // "<a><b>" (older dumps) or "|a|b|" (newer dumps).
  std::vector<std::string> tags;
  std::string cur;
  for (char c : field) {
    if (c == '<' || c == '>' || c == '|') {
      if (!trim(cur).empty()) tags.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) tags.push_back(trim(cur));
  return tags;
}

// Attributes of one <row .../> element.
std::map<std::string, std::string> parse_row(std::string_view line,
                                             std::size_t line_no) {
  auto fail = [&](const std::string& what) {
    throw ParseError(what + " at line " + std::to_string(line_no));
  };
  std::size_t i = line.find("<row");
  if (i == std::string_view::npos) fail("malformed row");
  std::map<std::string, std::string> attrs;
  i += 4;
  while (true) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) fail("malformed row");
    if (line.compare(i, 2, "/>") == 0) break;
    std::size_t eq = line.find('=', i);
    if (eq == std::string_view::npos) fail("malformed attribute");
    std::string name = trim(line.substr(i, eq - i));
    if (name.empty() || name.find_first_of(" <>\"'") != std::string::npos)
      fail("malformed attribute");
    std::size_t q = eq + 1;
    if (q >= line.size() || (line[q] != '"' && line[q] != '\''))
      fail("unquoted attribute " + name);
    std::size_t endq = line.find(line[q], q + 1);
    if (endq == std::string_view::npos) fail("unterminated attribute " + name);
    attrs[name] = decode_entities(line.substr(q + 1, endq - q - 1));
    i = endq + 1;
  }
  return attrs;
}

void check_unique(std::set<std::string>& seen, const std::string& id,
                  std::size_t line_no) {
  if (!seen.insert(id).second) {
    throw ParseError("duplicate Id " + id + " at line " +
                     std::to_string(line_no));
  }
}

std::optional<std::string> optional_string(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || it->is_null()) return std::nullopt;
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  return it->get<std::string>();
}

std::vector<RawPost> parse_jsonl(std::istream& in) {
  std::vector<RawPost> posts;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("malformed row at line " + std::to_string(line_no) +
                       ": " + e.what());
    }
    auto id = optional_string(row, "id");
    if (!id) throw ParseError("missing Id at line " + std::to_string(line_no));
    std::string type = row.value("type", "");
    RawPost post;
    post.post_id = *id;
    if (type == "question") {
      post.type = PostType::question;
    } else if (type == "answer") {
      post.type = PostType::answer;
    } else {
      continue;
    }
    check_unique(seen, post.post_id, line_no);
    post.body = row.value("body", "");
    if (auto t = row.find("tags"); t != row.end() && !t->is_null()) {
      if (t->is_string()) {
        post.tags = parse_tag_field(t->get<std::string>());
      } else {
        post.tags = t->get<std::vector<std::string>>();
      }
    }
    post.accepted_answer_id = optional_string(row, "accepted_answer_id");
    post.parent_id = optional_string(row, "parent_id");
    posts.push_back(std::move(post));
  }
  return posts;
}

std::vector<RawPost> parse_xml_rows(std::istream& in) {
  std::vector<RawPost> posts;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t.rfind("<?", 0) == 0 || t.rfind("<posts", 0) == 0 ||
        t.rfind("</posts", 0) == 0)
      continue;
    if (t.rfind("<row", 0) != 0) {
      throw ParseError("malformed row at line " + std::to_string(line_no));
    }
    auto attrs = parse_row(t, line_no);
    std::string id = read_line_attr(attrs, "Id");
    if (id.empty()) {
      throw ParseError("missing Id at line " + std::to_string(line_no));
    }
    std::string type = read_line_attr(attrs, "PostTypeId");
    RawPost post;
    post.post_id = id;
    if (type == "1") {
      post.type = PostType::question;
    } else if (type == "2") {
      post.type = PostType::answer;
    } else if (type.empty()) {
      throw ParseError("missing PostTypeId at line " + std::to_string(line_no));
    } else {
      continue;
    }
    check_unique(seen, id, line_no);
    post.body = read_line_attr(attrs, "Body");
    post.tags = parse_tag_field(read_line_attr(attrs, "Tags"));
    if (auto a = read_line_attr(attrs, "AcceptedAnswerId"); !a.empty())
      post.accepted_answer_id = a;
    if (auto p = read_line_attr(attrs, "ParentId"); !p.empty())
      post.parent_id = p;
    posts.push_back(std::move(post));
  }
  return posts;
}

json sentence_to_json(const Sentence& s) {
  return {{"index", s.index},
          {"text", s.text},
          {"start", s.span.start},
          {"end", s.span.end}};
}

Sentence sentence_from_json(const json& j) {
  Sentence s;
  s.index = j.at("index").get<int>();
  s.text = j.at("text").get<std::string>();
  s.span = {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
  return s;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "dev") return Split::dev;
  if (name == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(name) + "'");
}

TagPolicy TagPolicy::defaults(const std::vector<Concept>& catalog) {
  TagPolicy p;
  p.excluded = {"matlab", "r"};
  p.ignored = {"probability",   "mathematical-statistics",
               "meta-analysis", "hypothesis-testing",
               "distributions", "self-study",
               "intuition",     "definition"};
  for (const auto& c : catalog) {
    for (const auto& t : c.tags) p.allowed_concepts.insert(normalize_tag(t));
  }
  p.max_tags = 3;
  return p;
}

void TagPolicy::validate() const {
  if (max_tags < 1) throw ValidationError("max_tags must be >= 1");
  for (const auto& t : excluded) {
    if (ignored.count(t)) {
      throw ValidationError("tag '" + t + "' is both excluded and ignored");
    }
  }
}

Corpus::Corpus(std::vector<Problem> problems, std::vector<Answer> answers)
    : problems_(std::move(problems)), answers_(std::move(answers)) {
  reindex();
}

void Corpus::reindex() {
  problem_index_.clear();
  answer_index_.clear();
  for (std::size_t i = 0; i < problems_.size(); ++i) {
    if (!problem_index_.emplace(problems_[i].id, i).second) {
      throw ValidationError("duplicate problem id " + problems_[i].id);
    }
  }
  for (std::size_t i = 0; i < answers_.size(); ++i) {
    if (!answer_index_.emplace(answers_[i].id, i).second) {
      throw ValidationError("duplicate answer id " + answers_[i].id);
    }
  }
  for (const auto& p : problems_) {
    auto it = answer_index_.find(p.answer_id);
    if (it == answer_index_.end() || answers_[it->second].problem_id != p.id) {
      throw ValidationError("problem " + p.id +
                            " does not resolve to its answer " + p.answer_id);
    }
    if (p.concept_tags.empty() || p.concept_tags.size() > 3) {
      throw ValidationError("problem " + p.id + " must carry 1..3 tags");
    }
  }
}

const Problem& Corpus::problem(std::string_view id) const {
  auto it = problem_index_.find(id);
  if (it == problem_index_.end()) {
    throw NotFoundError("unknown problem " + std::string(id));
  }
  return problems_[it->second];
}

const Answer& Corpus::answer(std::string_view id) const {
  auto it = answer_index_.find(id);
  if (it == answer_index_.end()) {
    throw NotFoundError("unknown answer " + std::string(id));
  }
  return answers_[it->second];
}

bool Corpus::has_problem(std::string_view id) const {
  return problem_index_.find(id) != problem_index_.end();
}

std::vector<const Problem*> Corpus::in_split(Split split) const {
  std::vector<const Problem*> out;
  for (const auto& p : problems_) {
    if (p.split == split) out.push_back(&p);
  }
  return out;
}

void Corpus::set_splits(const std::vector<Split>& splits) {
  if (splits.size() != problems_.size()) {
    throw ValidationError("split assignment size mismatch");
  }
  for (std::size_t i = 0; i < splits.size(); ++i) problems_[i].split = splits[i];
}

std::vector<RawPost> parse_dump(std::istream& in) {
  int c;
  while ((c = in.peek()) != EOF && std::isspace(c)) in.get();
  if (c == '{') return parse_jsonl(in);
  return parse_xml_rows(in);
}

std::vector<RawPost> parse_dump_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dump " + path.string());
  return parse_dump(in);
}

FilterResult filter_problems(const std::vector<RawPost>& posts,
                             const TagPolicy& policy) {
  policy.validate();
  std::map<std::string, const RawPost*> by_id;
  for (const auto& p : posts) {
    if (!by_id.emplace(p.post_id, &p).second) {
      throw ValidationError("duplicate post id " + p.post_id);
    }
  }
  std::set<std::string> excluded, ignored, allowed;
  for (const auto& t : policy.excluded) excluded.insert(normalize_tag(t));
  for (const auto& t : policy.ignored) ignored.insert(normalize_tag(t));
  for (const auto& t : policy.allowed_concepts) allowed.insert(normalize_tag(t));

  FilterReport report;
  std::vector<Problem> problems;
  std::vector<Answer> answers;
  for (const auto& post : posts) {
    if (post.type != PostType::question) continue;
    ++report.questions;
    std::set<std::string> tags;
    for (const auto& t : post.tags) tags.insert(normalize_tag(t));
    if (std::any_of(tags.begin(), tags.end(),
                    [&](const auto& t) { return excluded.count(t) > 0; })) {
      ++report.excluded_tag;
      continue;
    }
    std::set<std::string> kept;
    bool only_ignored = !tags.empty();
    for (const auto& t : tags) {
      if (ignored.count(t)) continue;
      only_ignored = false;
      if (allowed.count(t)) kept.insert(t);
    }
    if (kept.empty()) {
      ++(only_ignored ? report.ignored_only : report.no_concept_tags);
      continue;
    }
    if (static_cast<int>(kept.size()) > policy.max_tags) {
      ++report.too_many_tags;
      continue;
    }
    if (!post.accepted_answer_id) {
      ++report.no_accepted_answer;
      continue;
    }
    auto ans = by_id.find(*post.accepted_answer_id);
    if (ans == by_id.end() || ans->second->type != PostType::answer) {
      ++report.no_accepted_answer;
      report.dangling_answer_refs.push_back(post.post_id);
      continue;
    }
    std::string text = strip_markup(post.body);
    std::string answer_text = strip_markup(ans->second->body);
    if (trim(text).empty()) {
      ++report.empty_text;
      continue;
    }
    Problem problem;
    problem.id = post.post_id;
    problem.text = std::move(text);
    problem.sentences = segment_sentences(problem.text);
    problem.concept_tags = std::move(kept);
    problem.answer_id = ans->second->post_id;
    problems.push_back(std::move(problem));
    answers.push_back({ans->second->post_id, post.post_id, std::move(answer_text)});
  }
  report.kept = problems.size();
  return {Corpus(std::move(problems), std::move(answers)), std::move(report)};
}

std::vector<Split> assign_splits(const std::vector<std::string>& ids,
                                 const std::array<double, 3>& fractions,
                                 std::uint64_t seed) {
  if (ids.empty()) throw ValidationError("cannot split an empty problem list");
  double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 ||
      fractions[2] < 0) {
    throw ValidationError("split fractions must be non-negative and sum to 1");
  }
  const auto n = static_cast<double>(ids.size());
  auto n_dev = static_cast<std::size_t>(std::llround(fractions[1] * n));
  auto n_test = static_cast<std::size_t>(std::llround(fractions[2] * n));
  if (n_dev + n_test > ids.size()) n_test = ids.size() - n_dev;

  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Split> out(ids.size(), Split::train);
  for (std::size_t k = 0; k < n_dev; ++k) out[order[k]] = Split::dev;
  for (std::size_t k = n_dev; k < n_dev + n_test; ++k)
    out[order[k]] = Split::test;
  return out;
}

json concept_to_json(const Concept& c) {
  json j = {{"id", c.id},
            {"name", c.name},
            {"chapter", c.chapter},
            {"section", c.section},
            {"order", c.order_index},
            {"definitions", c.definitions},
            {"examples", c.examples}};
  if (!(c.tags.size() == 1 && c.tags[0] == c.id)) j["tags"] = c.tags;
  return j;
}


Concept concept_from_json(const json& j) {
  Concept c;
  c.name = j.at("name").get<std::string>();
  c.id = j.value("id", to_lower_ascii(c.name));
  c.chapter = j.at("chapter").get<int>();
  c.section = j.at("section").get<int>();
  c.order_index = j.at("order").get<int>();
  c.definitions = j.value("definitions", std::vector<std::string>{});
  c.examples = j.value("examples", std::vector<std::string>{});
  c.tags = j.value("tags", std::vector<std::string>{c.id});
  for (auto& t : c.tags) t = normalize_tag(t);
  return c;
}

std::vector<Concept> load_concepts(std::istream& in) {
  std::vector<Concept> out;
  std::set<std::string> names, ids, tags;
  std::set<int> orders;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      if (!j.contains("order")) j["order"] = static_cast<int>(out.size()) + 1;
      Concept c = concept_from_json(j);
      if (c.chapter < 1 || c.section < 1) {
        throw ValidationError("chapter/section must be >= 1 for " + c.name);
      }
      if (!names.insert(c.name).second) {
        throw ValidationError("duplicate concept name '" + c.name + "'");
      }
      if (!ids.insert(c.id).second) {
        throw ValidationError("duplicate concept id '" + c.id + "'");
      }
      if (!orders.insert(c.order_index).second) {
        throw ValidationError("duplicate concept order " +
                              std::to_string(c.order_index));
      }
      for (const auto& t : c.tags) {
        if (!tags.insert(t).second) {
          throw ValidationError("tag '" + t + "' maps to two concepts");
        }
      }
      out.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw ParseError("concept file line " + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
  if (out.empty()) throw ValidationError("concept file is empty");
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.order_index < b.order_index;
  });
  return out;
}

std::vector<Concept> load_concepts_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open concept file " + path.string());
  return load_concepts(in);
}

void save_concepts(const std::vector<Concept>& concepts, std::ostream& out) {
  for (const auto& c : concepts) out << concept_to_json(c).dump() << '\n';
}

std::vector<Concept> label_space(const std::vector<Concept>& catalog,
                                 const std::vector<Problem>& problems) {
  std::map<std::string, const Concept*> owner;
  for (const auto& c : catalog) {
    for (const auto& t : c.tags) owner[t] = &c;
  }
  std::set<std::string> used;
  for (const auto& p : problems) used.insert(p.concept_tags.begin(), p.concept_tags.end());
  std::vector<Concept> labels;
  for (const auto& tag : used) {
    auto it = owner.find(tag);
    if (it == owner.end()) {
      throw ValidationError("tag '" + tag + "' is not in the concept list");
    }
    Concept c = *it->second;
    c.id = tag;
    c.tags = {tag};
    labels.push_back(std::move(c));
  }
  std::stable_sort(labels.begin(), labels.end(), [](const auto& a, const auto& b) {
    if (a.order_index != b.order_index) return a.order_index < b.order_index;
    return a.id < b.id;
  });
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i].order_index = static_cast<int>(i);
  }
  return labels;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream pout(dir / "problems.jsonl");
  for (const auto& p : corpus.problems()) {
    json sentences = json::array();
    for (const auto& s : p.sentences) sentences.push_back(sentence_to_json(s));
    json j = {{"id", p.id},
              {"text", p.text},
              {"sentences", sentences},
              {"concept_tags", p.concept_tags},
              {"answer_id", p.answer_id},
              {"split", to_string(p.split)}};
    pout << j.dump() << '\n';
  }
  std::ofstream aout(dir / "answers.jsonl");
  for (const auto& a : corpus.answers()) {
    json j = {{"id", a.id}, {"problem_id", a.problem_id}, {"text", a.text}};
    aout << j.dump() << '\n';
  }
  if (!pout || !aout) throw Error("failed writing corpus to " + dir.string());
}

Corpus load_corpus(const std::filesystem::path& dir) {
  auto read_lines = [](const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        rows.push_back(json::parse(line));
      } catch (const json::exception& e) {
        throw ParseError(path.string() + " line " + std::to_string(line_no) +
                         ": " + e.what());
      }
    }
    return rows;
  };
  std::vector<Problem> problems;
  for (const auto& j : read_lines(dir / "problems.jsonl")) {
    Problem p;
    p.id = j.at("id").get<std::string>();
    p.text = j.at("text").get<std::string>();
    for (const auto& s : j.at("sentences")) p.sentences.push_back(sentence_from_json(s));
    for (const auto& t : j.at("concept_tags")) p.concept_tags.insert(t.get<std::string>());
    p.answer_id = j.at("answer_id").get<std::string>();
    p.split = parse_split(j.value("split", "train"));
    problems.push_back(std::move(p));
  }
  std::vector<Answer> answers;
  for (const auto& j : read_lines(dir / "answers.jsonl")) {
    answers.push_back({j.at("id").get<std::string>(),
                       j.at("problem_id").get<std::string>(),
                       j.at("text").get<std::string>()});
  }
  return Corpus(std::move(problems), std::move(answers));
}

}  // namespace punk
