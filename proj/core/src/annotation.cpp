#include "punk/annotation.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "punk/error.hpp"

namespace punk {

using nlohmann::json;

namespace {

bool word_byte(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

std::string describe(const AnnotationSpan& s) {
  return "span [" + std::to_string(s.char_start) + ", " + std::to_string(s.char_end) +
         ") in sentence " + std::to_string(s.sentence_index);
}

void check_span(const Problem& problem, const AnnotationSpan& s) {
  const std::string& text = problem.text;
  if (s.sentence_index < 0 ||
      s.sentence_index >= static_cast<int>(problem.sentences.size())) {
    throw ValidationError(describe(s) + ": no such sentence");
  }
  if (s.char_start >= s.char_end) throw ValidationError(describe(s) + ": empty span");
  const CharSpan& sentence = problem.sentences[static_cast<std::size_t>(s.sentence_index)].span;
  if (s.char_start < sentence.start || s.char_end > sentence.end) {
    throw ValidationError(describe(s) + ": outside the sentence [" +
                          std::to_string(sentence.start) + ", " +
                          std::to_string(sentence.end) + ")");
  }
  auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  if (s.char_start > 0 && word_byte(at(s.char_start - 1)) && word_byte(at(s.char_start))) {
    throw ValidationError(describe(s) + ": starts inside a word");
  }
  if (s.char_end < text.size() && word_byte(at(s.char_end - 1)) && word_byte(at(s.char_end))) {
    throw ValidationError(describe(s) + ": ends inside a word");
  }
  if (trim(std::string_view(text).substr(s.char_start, s.char_end - s.char_start)).empty()) {
    throw ValidationError(describe(s) + ": covers only whitespace");
  }
}

}  // namespace

std::vector<int> derive_sentence_labels(const Problem& problem,
                                        const std::vector<AnnotationSpan>& spans) {
  std::vector<int> labels(problem.sentences.size(), 0);
  for (const auto& s : spans) {
    const CharSpan range{s.char_start, s.char_end};
    for (std::size_t j = 0; j < problem.sentences.size(); ++j) {
      if (problem.sentences[j].span.overlaps(range)) labels[j] = 1;
    }
  }
  return labels;
}

AnnotationRecord make_annotation(const Problem& problem, std::vector<AnnotationSpan> spans,
                                 bool unclear, long revision) {
  if (unclear && !spans.empty()) {
    throw ValidationError("an unclear problem cannot carry spans");
  }
  for (auto& s : spans) {
    check_span(problem, s);
    s.text = problem.text.substr(s.char_start, s.char_end - s.char_start);
  }
  AnnotationRecord r;
  r.problem_id = problem.id;
  r.sentence_labels = derive_sentence_labels(problem, spans);
  r.spans = std::move(spans);
  r.unclear = unclear;
  r.revision = revision;
  return r;
}

void validate_annotation(const Problem& problem, const AnnotationRecord& record) {
  if (record.problem_id != problem.id) {
    throw ValidationError("annotation for " + record.problem_id + " checked against " +
                          problem.id);
  }
  if (record.unclear && !record.spans.empty()) {
    throw ValidationError("an unclear problem cannot carry spans");
  }
  for (const auto& s : record.spans) {
    check_span(problem, s);
    if (problem.text.compare(s.char_start, s.char_end - s.char_start, s.text) != 0) {
      throw ValidationError(describe(s) + ": text does not match the problem");
    }
  }
  if (record.sentence_labels != derive_sentence_labels(problem, record.spans)) {
    throw ValidationError("sentence labels of " + problem.id + " do not match its spans");
  }
}

json to_json(const AnnotationRecord& r) {
  json spans = json::array();
  for (const auto& s : r.spans) {
    spans.push_back({{"sentence_index", s.sentence_index},
                     {"char_start", s.char_start},
                     {"char_end", s.char_end},
                     {"text", s.text}});
  }
  return {{"problem_id", r.problem_id},
          {"spans", spans},
          {"sentence_labels", r.sentence_labels},
          {"unclear", r.unclear},
          {"revision", r.revision}};
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord r;
  r.problem_id = j.at("problem_id").get<std::string>();
  for (const auto& s : j.value("spans", json::array())) {
    r.spans.push_back({s.at("sentence_index").get<int>(),
                       s.at("char_start").get<std::size_t>(),
                       s.at("char_end").get<std::size_t>(), s.value("text", "")});
  }
  r.sentence_labels = j.value("sentence_labels", std::vector<int>{});
  r.unclear = j.value("unclear", false);
  r.revision = j.value("revision", 0L);
  return r;
}

void write_annotations(const AnnotationMap& records, std::ostream& out) {
  for (const auto& [id, r] : records) out << to_json(r).dump() << '\n';
}

AnnotationMap read_annotations(std::istream& in) {
  AnnotationMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    AnnotationRecord r;
    try {
      r = annotation_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError("annotation line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string id = r.problem_id;
    if (!out.emplace(id, std::move(r)).second) {
      throw ValidationError("duplicate annotation for problem " + id);
    }
  }
  return out;
}

AnnotationMap read_annotations_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open annotation file " + path.string());
  return read_annotations(in);
}

}  // namespace punk
