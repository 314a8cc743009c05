#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "punk/corpus.hpp"

namespace punk {

// One marked unknown: absolute byte offsets into the problem text.
struct AnnotationSpan {
  int sentence_index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;

  friend bool operator==(const AnnotationSpan&, const AnnotationSpan&) = default;
};

struct AnnotationRecord {
  std::string problem_id;
  std::vector<AnnotationSpan> spans;
  std::vector<int> sentence_labels;
  bool unclear = false;
  long revision = 0;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

// 1 for every sentence a span overlaps, 0 elsewhere.
std::vector<int> derive_sentence_labels(const Problem& problem,
                                        const std::vector<AnnotationSpan>& spans);

// Checks span offsets and fills in their text. A span must be non-empty,
// lie inside its sentence, start and end on token boundaries and not cover
// only whitespace. Unclear records carry no spans. Throws ValidationError
// naming the offending span.
AnnotationRecord make_annotation(const Problem& problem, std::vector<AnnotationSpan> spans,
                                 bool unclear, long revision = 0);

// Full invariant check of a stored record against its problem.
void validate_annotation(const Problem& problem, const AnnotationRecord& record);

nlohmann::json to_json(const AnnotationRecord& record);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

using AnnotationMap = std::map<std::string, AnnotationRecord>;

// One record per line, ordered by problem_id.
void write_annotations(const AnnotationMap& records, std::ostream& out);
AnnotationMap read_annotations(std::istream& in);
AnnotationMap read_annotations_file(const std::filesystem::path& path);

}  // namespace punk
