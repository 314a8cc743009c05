#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "punk/annotation.hpp"
#include "punk/corpus.hpp"

namespace punk {

enum class LabelStatus { unlabeled, labeled, unclear };

std::string_view to_string(LabelStatus status);
LabelStatus parse_label_status(std::string_view name);

struct Progress {
  std::size_t total = 0;
  std::size_t labeled = 0;
  std::size_t unclear = 0;
  std::size_t unlabeled = 0;
};

// Annotations persisted as an append-only JSONL journal: every accepted
// write appends the full record, replay keeps the last line per problem.
// A torn final line (no trailing newline, unparseable) is dropped on open.
// compact() rewrites the journal to one line per record.
class AnnotationStore {
 public:
  AnnotationStore(const Corpus& corpus, std::filesystem::path journal,
                  std::size_t compact_every = 1000);

  const std::filesystem::path& journal() const { return path_; }

  std::optional<AnnotationRecord> get(const std::string& problem_id) const;
  long revision(const std::string& problem_id) const;  // 0 when unannotated
  LabelStatus status(const std::string& problem_id) const;
  Progress progress() const;
  AnnotationMap snapshot() const;

  // Validates the spans and stores the record with revision base + 1.
  // Throws NotFoundError for unknown problems, ValidationError for bad
  // spans and ConflictError when `base_revision` is not current.
  AnnotationRecord put(const std::string& problem_id, std::vector<AnnotationSpan> spans,
                       bool unclear, long base_revision);

  // Validates every record first; nothing is written if any fails. A
  // record keeps its revision unless that would not exceed the current one.
  void import(const AnnotationMap& records);

  void compact();

 private:
  void append(const AnnotationRecord& record);
  void replay();

  const Corpus& corpus_;
  std::filesystem::path path_;
  std::size_t compact_every_;
  std::size_t appended_ = 0;
  mutable std::shared_mutex mutex_;
  AnnotationMap records_;
  std::ofstream out_;
};

}  // namespace punk
