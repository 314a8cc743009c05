#include "punk/annotation_store.hpp"

#include <nlohmann/json.hpp>

#include "punk/error.hpp"

namespace punk {

using nlohmann::json;

std::string_view to_string(LabelStatus status) {
  switch (status) {
    case LabelStatus::unlabeled: return "unlabeled";
    case LabelStatus::labeled: return "labeled";
    case LabelStatus::unclear: return "unclear";
  }
  return "unlabeled";
}

LabelStatus parse_label_status(std::string_view name) {
  if (name == "unlabeled") return LabelStatus::unlabeled;
  if (name == "labeled") return LabelStatus::labeled;
  if (name == "unclear") return LabelStatus::unclear;
  throw ValidationError("unknown status '" + std::string(name) + "'");
}

AnnotationStore::AnnotationStore(const Corpus& corpus, std::filesystem::path journal,
                                 std::size_t compact_every)
    : corpus_(corpus), path_(std::move(journal)), compact_every_(compact_every) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  replay();
  compact();
}

void AnnotationStore::replay() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    const bool complete = nl != std::string::npos;
    std::string line = content.substr(pos, complete ? nl - pos : std::string::npos);
    pos = complete ? nl + 1 : content.size();
    ++line_no;
    if (trim(line).empty()) continue;
    AnnotationRecord r;
    try {
      r = annotation_from_json(json::parse(line));
    } catch (const json::exception& e) {
      if (!complete) break;  // torn write at the tail
      throw ParseError("journal " + path_.string() + " line " + std::to_string(line_no) +
                       ": " + e.what());
    }
    if (!corpus_.has_problem(r.problem_id)) {
      throw ValidationError("journal line " + std::to_string(line_no) +
                            " annotates unknown problem " + r.problem_id);
    }
    validate_annotation(corpus_.problem(r.problem_id), r);
    auto it = records_.find(r.problem_id);
    if (it != records_.end() && r.revision < it->second.revision) {
      throw ValidationError("journal line " + std::to_string(line_no) +
                            " lowers the revision of " + r.problem_id);
    }
    records_[r.problem_id] = std::move(r);
  }
}

void AnnotationStore::compact() {
  std::unique_lock lock(mutex_);
  if (out_.is_open()) out_.close();
  auto tmp = path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    write_annotations(records_, out);
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path_);
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error("cannot append to " + path_.string());
  appended_ = 0;
}

void AnnotationStore::append(const AnnotationRecord& record) {
  out_ << to_json(record).dump() << '\n';
  out_.flush();
  if (!out_) throw Error("failed appending to " + path_.string());
  ++appended_;
}

std::optional<AnnotationRecord> AnnotationStore::get(const std::string& problem_id) const {
  std::shared_lock lock(mutex_);
  auto it = records_.find(problem_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

long AnnotationStore::revision(const std::string& problem_id) const {
  std::shared_lock lock(mutex_);
  auto it = records_.find(problem_id);
  return it == records_.end() ? 0 : it->second.revision;
}

LabelStatus AnnotationStore::status(const std::string& problem_id) const {
  std::shared_lock lock(mutex_);
  auto it = records_.find(problem_id);
  if (it == records_.end()) return LabelStatus::unlabeled;
  return it->second.unclear ? LabelStatus::unclear : LabelStatus::labeled;
}

Progress AnnotationStore::progress() const {
  std::shared_lock lock(mutex_);
  Progress p;
  p.total = corpus_.problems().size();
  for (const auto& [id, r] : records_) ++(r.unclear ? p.unclear : p.labeled);
  p.unlabeled = p.total - p.labeled - p.unclear;
  return p;
}

AnnotationMap AnnotationStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return records_;
}

AnnotationRecord AnnotationStore::put(const std::string& problem_id,
                                      std::vector<AnnotationSpan> spans, bool unclear,
                                      long base_revision) {
  if (!corpus_.has_problem(problem_id)) throw NotFoundError("no problem " + problem_id);
  AnnotationRecord record =
      make_annotation(corpus_.problem(problem_id), std::move(spans), unclear);
  bool compact_now = false;
  {
    std::unique_lock lock(mutex_);
    auto it = records_.find(problem_id);
    const long current = it == records_.end() ? 0 : it->second.revision;
    if (base_revision != current) {
      throw ConflictError("problem " + problem_id + " is at revision " +
                          std::to_string(current) + ", not " + std::to_string(base_revision));
    }
    record.revision = current + 1;
    append(record);
    records_[problem_id] = record;
    compact_now = compact_every_ > 0 && appended_ >= compact_every_;
  }
  if (compact_now) compact();
  return record;
}

void AnnotationStore::import(const AnnotationMap& records) {
  for (const auto& [id, r] : records) {
    if (!corpus_.has_problem(id)) throw NotFoundError("no problem " + id);
    validate_annotation(corpus_.problem(id), r);
  }
  {
    std::unique_lock lock(mutex_);
    for (const auto& [id, r] : records) {
      AnnotationRecord copy = r;
      auto it = records_.find(id);
      const long current = it == records_.end() ? 0 : it->second.revision;
      if (copy.revision <= current) copy.revision = current + 1;
      append(copy);
      records_[id] = std::move(copy);
    }
  }
  compact();
}

}  // namespace punk
