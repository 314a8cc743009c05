#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "punk/annotation.hpp"
#include "punk/corpus.hpp"

namespace punk {

// Generated forum dump with planted signals: each concept has its own
// vocabulary that fills the problem's ordinary sentences, and each problem
// states its unknown in one (sometimes two) sentences built around a
// question cue ("derive", "calculate", "what is the probability that",
// "prove that") at a random position.
struct SyntheticConfig {
  int problems = 500;
  std::uint64_t seed = 0;
  int min_sentences = 3;
  int max_sentences = 8;
  double two_concept_rate = 0.3;
  double two_unknown_rate = 0.15;
  double unclear_rate = 0.0;
  std::uint64_t split_seed = 0;
};

struct SyntheticData {
  std::vector<RawPost> posts;
  std::vector<Concept> concepts;  // one per planted tag
  Corpus corpus;                  // filtered and split
  AnnotationMap annotations;
};

// The 11 tags of the planted concepts, in concept order.
const std::vector<std::string>& synthetic_tags();

SyntheticData make_synthetic(const SyntheticConfig& config);

// Stack Exchange style <posts><row .../></posts> dump.
void write_dump_xml(const std::vector<RawPost>& posts, std::ostream& out);

}  // namespace punk
