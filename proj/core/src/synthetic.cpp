#include "punk/synthetic.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "punk/error.hpp"
#include "punk/rng.hpp"

namespace punk {

namespace {

struct PlantedConcept {
  const char* tag;
  const char* name;
  int chapter;
  int section;
  int order;
  std::vector<std::string> words;
};

const std::vector<PlantedConcept>& planted() {
  static const std::vector<PlantedConcept> table = {
      {"independence", "Independent Events", 1, 3, 14,
       {"independent", "unrelated", "separately", "factorizes"}},
      {"conditional-probability", "Conditional Probability", 1, 4, 15,
       {"given", "conditional", "knowing", "informed"}},
      {"random-variable", "Random Variable", 2, 1, 17,
       {"variable", "mapping", "outcome", "realization"}},
      {"pdf", "Probability Density Function", 2, 2, 20,
       {"density", "integral", "continuous", "curve"}},
      {"binomial", "The Binomial Distribution", 2, 3, 25,
       {"trials", "successes", "binomial", "coin"}},
      {"poisson", "The Poisson Distribution", 2, 3, 29,
       {"poisson", "arrivals", "rate", "counts"}},
      {"normal-distribution", "Normal", 2, 4, 35,
       {"normal", "bell", "gaussian", "standardized"}},
      {"expected-value", "Expected Value", 3, 1, 49,
       {"expectation", "average", "payoff", "long-run"}},
      {"correlation", "Correlation", 3, 2, 52,
       {"correlated", "correlation", "linear", "association"}},
      {"covariance", "Covariance", 3, 2, 53,
       {"covariance", "jointly", "covary", "cross-moment"}},
      {"variance", "Variance", 3, 2, 54,
       {"variance", "spread", "dispersion", "squared"}},
  };
  return table;
}

const std::vector<std::string> kSettings = {
    "study", "experiment", "survey", "factory", "game", "clinic", "lottery", "queue"};
const std::vector<std::string> kSubjects = {
    "The setup", "My dataset", "This model", "The sample", "Our process", "The question"};
const std::vector<std::string> kQuantities = {
    "the value of $E[X]$", "the distribution of $Y$", "the formula for the estimator",
    "$Var(X+Y)$", "the limit of the sequence", "the joint density of $X$ and $Y$"};
const std::vector<std::string> kEvents = {
    "two people in the group are late", "the time between buses is 6 minutes or less",
    "no defective items appear", "the total exceeds 10", "at least one die shows a six"};
const std::vector<std::string> kClaims = {
    "the estimator is unbiased", "$X$ and $Y$ are not jointly normal",
    "the sum converges", "the output does not depend on the input"};

template <class T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.below(items.size())];
}

std::string filler(const std::vector<const PlantedConcept*>& concepts, Rng& rng) {
  const auto& a = pick(concepts, rng)->words;
  const auto& b = pick(concepts, rng)->words;
  switch (rng.below(4)) {
    case 0:
      return pick(kSubjects, rng) + " in this " + pick(kSettings, rng) + " involves " +
             pick(a, rng) + " and " + pick(b, rng) + ".";
    case 1:
      return "Each " + pick(kSettings, rng) + " records the " + pick(a, rng) + " with some " +
             pick(b, rng) + " noted by $X_i$.";
    case 2:
      return "Is the " + pick(a, rng) + " here really " + pick(b, rng) + "?";
    default:
      return "I read that the " + pick(a, rng) + " of the " + pick(kSettings, rng) +
             " depends on the " + pick(b, rng) + ".";
  }
}

// Returns the sentence and the byte range of the unknown inside it.
std::pair<std::string, std::pair<std::size_t, std::size_t>> cue_sentence(Rng& rng) {
  std::string lead, body, tail;
  switch (rng.below(6)) {
    case 0:
      lead = "How could one ";
      body = "derive " + pick(kQuantities, rng);
      tail = "?";
      break;
    case 1:
      lead = "How do you ";
      body = "calculate " + pick(kQuantities, rng);
      tail = "?";
      break;
    case 2:
      lead = "I want to ";
      body = "calculate " + pick(kQuantities, rng);
      tail = ".";
      break;
    case 3:
      lead = "";
      body = "What is the probability that " + pick(kEvents, rng);
      tail = "?";
      break;
    case 4:
      lead = "How do we ";
      body = "prove that " + pick(kClaims, rng);
      tail = "?";
      break;
    default:
      lead = "I want to ";
      body = "prove that " + pick(kClaims, rng);
      tail = ".";
      break;
  }
  return {lead + body + tail, {lead.size(), lead.size() + body.size()}};
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#xA;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& synthetic_tags() {
  static const std::vector<std::string> tags = [] {
    std::vector<std::string> out;
    for (const auto& c : planted()) out.push_back(c.tag);
    return out;
  }();
  return tags;
}

SyntheticData make_synthetic(const SyntheticConfig& config) {
  if (config.problems < 1) throw ValidationError("need at least one problem");
  if (config.min_sentences < 1 || config.max_sentences < config.min_sentences) {
    throw ValidationError("bad sentence count range");
  }
  SyntheticData data;
  for (const auto& c : planted()) {
    Concept entry;
    entry.id = c.tag;
    entry.name = c.name;
    entry.chapter = c.chapter;
    entry.section = c.section;
    entry.order_index = c.order;
    entry.definitions = {"A " + c.words[0] + " idea concerning " + c.words[1] + " and " +
                         c.words[2] + "."};
    entry.tags = {c.tag};
    data.concepts.push_back(std::move(entry));
  }

  Rng rng(config.seed);
  std::vector<const PlantedConcept*> all;
  for (const auto& c : planted()) all.push_back(&c);
  struct Planned {
    std::string text;
    std::vector<std::pair<std::size_t, std::size_t>> unknowns;  // absolute offsets
    bool unclear = false;
  };
  std::map<std::string, Planned> plans;

  for (int i = 0; i < config.problems; ++i) {
    const std::string qid = std::to_string(2 * i + 1);
    const std::string aid = std::to_string(2 * i + 2);
    auto chosen = rng.sample(all, rng.bernoulli(config.two_concept_rate) ? 2 : 1);
    const int n = config.min_sentences +
                  static_cast<int>(rng.below(static_cast<std::size_t>(
                      config.max_sentences - config.min_sentences + 1)));
    std::vector<int> cue_at = {static_cast<int>(rng.below(static_cast<std::size_t>(n)))};
    if (n > 1 && rng.bernoulli(config.two_unknown_rate)) {
      int other = static_cast<int>(rng.below(static_cast<std::size_t>(n - 1)));
      if (other >= cue_at[0]) ++other;
      cue_at.push_back(other);
    }
    Planned plan;
    plan.unclear = rng.bernoulli(config.unclear_rate);
    std::string text;
    for (int j = 0; j < n; ++j) {
      if (!text.empty()) text += ' ';
      if (std::find(cue_at.begin(), cue_at.end(), j) != cue_at.end()) {
        auto [sentence, range] = cue_sentence(rng);
        plan.unknowns.emplace_back(text.size() + range.first, text.size() + range.second);
        text += sentence;
      } else {
        text += filler(chosen, rng);
      }
    }
    plan.text = text;
    RawPost q;
    q.post_id = qid;
    q.type = PostType::question;
    q.body = "<p>" + text + "</p>";
    for (const auto* c : chosen) q.tags.push_back(c->tag);
    q.tags.push_back("probability");
    q.accepted_answer_id = aid;
    RawPost a;
    a.post_id = aid;
    a.type = PostType::answer;
    a.body = "<p>Use the " + pick(chosen, rng)->words[0] + " of the " + pick(kSettings, rng) +
             ".</p>";
    a.parent_id = qid;
    data.posts.push_back(std::move(q));
    data.posts.push_back(std::move(a));
    plans.emplace(qid, std::move(plan));
  }

  TagPolicy policy = TagPolicy::defaults(data.concepts);
  FilterResult filtered = filter_problems(data.posts, policy);
  if (filtered.report.kept != static_cast<std::size_t>(config.problems)) {
    throw Error("synthetic filtering dropped problems");
  }
  data.corpus = std::move(filtered.corpus);
  std::vector<std::string> ids;
  for (const auto& p : data.corpus.problems()) ids.push_back(p.id);
  data.corpus.set_splits(assign_splits(ids, kReferenceSplit, config.split_seed));

  for (const auto& p : data.corpus.problems()) {
    const Planned& plan = plans.at(p.id);
    if (p.text != plan.text) throw Error("synthetic text changed during ingestion: " + p.id);
    if (plan.unclear) {
      data.annotations.emplace(p.id, make_annotation(p, {}, true, 1));
      continue;
    }
    std::vector<AnnotationSpan> spans;
    for (const auto& [start, end] : plan.unknowns) {
      int sentence = -1;
      for (const auto& s : p.sentences) {
        if (s.span.contains(start)) sentence = s.index;
      }
      if (sentence < 0) throw Error("synthetic unknown outside every sentence");
      spans.push_back({sentence, start, end, ""});
    }
    std::sort(spans.begin(), spans.end(),
              [](const auto& x, const auto& y) { return x.char_start < y.char_start; });
    data.annotations.emplace(p.id, make_annotation(p, std::move(spans), false, 1));
  }
  return data;
}

void write_dump_xml(const std::vector<RawPost>& posts, std::ostream& out) {
  out << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n";
  for (const auto& p : posts) {
    out << "  <row Id=\"" << xml_escape(p.post_id) << "\" PostTypeId=\""
        << (p.type == PostType::question ? 1 : 2) << '"';
    if (p.accepted_answer_id) out << " AcceptedAnswerId=\"" << xml_escape(*p.accepted_answer_id) << '"';
    if (p.parent_id) out << " ParentId=\"" << xml_escape(*p.parent_id) << '"';
    out << " Body=\"" << xml_escape(p.body) << '"';
    if (!p.tags.empty()) {
      std::string tags;
      for (const auto& t : p.tags) tags += "<" + t + ">";
      out << " Tags=\"" << xml_escape(tags) << '"';
    }
    out << " />\n";
  }
  out << "</posts>\n";
}

}  // namespace punk
