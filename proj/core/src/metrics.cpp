#include "punk/metrics.hpp"

#include "punk/error.hpp"

namespace punk {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double mean_f1(const std::vector<ClassScore>& classes) {
  if (classes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : classes) sum += c.f1;
  return sum / static_cast<double>(classes.size());
}

void check_lengths(std::size_t gold, std::size_t pred) {
  if (gold != pred) {
    throw ValidationError("gold has " + std::to_string(gold) + " labels, predictions " +
                          std::to_string(pred));
  }
}

}  // namespace

ClassScore score_class(std::string name, std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassScore c;
  c.name = std::move(name);
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  c.support = tp + fn;
  c.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  c.recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  c.f1 = ratio(2.0 * c.precision * c.recall, c.precision + c.recall);
  return c;
}

F1Result binary_f1(const std::vector<int>& gold, const std::vector<int>& pred) {
  check_lengths(gold.size(), pred.size());
  std::size_t n[2][2] = {{0, 0}, {0, 0}};  // [gold][pred]
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if ((gold[i] != 0 && gold[i] != 1) || (pred[i] != 0 && pred[i] != 1)) {
      throw ValidationError("binary labels must be 0 or 1");
    }
    ++n[gold[i]][pred[i]];
  }
  F1Result r;
  r.classes.push_back(score_class("0", n[0][0], n[1][0], n[0][1]));
  r.classes.push_back(score_class("1", n[1][1], n[0][1], n[1][0]));
  r.macro_f1 = mean_f1(r.classes);
  return r;
}

F1Result multilabel_f1(const std::vector<std::set<std::string>>& gold,
                       const std::vector<std::set<std::string>>& pred,
                       const std::vector<std::string>& classes) {
  check_lengths(gold.size(), pred.size());
  F1Result r;
  for (const auto& c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = gold[i].count(c) > 0;
      const bool p = pred[i].count(c) > 0;
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
    }
    r.classes.push_back(score_class(c, tp, fp, fn));
  }
  r.macro_f1 = mean_f1(r.classes);
  return r;
}

F1Result multiclass_f1(const std::vector<std::string>& gold,
                       const std::vector<std::string>& pred,
                       const std::vector<std::string>& classes) {
  check_lengths(gold.size(), pred.size());
  std::vector<std::set<std::string>> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    g.push_back({gold[i]});
    p.push_back({pred[i]});
  }
  return multilabel_f1(g, p, classes);
}

}  // namespace punk
