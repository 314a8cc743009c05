#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

namespace punk {

struct ClassScore {
  std::string name;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold positives
};

struct F1Result {
  std::vector<ClassScore> classes;
  double macro_f1 = 0.0;
};

// Precision, recall and F1 from confusion counts; every 0/0 ratio is 0.
ClassScore score_class(std::string name, std::size_t tp, std::size_t fp, std::size_t fn);

// Binary labels, averaged over both classes "0" and "1".
F1Result binary_f1(const std::vector<int>& gold, const std::vector<int>& pred);

// Multi-label indicator form over an explicit class list.
F1Result multilabel_f1(const std::vector<std::set<std::string>>& gold,
                       const std::vector<std::set<std::string>>& pred,
                       const std::vector<std::string>& classes);

// Single-label multi-class over an explicit class list.
F1Result multiclass_f1(const std::vector<std::string>& gold,
                       const std::vector<std::string>& pred,
                       const std::vector<std::string>& classes);

inline double macro_f1(const std::vector<int>& gold, const std::vector<int>& pred) {
  return binary_f1(gold, pred).macro_f1;
}

}  // namespace punk
