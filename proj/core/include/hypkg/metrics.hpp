#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypkg/matrix.hpp"

namespace hypkg {

struct ScoredLabels {
  std::vector<double> scores;
  std::vector<int> labels;  // 0/1
};

// Mann-Whitney AUROC: fraction of (positive, negative) pairs where the
// positive outscores the negative, ties counted 0.5. Throws when the labels
// are single-class.
double auroc(const ScoredLabels& sl);

// Mean precision at each positive's rank, scores descending with ties broken
// by original index. Throws when there is no positive.
double average_precision(const ScoredLabels& sl);

struct ThresholdMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

// Thresholded confusion-matrix metrics; precision/recall/f1 fall back to 0
// when their denominator is 0.
ThresholdMetrics f1_and_accuracy(const ScoredLabels& sl,
                                 double threshold = 0.5);

// Unweighted mean over the valid entries; throws when none are valid.
double macro_average(const std::vector<std::optional<double>>& per_task);

struct TaskMetrics {
  std::optional<double> auroc;  // absent for single-class tasks
  std::optional<double> aucpr;  // absent when the task has no positive
  double f1 = 0.0;
  double accuracy = 0.0;
};

struct MetricReport {
  double accuracy = 0.0;
  double auroc = 0.0;
  double aucpr = 0.0;
  double macro_f1 = 0.0;
  std::vector<TaskMetrics> per_task;
  int skipped_tasks = 0;  // single-class tasks excluded from the macro means

  std::string to_json() const;
};

// Macro-averaged report over the task columns. Binary problems (one task)
// report macro-F1 as the mean of positive- and negative-class F1.
MetricReport evaluate_multilabel(const Matrix& scores, const Matrix& labels,
                                 double threshold = 0.5);

// Macro AUROC alone (the model-selection signal); absent when every task is
// single-class.
std::optional<double> macro_auroc(const Matrix& scores, const Matrix& labels);

}  // namespace hypkg
