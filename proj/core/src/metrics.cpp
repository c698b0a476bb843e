#include "hypkg/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hypkg {

namespace {

void check_scored_labels(const ScoredLabels& sl) {
  if (sl.scores.empty() || sl.scores.size() != sl.labels.size()) {
    throw std::invalid_argument("scores and labels must be non-empty and equal-length");
  }
}

}  // namespace

double auroc(const ScoredLabels& sl) {
  check_scored_labels(sl);
  const std::size_t n = sl.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sl.scores[a] < sl.scores[b];
  });

  // Walk groups of equal score; within a group every (pos, neg) pair ties.
  double wins = 0.0;
  double ties = 0.0;
  double neg_below = 0.0;
  double n_pos = 0.0, n_neg = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double group_pos = 0.0, group_neg = 0.0;
    while (j < n && sl.scores[order[j]] == sl.scores[order[i]]) {
      if (sl.labels[order[j]] == 1) group_pos += 1.0; else group_neg += 1.0;
      ++j;
    }
    wins += group_pos * neg_below;
    ties += group_pos * group_neg;
    neg_below += group_neg;
    n_pos += group_pos;
    n_neg += group_neg;
    i = j;
  }
  if (n_pos == 0.0 || n_neg == 0.0) {
    throw std::invalid_argument("auroc undefined for single-class labels");
  }
  return (wins + 0.5 * ties) / (n_pos * n_neg);
}

double average_precision(const ScoredLabels& sl) {
  check_scored_labels(sl);
  const std::size_t n = sl.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sl.scores[a] > sl.scores[b];
  });

  double positives_seen = 0.0;
  double sum_precision = 0.0;
  for (std::size_t rank = 1; rank <= n; ++rank) {
    if (sl.labels[order[rank - 1]] == 1) {
      positives_seen += 1.0;
      sum_precision += positives_seen / static_cast<double>(rank);
    }
  }
  if (positives_seen == 0.0) {
    throw std::invalid_argument("average_precision undefined without positives");
  }
  return sum_precision / positives_seen;
}

ThresholdMetrics f1_and_accuracy(const ScoredLabels& sl, double threshold) {
  check_scored_labels(sl);
  double tp = 0.0, fp = 0.0, fn = 0.0, tn = 0.0;
  for (std::size_t i = 0; i < sl.scores.size(); ++i) {
    const bool pred = sl.scores[i] >= threshold;
    const bool truth = sl.labels[i] == 1;
    if (pred && truth) tp += 1.0;
    else if (pred && !truth) fp += 1.0;
    else if (!pred && truth) fn += 1.0;
    else tn += 1.0;
  }
  ThresholdMetrics out;
  out.precision = (tp + fp) > 0.0 ? tp / (tp + fp) : 0.0;
  out.recall = (tp + fn) > 0.0 ? tp / (tp + fn) : 0.0;
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  out.accuracy = (tp + tn) / static_cast<double>(sl.scores.size());
  return out;
}

double macro_average(const std::vector<std::optional<double>>& per_task) {
  double sum = 0.0;
  int valid = 0;
  for (const auto& value : per_task) {
    if (value) {
      sum += *value;
      ++valid;
    }
  }
  if (valid == 0) {
    throw std::invalid_argument("macro_average: no valid tasks");
  }
  return sum / static_cast<double>(valid);
}

namespace {

ScoredLabels task_column(const Matrix& scores, const Matrix& labels, int task) {
  ScoredLabels sl;
  sl.scores.reserve(static_cast<std::size_t>(scores.rows()));
  sl.labels.reserve(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    sl.scores.push_back(scores(i, task));
    sl.labels.push_back(labels(i, task) >= 0.5 ? 1 : 0);
  }
  return sl;
}

bool single_class(const ScoredLabels& sl) {
  bool has_pos = false, has_neg = false;
  for (int y : sl.labels) {
    if (y == 1) has_pos = true; else has_neg = true;
  }
  return !(has_pos && has_neg);
}

// F1 of the negative class, using the same predictions as the positive class.
double negative_class_f1(const ScoredLabels& sl, double threshold) {
  double tn = 0.0, fn = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < sl.scores.size(); ++i) {
    const bool pred = sl.scores[i] >= threshold;
    const bool truth = sl.labels[i] == 1;
    if (!pred && !truth) tn += 1.0;
    else if (!pred && truth) fn += 1.0;
    else if (pred && !truth) fp += 1.0;
  }
  const double precision = (tn + fn) > 0.0 ? tn / (tn + fn) : 0.0;
  const double recall = (tn + fp) > 0.0 ? tn / (tn + fp) : 0.0;
  return (precision + recall) > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
}

}  // namespace

MetricReport evaluate_multilabel(const Matrix& scores, const Matrix& labels,
                                 double threshold) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols() ||
      scores.rows() == 0 || scores.cols() == 0) {
    throw std::invalid_argument("evaluate_multilabel: shape mismatch");
  }
  const int tasks = static_cast<int>(scores.cols());

  MetricReport report;
  std::vector<std::optional<double>> aurocs, aucprs;
  std::vector<std::optional<double>> accuracies, f1s;
  for (int task = 0; task < tasks; ++task) {
    const ScoredLabels sl = task_column(scores, labels, task);
    TaskMetrics tm;
    const bool skip = single_class(sl);
    if (skip) {
      report.skipped_tasks += 1;
    } else {
      tm.auroc = auroc(sl);
      tm.aucpr = average_precision(sl);
    }
    const ThresholdMetrics thr = f1_and_accuracy(sl, threshold);
    tm.f1 = thr.f1;
    tm.accuracy = thr.accuracy;
    if (tasks == 1) {
      // Binary problem: macro-F1 averages the positive- and negative-class F1.
      tm.f1 = 0.5 * (thr.f1 + negative_class_f1(sl, threshold));
    }
    aurocs.push_back(tm.auroc);
    aucprs.push_back(tm.aucpr);
    accuracies.push_back(tm.accuracy);
    f1s.push_back(tm.f1);
    report.per_task.push_back(tm);
  }

  report.accuracy = macro_average(accuracies);
  report.auroc = macro_average(aurocs);
  report.aucpr = macro_average(aucprs);
  report.macro_f1 = macro_average(f1s);
  return report;
}

std::optional<double> macro_auroc(const Matrix& scores, const Matrix& labels) {
  std::vector<std::optional<double>> values;
  for (int task = 0; task < static_cast<int>(scores.cols()); ++task) {
    const ScoredLabels sl = task_column(scores, labels, task);
    if (single_class(sl)) {
      values.push_back(std::nullopt);
    } else {
      values.push_back(auroc(sl));
    }
  }
  try {
    return macro_average(values);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["accuracy"] = accuracy;
  j["auroc"] = auroc;
  j["aucpr"] = aucpr;
  j["macro_f1"] = macro_f1;
  j["skipped_tasks"] = skipped_tasks;
  nlohmann::json per = nlohmann::json::array();
  for (const TaskMetrics& tm : per_task) {
    nlohmann::json t;
    if (tm.auroc) t["auroc"] = *tm.auroc; else t["auroc"] = nullptr;
    if (tm.aucpr) t["aucpr"] = *tm.aucpr; else t["aucpr"] = nullptr;
    t["f1"] = tm.f1;
    t["accuracy"] = tm.accuracy;
    per.push_back(std::move(t));
  }
  j["per_task"] = std::move(per);
  return j.dump(2) + "\n";
}

}  // namespace hypkg
