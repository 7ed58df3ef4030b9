#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "riskbn/builder/build.hpp"
#include "riskbn/pipeline/cohort.hpp"

namespace riskbn {

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct CohortSplit {
  CohortTable train;
  CohortTable test;
};

// Disjoint, exhaustive and deterministic per seed; rows keep cohort order.
// Throws DataError ("too_few_rows") below 10 rows or, when stratified, below
// 2 rows in either class.
CohortSplit split(const CohortTable& cohort, const SplitSpec& spec);

inline constexpr double kDecisionThreshold = 0.5;

// P(positive target state | non-missing factor values).
double predict(const BuiltModel& built, const Evidence& evidence);
double predict(const BuiltModel& built, const CohortTable& cohort, const PatientFeatures& row);
// Boundary inclusive.
inline bool classify(double p) { return p >= kDecisionThreshold; }

struct Confusion {
  Index tp = 0;
  Index fp = 0;
  Index tn = 0;
  Index fn = 0;

  Index total() const { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct MetricsReport {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  Confusion confusion;
  Index n_test = 0;
  // No positive predictions; precision reported as 0.
  bool precision_undefined = false;
};

// Accuracy, recall, precision and F1 from the counts; auc left at 0.
MetricsReport metrics_from_confusion(const Confusion& c);

// Mann-Whitney statistic with average ranks for ties. Throws DataError
// ("auc_undefined") unless both labels occur.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct Prediction {
  std::string patient_id;
  double p_present = 0.0;
  int label = 0;
};

struct Evaluation {
  MetricsReport metrics;
  std::vector<Prediction> predictions;  // test-row order
};

Evaluation evaluate(const BuiltModel& built, const CohortTable& test);

Json metrics_to_json(const MetricsReport& m);
// One row per model: Accuracy, Recall, Precision, F1 score (percent), AUC.
std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace riskbn
