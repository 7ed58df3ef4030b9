#include "riskbn/eval/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "riskbn/bn/inference.hpp"
#include "riskbn/error.hpp"
#include "riskbn/synth/random.hpp"

namespace riskbn {

namespace {

CohortTable subset(const CohortTable& cohort, const std::vector<char>& in_train, bool train) {
  CohortTable out{cohort.columns, {}};
  for (std::size_t i = 0; i < cohort.rows.size(); ++i) {
    if (static_cast<bool>(in_train[i]) == train) out.rows.push_back(cohort.rows[i]);
  }
  return out;
}

std::size_t train_count(std::size_t n, double fraction) {
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

}  // namespace

CohortSplit split(const CohortTable& cohort, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ValidationError({"train_fraction must lie in (0, 1)"});
  }
  const std::size_t n = cohort.rows.size();
  if (n < 10) throw DataError("too_few_rows", "split needs at least 10 rows, got " + std::to_string(n));

  Rng rng(spec.seed);
  std::vector<char> in_train(n, 0);
  auto assign = [&](std::vector<std::size_t> members) {
    rng.shuffle(members);
    const std::size_t k = train_count(members.size(), spec.train_fraction);
    for (std::size_t i = 0; i < k; ++i) in_train[members[i]] = 1;
  };
  if (spec.stratified) {
    std::vector<std::size_t> by_label[2];
    for (std::size_t i = 0; i < n; ++i) by_label[cohort.rows[i].label].push_back(i);
    for (const auto& members : by_label) {
      if (members.size() < 2) {
        throw DataError("too_few_rows", "stratified split needs at least 2 rows per class");
      }
    }
    assign(by_label[0]);
    assign(by_label[1]);
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    assign(std::move(all));
  }
  return {subset(cohort, in_train, true), subset(cohort, in_train, false)};
}

double predict(const BuiltModel& built, const Evidence& evidence) {
  return posterior(built.net, evidence, built.provenance.target).probability(built.provenance.positive_state);
}

double predict(const BuiltModel& built, const CohortTable& cohort, const PatientFeatures& row) {
  Evidence evidence;
  for (const auto& [factor, state] : cohort.evidence(row)) {
    if (built.net.contains(factor)) evidence.emplace(factor, state);
  }
  return predict(built, evidence);
}

MetricsReport metrics_from_confusion(const Confusion& c) {
  MetricsReport m;
  m.confusion = c;
  m.n_test = c.total();
  const auto d = [](Index x) { return static_cast<double>(x); };
  m.accuracy = m.n_test > 0 ? d(c.tp + c.tn) / d(m.n_test) : 0.0;
  m.recall = c.tp + c.fn > 0 ? d(c.tp) / d(c.tp + c.fn) : 0.0;
  m.precision_undefined = c.tp + c.fp == 0;
  m.precision = m.precision_undefined ? 0.0 : d(c.tp) / d(c.tp + c.fp);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their average.
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum += avg, positives += 1.0;
    }
    i = j;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) throw DataError("auc_undefined", "AUC needs both labels");
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

Evaluation evaluate(const BuiltModel& built, const CohortTable& test) {
  if (test.rows.empty()) throw DataError("empty_test_set", "evaluation needs a nonempty test set");
  Evaluation out;
  Confusion c;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& row : test.rows) {
    const double p = predict(built, test, row);
    out.predictions.push_back({row.patient_id, p, row.label});
    scores.push_back(p);
    labels.push_back(row.label);
    const bool yes = classify(p);
    if (yes && row.label == 1) ++c.tp;
    if (yes && row.label == 0) ++c.fp;
    if (!yes && row.label == 0) ++c.tn;
    if (!yes && row.label == 1) ++c.fn;
  }
  out.metrics = metrics_from_confusion(c);
  out.metrics.auc = auc(scores, labels);
  return out;
}

Json metrics_to_json(const MetricsReport& m) {
  return {{"accuracy", m.accuracy},
          {"recall", m.recall},
          {"precision", m.precision},
          {"precision_undefined", m.precision_undefined},
          {"f1", m.f1},
          {"auc", m.auc},
          {"n_test", m.n_test},
          {"confusion", {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"tn", m.confusion.tn}, {"fn", m.confusion.fn}}}};
}

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t width = 5;
  for (const auto& [name, _] : rows) width = std::max(width, name.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %9s  %5s\n", static_cast<int>(width), "Model", "Accuracy",
                "Recall", "Precision", "F1 score", "AUC");
  out += buf;
  for (const auto& [name, m] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.2f%%  %8.2f%%  %8.2f%%  %8.2f%%  %5.2f\n", static_cast<int>(width),
                  name.c_str(), 100.0 * m.accuracy, 100.0 * m.recall, 100.0 * m.precision, 100.0 * m.f1, m.auc);
    out += buf;
  }
  return out;
}

}  // namespace riskbn
