#include "riskbn/pipeline/cohort.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "riskbn/error.hpp"
#include "riskbn/pipeline/csv.hpp"
#include "riskbn/synth/random.hpp"

namespace riskbn {

Index CohortTable::column_index(std::string_view factor) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == factor) return static_cast<Index>(i);
  }
  return -1;
}

Evidence CohortTable::evidence(const PatientFeatures& row) const {
  Evidence ev;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (row.values[i] != kMissing) ev[columns[i].name] = columns[i].states[static_cast<std::size_t>(row.values[i])];
  }
  return ev;
}

Index CohortTable::positives() const {
  return std::count_if(rows.begin(), rows.end(), [](const PatientFeatures& r) { return r.label == 1; });
}

std::vector<Variable> cohort_schema(const KnowledgeModel& model) {
  std::vector<Variable> out;
  for (const RiskFactor* f : factors_of(model)) out.push_back({f->name, f->states});
  return out;
}

CohortTable empty_cohort(const KnowledgeModel& model) { return CohortTable{cohort_schema(model), {}}; }

std::string write_cohort_csv(const CohortTable& cohort) {
  std::vector<std::string> header{"patient_id"};
  for (const auto& c : cohort.columns) header.push_back(c.name);
  header.push_back("label");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : cohort.rows) {
    std::vector<std::string> out{r.patient_id};
    for (std::size_t i = 0; i < cohort.columns.size(); ++i) {
      out.push_back(r.values[i] == kMissing ? "" : cohort.columns[i].states[static_cast<std::size_t>(r.values[i])]);
    }
    out.push_back(std::to_string(r.label));
    rows.push_back(std::move(out));
  }
  return write_csv(header, rows);
}

CohortTable read_cohort_csv(std::string_view text, const KnowledgeModel& model) {
  const auto csv = parse_csv(text);
  CohortTable cohort = empty_cohort(model);
  std::vector<std::string> problems;

  const auto id_col = csv.column("patient_id");
  const auto label_col = csv.column("label");
  std::vector<std::size_t> source(cohort.columns.size());
  std::set<std::string> expected;
  for (std::size_t i = 0; i < cohort.columns.size(); ++i) {
    expected.insert(cohort.columns[i].name);
    try {
      source[i] = csv.column(cohort.columns[i].name);
    } catch (const ParseError&) {
      problems.push_back("cohort: model factor '" + cohort.columns[i].name + "' has no column");
    }
  }
  for (const auto& h : csv.header) {
    if (h != "patient_id" && h != "label" && !expected.count(h)) {
      problems.push_back("cohort: column '" + h + "' is not a model factor");
    }
  }
  if (!problems.empty()) throw ValidationError(problems);

  std::set<std::string> ids;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    PatientFeatures p;
    p.patient_id = row[id_col];
    if (!ids.insert(p.patient_id).second) problems.push_back("cohort: duplicate patient '" + p.patient_id + "'");
    if (row[label_col] == "0" || row[label_col] == "1") {
      p.label = row[label_col] == "1";
    } else {
      problems.push_back("cohort: row " + std::to_string(r) + " label must be 0 or 1");
    }
    for (std::size_t i = 0; i < cohort.columns.size(); ++i) {
      const auto& cell = row[source[i]];
      if (cell.empty()) {
        p.values.push_back(kMissing);
        continue;
      }
      const Index s = cohort.columns[i].state_index(cell);
      if (s < 0) {
        problems.push_back("cohort: row " + std::to_string(r) + " '" + cohort.columns[i].name +
                           "' has invalid state '" + cell + "'");
      }
      p.values.push_back(s < 0 ? kMissing : s);
    }
    cohort.rows.push_back(std::move(p));
  }
  if (!problems.empty()) throw ValidationError(problems);
  return cohort;
}

CohortSelection select_cohort(std::span<const VisitRecord> visits,
                              const std::vector<std::string>& target_prefixes, std::uint64_t seed) {
  struct History {
    std::set<Date> dates;
    std::optional<Date> first_target;
  };
  std::map<std::string, History> by_patient;
  for (const auto& v : visits) {
    auto& h = by_patient[v.patient_id];
    h.dates.insert(v.date);
    const bool target = std::any_of(v.icd_codes.begin(), v.icd_codes.end(),
                                    [&](const std::string& c) { return matches_prefix(c, target_prefixes); });
    if (target && (!h.first_target || v.date < *h.first_target)) h.first_target = v.date;
  }

  CohortSelection sel;
  std::vector<std::string> negatives;
  for (const auto& [id, h] : by_patient) {
    if (h.dates.size() < 3) continue;
    if (h.first_target) {
      const auto before = std::distance(h.dates.begin(), h.dates.lower_bound(*h.first_target));
      if (before >= 2) {
        sel.positives.push_back(id);
        sel.cutoffs[id] = *h.first_target;
      }
    } else {
      negatives.push_back(id);
    }
  }
  if (sel.positives.empty()) throw DataError("no_eligible_positives", "no eligible positives");
  if (negatives.empty()) throw DataError("no_eligible_negatives", "no eligible negatives");

  // Undersample whichever class is larger.
  Rng rng(seed);
  auto undersample = [&](std::vector<std::string>& ids, std::size_t keep) {
    if (ids.size() <= keep) return;
    rng.shuffle(ids);
    ids.resize(keep);
    std::sort(ids.begin(), ids.end());
  };
  const std::size_t target_count = std::min(sel.positives.size(), negatives.size());
  undersample(negatives, target_count);
  if (sel.positives.size() > target_count) {
    undersample(sel.positives, target_count);
    std::map<std::string, Date> kept;
    for (const auto& id : sel.positives) kept.emplace(id, sel.cutoffs.at(id));
    sel.cutoffs = std::move(kept);
  }
  sel.negatives = std::move(negatives);
  return sel;
}

PatientFeatures extract_features(const CohortTable& schema, const PatientRecord& patient,
                                 std::span<const VisitRecord> visits,
                                 std::span<const MeasurementRecord> measurements,
                                 std::span<const EcgRecord> ecg, std::optional<Date> cutoff,
                                 const FeatureConfig& config) {
  std::map<std::string, std::optional<std::string>> values;
  const auto demo = demographic_features(patient.age_years, patient.race, patient.sex);
  values["age_group"] = demo.age_group;
  values["race"] = demo.race;
  values["sex"] = demo.sex;
  values["bmi_class"] = bmi_class(measurements, cutoff, config);
  values["height_group"] = height_group(measurements, demo.sex, cutoff, config);
  const auto e = ecg_features(ecg, cutoff);
  values["prolonged_pr"] = e ? std::optional(e->prolonged_pr) : std::nullopt;
  values["pr_variation"] = e ? std::optional(e->pr_variation) : std::nullopt;
  values["pwave_duration"] = e ? std::optional(e->pwave_duration) : std::nullopt;
  for (auto& [name, state] : comorbidity_flags(visits, cutoff, config)) values[name] = state;

  PatientFeatures row;
  row.patient_id = patient.patient_id;
  for (const auto& column : schema.columns) {
    auto it = values.find(column.name);
    if (it == values.end()) {
      throw ConfigurationError("pipeline does not produce model factor '" + column.name + "'");
    }
    if (!it->second) {
      row.values.push_back(kMissing);
      continue;
    }
    const Index s = column.state_index(*it->second);
    if (s < 0) {
      throw ConfigurationError("pipeline state '" + *it->second + "' is not a state of '" + column.name + "'");
    }
    row.values.push_back(s);
  }
  if (values.size() != schema.columns.size()) {
    throw ConfigurationError("knowledge model lacks factors the pipeline produces");
  }
  return row;
}

CohortTable build_cohort(const RawTables& raw, const KnowledgeModel& model, const FeatureConfig& config,
                         std::uint64_t seed) {
  const auto selection = select_cohort(raw.visits, config.target_prefixes, seed);

  std::unordered_map<std::string, const PatientRecord*> patients;
  for (const auto& p : raw.patients) patients[p.patient_id] = &p;
  std::unordered_map<std::string, std::vector<VisitRecord>> visits;
  std::unordered_map<std::string, std::vector<MeasurementRecord>> measurements;
  std::unordered_map<std::string, std::vector<EcgRecord>> ecg;
  for (const auto& v : raw.visits) visits[v.patient_id].push_back(v);
  for (const auto& m : raw.measurements) measurements[m.patient_id].push_back(m);
  for (const auto& e : raw.ecg) ecg[e.patient_id].push_back(e);

  CohortTable cohort = empty_cohort(model);
  auto add = [&](const std::string& id, int label, std::optional<Date> cutoff) {
    auto it = patients.find(id);
    if (it == patients.end()) throw DataError("missing_patient", "patients.csv has no row for '" + id + "'");
    auto row = extract_features(cohort, *it->second, visits[id], measurements[id], ecg[id], cutoff, config);
    row.label = label;
    cohort.rows.push_back(std::move(row));
  };
  for (const auto& id : selection.positives) add(id, 1, selection.cutoffs.at(id));
  for (const auto& id : selection.negatives) add(id, 0, std::nullopt);
  std::sort(cohort.rows.begin(), cohort.rows.end(),
            [](const PatientFeatures& a, const PatientFeatures& b) { return a.patient_id < b.patient_id; });
  return cohort;
}

}  // namespace riskbn
