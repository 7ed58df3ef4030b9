#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "riskbn/bn/network.hpp"
#include "riskbn/knowledge/model.hpp"
#include "riskbn/pipeline/features.hpp"
#include "riskbn/pipeline/records.hpp"

namespace riskbn {

inline constexpr Index kMissing = -1;

struct PatientFeatures {
  std::string patient_id;
  std::vector<Index> values;  // state index per column, kMissing when absent
  int label = 0;

  friend bool operator==(const PatientFeatures&, const PatientFeatures&) = default;
};

// One row per patient; columns follow the knowledge model's factor order.
struct CohortTable {
  std::vector<Variable> columns;
  std::vector<PatientFeatures> rows;

  // -1 when absent.
  Index column_index(std::string_view factor) const;
  // Non-missing values as hard evidence.
  Evidence evidence(const PatientFeatures& row) const;
  Index positives() const;

  friend bool operator==(const CohortTable&, const CohortTable&) = default;
};

std::vector<Variable> cohort_schema(const KnowledgeModel& model);
CohortTable empty_cohort(const KnowledgeModel& model);

// Header: patient_id, one column per factor (empty cell = missing), label.
std::string write_cohort_csv(const CohortTable& cohort);
// Throws ValidationError when the header does not match the model's factor
// set exactly or a value is not a valid state.
CohortTable read_cohort_csv(std::string_view csv, const KnowledgeModel& model);

struct CohortSelection {
  std::vector<std::string> positives;  // sorted
  std::vector<std::string> negatives;  // sorted, after undersampling
  std::map<std::string, Date> cutoffs;  // positives only; exclusive
};

// Patient selection with majority-class undersampling. Throws DataError
// ("no_eligible_positives" or "no_eligible_negatives") when a class is empty.
CohortSelection select_cohort(std::span<const VisitRecord> visits,
                              const std::vector<std::string>& target_prefixes, std::uint64_t seed);

// Features for one patient; records may include other patients' rows only
// if pre-filtered by the caller.
PatientFeatures extract_features(const CohortTable& schema, const PatientRecord& patient,
                                 std::span<const VisitRecord> visits,
                                 std::span<const MeasurementRecord> measurements,
                                 std::span<const EcgRecord> ecg, std::optional<Date> cutoff,
                                 const FeatureConfig& config);

CohortTable build_cohort(const RawTables& raw, const KnowledgeModel& model, const FeatureConfig& config,
                         std::uint64_t seed);

}  // namespace riskbn
