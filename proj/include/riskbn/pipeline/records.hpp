#pragma once

#include <chrono>
#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace riskbn {

// Calendar date, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}

  // Strict YYYY-MM-DD; throws ParseError otherwise.
  static Date parse(std::string_view iso);
  std::string to_string() const;
  Date plus_days(int n) const { return Date(days_ + std::chrono::days(n)); }

  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

struct VisitRecord {
  std::string patient_id;
  Date date;
  std::vector<std::string> icd_codes;  // normalized: upper case, no dots
};

enum class MeasurementKind { bmi, height_cm };

struct MeasurementRecord {
  std::string patient_id;
  Date date;
  MeasurementKind kind;
  double value;
};

struct EcgRecord {
  std::string patient_id;
  Date date;
  double pr_ms;
  double pwave_ms;
};

struct PatientRecord {
  std::string patient_id;
  int age_years;
  std::string race;
  std::string sex;
};

struct RawTables {
  std::vector<VisitRecord> visits;
  std::vector<MeasurementRecord> measurements;
  std::vector<EcgRecord> ecg;
  std::vector<PatientRecord> patients;
};

std::string normalize_icd(std::string_view code);

// visits.csv: patient_id, visit_date, icd_codes (semicolon separated)
std::vector<VisitRecord> parse_visits(std::string_view csv);
// measurements.csv: patient_id, date, kind (bmi | height_cm), value
std::vector<MeasurementRecord> parse_measurements(std::string_view csv);
// ecg.csv: patient_id, date, pr_ms, pwave_ms
std::vector<EcgRecord> parse_ecg(std::string_view csv);
// patients.csv: patient_id, age_years, race, sex
std::vector<PatientRecord> parse_patients(std::string_view csv);

std::string write_visits(const std::vector<VisitRecord>& rows);
std::string write_measurements(const std::vector<MeasurementRecord>& rows);
std::string write_ecg(const std::vector<EcgRecord>& rows);
std::string write_patients(const std::vector<PatientRecord>& rows);

// Reads/writes visits.csv, measurements.csv, ecg.csv and patients.csv.
RawTables load_raw_dir(const std::filesystem::path& dir);
void write_raw_dir(const std::filesystem::path& dir, const RawTables& raw);

// Shortest decimal form that round-trips the double.
std::string format_number(double value);

}  // namespace riskbn
