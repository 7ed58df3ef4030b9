#include "riskbn/pipeline/records.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "riskbn/bn/serialize.hpp"
#include "riskbn/error.hpp"
#include "riskbn/pipeline/csv.hpp"

namespace riskbn {
namespace {

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError("invalid " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

double parse_positive(std::string_view s, std::string_view what) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("invalid " + std::string(what) + " '" + std::string(s) + "'");
  }
  if (!(v > 0.0)) throw ParseError(std::string(what) + " must be > 0, got '" + std::string(s) + "'");
  return v;
}

}  // namespace

Date Date::parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
    throw ParseError("invalid date '" + std::string(iso) + "'");
  }
  const auto ymd = std::chrono::year_month_day{std::chrono::year{parse_int(iso.substr(0, 4), "year")},
                                               std::chrono::month{static_cast<unsigned>(parse_int(iso.substr(5, 2), "month"))},
                                               std::chrono::day{static_cast<unsigned>(parse_int(iso.substr(8, 2), "day"))}};
  if (!ymd.ok()) throw ParseError("invalid date '" + std::string(iso) + "'");
  return Date(std::chrono::sys_days{ymd});
}

std::string Date::to_string() const {
  const std::chrono::year_month_day ymd{days_};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string normalize_icd(std::string_view code) {
  std::string out;
  for (char c : code) {
    if (c == '.' || std::isspace(static_cast<unsigned char>(c))) continue;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string format_number(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, p);
}

std::vector<VisitRecord> parse_visits(std::string_view text) {
  const auto csv = parse_csv(text);
  const auto id = csv.column("patient_id"), date = csv.column("visit_date"), codes = csv.column("icd_codes");
  std::vector<VisitRecord> out;
  for (const auto& row : csv.rows) {
    VisitRecord v{row[id], Date::parse(row[date]), {}};
    std::string_view rest = row[codes];
    while (!rest.empty()) {
      const auto pos = rest.find(';');
      auto code = normalize_icd(rest.substr(0, pos));
      if (!code.empty()) v.icd_codes.push_back(std::move(code));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<MeasurementRecord> parse_measurements(std::string_view text) {
  const auto csv = parse_csv(text);
  const auto id = csv.column("patient_id"), date = csv.column("date"), kind = csv.column("kind"),
             value = csv.column("value");
  std::vector<MeasurementRecord> out;
  for (const auto& row : csv.rows) {
    MeasurementKind k;
    if (row[kind] == "bmi") {
      k = MeasurementKind::bmi;
    } else if (row[kind] == "height_cm") {
      k = MeasurementKind::height_cm;
    } else {
      throw ParseError("invalid measurement kind '" + row[kind] + "'");
    }
    out.push_back({row[id], Date::parse(row[date]), k, parse_positive(row[value], "measurement value")});
  }
  return out;
}

std::vector<EcgRecord> parse_ecg(std::string_view text) {
  const auto csv = parse_csv(text);
  const auto id = csv.column("patient_id"), date = csv.column("date"), pr = csv.column("pr_ms"),
             pw = csv.column("pwave_ms");
  std::vector<EcgRecord> out;
  for (const auto& row : csv.rows) {
    out.push_back({row[id], Date::parse(row[date]), parse_positive(row[pr], "pr_ms"),
                   parse_positive(row[pw], "pwave_ms")});
  }
  return out;
}

std::vector<PatientRecord> parse_patients(std::string_view text) {
  const auto csv = parse_csv(text);
  const auto id = csv.column("patient_id"), age = csv.column("age_years"), race = csv.column("race"),
             sex = csv.column("sex");
  std::vector<PatientRecord> out;
  for (const auto& row : csv.rows) {
    out.push_back({row[id], parse_int(row[age], "age_years"), row[race], row[sex]});
  }
  return out;
}

std::string write_visits(const std::vector<VisitRecord>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& v : rows) {
    std::string codes;
    for (const auto& c : v.icd_codes) {
      if (!codes.empty()) codes += ';';
      codes += c;
    }
    out.push_back({v.patient_id, v.date.to_string(), codes});
  }
  return write_csv({"patient_id", "visit_date", "icd_codes"}, out);
}

std::string write_measurements(const std::vector<MeasurementRecord>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& m : rows) {
    out.push_back({m.patient_id, m.date.to_string(), m.kind == MeasurementKind::bmi ? "bmi" : "height_cm",
                   format_number(m.value)});
  }
  return write_csv({"patient_id", "date", "kind", "value"}, out);
}

std::string write_ecg(const std::vector<EcgRecord>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& e : rows) {
    out.push_back({e.patient_id, e.date.to_string(), format_number(e.pr_ms), format_number(e.pwave_ms)});
  }
  return write_csv({"patient_id", "date", "pr_ms", "pwave_ms"}, out);
}

std::string write_patients(const std::vector<PatientRecord>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& p : rows) out.push_back({p.patient_id, std::to_string(p.age_years), p.race, p.sex});
  return write_csv({"patient_id", "age_years", "race", "sex"}, out);
}

RawTables load_raw_dir(const std::filesystem::path& dir) {
  RawTables raw;
  raw.visits = parse_visits(read_text_file(dir / "visits.csv"));
  raw.measurements = parse_measurements(read_text_file(dir / "measurements.csv"));
  raw.ecg = parse_ecg(read_text_file(dir / "ecg.csv"));
  raw.patients = parse_patients(read_text_file(dir / "patients.csv"));
  return raw;
}

void write_raw_dir(const std::filesystem::path& dir, const RawTables& raw) {
  write_text_file(dir / "visits.csv", write_visits(raw.visits));
  write_text_file(dir / "measurements.csv", write_measurements(raw.measurements));
  write_text_file(dir / "ecg.csv", write_ecg(raw.ecg));
  write_text_file(dir / "patients.csv", write_patients(raw.patients));
}

}  // namespace riskbn
