#pragma once

#include <chrono>
#include <filesystem>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lhspline {

enum class Quality { Ok, Missing, Flagged };

/// Unit of the raw precipitation column. GHCN-Daily stores tenths of mm;
/// many US station exports use hundredths of an inch.
enum class PrecipUnit { TenthsMm, HundredthsInch, Mm };

PrecipUnit parse_unit(std::string_view code);
std::string_view unit_code(PrecipUnit unit);
double to_mm(double raw, PrecipUnit unit);

struct DailyRecord {
  std::chrono::year_month_day date;
  double amount_mm = 0.0;  // meaningful only when quality == Ok
  Quality quality = Quality::Ok;
};

struct IngestConfig {
  std::string station_id;
  std::string date_column = "DATE";
  std::string value_column = "PRCP";
  // Optional. GHCN attribute strings ("M,Q,S,T") are reduced to their
  // quality field; any non-blank quality code marks the record as flagged.
  std::string flag_column;
  std::string date_format = "%Y-%m-%d";
  PrecipUnit unit = PrecipUnit::Mm;
  std::vector<std::string> missing_tokens{"", "NA", "NaN", "-9999", "M"};
  double censor_bound = 0.0;
};

/// Reads `key = value` lines ('#' starts a comment). Recognized keys:
/// station_id, date_column, value_column, flag_column, date_format, unit,
/// missing, censor_bound.
IngestConfig load_ingest_config(const std::filesystem::path& path);
IngestConfig parse_ingest_config(std::string_view text);

/// Daily precipitation in mm/day, sorted by date.
struct PrecipSeries {
  std::string station_id;
  std::vector<DailyRecord> records;
  double wet_fraction = 0.0;  // wet ok-days / ok-days
  double censor_bound = 0.0;  // mm/day, 0 = none

  std::size_t ok_count() const;
};

PrecipSeries parse_daily_csv(const std::filesystem::path& path, const IngestConfig& config);
PrecipSeries parse_daily_csv_text(std::string_view text, const IngestConfig& config,
                                  std::string_view source_name = "<memory>");

/// Analysis subsample: ok-quality amounts strictly above max(0, bound), in
/// date order.
struct WetSample {
  std::vector<std::chrono::year_month_day> dates;
  std::vector<double> amounts;
  double support_low = 0.0;
};

WetSample wet_subsample(const PrecipSeries& series, double censor_bound);

/// Serializes a subsample as "date,amount" CSV in mm with 17 significant
/// digits; reading it back with unit mm reproduces the same text.
std::string serialize_subsample(const WetSample& sample);

/// Calendar-year maxima over ok-quality days, dropping years whose missing
/// (absent or non-ok) days exceed `max_missing_fraction` of the year.
struct AnnualMaxima {
  std::vector<int> years;
  std::vector<double> maxima;
};
AnnualMaxima annual_maxima(const PrecipSeries& series, double max_missing_fraction = 0.1);

std::string format_date(const std::chrono::year_month_day& date);
/// Parses one date with a strftime-style format; nullopt if invalid.
std::optional<std::chrono::year_month_day> parse_date(std::string_view text,
                                                      const std::string& format = "%Y-%m-%d");

}  // namespace lhspline
