#include "lhspline/ingest.hpp"

#include "lhspline/csv.hpp"
#include "lhspline/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <map>
#include <sstream>

namespace lhspline {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_double(std::string_view text, double& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_iso_date(std::string_view s, std::chrono::year_month_day& out) {
  // YYYY-MM-DD, optionally followed by a time part ("T..." or " ...")
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return false;
  int y = 0, m = 0, d = 0;
  if (std::from_chars(s.data(), s.data() + 4, y).ec != std::errc()) return false;
  if (std::from_chars(s.data() + 5, s.data() + 7, m).ec != std::errc()) return false;
  if (std::from_chars(s.data() + 8, s.data() + 10, d).ec != std::errc()) return false;
  if (s.size() > 10 && s[10] != 'T' && s[10] != ' ') return false;
  out = std::chrono::year{y} / std::chrono::month{static_cast<unsigned>(m)} /
        std::chrono::day{static_cast<unsigned>(d)};
  return out.ok();
}

bool parse_date_into(std::string_view text, const std::string& format,
                std::chrono::year_month_day& out) {
  const std::string s = trim(text);
  if (format == "%Y-%m-%d") return parse_iso_date(s, out);
  std::tm tm{};
  std::istringstream in(s);
  in >> std::get_time(&tm, format.c_str());
  if (in.fail()) return false;
  out = std::chrono::year{tm.tm_year + 1900} /
        std::chrono::month{static_cast<unsigned>(tm.tm_mon + 1)} /
        std::chrono::day{static_cast<unsigned>(tm.tm_mday)};
  return out.ok();
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         std::string_view source) {
  const auto it = std::find_if(header.begin(), header.end(),
                               [&](const std::string& h) { return trim(h) == name; });
  if (it == header.end()) {
    throw DataError(fmt::format("{}: missing column '{}'", source, name));
  }
  return static_cast<std::size_t>(it - header.begin());
}

std::string quality_code(std::string_view field) {
  // GHCN attributes are "measurement,quality,source,time"
  const std::string s = trim(field);
  if (s.find(',') == std::string::npos) return s;
  const auto parts = csv::split_record(s);
  return parts.size() > 1 ? trim(parts[1]) : std::string{};
}

}  // namespace

PrecipUnit parse_unit(std::string_view code) {
  const std::string c = trim(code);
  if (c == "tenths_mm" || c == "0.1mm") return PrecipUnit::TenthsMm;
  if (c == "hundredths_inch" || c == "0.01in") return PrecipUnit::HundredthsInch;
  if (c == "mm") return PrecipUnit::Mm;
  throw DataError(fmt::format("unknown unit code '{}' (expected tenths_mm, "
                              "hundredths_inch or mm)", c));
}

std::string_view unit_code(PrecipUnit unit) {
  switch (unit) {
    case PrecipUnit::TenthsMm: return "tenths_mm";
    case PrecipUnit::HundredthsInch: return "hundredths_inch";
    case PrecipUnit::Mm: return "mm";
  }
  return "mm";
}

double to_mm(double raw, PrecipUnit unit) {
  switch (unit) {
    case PrecipUnit::TenthsMm: return raw / 10.0;
    case PrecipUnit::HundredthsInch: return raw * 25.4 / 100.0;
    case PrecipUnit::Mm: return raw;
  }
  return raw;
}

IngestConfig parse_ingest_config(std::string_view text) {
  IngestConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(fmt::format("config line {}: expected key = value", line_no));
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "station_id") {
      config.station_id = value;
    } else if (key == "date_column") {
      config.date_column = value;
    } else if (key == "value_column") {
      config.value_column = value;
    } else if (key == "flag_column") {
      config.flag_column = value;
    } else if (key == "date_format") {
      config.date_format = value;
    } else if (key == "unit") {
      config.unit = parse_unit(value);
    } else if (key == "missing") {
      config.missing_tokens.clear();
      for (auto& token : csv::split_record(value)) config.missing_tokens.push_back(trim(token));
    } else if (key == "censor_bound") {
      if (!parse_double(value, config.censor_bound) || config.censor_bound < 0) {
        throw DataError(fmt::format("config line {}: bad censor_bound '{}'", line_no, value));
      }
    } else {
      throw DataError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
  }
  return config;
}

IngestConfig load_ingest_config(const std::filesystem::path& path) {
  return parse_ingest_config(csv::read_text(path));
}

std::size_t PrecipSeries::ok_count() const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const DailyRecord& r) { return r.quality == Quality::Ok; }));
}

PrecipSeries parse_daily_csv_text(std::string_view text, const IngestConfig& config,
                                  std::string_view source_name) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError(fmt::format("{}: empty file", source_name));
  const auto header = csv::split_record(line);
  const std::size_t date_col = column_index(header, config.date_column, source_name);
  const std::size_t value_col = column_index(header, config.value_column, source_name);
  const bool has_flag = !config.flag_column.empty();
  const std::size_t flag_col =
      has_flag ? column_index(header, config.flag_column, source_name) : 0;

  PrecipSeries series;
  series.station_id = config.station_id;
  series.censor_bound = config.censor_bound;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = csv::split_record(line);
    const std::size_t needed = std::max({date_col, value_col, has_flag ? flag_col : 0}) + 1;
    if (fields.size() < needed) {
      throw DataError(fmt::format("{}:{}: expected at least {} fields, got {}", source_name,
                                  line_no, needed, fields.size()));
    }
    DailyRecord record;
    if (!parse_date_into(fields[date_col], config.date_format, record.date)) {
      throw DataError(fmt::format("{}:{}: unparseable date '{}'", source_name, line_no,
                                  fields[date_col]));
    }
    const std::string raw = trim(fields[value_col]);
    const bool missing = std::find(config.missing_tokens.begin(), config.missing_tokens.end(),
                                   raw) != config.missing_tokens.end();
    if (missing) {
      record.quality = Quality::Missing;
    } else {
      double value = 0.0;
      if (!parse_double(raw, value) || !std::isfinite(value)) {
        throw DataError(fmt::format("{}:{}: unparseable amount '{}'", source_name, line_no, raw));
      }
      if (value < 0) {
        throw DataError(fmt::format("{}:{}: negative amount '{}'", source_name, line_no, raw));
      }
      record.amount_mm = to_mm(value, config.unit);
      if (has_flag && !quality_code(fields[flag_col]).empty()) {
        record.quality = Quality::Flagged;
      }
    }
    if (record.quality != Quality::Ok) record.amount_mm = 0.0;
    series.records.push_back(record);
  }

  std::stable_sort(series.records.begin(), series.records.end(),
                   [](const DailyRecord& a, const DailyRecord& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < series.records.size(); ++i) {
    if (series.records[i].date == series.records[i - 1].date) {
      throw DataError(fmt::format("{}: duplicate date {}", source_name,
                                  format_date(series.records[i].date)));
    }
  }

  std::size_t ok = 0, wet = 0;
  for (const auto& r : series.records) {
    if (r.quality != Quality::Ok) continue;
    ++ok;
    if (r.amount_mm > 0) ++wet;
  }
  series.wet_fraction = ok ? static_cast<double>(wet) / static_cast<double>(ok) : 0.0;
  return series;
}

PrecipSeries parse_daily_csv(const std::filesystem::path& path, const IngestConfig& config) {
  return parse_daily_csv_text(csv::read_text(path), config, path.string());
}

WetSample wet_subsample(const PrecipSeries& series, double censor_bound) {
  if (!(censor_bound >= 0.0)) {
    throw UsageError(fmt::format("censor bound must be >= 0, got {}", censor_bound));
  }
  WetSample sample;
  sample.support_low = censor_bound;
  for (const auto& r : series.records) {
    if (r.quality == Quality::Ok && r.amount_mm > censor_bound) {
      sample.dates.push_back(r.date);
      sample.amounts.push_back(r.amount_mm);
    }
  }
  if (sample.amounts.empty()) {
    throw DataError(fmt::format("no ok-quality amounts above {} mm (bound too high or "
                                "all-dry record)", censor_bound));
  }
  return sample;
}

std::string serialize_subsample(const WetSample& sample) {
  csv::Writer out({"date", "amount"});
  for (std::size_t i = 0; i < sample.amounts.size(); ++i) {
    out.row({format_date(sample.dates[i]), csv::number(sample.amounts[i])});
  }
  return out.text();
}

AnnualMaxima annual_maxima(const PrecipSeries& series, double max_missing_fraction) {
  struct YearStats {
    int ok_days = 0;
    double maximum = 0.0;
  };
  std::map<int, YearStats> years;
  for (const auto& r : series.records) {
    auto& stats = years[static_cast<int>(r.date.year())];
    if (r.quality != Quality::Ok) continue;
    ++stats.ok_days;
    stats.maximum = std::max(stats.maximum, r.amount_mm);
  }
  AnnualMaxima out;
  for (const auto& [year, stats] : years) {
    const int days = std::chrono::year{year}.is_leap() ? 366 : 365;
    const double missing = static_cast<double>(days - stats.ok_days) / days;
    if (stats.ok_days == 0 || missing > max_missing_fraction) continue;
    out.years.push_back(year);
    out.maxima.push_back(stats.maximum);
  }
  return out;
}

std::string format_date(const std::chrono::year_month_day& date) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(date.year()),
                     static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
}

std::optional<std::chrono::year_month_day> parse_date(std::string_view text, const std::string& format) {
  std::chrono::year_month_day out;
  if (!parse_date_into(text, format, out)) return std::nullopt;
  return out;
}

}  // namespace lhspline
