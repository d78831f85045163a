#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "marsbid/error.hpp"
#include "marsbid/text.hpp"
#include "marsbid/time.hpp"

namespace marsbid {

enum class Field : std::size_t {
  lmp_da = 0,
  lmp_rt,
  load_actual,
  load_forecast,
  temperature,
  wind_speed,
  gas_price,
};

inline constexpr std::size_t kFieldCount = 7;

inline constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
    "lmp_da", "lmp_rt", "load_actual", "load_forecast", "temperature", "wind_speed", "gas_price"};

inline constexpr std::array<Field, kFieldCount> kAllFields = {
    Field::lmp_da,      Field::lmp_rt,     Field::load_actual, Field::load_forecast,
    Field::temperature, Field::wind_speed, Field::gas_price};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One hour of market truth. Prices in $/MWh, loads in MW, temperature in °C,
/// wind in m/s, gas in $/MMBtu. Missing observations are NaN until repaired.
struct HourlyMarketRecord {
  UtcHour timestamp;
  double lmp_da = kMissing;
  double lmp_rt = kMissing;
  double load_actual = kMissing;
  double load_forecast = kMissing;
  double temperature = kMissing;
  double wind_speed = kMissing;
  double gas_price = kMissing;

  double& operator[](Field f) {
    switch (f) {
      case Field::lmp_da: return lmp_da;
      case Field::lmp_rt: return lmp_rt;
      case Field::load_actual: return load_actual;
      case Field::load_forecast: return load_forecast;
      case Field::temperature: return temperature;
      case Field::wind_speed: return wind_speed;
      case Field::gas_price: return gas_price;
    }
    throw std::logic_error("bad field");
  }
  double operator[](Field f) const { return const_cast<HourlyMarketRecord&>(*this)[f]; }

  friend bool operator==(const HourlyMarketRecord& a, const HourlyMarketRecord& b) {
    if (a.timestamp != b.timestamp) return false;
    for (Field f : kAllFields) {
      const double x = a[f], y = b[f];
      if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
    }
    return true;
  }
};

enum class Provenance { ingested, synthetic };

using FillFlags = std::array<bool, kFieldCount>;

struct MarketSeries {
  std::vector<HourlyMarketRecord> records;
  Provenance provenance = Provenance::ingested;
  // Parallel to records; true marks a value produced by repair_gaps.
  std::vector<FillFlags> fill_mask;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  const HourlyMarketRecord& operator[](std::size_t i) const { return records[i]; }

  bool any_filled() const {
    return std::any_of(fill_mask.begin(), fill_mask.end(),
                       [](const FillFlags& f) { return std::any_of(f.begin(), f.end(), [](bool b) { return b; }); });
  }

  // Missing whole hours between consecutive records, as (first missing, count).
  std::vector<std::pair<UtcHour, std::int64_t>> timestamp_gaps() const {
    std::vector<std::pair<UtcHour, std::int64_t>> gaps;
    for (std::size_t i = 1; i < records.size(); ++i) {
      const auto step = records[i].timestamp - records[i - 1].timestamp;
      if (step > 1) gaps.emplace_back(records[i - 1].timestamp + 1, step - 1);
    }
    return gaps;
  }

  bool is_uniform_hourly() const {
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (records[i].timestamp - records[i - 1].timestamp != 1) return false;
    }
    return true;
  }

  bool has_missing_values() const {
    for (const auto& r : records) {
      for (Field f : kAllFields) {
        if (std::isnan(r[f])) return true;
      }
    }
    return false;
  }

  // Index of the record at timestamp t, or size() when absent.
  std::size_t index_of(UtcHour t) const {
    auto it = std::lower_bound(records.begin(), records.end(), t,
                               [](const HourlyMarketRecord& r, UtcHour v) { return r.timestamp < v; });
    if (it == records.end() || it->timestamp != t) return records.size();
    return static_cast<std::size_t>(it - records.begin());
  }

  double max_of(Field f) const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      if (!std::isnan(r[f])) m = std::max(m, r[f]);
    }
    return m;
  }
};

// ---------------------------------------------------------------------------
// CSV ingestion

/// Column name for each field. Defaults to the field's own name.
struct CsvSchema {
  std::string timestamp = "timestamp";
  std::array<std::string, kFieldCount> columns = {
      "lmp_da", "lmp_rt", "load_actual", "load_forecast", "temperature", "wind_speed", "gas_price"};
};

namespace detail {

inline void check_record_invariants(const HourlyMarketRecord& r, std::size_t row) {
  for (Field f : {Field::load_actual, Field::load_forecast, Field::gas_price}) {
    const double v = r[f];
    if (!std::isnan(v) && v < 0.0) {
      throw DataError(detail::concat("row ", row, ": ", kFieldNames[static_cast<std::size_t>(f)],
                                     " must be >= 0 (got ", v, ")"));
    }
  }
  for (Field f : kAllFields) {
    if (std::isinf(r[f])) {
      throw DataError(detail::concat("row ", row, ": non-finite ", kFieldNames[static_cast<std::size_t>(f)]));
    }
  }
}

}  // namespace detail

/// Parses CSV text. Lines beginning with '#' are comments. Empty cells are
/// missing values; missing hours are left as timestamp gaps for repair_gaps.
inline MarketSeries parse_csv(std::istream& in, const CsvSchema& schema = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    for (auto cell : split(t, ',')) header.emplace_back(trim(cell));
    break;
  }
  if (header.empty()) throw DataError("CSV has no header row");

  const auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("CSV header is missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ts_col = column_index(schema.timestamp);
  std::array<std::size_t, kFieldCount> cols{};
  for (std::size_t f = 0; f < kFieldCount; ++f) cols[f] = column_index(schema.columns[f]);

  MarketSeries series;
  series.provenance = Provenance::ingested;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    ++row;
    const auto cells = split(t, ',');
    if (cells.size() != header.size()) {
      throw DataError(detail::concat("malformed row ", row, " (line ", line_no, "): expected ", header.size(),
                                     " cells, found ", cells.size()));
    }
    HourlyMarketRecord rec;
    try {
      rec.timestamp = parse_utc_hour(trim(cells[ts_col]));
    } catch (const DataError& e) {
      throw DataError(detail::concat("row ", row, ": ", e.what()));
    }
    for (std::size_t f = 0; f < kFieldCount; ++f) {
      const auto cell = trim(cells[cols[f]]);
      if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") continue;
      const auto v = parse_double(cell);
      if (!v) {
        throw DataError(detail::concat("malformed row ", row, " (line ", line_no, "): cannot parse ",
                                       kFieldNames[f], " value '", cell, "'"));
      }
      rec[kAllFields[f]] = *v;
    }
    detail::check_record_invariants(rec, row);
    series.records.push_back(rec);
  }

  std::stable_sort(series.records.begin(), series.records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < series.records.size(); ++i) {
    if (series.records[i].timestamp == series.records[i - 1].timestamp) {
      throw DataError("duplicate timestamp " + format_utc_hour(series.records[i].timestamp));
    }
  }
  series.fill_mask.assign(series.records.size(), FillFlags{});
  return series;
}

inline MarketSeries ingest_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw PrerequisiteError("cannot open CSV file '" + path + "'");
  return parse_csv(in, schema);
}

/// Writes the canonical CSV layout. `comment`, when non-empty, becomes a
/// leading '#' line.
inline void write_csv(std::ostream& out, const MarketSeries& series, const std::string& comment = {}) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "timestamp";
  for (auto name : kFieldNames) out << ',' << name;
  out << '\n';
  for (const auto& r : series.records) {
    out << format_utc_hour(r.timestamp);
    for (Field f : kAllFields) {
      out << ',';
      if (!std::isnan(r[f])) out << format_double(r[f]);
    }
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const MarketSeries& series, const std::string& comment = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(out, series, comment);
}

// ---------------------------------------------------------------------------
// Gap repair

inline constexpr std::int64_t kShortGapHours = 4;

/// Inserts records for missing hours, then fills every missing value: runs
/// shorter than 4 hours bracketed by known values are linearly interpolated,
/// everything else takes the mean of the known values sharing its
/// season slot (hour-of-week for the default period of 168).
inline MarketSeries repair_gaps(const MarketSeries& input, std::int64_t seasonal_period = 168) {
  require<DataError>(seasonal_period >= 1, "seasonal_period must be >= 1");
  if (input.empty()) return input;

  MarketSeries out;
  out.provenance = input.provenance;
  const UtcHour first = input.records.front().timestamp;
  const UtcHour last = input.records.back().timestamp;
  const auto n = static_cast<std::size_t>(last - first + 1);
  out.records.resize(n);
  out.fill_mask.assign(n, FillFlags{});
  for (std::size_t i = 0; i < n; ++i) out.records[i].timestamp = first + static_cast<std::int64_t>(i);
  for (std::size_t i = 0; i < input.records.size(); ++i) {
    const auto& r = input.records[i];
    const auto idx = static_cast<std::size_t>(r.timestamp - first);
    out.records[idx] = r;
    if (i < input.fill_mask.size()) out.fill_mask[idx] = input.fill_mask[i];
  }

  const auto season_of = [&](UtcHour t) {
    if (seasonal_period == 168) return static_cast<std::int64_t>(hour_of_week(t));
    return t.value - detail::floor_div(t.value, seasonal_period) * seasonal_period;
  };

  for (std::size_t fi = 0; fi < kFieldCount; ++fi) {
    const Field f = kAllFields[fi];
    std::size_t known = 0;
    std::map<std::int64_t, std::pair<double, std::size_t>> season_sum;
    for (const auto& r : out.records) {
      if (std::isnan(r[f])) continue;
      ++known;
      auto& acc = season_sum[season_of(r.timestamp)];
      acc.first += r[f];
      ++acc.second;
    }
    if (known == 0) throw DataError("field " + std::string(kFieldNames[fi]) + " is entirely missing");
    if (known == n) continue;
    require<DataError>(known >= 2, "field ", kFieldNames[fi], " needs at least 2 known values, has ", known);

    std::size_t i = 0;
    while (i < n) {
      if (!std::isnan(out.records[i][f])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < n && std::isnan(out.records[j][f])) ++j;
      const auto len = static_cast<std::int64_t>(j - i);
      const bool at_boundary = (i == 0 || j == n);
      if (at_boundary && len > seasonal_period) {
        throw DataError(detail::concat("gap of ", len, " hours at series boundary (", format_utc_hour(out.records[i].timestamp),
                                       ") exceeds seasonal period ", seasonal_period));
      }
      if (!at_boundary && len < kShortGapHours) {
        const double lo = out.records[i - 1][f];
        const double hi = out.records[j][f];
        for (std::size_t k = i; k < j; ++k) {
          const double frac = static_cast<double>(k - i + 1) / static_cast<double>(len + 1);
          out.records[k][f] = lo + (hi - lo) * frac;
          out.fill_mask[k][fi] = true;
        }
      } else {
        for (std::size_t k = i; k < j; ++k) {
          const auto it = season_sum.find(season_of(out.records[k].timestamp));
          if (it == season_sum.end()) {
            throw DataError("no known " + std::string(kFieldNames[fi]) + " value shares the season slot of " +
                            format_utc_hour(out.records[k].timestamp));
          }
          out.records[k][f] = it->second.first / static_cast<double>(it->second.second);
          out.fill_mask[k][fi] = true;
        }
      }
      i = j;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chronological split

/// Half-open hour range [begin, end).
struct DateRange {
  UtcHour begin;
  UtcHour end;

  bool contains(UtcHour t) const { return begin <= t && t < end; }
  std::int64_t hours() const { return end - begin; }
};

/// "YYYY-MM-DD:YYYY-MM-DD", both dates inclusive.
inline DateRange parse_date_range(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw ConfigError("date range '" + std::string(text) + "' must be FIRST:LAST");
  try {
    const UtcHour a = parse_utc_hour(trim(parts[0]));
    const UtcHour b = parse_utc_hour(trim(parts[1]));
    return DateRange{a, UtcHour{(detail::floor_div(b.value, 24) + 1) * 24}};
  } catch (const DataError& e) {
    throw ConfigError(std::string("bad date range: ") + e.what());
  }
}

inline std::string format_date_range(const DateRange& r) {
  const auto date = [](UtcHour t) { return format_utc_hour(t).substr(0, 10); };
  return date(r.begin) + ":" + date(r.end + -1);
}

struct SplitSpec {
  DateRange train;
  DateRange test1;
  DateRange test2;

  void validate() const {
    for (const auto* r : {&train, &test1, &test2}) {
      require<ConfigError>(r->begin < r->end, "empty split range ", format_date_range(*r));
    }
    require<ConfigError>(train.end <= test1.begin && test1.end <= test2.begin,
                         "split ranges overlap or are out of chronological order (train < test1 < test2 required)");
  }
};

struct SplitResult {
  MarketSeries train;
  MarketSeries test1;
  MarketSeries test2;
};

inline MarketSeries slice(const MarketSeries& s, const DateRange& range) {
  MarketSeries out;
  out.provenance = s.provenance;
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    if (range.contains(s.records[i].timestamp)) {
      out.records.push_back(s.records[i]);
      out.fill_mask.push_back(i < s.fill_mask.size() ? s.fill_mask[i] : FillFlags{});
    }
  }
  return out;
}

inline SplitResult split(const MarketSeries& series, const SplitSpec& spec) {
  spec.validate();
  require<DataError>(!series.empty(), "cannot split an empty series");
  const UtcHour first = series.records.front().timestamp;
  const UtcHour last = series.records.back().timestamp;
  for (const auto* r : {&spec.train, &spec.test1, &spec.test2}) {
    if (r->begin < first || last < r->end + -1) {
      throw DataError("split range " + format_date_range(*r) + " is not covered by the series (" +
                      format_utc_hour(first) + " .. " + format_utc_hour(last) + ")");
    }
  }
  return SplitResult{slice(series, spec.train), slice(series, spec.test1), slice(series, spec.test2)};
}

// ---------------------------------------------------------------------------
// Synthetic regime-switching series

struct SyntheticConfig {
  std::int64_t n_hours = 67200;
  UtcHour start = make_utc_hour(2018, 1, 1);
  double calm_mean = 40.0;
  double calm_std = 5.0;
  double volatile_mean = 55.0;
  double volatile_std = 20.0;
  double regime_dwell_hours = 72.0;
  double rt_spread_std = 6.0;
  double diurnal_amplitude = 10.0;
  // Mean RT minus DA in the calm regime.
  double rt_premium_calm = 0.0;
  // Per-hour probability of a left-tail RT price spike while volatile.
  double rt_spike_prob = 0.0;
  // Mean spike size added to RT ($/MWh, usually negative); exponentially distributed.
  double rt_spike_mean = -150.0;
  double load_mean = 10000.0;
  double load_amplitude = 2000.0;
  double gas_mean = 4.0;
  double gas_daily_std = 0.05;
  std::uint64_t seed = 7;

  void validate() const {
    require<ConfigError>(n_hours >= 48, "synthetic.n_hours must be >= 48");
    require<ConfigError>(calm_std > 0.0 && volatile_std > 0.0, "synthetic calm_std and volatile_std must be > 0");
    require<ConfigError>(rt_spread_std >= 0.0, "synthetic.rt_spread_std must be >= 0");
    require<ConfigError>(regime_dwell_hours >= 1.0, "synthetic.regime_dwell_hours must be >= 1");
    require<ConfigError>(rt_spike_prob >= 0.0 && rt_spike_prob <= 1.0, "synthetic.rt_spike_prob must lie in [0,1]");
    require<ConfigError>(diurnal_amplitude >= 0.0 && load_amplitude >= 0.0 && load_mean >= load_amplitude,
                         "synthetic load/diurnal amplitudes invalid");
    require<ConfigError>(gas_mean >= 0.0 && gas_daily_std >= 0.0, "synthetic gas parameters invalid");
  }
};

/// Regime path of the generator. Exposed for tests and diagnostics.
struct SyntheticSeries {
  MarketSeries series;
  std::vector<bool> volatile_regime;
};

inline SyntheticSeries generate_synthetic_with_regimes(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double switch_prob = 1.0 / cfg.regime_dwell_hours;
  const double vol_scale = cfg.volatile_std / cfg.calm_std;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  SyntheticSeries out;
  out.series.provenance = Provenance::synthetic;
  out.series.records.reserve(static_cast<std::size_t>(cfg.n_hours));
  out.volatile_regime.reserve(static_cast<std::size_t>(cfg.n_hours));
  bool is_volatile = uniform(rng) < 0.5;
  double gas = cfg.gas_mean;
  std::int64_t gas_day = std::numeric_limits<std::int64_t>::min();

  for (std::int64_t i = 0; i < cfg.n_hours; ++i) {
    if (i > 0 && uniform(rng) < switch_prob) is_volatile = !is_volatile;
    const UtcHour t = cfg.start + i;
    const double hod = static_cast<double>(hour_of_day(t));
    const double doy = static_cast<double>(detail::floor_div(t.value, 24) % 365);

    const std::int64_t day = detail::floor_div(t.value, 24);
    if (day != gas_day) {
      gas_day = day;
      gas = std::max(0.0, cfg.gas_mean * (1.0 + cfg.gas_daily_std * normal(rng)));
    }

    // Peak around 18:00 UTC.
    const double diurnal = std::sin(two_pi * (hod - 12.0) / 24.0);
    const double mean = is_volatile ? cfg.volatile_mean : cfg.calm_mean;
    const double sd = is_volatile ? cfg.volatile_std : cfg.calm_std;
    HourlyMarketRecord r;
    r.timestamp = t;
    r.lmp_da = mean + cfg.diurnal_amplitude * diurnal + sd * normal(rng);
    const double spread_sd = cfg.rt_spread_std * (is_volatile ? vol_scale : 1.0);
    double rt = r.lmp_da + spread_sd * normal(rng);
    if (!is_volatile) rt += cfg.rt_premium_calm;
    if (is_volatile && cfg.rt_spike_prob > 0.0) {
      const double u = uniform(rng);
      const double e = -std::log(1.0 - uniform(rng));
      if (u < cfg.rt_spike_prob) rt += cfg.rt_spike_mean * e;
    }
    r.lmp_rt = rt;
    r.load_forecast = cfg.load_mean + cfg.load_amplitude * diurnal;
    r.load_actual = std::max(0.0, r.load_forecast + 0.02 * cfg.load_amplitude * normal(rng));
    r.temperature = 12.0 + 10.0 * std::sin(two_pi * (doy - 110.0) / 365.0) + 4.0 * diurnal + normal(rng);
    r.wind_speed = std::abs(5.0 + 2.5 * normal(rng));
    r.gas_price = gas;
    out.series.records.push_back(r);
    out.volatile_regime.push_back(is_volatile);
  }
  out.series.fill_mask.assign(out.series.records.size(), FillFlags{});
  return out;
}

inline MarketSeries generate_synthetic(const SyntheticConfig& cfg) {
  return generate_synthetic_with_regimes(cfg).series;
}

}  // namespace marsbid
