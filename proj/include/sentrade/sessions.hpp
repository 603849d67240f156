#pragma once

// Price/sentiment ingestion and the alternating day/night session series.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentrade/csv.hpp"
#include "sentrade/error.hpp"
#include "sentrade/kv.hpp"
#include "sentrade/time.hpp"

namespace sentrade {

struct PriceTick {
  Instant timestamp;
  double price = 0.0;
};

/// Pre-classified message counts for one half-hour bucket.
struct SentimentBucket {
  Instant bucket_start;
  std::int64_t positive = 0;
  std::int64_t negative = 0;
  std::int64_t neutral = 0;
};

enum class SessionKind { Day, Night };

inline std::string_view to_string(SessionKind k) { return k == SessionKind::Day ? "day" : "night"; }

struct Session {
  std::size_t index = 0;
  SessionKind kind = SessionKind::Day;
  Instant open_time;
  Instant close_time;
  double open_price = 0.0;
  double close_price = 0.0;
  std::int64_t pos = 0;
  std::int64_t neg = 0;
  std::int64_t neu = 0;

  bool operator==(const Session&) const = default;
};

/// Sessions for one brand plus one simple return per session.
/// `returns` is empty until compute_returns has run.
struct SessionSeries {
  std::string brand;
  std::vector<Session> sessions;
  std::vector<double> returns;

  std::size_t size() const noexcept { return sessions.size(); }
};

struct TradingHours {
  std::chrono::minutes open;
  std::chrono::minutes close;
};

/// Local trading hours per weekday plus a holiday list. Weekdays without
/// hours and holidays yield no Day session.
struct MarketCalendar {
  TimeZone zone = TimeZone::utc();
  std::array<std::optional<TradingHours>, 7> hours{};  // indexed by weekday::c_encoding (0 = Sunday)
  std::set<std::chrono::sys_days> holidays;            // local calendar dates

  static MarketCalendar weekdays(TimeZone zone, TradingHours h) {
    MarketCalendar cal;
    cal.zone = std::move(zone);
    for (unsigned d = 1; d <= 5; ++d) cal.hours[d] = h;
    return cal;
  }

  std::optional<TradingHours> hours_on(std::chrono::sys_days local_date) const {
    if (holidays.contains(local_date)) return std::nullopt;
    return hours[std::chrono::weekday{local_date}.c_encoding()];
  }
};

/// Effective prices of one trading day, sampled `offset` inside the open/close.
struct DailyPrices {
  std::chrono::sys_days date;  // local calendar date
  double open_price = 0.0;
  double close_price = 0.0;
  Instant open_time;
  Instant close_time;
};

struct DailyPriceResult {
  std::vector<DailyPrices> days;
  std::vector<std::string> warnings;
};

struct SessionBuildResult {
  SessionSeries series;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Parsing

inline std::vector<PriceTick> parse_ticks(std::istream& in) {
  csv::Reader reader(in);
  reader.expect_header("timestamp,price");
  std::vector<PriceTick> ticks;
  std::string line;
  while (reader.next(line)) {
    const auto f = csv::split(line);
    if (f.size() != 2) throw DataError("expected 2 fields, got " + std::to_string(f.size()), reader.line());
    const auto ts = try_parse_instant(f[0]);
    if (!ts) throw DataError("bad timestamp `" + std::string(f[0]) + "`", reader.line());
    const auto price = csv::to_double(f[1]);
    if (!price || !std::isfinite(*price)) throw DataError("bad price `" + std::string(f[1]) + "`", reader.line());
    if (*price <= 0.0) throw DataError("non-positive price " + std::string(f[1]), reader.line());
    ticks.push_back({*ts, *price});
  }
  std::stable_sort(ticks.begin(), ticks.end(),
                   [](const PriceTick& a, const PriceTick& b) { return a.timestamp < b.timestamp; });
  // Duplicate timestamps: the row appearing last in the file wins.
  std::vector<PriceTick> out;
  out.reserve(ticks.size());
  for (const auto& t : ticks) {
    if (!out.empty() && out.back().timestamp == t.timestamp)
      out.back() = t;
    else
      out.push_back(t);
  }
  return out;
}

inline std::vector<SentimentBucket> parse_buckets(std::istream& in) {
  using namespace std::chrono;
  csv::Reader reader(in);
  reader.expect_header("bucket_start,positive,negative,neutral");
  std::vector<SentimentBucket> buckets;
  std::string line;
  while (reader.next(line)) {
    const auto f = csv::split(line);
    if (f.size() != 4) throw DataError("expected 4 fields, got " + std::to_string(f.size()), reader.line());
    const auto ts = try_parse_instant(f[0]);
    if (!ts) throw DataError("bad timestamp `" + std::string(f[0]) + "`", reader.line());
    if (ts->time_since_epoch() % minutes{30} != seconds{0})
      throw DataError("bucket_start not aligned to a half-hour boundary", reader.line());
    SentimentBucket b{*ts, 0, 0, 0};
    std::int64_t* fields[] = {&b.positive, &b.negative, &b.neutral};
    for (std::size_t i = 0; i < 3; ++i) {
      const auto v = csv::to_int(f[i + 1]);
      if (!v || *v < 0) throw DataError("bad count `" + std::string(f[i + 1]) + "`", reader.line());
      *fields[i] = *v;
    }
    buckets.push_back(b);
  }
  std::stable_sort(buckets.begin(), buckets.end(),
                   [](const SentimentBucket& a, const SentimentBucket& b) { return a.bucket_start < b.bucket_start; });
  return buckets;
}

/// Calendar config keys: timezone, open, close (HH:MM local), trading_days
/// (comma list of mon..sun, default mon..fri), holidays (comma list of
/// YYYY-MM-DD), and per-day overrides open_<day> / close_<day>.
inline MarketCalendar parse_calendar(std::istream& in) {
  using namespace std::chrono;
  static constexpr std::array<std::string_view, 7> kDays{"sun", "mon", "tue", "wed", "thu", "fri", "sat"};
  auto day_index = [](std::string_view s) -> std::optional<unsigned> {
    for (unsigned i = 0; i < kDays.size(); ++i)
      if (kDays[i] == s) return i;
    return std::nullopt;
  };
  auto wall = [](const kv::Entry& e) {
    auto m = try_parse_wall_time(e.value);
    if (!m) throw ConfigError(e.key + ": expected HH:MM, got `" + e.value + "`");
    return *m;
  };

  MarketCalendar cal;
  std::optional<minutes> open, close;
  std::array<std::optional<minutes>, 7> open_override{}, close_override{};
  std::set<unsigned> trading{1, 2, 3, 4, 5};
  for (const auto& e : kv::parse(in)) {
    if (e.key == "timezone") {
      cal.zone = TimeZone::load(e.value);
    } else if (e.key == "open") {
      open = wall(e);
    } else if (e.key == "close") {
      close = wall(e);
    } else if (e.key == "trading_days") {
      trading.clear();
      for (auto d : csv::split(e.value)) {
        auto idx = day_index(d);
        if (!idx) throw ConfigError("trading_days: unknown day `" + std::string(d) + "`");
        trading.insert(*idx);
      }
    } else if (e.key == "holidays") {
      if (csv::trim(e.value).empty()) continue;
      for (auto d : csv::split(e.value)) {
        auto ymd = try_parse_date(d);
        if (!ymd) throw ConfigError("holidays: bad date `" + std::string(d) + "`");
        cal.holidays.insert(sys_days{*ymd});
      }
    } else if (e.key.size() == 8 && e.key.starts_with("open_") &&
               day_index(std::string_view(e.key).substr(5))) {
      open_override[*day_index(std::string_view(e.key).substr(5))] = wall(e);
    } else if (e.key.size() == 9 && e.key.starts_with("close_") && day_index(std::string_view(e.key).substr(6))) {
      close_override[*day_index(std::string_view(e.key).substr(6))] = wall(e);
    } else {
      throw ConfigError("unknown calendar key `" + e.key + "`");
    }
  }
  if (!open || !close) throw ConfigError("calendar requires `open` and `close`");
  for (unsigned d : trading) {
    TradingHours h{open_override[d].value_or(*open), close_override[d].value_or(*close)};
    if (h.open >= h.close) throw ConfigError("calendar: market open must precede close (" + std::string(kDays[d]) + ")");
    cal.hours[d] = h;
  }
  return cal;
}

// ---------------------------------------------------------------------------
// Session construction

/// Samples each trading day's effective open (market_open + offset) and close
/// (market_close - offset) as the latest tick at or before that instant. Only
/// ticks within the day's [market_open, market_close] are eligible; trading
/// days without an eligible tick by the effective open are dropped.
inline DailyPriceResult session_prices(std::span<const PriceTick> ticks, const MarketCalendar& calendar,
                                       int offset_minutes = 30) {
  using namespace std::chrono;
  if (offset_minutes < 0) throw ConfigError("offset_minutes must be non-negative");
  DailyPriceResult result;
  if (ticks.empty()) return result;
  const minutes offset{offset_minutes};
  auto local_date = [&](Instant t) { return floor<days>(calendar.zone.to_local(t)); };
  const auto first = local_date(ticks.front().timestamp);
  const auto last = local_date(ticks.back().timestamp);
  auto by_time = [](const PriceTick& a, Instant t) { return a.timestamp < t; };

  for (auto date = first; date <= last; date += days{1}) {
    const auto hours = calendar.hours_on(sys_days{date.time_since_epoch()});
    if (!hours) continue;
    const Instant market_open = calendar.zone.to_utc(date + hours->open);
    const Instant market_close = calendar.zone.to_utc(date + hours->close);
    const Instant eff_open = market_open + offset;
    const Instant eff_close = market_close - offset;
    const std::string label = format_date(year_month_day{sys_days{date.time_since_epoch()}});
    if (eff_open >= eff_close)
      throw ConfigError("offset of " + std::to_string(offset_minutes) + " minutes leaves no session on " + label);

    const auto begin = std::lower_bound(ticks.begin(), ticks.end(), market_open, by_time);
    const auto open_end = std::upper_bound(ticks.begin(), ticks.end(), eff_open,
                                           [](Instant t, const PriceTick& a) { return t < a.timestamp; });
    if (open_end <= begin) {
      result.warnings.push_back(label + ": no tick between market open and effective open; day dropped");
      continue;
    }
    const auto close_end = std::upper_bound(ticks.begin(), ticks.end(), eff_close,
                                            [](Instant t, const PriceTick& a) { return t < a.timestamp; });
    result.days.push_back({sys_days{date.time_since_epoch()}, std::prev(open_end)->price,
                           std::prev(close_end)->price, eff_open, eff_close});
  }
  return result;
}

/// Alternating Day/Night series from consecutive trading days. Each Night
/// runs from one day's effective close to the next day's effective open, so
/// weekends, holidays, and dropped days become one longer Night. Buckets are
/// assigned by half-open [open, close) membership.
inline SessionBuildResult build_sessions(std::span<const DailyPrices> days, std::span<const SentimentBucket> buckets,
                                         std::string brand = {}) {
  if (days.size() < 2) throw DataError("at least 2 trading days are required, got " + std::to_string(days.size()));
  SessionBuildResult out;
  auto& sessions = out.series.sessions;
  out.series.brand = std::move(brand);
  for (std::size_t i = 0; i < days.size(); ++i) {
    const auto& d = days[i];
    if (i > 0 && d.open_time <= days[i - 1].close_time)
      throw DataError("trading days out of order at " + format_instant(d.open_time));
    sessions.push_back({sessions.size(), SessionKind::Day, d.open_time, d.close_time, d.open_price, d.close_price});
    if (i + 1 < days.size()) {
      const auto& next = days[i + 1];
      sessions.push_back(
          {sessions.size(), SessionKind::Night, d.close_time, next.open_time, d.close_price, next.open_price});
    }
  }
  const Instant first_open = sessions.front().open_time;
  const Instant last_close = sessions.back().close_time;
  std::size_t discarded = 0;
  for (const auto& b : buckets) {
    if (b.bucket_start < first_open || b.bucket_start >= last_close) {
      ++discarded;
      continue;
    }
    auto it = std::upper_bound(sessions.begin(), sessions.end(), b.bucket_start,
                               [](Instant t, const Session& s) { return t < s.open_time; });
    auto& s = *std::prev(it);
    s.pos += b.positive;
    s.neg += b.negative;
    s.neu += b.neutral;
  }
  if (discarded)
    out.warnings.push_back(std::to_string(discarded) + " sentiment bucket(s) outside the session range discarded");
  return out;
}

/// Simple return (close - open) / open of every session.
inline SessionSeries compute_returns(SessionSeries series) {
  series.returns.clear();
  series.returns.reserve(series.sessions.size());
  for (const auto& s : series.sessions) {
    if (!(s.open_price > 0.0))
      throw DataError("session " + std::to_string(s.index) + " has non-positive open price");
    series.returns.push_back((s.close_price - s.open_price) / s.open_price);
  }
  return series;
}

/// Throws DataError unless indices are contiguous, kinds alternate starting
/// with Day, intervals are non-empty and contiguous, prices are positive, and
/// neighbouring sessions share boundary prices.
inline void validate_series(const SessionSeries& series) {
  const auto& ss = series.sessions;
  for (std::size_t i = 0; i < ss.size(); ++i) {
    const auto& s = ss[i];
    const std::string at = "session " + std::to_string(i);
    if (s.index != i) throw DataError(at + ": index " + std::to_string(s.index) + " out of sequence");
    if (s.kind != (i % 2 == 0 ? SessionKind::Day : SessionKind::Night)) throw DataError(at + ": kinds must alternate day/night");
    if (!(s.open_time < s.close_time)) throw DataError(at + ": open_time must precede close_time");
    if (!(s.open_price > 0.0) || !(s.close_price > 0.0) || !std::isfinite(s.open_price) || !std::isfinite(s.close_price))
      throw DataError(at + ": prices must be positive and finite");
    if (s.pos < 0 || s.neg < 0 || s.neu < 0) throw DataError(at + ": negative sentiment count");
    if (i > 0) {
      const auto& prev = ss[i - 1];
      if (prev.close_time != s.open_time) throw DataError(at + ": gap or overlap with previous session");
      if (prev.close_price != s.open_price) throw DataError(at + ": open price differs from previous close");
    }
  }
  if (!series.returns.empty() && series.returns.size() != ss.size())
    throw DataError("returns length does not match session count");
}

// ---------------------------------------------------------------------------
// Sessions CSV

inline constexpr std::string_view kSessionsHeader = "index,kind,open_time,close_time,open_price,close_price,pos,neg,neu";

inline void write_sessions_csv(std::ostream& out, const SessionSeries& series) {
  out << kSessionsHeader << '\n';
  for (const auto& s : series.sessions) {
    out << s.index << ',' << to_string(s.kind) << ',' << format_instant(s.open_time) << ','
        << format_instant(s.close_time) << ',' << csv::format(s.open_price) << ',' << csv::format(s.close_price) << ','
        << s.pos << ',' << s.neg << ',' << s.neu << '\n';
  }
}

/// Reads and validates a sessions CSV, then computes returns.
inline SessionSeries read_sessions_csv(std::istream& in, std::string brand = {}) {
  csv::Reader reader(in);
  reader.expect_header(kSessionsHeader);
  SessionSeries series;
  series.brand = std::move(brand);
  std::string line;
  while (reader.next(line)) {
    const auto f = csv::split(line);
    if (f.size() != 9) throw DataError("expected 9 fields, got " + std::to_string(f.size()), reader.line());
    Session s;
    const auto idx = csv::to_int(f[0]);
    if (!idx || *idx < 0) throw DataError("bad index `" + std::string(f[0]) + "`", reader.line());
    s.index = static_cast<std::size_t>(*idx);
    if (f[1] == "day") s.kind = SessionKind::Day;
    else if (f[1] == "night") s.kind = SessionKind::Night;
    else throw DataError("bad kind `" + std::string(f[1]) + "`", reader.line());
    const auto open_t = try_parse_instant(f[2]), close_t = try_parse_instant(f[3]);
    if (!open_t || !close_t) throw DataError("bad timestamp", reader.line());
    s.open_time = *open_t;
    s.close_time = *close_t;
    const auto op = csv::to_double(f[4]), cp = csv::to_double(f[5]);
    if (!op || !cp) throw DataError("bad price", reader.line());
    s.open_price = *op;
    s.close_price = *cp;
    const auto p = csv::to_int(f[6]), n = csv::to_int(f[7]), z = csv::to_int(f[8]);
    if (!p || !n || !z) throw DataError("bad count", reader.line());
    s.pos = *p;
    s.neg = *n;
    s.neu = *z;
    if (s.index != series.sessions.size())
      throw DataError("index " + std::to_string(s.index) + " out of sequence", reader.line());
    series.sessions.push_back(s);
  }
  if (series.sessions.empty()) throw DataError("sessions file contains no rows");
  try {
    validate_series(series);
  } catch (const DataError& e) {
    throw DataError(std::string("invalid session series: ") + e.what());
  }
  return compute_returns(std::move(series));
}

// ---------------------------------------------------------------------------
// Brand matching

using BrandKeywords = std::map<std::string, std::vector<std::string>>;

/// Case-insensitive whole-word keyword match. Returns the unique matching
/// brand; no match or a match on several brands yields nullopt.
inline std::optional<std::string> match_brand(std::string_view text, const BrandKeywords& brands) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; };
  const std::string hay = lower(text);
  std::optional<std::string> found;
  for (const auto& [brand, keywords] : brands) {
    bool hit = false;
    for (const auto& kw_raw : keywords) {
      const std::string kw = lower(kw_raw);
      if (kw.empty()) continue;
      for (auto pos = hay.find(kw); pos != std::string::npos; pos = hay.find(kw, pos + 1)) {
        const bool left_ok = pos == 0 || !is_word(hay[pos - 1]);
        const bool right_ok = pos + kw.size() == hay.size() || !is_word(hay[pos + kw.size()]);
        if (left_ok && right_ok) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) {
      if (found) return std::nullopt;
      found = brand;
    }
  }
  return found;
}

}  // namespace sentrade
