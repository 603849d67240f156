#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sentrade/error.hpp"

namespace sentrade {

using Instant = std::chrono::sys_seconds;
using LocalInstant = std::chrono::local_seconds;

namespace detail {

inline std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t count) {
  if (pos + count > s.size()) return std::nullopt;
  int v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace detail

/// Parses `YYYY-MM-DD`; returns nullopt on malformed or impossible dates.
inline std::optional<std::chrono::year_month_day> try_parse_date(std::string_view s) {
  using namespace std::chrono;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = detail::digits(s, 0, 4), m = detail::digits(s, 5, 2), d = detail::digits(s, 8, 2);
  if (!y || !m || !d) return std::nullopt;
  year_month_day ymd{year{*y}, month{static_cast<unsigned>(*m)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

/// Parses an ISO-8601 UTC timestamp such as `2012-06-18T13:30:00Z`.
/// A trailing `Z`, `+00:00`, or no designator are all read as UTC.
inline std::optional<Instant> try_parse_instant(std::string_view s) {
  using namespace std::chrono;
  if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':') return std::nullopt;
  auto date = try_parse_date(s.substr(0, 10));
  auto hh = detail::digits(s, 11, 2), mm = detail::digits(s, 14, 2), ss = detail::digits(s, 17, 2);
  if (!date || !hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 59) return std::nullopt;
  const auto rest = s.substr(19);
  if (!(rest.empty() || rest == "Z" || rest == "+00:00")) return std::nullopt;
  return Instant{sys_days{*date}} + hours{*hh} + minutes{*mm} + seconds{*ss};
}

inline std::string format_date(std::chrono::year_month_day ymd) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string format_instant(Instant t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const hh_mm_ss tod{t - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:%02dZ", format_date(year_month_day{day}).c_str(),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

/// Parses a wall-clock `HH:MM` into minutes after midnight.
inline std::optional<std::chrono::minutes> try_parse_wall_time(std::string_view s) {
  if (s.size() != 5 || s[2] != ':') return std::nullopt;
  auto hh = detail::digits(s, 0, 2), mm = detail::digits(s, 3, 2);
  if (!hh || !mm || *hh > 23 || *mm > 59) return std::nullopt;
  return std::chrono::minutes{*hh * 60 + *mm};
}

/// UTC offset rules for one zone. Fixed offsets (`UTC`, `UTC+05:30`, `UTC-04:00`)
/// are built in; anything else is read from a TZif v2+ file under $TZDIR or
/// /usr/share/zoneinfo. Instants past the last recorded transition use the
/// final offset.
class TimeZone {
 public:
  TimeZone() = default;

  static TimeZone fixed(std::chrono::seconds offset, std::string name) {
    TimeZone tz;
    tz.name_ = std::move(name);
    tz.offsets_ = {offset};
    return tz;
  }

  static TimeZone utc() { return fixed(std::chrono::seconds{0}, "UTC"); }

  static TimeZone load(std::string_view id) {
    using namespace std::chrono;
    if (id == "UTC" || id == "Z" || id == "Etc/UTC") return utc();
    if (id.size() == 9 && id.substr(0, 3) == "UTC" && (id[3] == '+' || id[3] == '-') && id[6] == ':') {
      auto hh = detail::digits(id, 4, 2), mm = detail::digits(id, 7, 2);
      if (!hh || !mm || *hh > 14 || *mm > 59) throw ConfigError("bad fixed offset `" + std::string(id) + "`");
      seconds off = hours{*hh} + minutes{*mm};
      return fixed(id[3] == '-' ? -off : off, std::string(id));
    }
    if (id.empty() || id.find("..") != std::string_view::npos || id.front() == '/')
      throw ConfigError("invalid timezone id `" + std::string(id) + "`");
    const char* dir = std::getenv("TZDIR");
    const std::string path = std::string(dir ? dir : "/usr/share/zoneinfo") + "/" + std::string(id);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("unknown timezone `" + std::string(id) + "` (no " + path + ")");
    std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), {}};
    TimeZone tz = parse_tzif(bytes, id);
    tz.name_ = std::string(id);
    return tz;
  }

  const std::string& name() const noexcept { return name_; }

  std::chrono::seconds offset_at(Instant t) const {
    if (transitions_.empty()) return offsets_.front();
    auto it = std::upper_bound(transitions_.begin(), transitions_.end(), t);
    if (it == transitions_.begin()) return offsets_.front();
    return offsets_[static_cast<std::size_t>(it - transitions_.begin())];
  }

  LocalInstant to_local(Instant t) const {
    return LocalInstant{t.time_since_epoch() + offset_at(t)};
  }

  /// Local wall time to UTC. In a repeated hour the later offset wins; in a
  /// skipped hour the pre-transition offset is used.
  Instant to_utc(LocalInstant local) const {
    const Instant naive{local.time_since_epoch()};
    const Instant guess = naive - offset_at(naive);
    return naive - offset_at(guess);
  }

 private:
  // offsets_[0] applies before transitions_[0]; offsets_[i+1] from transitions_[i].
  std::vector<Instant> transitions_;
  std::vector<std::chrono::seconds> offsets_;
  std::string name_;

  static std::int64_t be(const std::vector<unsigned char>& b, std::size_t pos, std::size_t width) {
    if (pos + width > b.size()) throw ConfigError("truncated TZif data");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v = (v << 8) | b[pos + i];
    if (width == 4) return static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
    return static_cast<std::int64_t>(v);
  }

  static TimeZone parse_tzif(const std::vector<unsigned char>& b, std::string_view id) {
    if (b.size() < 44 || b[0] != 'T' || b[1] != 'Z' || b[2] != 'i' || b[3] != 'f')
      throw ConfigError("`" + std::string(id) + "` is not a TZif file");
    if (b[4] < '2') throw ConfigError("TZif v1 files are not supported (`" + std::string(id) + "`)");
    auto counts = [&](std::size_t at) {
      std::array<std::size_t, 6> c{};
      for (std::size_t i = 0; i < 6; ++i) c[i] = static_cast<std::size_t>(be(b, at + 20 + 4 * i, 4));
      return c;  // isutcnt, isstdcnt, leapcnt, timecnt, typecnt, charcnt
    };
    const auto v1 = counts(0);
    const std::size_t v1_size = v1[3] * 5 + v1[4] * 6 + v1[5] + v1[2] * 8 + v1[1] + v1[0];
    const std::size_t h2 = 44 + v1_size;
    const auto c = counts(h2);
    const std::size_t timecnt = c[3], typecnt = c[4];
    if (typecnt == 0) throw ConfigError("TZif without local time types");
    std::size_t p = h2 + 44;
    std::vector<std::int64_t> times(timecnt);
    for (auto& t : times) { t = be(b, p, 8); p += 8; }
    std::vector<std::size_t> idx(timecnt);
    for (auto& i : idx) { i = static_cast<std::size_t>(be(b, p, 1)); p += 1; }
    std::vector<std::chrono::seconds> utoff(typecnt);
    std::vector<bool> isdst(typecnt);
    for (std::size_t i = 0; i < typecnt; ++i) {
      utoff[i] = std::chrono::seconds{be(b, p, 4)};
      isdst[i] = b.at(p + 4) != 0;
      p += 6;
    }
    TimeZone tz;
    // Before the first transition: first standard-time type, else type 0.
    std::size_t initial = 0;
    for (std::size_t i = 0; i < typecnt; ++i)
      if (!isdst[i]) { initial = i; break; }
    tz.offsets_.push_back(utoff[initial]);
    for (std::size_t i = 0; i < timecnt; ++i) {
      if (idx[i] >= typecnt) throw ConfigError("corrupt TZif type index");
      tz.transitions_.push_back(Instant{std::chrono::seconds{times[i]}});
      tz.offsets_.push_back(utoff[idx[i]]);
    }
    return tz;
  }
};

}  // namespace sentrade
