#pragma once

// Small formatting helpers shared by the line-oriented file formats.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace drowse::text {

// Shortest decimal form that parses back to the same double. Integral values
// keep a trailing ".0" so the field still reads as a real.
inline void append_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite number");
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  std::string_view s(buf, static_cast<std::size_t>(end - buf));
  out.append(s);
  if (s.find_first_of(".e") == std::string_view::npos) out.append(".0");
}

inline std::string format_double(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

inline void append_json_string(std::string& out, std::string_view s) {
  out.append(nlohmann::json(std::string(s)).dump());
}

// "YYYY-MM-DDTHH:MM:SS.mmmZ"
inline std::string iso8601_utc(std::chrono::sys_time<std::chrono::milliseconds> t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<long long>(hms.hours().count()),
                static_cast<long long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()),
                static_cast<long long>(hms.subseconds().count()));
  return buf;
}

inline std::string iso8601_now() {
  return iso8601_utc(std::chrono::floor<std::chrono::milliseconds>(
      std::chrono::system_clock::now()));
}

// Replay runs stamp events relative to a fixed epoch instead of the clock.
inline std::string iso8601_from_epoch_offset(std::int64_t epoch_ms, std::int64_t offset_ms) {
  return iso8601_utc(std::chrono::sys_time<std::chrono::milliseconds>(
      std::chrono::milliseconds(epoch_ms + offset_ms)));
}

}  // namespace drowse::text
