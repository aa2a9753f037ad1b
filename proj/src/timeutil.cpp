#include "ramp_stdae/timeutil.hpp"

#include <chrono>
#include <cstdio>

#include "ramp_stdae/topology.hpp"

namespace ramp_stdae {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int digits(std::string_view s, std::size_t pos, std::size_t n) {
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return -1;
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

EpochSeconds parse_iso8601(std::string_view text) {
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  const auto bad = [&] { return ParseError("bad timestamp '" + std::string(text) + "'"); };
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':') {
    throw bad();
  }
  const int year = digits(text, 0, 4);
  const int month = digits(text, 5, 2);
  const int day = digits(text, 8, 2);
  const int hour = digits(text, 11, 2);
  const int minute = digits(text, 14, 2);
  const int second = digits(text, 17, 2);
  if (year < 0 || month < 1 || day < 1 || hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 ||
      second > 59) {
    throw bad();
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw bad();
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<EpochSeconds>(days_since_epoch) * kSecondsPerDay + hour * 3600 + minute * 60 + second;
}

std::string format_iso8601(EpochSeconds t) {
  using namespace std::chrono;
  const auto days = floor_div(t, kSecondsPerDay);
  const auto rem = t - days * kSecondsPerDay;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
  return buf;
}

double time_of_day_fraction(EpochSeconds t) {
  const auto rem = t - floor_div(t, kSecondsPerDay) * kSecondsPerDay;
  return static_cast<double>(rem) / static_cast<double>(kSecondsPerDay);
}

double day_of_week_fraction(EpochSeconds t) {
  // 1970-01-01 was a Thursday (Monday-based index 3).
  const auto days = floor_div(t, kSecondsPerDay);
  const auto weekday = ((days + 3) % 7 + 7) % 7;
  return static_cast<double>(weekday) / 7.0;
}

}  // namespace ramp_stdae
