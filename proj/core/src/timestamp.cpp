#include "heatalloc/timestamp.hpp"

#include <chrono>
#include <cstdio>
#include <string>

#include "heatalloc/errors.hpp"

namespace heatalloc {

namespace {

bool digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) return false;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  return true;
}

int number(std::string_view s, std::size_t pos, std::size_t n) {
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) v = v * 10 + (s[i] - '0');
  return v;
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS then Z or +00:00
  const bool shape = text.size() >= 19 && digits(text, 0, 4) && text[4] == '-' &&
                     digits(text, 5, 2) && text[7] == '-' && digits(text, 8, 2) &&
                     (text[10] == 'T' || text[10] == ' ') && digits(text, 11, 2) &&
                     text[13] == ':' && digits(text, 14, 2) && text[16] == ':' &&
                     digits(text, 17, 2);
  const std::string_view zone = shape ? text.substr(19) : std::string_view{};
  if (!shape || !(zone == "Z" || zone == "+00:00" || zone.empty())) {
    throw DataError("invalid ISO-8601 UTC timestamp: '" + std::string(text) + "'");
  }
  const year_month_day ymd{year{number(text, 0, 4)},
                           month{static_cast<unsigned>(number(text, 5, 2))},
                           day{static_cast<unsigned>(number(text, 8, 2))}};
  const int hh = number(text, 11, 2);
  const int mm = number(text, 14, 2);
  const int ss = number(text, 17, 2);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
    throw DataError("invalid ISO-8601 UTC timestamp: '" + std::string(text) + "'");
  }
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days_since_epoch) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  Timestamp days_count = t / 86400;
  Timestamp rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days_count;
  }
  const year_month_day ymd{sys_days{days{days_count}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace heatalloc
