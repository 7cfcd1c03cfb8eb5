#include "drivelab/ingest/timestamps.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "drivelab/ingest/csv.hpp"

namespace drivelab {

const char* to_string(TimeFormat f) {
  switch (f) {
    case TimeFormat::relative_ms:
      return "relative_ms";
    case TimeFormat::epoch_ms:
      return "epoch_ms";
    case TimeFormat::iso8601:
      return "iso8601";
  }
  return "?";
}

namespace {

bool read_int(std::string_view s, std::size_t& pos, int digits, int& out) {
  if (pos + static_cast<std::size_t>(digits) > s.size()) return false;
  out = 0;
  for (int i = 0; i < digits; ++i) {
    const char c = s[pos++];
    if (c < '0' || c > '9') return false;
    out = out * 10 + (c - '0');
  }
  return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos >= s.size() || s[pos] != c) return false;
  ++pos;
  return true;
}

}  // namespace

std::optional<Millis> parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!read_int(s, pos, 4, y) || !expect(s, pos, '-') || !read_int(s, pos, 2, mo) ||
      !expect(s, pos, '-') || !read_int(s, pos, 2, d)) {
    return std::nullopt;
  }
  if (pos >= s.size() || (s[pos] != 'T' && s[pos] != ' ')) return std::nullopt;
  ++pos;
  if (!read_int(s, pos, 2, h) || !expect(s, pos, ':') || !read_int(s, pos, 2, mi) ||
      !expect(s, pos, ':') || !read_int(s, pos, 2, sec)) {
    return std::nullopt;
  }
  double frac_ms = 0.0;
  if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
    ++pos;
    double scale = 100.0;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      frac_ms += (s[pos] - '0') * scale;
      scale /= 10.0;
      ++pos;
    }
    if (pos == start) return std::nullopt;
  }
  Millis offset_ms = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z') {
      ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
      const int sign = s[pos] == '+' ? 1 : -1;
      ++pos;
      int oh = 0, om = 0;
      if (!read_int(s, pos, 2, oh)) return std::nullopt;
      if (pos < s.size() && s[pos] == ':') ++pos;
      if (pos < s.size() && !read_int(s, pos, 2, om)) return std::nullopt;
      offset_ms = sign * (oh * 3600000LL + om * 60000LL);
    }
  }
  if (pos != s.size()) return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  const Millis days_ms = duration_cast<milliseconds>(sys_days{ymd}.time_since_epoch()).count();
  return days_ms + h * 3600000LL + mi * 60000LL + sec * 1000LL + std::llround(frac_ms) - offset_ms;
}

std::optional<TimeFormat> detect_time_format(std::string_view v) {
  if (const auto n = parse_number(v)) {
    return std::abs(*n) >= kEpochThresholdMs ? TimeFormat::epoch_ms : TimeFormat::relative_ms;
  }
  if (parse_iso8601(v)) return TimeFormat::iso8601;
  return std::nullopt;
}

std::optional<Millis> parse_time(std::string_view s, TimeFormat f, Millis t0) {
  if (f == TimeFormat::iso8601) {
    const auto abs = parse_iso8601(s);
    if (!abs) return std::nullopt;
    return *abs - t0;
  }
  const auto n = parse_number(s);
  if (!n) return std::nullopt;
  const Millis ms = std::llround(*n);
  return f == TimeFormat::epoch_ms ? ms - t0 : ms;
}

}  // namespace drivelab
