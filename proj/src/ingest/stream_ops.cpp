#include "drivelab/ingest/stream_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drivelab {

const char* to_string(Fence f) { return f == Fence::low ? "low" : "high"; }

double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

IqrFences iqr_fences(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  IqrFences f;
  f.q1 = quantile_type7(values, 0.25);
  f.q3 = quantile_type7(values, 0.75);
  const double iqr = f.q3 - f.q1;
  f.low = f.q1 - 1.5 * iqr;
  f.high = f.q3 + 1.5 * iqr;
  return f;
}

std::vector<OutlierMark> detect_outliers(const SampledStream& stream, Report* report) {
  std::vector<OutlierMark> marks;
  if (stream.samples.size() < 4) {
    if (report) {
      report->warning("streams." + stream.name, "fewer than 4 samples, outlier detection skipped");
    }
    return marks;
  }
  std::vector<double> values;
  values.reserve(stream.samples.size());
  for (const auto& s : stream.samples) values.push_back(s.value);
  const IqrFences f = iqr_fences(std::move(values));
  for (const auto& s : stream.samples) {
    if (s.value < f.low) marks.push_back({stream.name, s.t, s.value, Fence::low});
    if (s.value > f.high) marks.push_back({stream.name, s.t, s.value, Fence::high});
  }
  return marks;
}

SampledStream resample(const SampledStream& stream, double target_hz) {
  if (!(target_hz > 0.0) || !std::isfinite(target_hz)) {
    throw std::invalid_argument("resample: target rate must be positive");
  }
  if (stream.samples.size() < 2) throw std::invalid_argument("resample: needs at least two samples");
  SampledStream out;
  out.name = stream.name;
  out.unit = stream.unit;
  out.rate_hz = target_hz;
  out.gaps = stream.gaps;

  const auto& in = stream.samples;
  const Millis t_first = in.front().t;
  const Millis t_last = in.back().t;
  std::size_t seg = 0;
  std::size_t gap = 0;
  for (long long k = 0;; ++k) {
    const Millis t = t_first + std::llround(static_cast<double>(k) * 1000.0 / target_hz);
    if (t > t_last) break;
    while (gap < stream.gaps.size() && stream.gaps[gap].t_end <= t) ++gap;
    if (gap < stream.gaps.size() && stream.gaps[gap].t_start < t && t < stream.gaps[gap].t_end) continue;
    while (seg + 1 < in.size() && in[seg + 1].t <= t) ++seg;
    if (seg + 1 >= in.size() || in[seg].t == t) {
      out.samples.push_back({t, in[seg].value});
      continue;
    }
    const auto& a = in[seg];
    const auto& b = in[seg + 1];
    const double alpha = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
    out.samples.push_back({t, a.value + (b.value - a.value) * alpha});
  }
  return out;
}

double median_period_ms(const std::vector<StreamSample>& samples) {
  if (samples.size() < 2) return 0.0;
  std::vector<double> dts;
  dts.reserve(samples.size() - 1);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    dts.push_back(static_cast<double>(samples[i].t - samples[i - 1].t));
  }
  std::sort(dts.begin(), dts.end());
  return quantile_type7(dts, 0.5);
}

std::vector<StreamGap> find_gaps(const std::vector<StreamSample>& samples, double rate_hz) {
  std::vector<StreamGap> gaps;
  if (!(rate_hz > 0.0)) return gaps;
  const double limit = 2.0 * 1000.0 / rate_hz;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (static_cast<double>(samples[i].t - samples[i - 1].t) > limit) {
      gaps.push_back({samples[i - 1].t, samples[i].t});
    }
  }
  return gaps;
}

}  // namespace drivelab
