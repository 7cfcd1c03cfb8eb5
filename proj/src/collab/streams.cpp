#include "drivelab/collab/streams.hpp"

#include <algorithm>
#include <cmath>

#include "drivelab/ingest/stream_ops.hpp"

namespace drivelab {

std::vector<StreamSample> lttb(const std::vector<StreamSample>& samples, std::size_t max_points) {
  const std::size_t n = samples.size();
  if (n <= max_points || n <= 2) return samples;
  if (max_points < 3) return {samples.front(), samples.back()};

  std::vector<StreamSample> out;
  out.reserve(max_points);
  out.push_back(samples.front());
  const double bucket = static_cast<double>(n - 2) / static_cast<double>(max_points - 2);
  std::size_t a = 0;
  for (std::size_t i = 0; i < max_points - 2; ++i) {
    const auto lo = static_cast<std::size_t>(std::floor(bucket * static_cast<double>(i))) + 1;
    const auto hi = std::min(n - 1, static_cast<std::size_t>(std::floor(bucket * static_cast<double>(i + 1))) + 1);
    // Average of the next bucket (or the last point for the final bucket).
    const auto nlo = hi;
    const auto nhi = std::min(n, static_cast<std::size_t>(std::floor(bucket * static_cast<double>(i + 2))) + 1);
    double avg_t = 0.0;
    double avg_v = 0.0;
    for (std::size_t k = nlo; k < nhi; ++k) {
      avg_t += static_cast<double>(samples[k].t);
      avg_v += samples[k].value;
    }
    const double cnt = static_cast<double>(std::max<std::size_t>(1, nhi - nlo));
    if (nhi <= nlo) {
      avg_t = static_cast<double>(samples.back().t);
      avg_v = samples.back().value;
    } else {
      avg_t /= cnt;
      avg_v /= cnt;
    }
    const double at = static_cast<double>(samples[a].t);
    const double av = samples[a].value;
    std::size_t best = lo;
    double best_area = -1.0;
    for (std::size_t k = lo; k < hi; ++k) {
      const double area =
          std::abs((at - avg_t) * (samples[k].value - av) - (at - static_cast<double>(samples[k].t)) * (avg_v - av));
      if (area > best_area) {
        best_area = area;
        best = k;
      }
    }
    out.push_back(samples[best]);
    a = best;
  }
  out.push_back(samples.back());
  return out;
}

Json stream_window(const ConfigDocument& doc, const std::string& name, Millis from, Millis to,
                   std::size_t max_points) {
  Json out = Json::array();
  for (const auto& s : doc.sessions) {
    const auto it = std::find_if(s.streams.begin(), s.streams.end(),
                                 [&](const SampledStream& x) { return x.name == name; });
    if (it == s.streams.end()) continue;
    const auto first = std::lower_bound(it->samples.begin(), it->samples.end(), from,
                                        [](const StreamSample& x, Millis t) { return x.t < t; });
    const auto last = std::upper_bound(it->samples.begin(), it->samples.end(), to,
                                       [](Millis t, const StreamSample& x) { return t < x.t; });
    const std::vector<StreamSample> window(first, last);

    Json points = Json::array();
    for (const auto& p : lttb(window, max_points)) points.push_back({p.t, p.value});
    Json outliers = Json::array();
    for (const auto& m : detect_outliers(*it)) {
      if (m.t >= from && m.t <= to) {
        outliers.push_back({{"t", m.t}, {"value", m.value}, {"fence", to_string(m.fence)}});
      }
    }
    Json gaps = Json::array();
    for (const auto& g : it->gaps) {
      if (g.t_end >= from && g.t_start <= to) gaps.push_back({{"t_start", g.t_start}, {"t_end", g.t_end}});
    }
    Json entry = {{"participant_id", s.participant_id},
                  {"condition", s.condition},
                  {"unit", it->unit},
                  {"rate_hz", it->rate_hz},
                  {"samples_in_window", window.size()},
                  {"points", points},
                  {"outliers", outliers},
                  {"gaps", gaps}};
    if (!window.empty()) {
      double sum = 0.0;
      for (const auto& p : window) sum += p.value;
      entry["mean"] = sum / static_cast<double>(window.size());
    } else {
      entry["mean"] = nullptr;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace drivelab
