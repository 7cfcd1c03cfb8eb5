#include "drivelab/ingest/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <unordered_set>

#include "drivelab/ingest/csv.hpp"

namespace drivelab {

DetectorInput::DetectorInput(const SessionRecording& session, std::set<std::string> granted)
    : session_(session), granted_(std::move(granted)) {}

void DetectorInput::require(const std::string& name) const {
  if (!granted_.count(name)) throw std::logic_error("detector read undeclared input '" + name + "'");
}

const SampledStream& DetectorInput::stream(const std::string& name) const {
  require("stream:" + name);
  const SampledStream* s = session_.find_stream(name);
  if (!s) throw std::logic_error("stream '" + name + "' missing");
  return *s;
}

const std::vector<SpeechSegment>& DetectorInput::speech() const {
  require("speech");
  return session_.speech;
}

const std::vector<SkeletonFrame>& DetectorInput::skeleton() const {
  require("skeleton");
  return session_.skeleton;
}

const std::vector<std::string>& DetectorInput::joint_names() const {
  require("skeleton");
  return session_.joint_names;
}

const std::vector<RaySample>& DetectorInput::gaze() const {
  require("gaze");
  return session_.gaze;
}

const std::vector<RaySample>& DetectorInput::pointing() const {
  require("pointing");
  return session_.pointing;
}

const std::vector<SurfaceSample>& DetectorInput::touches() const {
  require("touches");
  return session_.touches;
}

const std::vector<GeoSample>& DetectorInput::ego_path() const {
  require("ego_path");
  return session_.ego_path;
}

bool DetectorInput::available(const SessionRecording& s, const std::string& req) {
  if (req.rfind("stream:", 0) == 0) {
    const SampledStream* st = s.find_stream(req.substr(7));
    return st && !st->samples.empty();
  }
  if (req == "speech") return !s.speech.empty();
  if (req == "skeleton") return !s.skeleton.empty();
  if (req == "gaze") return !s.gaze.empty();
  if (req == "pointing") return !s.pointing.empty();
  if (req == "touches") return !s.touches.empty();
  if (req == "ego_path") return !s.ego_path.empty();
  return false;
}

namespace {

std::string param(const DetectorParams& p, const std::string& key, const std::string& fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

double num_param(const DetectorParams& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  if (it == p.end()) return fallback;
  const auto v = parse_number(it->second);
  if (!v) throw std::invalid_argument("detector parameter '" + key + "' is not a number: " + it->second);
  return *v;
}

class ThresholdDetector final : public Detector {
 public:
  explicit ThresholdDetector(const DetectorParams& p)
      : stream_(param(p, "stream", "eda")),
        k_(num_param(p, "k", 2.0)),
        min_duration_(std::llround(num_param(p, "min_duration_ms", 3000.0))),
        label_(param(p, "label", "stress")) {}

  std::string name() const override { return "threshold"; }
  std::set<std::string> requirements() const override { return {"stream:" + stream_}; }

  std::vector<Detection> detect(const DetectorInput& in) const override {
    const SampledStream& s = in.stream(stream_);
    std::vector<Detection> out;
    if (s.samples.size() < 2) return out;
    double mean = 0.0;
    for (const auto& x : s.samples) mean += x.value;
    mean /= static_cast<double>(s.samples.size());
    double var = 0.0;
    for (const auto& x : s.samples) var += (x.value - mean) * (x.value - mean);
    const double sd = std::sqrt(var / static_cast<double>(s.samples.size()));
    if (!(sd > 0.0)) return out;
    const double threshold = mean + k_ * sd;

    auto in_gap = [&](Millis a, Millis b) {
      for (const auto& g : s.gaps) {
        if (g.t_start < b && a < g.t_end) return true;
      }
      return false;
    };
    std::size_t i = 0;
    while (i < s.samples.size()) {
      if (!(s.samples[i].value > threshold)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      double z_sum = (s.samples[i].value - mean) / sd;
      while (j + 1 < s.samples.size() && s.samples[j + 1].value > threshold &&
             !in_gap(s.samples[j].t, s.samples[j + 1].t)) {
        ++j;
        z_sum += (s.samples[j].value - mean) / sd;
      }
      const Millis t0 = s.samples[i].t;
      const Millis t1 = s.samples[j].t;
      if (t1 - t0 >= min_duration_) {
        const double z_mean = z_sum / static_cast<double>(j - i + 1);
        Detection d;
        d.kind = EventKind::emotion;
        d.label = label_;
        d.t_start = t0;
        d.t_end = t1;
        d.confidence = std::clamp(0.5 + 0.5 * std::tanh(z_mean - k_), 0.0, 1.0);
        d.attrs["stream"] = stream_;
        out.push_back(std::move(d));
      }
      i = j + 1;
    }
    return out;
  }

 private:
  std::string stream_;
  double k_;
  Millis min_duration_;
  std::string label_;
};

class EyeClosureDetector final : public Detector {
 public:
  explicit EyeClosureDetector(const DetectorParams& p)
      : stream_(param(p, "stream", "eye_closure")),
        window_(std::llround(num_param(p, "window_ms", 60000.0))),
        ratio_(num_param(p, "ratio", 0.7)),
        closed_level_(num_param(p, "closed_level", 0.8)),
        label_(param(p, "label", "drowsiness")) {
    if (window_ <= 0) throw std::invalid_argument("eye_closure window_ms must be positive");
  }

  std::string name() const override { return "eye_closure"; }
  std::set<std::string> requirements() const override { return {"stream:" + stream_}; }

  std::vector<Detection> detect(const DetectorInput& in) const override {
    const auto& xs = in.stream(stream_).samples;
    std::vector<Detection> out;
    if (xs.empty()) return out;
    // Trailing window (t - window, t] evaluated at each sample once a full
    // window of history exists.
    std::size_t lo = 0;
    std::size_t closed = 0;
    std::optional<Detection> open;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i].value >= closed_level_) ++closed;
      while (xs[lo].t <= xs[i].t - window_) {
        if (xs[lo].value >= closed_level_) --closed;
        ++lo;
      }
      const bool full = xs[i].t - xs.front().t >= window_;
      const double share = static_cast<double>(closed) / static_cast<double>(i - lo + 1);
      const bool drowsy = full && share > ratio_;
      if (drowsy) {
        if (!open) {
          open = Detection{};
          open->kind = EventKind::emotion;
          open->label = label_;
          open->t_start = xs[i].t - window_;
          open->confidence = share;
          open->attrs["stream"] = stream_;
        }
        open->t_end = xs[i].t;
        open->confidence = std::max(open->confidence, share);
      } else if (open) {
        out.push_back(*open);
        open.reset();
      }
    }
    if (open) out.push_back(*open);
    return out;
  }

 private:
  std::string stream_;
  Millis window_;
  double ratio_;
  double closed_level_;
  std::string label_;
};

class SpeechActivityDetector final : public Detector {
 public:
  explicit SpeechActivityDetector(const DetectorParams& p) : label_(param(p, "label", "speech")) {}

  std::string name() const override { return "speech_activity"; }
  std::set<std::string> requirements() const override { return {"speech"}; }

  std::vector<Detection> detect(const DetectorInput& in) const override {
    std::vector<Detection> out;
    for (const auto& seg : in.speech()) {
      Detection d;
      d.kind = EventKind::audio;
      d.label = label_;
      d.t_start = seg.t_start;
      d.t_end = seg.t_end;
      d.confidence = 1.0;
      d.attrs["modality"] = "speech";
      d.attrs["transcript"] = seg.transcript;
      if (seg.referent) d.attrs["referent"] = *seg.referent;
      out.push_back(std::move(d));
    }
    return out;
  }

 private:
  std::string label_;
};

}  // namespace

std::unique_ptr<Detector> make_threshold_detector(const DetectorParams& p) {
  return std::make_unique<ThresholdDetector>(p);
}

std::unique_ptr<Detector> make_eye_closure_detector(const DetectorParams& p) {
  return std::make_unique<EyeClosureDetector>(p);
}

std::unique_ptr<Detector> make_speech_activity_detector(const DetectorParams& p) {
  return std::make_unique<SpeechActivityDetector>(p);
}

std::unique_ptr<Detector> make_detector(const std::string& name, const DetectorParams& params) {
  if (name == "threshold") return make_threshold_detector(params);
  if (name == "eye_closure") return make_eye_closure_detector(params);
  if (name == "speech_activity") return make_speech_activity_detector(params);
  throw std::invalid_argument("unknown detector '" + name + "'");
}

void sort_events(std::vector<EventRecord>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const EventRecord& a, const EventRecord& b) { return a.t_start < b.t_start; });
}

std::string unique_event_id(const std::vector<EventRecord>& events, const std::string& base) {
  std::unordered_set<std::string> used;
  for (const auto& e : events) used.insert(e.id);
  if (!used.count(base)) return base;
  for (int k = 2;; ++k) {
    std::string candidate = base + "~" + std::to_string(k);
    if (!used.count(candidate)) return candidate;
  }
}

ConfigDocument run_detectors(ConfigDocument doc, const std::vector<const Detector*>& detectors,
                             Report* report) {
  for (std::size_t si = 0; si < doc.sessions.size(); ++si) {
    auto& session = doc.sessions[si];
    std::vector<EventRecord> added;
    std::unordered_set<std::string> used;
    for (const auto& e : session.events) used.insert(e.id);
    for (const Detector* det : detectors) {
      const auto reqs = det->requirements();
      std::string missing;
      for (const auto& r : reqs) {
        if (!DetectorInput::available(session, r)) missing = r;
      }
      if (!missing.empty()) {
        if (report) {
          report->warning("sessions[" + std::to_string(si) + "]",
                          "detector '" + det->name() + "' skipped: requirement '" + missing +
                              "' not available");
        }
        continue;
      }
      const DetectorInput input(session, reqs);
      int n = 0;
      for (auto& d : det->detect(input)) {
        EventRecord e;
        e.kind = d.kind;
        e.label = std::move(d.label);
        e.t_start = std::clamp<Millis>(d.t_start, 0, session.duration);
        e.t_end = std::clamp<Millis>(d.t_end, e.t_start, session.duration);
        e.participant_id = session.participant_id;
        e.attrs = std::move(d.attrs);
        e.attrs["detector"] = det->name();
        e.confidence = d.confidence;
        e.source = EventSource::inferred;
        const std::string base = det->name() + "-" + session.participant_id + "-" + std::to_string(++n);
        e.id = base;
        for (int k = 2; used.count(e.id); ++k) e.id = base + "~" + std::to_string(k);
        used.insert(e.id);
        added.push_back(std::move(e));
      }
    }
    session.events.insert(session.events.end(), added.begin(), added.end());
    sort_events(session.events);
  }
  return doc;
}

}  // namespace drivelab
