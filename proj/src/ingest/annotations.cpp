#include "drivelab/ingest/annotations.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "drivelab/ingest/csv.hpp"
#include "drivelab/ingest/detectors.hpp"
#include "drivelab/ingest/timestamps.hpp"

namespace drivelab {

AnnotationFormat parse_annotation_format(const std::string& s) {
  if (s == "driveact_activities") return AnnotationFormat::driveact_activities;
  if (s == "generic_intervals") return AnnotationFormat::generic_intervals;
  throw std::invalid_argument("unknown annotation format '" + s + "'");
}

namespace {

struct Interval {
  std::string participant;
  std::string label;
  Millis t_start = 0;
  Millis t_end = 0;
  EventKind kind = EventKind::activity;
  AttrMap attrs;
};

std::string where(const std::filesystem::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

std::vector<Interval> read_intervals(const std::filesystem::path& file, AnnotationFormat format,
                                     Report& report, const ImportOptions& opt, Millis t0) {
  const CsvTable table = load_csv(file);
  std::vector<Interval> out;
  if (table.header.empty()) return out;

  if (format == AnnotationFormat::driveact_activities) {
    if (!(opt.fps > 0.0)) throw std::invalid_argument("fps must be positive");
    const auto c_part = table.column("participant_id");
    const auto c_start = table.column("frame_start");
    const auto c_end = table.column("frame_end");
    const auto c_act = table.column("activity");
    if (!c_part || !c_start || !c_end || !c_act) {
      throw std::invalid_argument(file.string() +
                                  ": expected columns participant_id, frame_start, frame_end, activity");
    }
    const auto c_file = table.column("file_id");
    const auto c_ann = table.column("annotation_id");
    const auto c_chunk = table.column("chunk_id");
    for (const auto& row : table.rows) {
      if (row.fields.size() != table.header.size()) {
        report.warning(where(file, row.line), "row skipped: expected " +
                                                  std::to_string(table.header.size()) + " fields");
        continue;
      }
      const auto fs = parse_number(row.fields[*c_start]);
      const auto fe = parse_number(row.fields[*c_end]);
      if (!fs || !fe || *fe < *fs || row.fields[*c_act].empty()) {
        report.warning(where(file, row.line), "row skipped: malformed frame range or activity");
        continue;
      }
      Interval iv;
      iv.participant = row.fields[*c_part];
      iv.label = row.fields[*c_act];
      iv.t_start = std::llround(*fs * 1000.0 / opt.fps) + opt.t_offset;
      iv.t_end = std::llround(*fe * 1000.0 / opt.fps) + opt.t_offset;
      if (c_file) iv.attrs["file_id"] = row.fields[*c_file];
      if (c_ann) iv.attrs["annotation_id"] = row.fields[*c_ann];
      if (c_chunk) iv.attrs["chunk_id"] = row.fields[*c_chunk];
      out.push_back(std::move(iv));
    }
    return out;
  }

  const auto c_start = table.column("t_start");
  const auto c_end = table.column("t_end");
  const auto c_label = table.column("label");
  if (!c_start || !c_end || !c_label) {
    throw std::invalid_argument(file.string() + ": expected columns t_start, t_end, label");
  }
  const auto c_kind = table.column("kind");
  const auto c_part = table.column("participant_id");
  std::optional<TimeFormat> tf;
  for (const auto& row : table.rows) {
    if (row.fields.size() != table.header.size()) {
      report.warning(where(file, row.line),
                     "row skipped: expected " + std::to_string(table.header.size()) + " fields");
      continue;
    }
    if (!tf) tf = detect_time_format(row.fields[*c_start]);
    const auto ts = tf ? parse_time(row.fields[*c_start], *tf, t0) : std::nullopt;
    const auto te = tf ? parse_time(row.fields[*c_end], *tf, t0) : std::nullopt;
    if (!ts || !te || *te < *ts) {
      report.warning(where(file, row.line), "row skipped: malformed interval");
      continue;
    }
    Interval iv;
    iv.label = row.fields[*c_label];
    iv.t_start = *ts + opt.t_offset;
    iv.t_end = *te + opt.t_offset;
    if (c_part) iv.participant = row.fields[*c_part];
    if (c_kind && !row.fields[*c_kind].empty()) {
      try {
        iv.kind = parse_event_kind(row.fields[*c_kind]);
      } catch (const std::invalid_argument&) {
        report.warning(where(file, row.line), "row skipped: unknown event kind '" + row.fields[*c_kind] + "'");
        continue;
      }
    }
    out.push_back(std::move(iv));
  }
  return out;
}

void append(SessionRecording& session, std::vector<Interval> intervals, const std::string& prefix,
            Report& report, const std::filesystem::path& file) {
  std::unordered_set<std::string> used;
  for (const auto& e : session.events) used.insert(e.id);
  const std::size_t first_new = session.events.size();
  int n = 0;
  for (auto& iv : intervals) {
    EventRecord e;
    const std::string base = prefix + "-" + session.participant_id + "-" + std::to_string(++n);
    e.id = base;
    for (int k = 2; used.count(e.id); ++k) e.id = base + "~" + std::to_string(k);
    used.insert(e.id);
    e.kind = iv.kind;
    e.label = std::move(iv.label);
    e.t_start = iv.t_start;
    e.t_end = iv.t_end;
    e.participant_id = session.participant_id;
    e.attrs = std::move(iv.attrs);
    e.source = EventSource::logged;
    session.events.push_back(std::move(e));
  }
  // Contradictions: overlapping new intervals that disagree on the label.
  for (std::size_t i = first_new; i < session.events.size(); ++i) {
    for (std::size_t j = i + 1; j < session.events.size(); ++j) {
      const auto& a = session.events[i];
      const auto& b = session.events[j];
      if (a.t_start < b.t_end && b.t_start < a.t_end && a.label != b.label) {
        report.warning(file.filename().string(), "overlapping labels '" + a.label + "' (" + a.id +
                                                     ") and '" + b.label + "' (" + b.id + ")");
      }
    }
  }
  sort_events(session.events);
}

std::string prefix_for(AnnotationFormat f) {
  return f == AnnotationFormat::driveact_activities ? "driveact" : "interval";
}

}  // namespace

void import_annotations_into(SessionRecording& session, const std::filesystem::path& file,
                             AnnotationFormat format, Report& report, const ImportOptions& options) {
  const std::string who = options.participant.value_or(session.participant_id);
  auto rows = read_intervals(file, format, report, options, session.t0);
  std::vector<Interval> mine;
  for (auto& iv : rows) {
    if (iv.participant.empty() || iv.participant == who) mine.push_back(std::move(iv));
  }
  if (!rows.empty() && mine.empty()) {
    report.warning(file.filename().string(), "no rows for participant '" + who + "'");
  }
  append(session, std::move(mine), prefix_for(format), report, file);
}

ConfigDocument import_external_annotations(ConfigDocument doc, const std::filesystem::path& file,
                                           AnnotationFormat format, Report* report,
                                           const ImportOptions& options) {
  Report local;
  Report& rep = report ? *report : local;
  const Millis t0 = doc.sessions.empty() ? 0 : doc.sessions.front().t0;
  auto rows = read_intervals(file, format, rep, options, t0);
  std::map<std::size_t, std::vector<Interval>> per_session;
  for (auto& iv : rows) {
    const std::string who = options.participant.value_or(iv.participant);
    std::optional<std::size_t> target;
    for (std::size_t i = 0; i < doc.sessions.size() && !target; ++i) {
      if (doc.sessions[i].participant_id == who) target = i;
    }
    if (!target && who.empty() && doc.sessions.size() == 1) target = 0;
    if (!target) {
      rep.warning(file.filename().string(), "interval for unknown participant '" + who + "' skipped");
      continue;
    }
    per_session[*target].push_back(std::move(iv));
  }
  for (auto& [i, ivs] : per_session) {
    auto& s = doc.sessions[i];
    for (const auto& iv : ivs) s.duration = std::max(s.duration, iv.t_end);
    append(s, std::move(ivs), prefix_for(format), rep, file);
  }
  return doc;
}

}  // namespace drivelab
