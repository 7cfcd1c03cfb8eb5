#include "drivelab/analytics/metrics.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace drivelab {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ModalityMetrics modality_sequence_metrics(const std::vector<EventRecord>& events) {
  std::map<std::pair<std::string, std::string>, std::vector<const EventRecord*>> groups;
  for (const auto& e : events) {
    if (e.kind != EventKind::interaction) continue;
    const auto m = e.attrs.find("modality");
    if (m == e.attrs.end() || m->second.empty()) continue;
    const auto t = e.attrs.find("task");
    groups[{e.participant_id, t == e.attrs.end() ? std::string{} : t->second}].push_back(&e);
  }
  ModalityMetrics out;
  double gap_sum = 0.0;
  for (auto& [key, list] : groups) {
    std::stable_sort(list.begin(), list.end(), [](const EventRecord* a, const EventRecord* b) {
      if (a->t_start != b->t_start) return a->t_start < b->t_start;
      const auto& ma = a->attrs.at("modality");
      const auto& mb = b->attrs.at("modality");
      if (ma != mb) return ma < mb;
      return a->id < b->id;
    });
    ModalityChain c;
    c.participant_id = key.first;
    c.task = key.second;
    for (const auto* e : list) {
      c.modalities.push_back(e->attrs.at("modality"));
      c.event_ids.push_back(e->id);
      c.onsets.push_back(e->t_start);
    }
    if (c.onsets.size() > 1) {
      double sum = 0.0;
      for (std::size_t i = 1; i < c.onsets.size(); ++i) sum += static_cast<double>(c.onsets[i] - c.onsets[i - 1]);
      c.mean_gap_ms = sum / static_cast<double>(c.onsets.size() - 1);
      gap_sum += sum;
      out.gap_count += c.onsets.size() - 1;
    }
    out.chains.push_back(std::move(c));
  }
  if (out.gap_count > 0) out.dataset_mean_gap_ms = gap_sum / static_cast<double>(out.gap_count);
  return out;
}

ModalityMetrics modality_sequence_metrics(const ConfigDocument& doc) {
  std::vector<EventRecord> all;
  for (const auto& s : doc.sessions) all.insert(all.end(), s.events.begin(), s.events.end());
  return modality_sequence_metrics(all);
}

std::string chain_label(const ModalityChain& c) {
  std::string out;
  for (const auto& m : c.modalities) {
    if (!out.empty()) out += '>';
    out += m;
  }
  return out;
}

std::string metrics_csv(const ModalityMetrics& m) {
  std::string out = "participant_id,task,chain,events,mean_gap_ms\n";
  for (const auto& c : m.chains) {
    out += csv_field(c.participant_id) + "," + csv_field(c.task) + "," + csv_field(chain_label(c)) + "," +
           std::to_string(c.event_ids.size()) + "," + (c.mean_gap_ms ? format_double(*c.mean_gap_ms) : "") + "\n";
  }
  out += "*,*,dataset," + std::to_string(m.gap_count) + "," +
         (m.dataset_mean_gap_ms ? format_double(*m.dataset_mean_gap_ms) : "") + "\n";
  return out;
}

void to_json(Json& j, const ModalityMetrics& m) {
  Json chains = Json::array();
  for (const auto& c : m.chains) {
    Json e = {{"participant_id", c.participant_id}, {"task", c.task},       {"modalities", c.modalities},
              {"event_ids", c.event_ids},           {"onsets", c.onsets},   {"chain", chain_label(c)}};
    e["mean_gap_ms"] = c.mean_gap_ms ? Json(*c.mean_gap_ms) : Json(nullptr);
    chains.push_back(std::move(e));
  }
  j = {{"chains", chains}, {"gap_count", m.gap_count}};
  j["dataset_mean_gap_ms"] = m.dataset_mean_gap_ms ? Json(*m.dataset_mean_gap_ms) : Json(nullptr);
}

}  // namespace drivelab
