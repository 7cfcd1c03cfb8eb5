#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"

namespace drivelab {

struct ModalityChain {
  std::string participant_id;
  std::string task;  // attrs["task"], empty when absent
  std::vector<std::string> modalities;
  std::vector<std::string> event_ids;
  std::vector<Millis> onsets;
  std::optional<double> mean_gap_ms;  // absent for a chain of one
};

struct ModalityMetrics {
  std::vector<ModalityChain> chains;  // ordered by (participant, task)
  std::size_t gap_count = 0;
  std::optional<double> dataset_mean_gap_ms;  // mean over all gaps of all chains
};

/// Chains of interaction events that carry attrs["modality"], grouped by
/// participant and attrs["task"]. Within a chain events are ordered by onset,
/// equal onsets by modality name.
ModalityMetrics modality_sequence_metrics(const std::vector<EventRecord>& events);
ModalityMetrics modality_sequence_metrics(const ConfigDocument& doc);

std::string chain_label(const ModalityChain& c);  // e.g. "gaze>pointing>speech"

/// participant_id,task,chain,events,mean_gap_ms rows plus a final dataset row.
std::string metrics_csv(const ModalityMetrics& m);

void to_json(Json& j, const ModalityMetrics& m);

}  // namespace drivelab
