#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

enum class AnnotationFormat { driveact_activities, generic_intervals };

AnnotationFormat parse_annotation_format(const std::string& s);

struct ImportOptions {
  /// Video frame rate for frame-indexed formats.
  double fps = 15.0;
  /// Only rows of this participant; unset means rows go to the session of
  /// the participant named in the row.
  std::optional<std::string> participant;
  /// Added to every converted timestamp.
  Millis t_offset = 0;
};

/// Maps external interval annotations to activity events (source logged).
/// Overlapping intervals with different labels are kept and reported as
/// warnings; malformed rows are skipped with a warning.
ConfigDocument import_external_annotations(ConfigDocument doc, const std::filesystem::path& file,
                                           AnnotationFormat format, Report* report = nullptr,
                                           const ImportOptions& options = {});

/// Same mapping into a single session; rows of other participants are ignored.
void import_annotations_into(SessionRecording& session, const std::filesystem::path& file,
                             AnnotationFormat format, Report& report, const ImportOptions& options);

}  // namespace drivelab
