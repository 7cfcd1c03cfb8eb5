#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"

namespace drivelab {

enum class Severity { error, warning, info };

const char* to_string(Severity s);

struct Issue {
  Severity severity = Severity::error;
  std::string path;  // e.g. "sessions[0].events[3]"
  std::string message;
};

/// Diagnostics sink shared by validation, ingestion and analysis steps.
struct Report {
  std::vector<Issue> issues;

  void error(std::string path, std::string message);
  void warning(std::string path, std::string message);
  void info(std::string path, std::string message);
  void merge(const Report& other);

  std::size_t count(Severity s) const;
  std::size_t error_count() const { return count(Severity::error); }
  std::size_t warning_count() const { return count(Severity::warning); }
  bool ok() const { return error_count() == 0; }
  bool has(Severity s, const std::string& path_prefix, const std::string& message_part = {}) const;
};

void to_json(Json& j, const Issue& i);
void to_json(Json& j, const Report& r);
std::string to_text(const Report& r);

inline constexpr double kUnitTolerance = 1e-6;
inline constexpr double kSurfaceTolerance = 0.01;       // touch samples, metres
inline constexpr double kMinTriangleArea = 1e-12;       // square metres
inline constexpr double kRateMismatchTolerance = 0.10;  // declared vs median gap

/// Checks every document invariant. Hard violations are errors; declared-rate
/// mismatches and missing optional content are warnings. Never touches the
/// filesystem.
Report validate(const ConfigDocument& doc);

/// True when `path` is relative and free of a drive/root prefix.
bool is_relative_media_path(const std::string& path);

/// True when the closed polygon has no intersecting non-adjacent edges.
bool is_simple_polygon(const std::vector<Vec2>& ring);

}  // namespace drivelab
