#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "drivelab/collab/store.hpp"

namespace drivelab {

struct HttpRequest {
  std::string method;  // "GET", "POST"
  std::string target;  // path with optional query
  std::string content_type;
  std::string body;
};

struct HttpResponse {
  unsigned status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct MultipartPart {
  std::string name;
  std::string filename;
  std::string content_type;
  std::string data;
};

/// Boundary parameter of a multipart/form-data content type, or "".
std::string multipart_boundary(std::string_view content_type);
/// Throws ParseError on malformed bodies.
std::vector<MultipartPart> parse_multipart(std::string_view body, std::string_view boundary);

std::string percent_decode(std::string_view s);
/// Splits "a=1&b=x%20y"; later duplicates win.
std::map<std::string, std::string> parse_query(std::string_view query);

/// Routes the REST surface of the collaboration server. Paths outside
/// /sessions are served from `static_dir` when it is set.
HttpResponse handle_http(SessionStore& store, const HttpRequest& req, const std::filesystem::path& static_dir = {});

/// Session id of a "/sessions/{id}/sync" target, or "".
std::string sync_target_session(std::string_view target);

}  // namespace drivelab
