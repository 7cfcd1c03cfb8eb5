#include "drivelab/collab/http_api.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "drivelab/analytics/heatmap_export.hpp"
#include "drivelab/collab/streams.hpp"

namespace drivelab {

namespace fs = std::filesystem;

namespace {

struct HttpError {
  unsigned status;
  std::string message;
};

HttpResponse json_response(const Json& j, unsigned status = 200) {
  return {status, "application/json", canonical_dump(j)};
}

HttpResponse error_response(unsigned status, const std::string& message) {
  return json_response({{"error", message}}, status);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t next = s.find(sep, pos);
    const std::size_t end = next == std::string_view::npos ? s.size() : next;
    out.emplace_back(s.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Value of `key="..."` or `key=...` inside a header parameter list.
std::string header_param(std::string_view header, const std::string& key) {
  for (const auto& raw : split(header, ';')) {
    std::string_view p = trim(raw);
    const auto eq = p.find('=');
    if (eq == std::string_view::npos) continue;
    if (lower(std::string(trim(p.substr(0, eq)))) != key) continue;
    std::string_view v = trim(p.substr(eq + 1));
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
    return std::string(v);
  }
  return {};
}

Millis query_ms(const std::map<std::string, std::string>& q, const std::string& key, Millis fallback) {
  const auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return fallback;
  Millis v = 0;
  const auto* end = it->second.data() + it->second.size();
  const auto [p, ec] = std::from_chars(it->second.data(), end, v);
  if (ec != std::errc() || p != end) throw HttpError{400, "query parameter '" + key + "' must be integer ms"};
  return v;
}

std::set<std::string> query_list(const std::map<std::string, std::string>& q, const std::string& key) {
  std::set<std::string> out;
  const auto it = q.find(key);
  if (it == q.end()) return out;
  for (auto& s : split(it->second, ',')) {
    if (!s.empty()) out.insert(s);
  }
  return out;
}

Json session_summary(const HostedSession& s) {
  const auto& doc = s.document();
  const auto state = s.state();
  Json participants = Json::array();
  for (const auto& p : doc.participants) participants.push_back(p.id);
  return {{"id", s.id()},
          {"title", doc.study_meta.title},
          {"participants", participants},
          {"sessions", doc.sessions.size()},
          {"duration", doc.timeline_duration()},
          {"seq", state.seq},
          {"connected", s.connected()}};
}

ConfigDocument uploaded_document(const HttpRequest& req) {
  const std::string boundary = multipart_boundary(req.content_type);
  if (boundary.empty()) return parse_document(std::string_view(req.body));
  const auto parts = parse_multipart(req.body, boundary);
  const MultipartPart* config = nullptr;
  for (const auto& p : parts) {
    if (p.name == "config") config = &p;
  }
  if (!config) {
    if (parts.empty()) throw ParseError("multipart upload has no parts");
    config = &parts.front();
  }
  // Side files (OBJ meshes referenced by relative path) go to a scratch dir.
  const fs::path scratch = fs::temp_directory_path() / ("drivelab-upload-" + random_hex(8));
  fs::create_directories(scratch);
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{scratch};
  for (const auto& p : parts) {
    if (&p == config || p.filename.empty()) continue;
    const fs::path name = fs::path(p.filename).filename();
    if (name.empty() || name == "." || name == "..") continue;
    write_file(scratch / name, p.data);
  }
  return parse_document(std::string_view(config->data), scratch);
}

std::string content_type_for(const fs::path& p) {
  static const std::map<std::string, std::string> types = {
      {".html", "text/html; charset=utf-8"}, {".js", "text/javascript"}, {".mjs", "text/javascript"},
      {".css", "text/css"},                   {".json", "application/json"}, {".png", "image/png"},
      {".svg", "image/svg+xml"},              {".wasm", "application/wasm"}, {".ico", "image/x-icon"},
      {".txt", "text/plain; charset=utf-8"}};
  const auto it = types.find(lower(p.extension().string()));
  return it == types.end() ? "application/octet-stream" : it->second;
}

HttpResponse static_file(const fs::path& root, std::string_view path) {
  if (root.empty()) return error_response(404, "not found");
  std::string rel = percent_decode(path);
  while (!rel.empty() && rel.front() == '/') rel.erase(rel.begin());
  if (rel.empty()) rel = "index.html";
  const fs::path candidate = fs::path(rel).lexically_normal();
  if (candidate.is_absolute() || (!candidate.empty() && *candidate.begin() == "..")) {
    return error_response(403, "forbidden");
  }
  fs::path file = root / candidate;
  if (fs::is_directory(file)) file /= "index.html";
  if (!fs::is_regular_file(file)) return error_response(404, "not found");
  return {200, content_type_for(file), read_file(file)};
}

HttpResponse session_route(SessionStore& store, const HttpRequest& req, const std::vector<std::string>& seg,
                           const std::map<std::string, std::string>& query) {
  auto session = store.get(seg[1]);
  if (!session) return error_response(404, "unknown session '" + seg[1] + "'");
  if (req.method != "GET") return error_response(405, "method not allowed");
  const std::string what = seg.size() > 2 ? seg[2] : "";
  if (seg.size() == 2) return json_response(session_summary(*session));

  if (what == "config" && seg.size() == 3) return {200, "application/json", session->config_bytes()};
  if (what == "state" && seg.size() == 3) return json_response(full_state_json(session->state()));
  if (what == "ledger" && seg.size() == 3) {
    session->flush();
    return {200, "application/x-ndjson", read_file(session->dir() / "ledger.ndjson")};
  }

  if (what == "heatmaps") {
    if (seg.size() == 3) {
      Json layers = Json::array();
      for (const auto& l : session->heatmaps()) layers.push_back(heatmap_summary(l));
      return json_response(layers);
    }
    if (seg.size() != 4) return error_response(404, "not found");
    const std::string& file = seg[3];
    const auto dot = file.rfind('.');
    if (dot == std::string::npos) return error_response(404, "heatmap path needs .f32 or .png");
    const std::string layer_id = file.substr(0, dot);
    const std::string ext = file.substr(dot + 1);
    const HeatmapLayer* layer = session->heatmap(layer_id);
    if (!layer) return error_response(404, "unknown heatmap layer '" + layer_id + "'");
    if (ext == "f32") return {200, "application/octet-stream", encode_f32(*layer)};
    if (ext == "png") {
      const auto ramp = query.count("ramp") ? query.at("ramp") : std::string();
      try {
        return {200, "image/png", encode_png(*layer, ramp)};
      } catch (const std::invalid_argument& e) {
        return error_response(400, e.what());
      }
    }
    return error_response(404, "heatmap format must be f32 or png");
  }

  if (what == "events" && seg.size() == 3) {
    const Millis duration = session->document().timeline_duration();
    const Millis from = query_ms(query, "from", 0);
    const Millis to = query_ms(query, "to", duration);
    std::set<EventKind> kinds;
    for (const auto& k : query_list(query, "kinds")) {
      try {
        kinds.insert(parse_event_kind(k));
      } catch (const std::exception&) {
        return error_response(400, "unknown event kind '" + k + "'");
      }
    }
    Json events = Json::array();
    for (const EventRecord* e : session->events().query(from, to, kinds, query_list(query, "participants"))) {
      events.push_back(*e);
    }
    return json_response(events);
  }

  if (what == "streams" && seg.size() == 4) {
    const Millis duration = session->document().timeline_duration();
    const Millis from = query_ms(query, "from", 0);
    const Millis to = query_ms(query, "to", duration);
    const Millis max_points = query_ms(query, "max_points", 1000);
    if (max_points < 2) return error_response(400, "max_points must be at least 2");
    const std::string name = percent_decode(seg[3]);
    Json series = stream_window(session->document(), name, from, to, static_cast<std::size_t>(max_points));
    if (series.empty()) return error_response(404, "no stream named '" + name + "'");
    return json_response({{"name", name}, {"from", from}, {"to", to}, {"series", series}});
  }

  if (what == "snapshot" && seg.size() == 3) {
    ReplayState state = session->state().playback;
    state.t = query_ms(query, "t", state.t);
    return json_response(snapshot(session->document(), state));
  }
  return error_response(404, "not found");
}

}  // namespace

std::string multipart_boundary(std::string_view content_type) {
  const auto semi = content_type.find(';');
  if (lower(std::string(trim(content_type.substr(0, semi)))) != "multipart/form-data") return {};
  if (semi == std::string_view::npos) return {};
  return header_param(content_type.substr(semi + 1), "boundary");
}

std::vector<MultipartPart> parse_multipart(std::string_view body, std::string_view boundary) {
  const std::string delim = "--" + std::string(boundary);
  std::vector<MultipartPart> parts;
  std::size_t pos = body.find(delim);
  if (pos == std::string_view::npos) throw ParseError("multipart boundary not found");
  while (true) {
    pos += delim.size();
    if (body.substr(pos, 2) == "--") return parts;
    if (body.substr(pos, 2) != "\r\n") throw ParseError("malformed multipart delimiter line");
    pos += 2;
    const std::size_t header_end = body.find("\r\n\r\n", pos);
    if (header_end == std::string_view::npos) throw ParseError("multipart part without header terminator");
    MultipartPart part;
    for (const auto& line : split(body.substr(pos, header_end - pos), '\n')) {
      const std::string_view l = trim(line);
      const auto colon = l.find(':');
      if (colon == std::string_view::npos) continue;
      const std::string key = lower(std::string(trim(l.substr(0, colon))));
      const std::string_view value = trim(l.substr(colon + 1));
      if (key == "content-disposition") {
        part.name = header_param(value, "name");
        part.filename = header_param(value, "filename");
      } else if (key == "content-type") {
        part.content_type = std::string(value);
      }
    }
    const std::size_t data_start = header_end + 4;
    const std::size_t next = body.find("\r\n" + delim, data_start);
    if (next == std::string_view::npos) throw ParseError("multipart part is not terminated");
    part.data = std::string(body.substr(data_start, next - data_start));
    parts.push_back(std::move(part));
    pos = next + 2;
  }
}

std::string percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
      i += 2;
    } else if (s[i] == '+') {
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::map<std::string, std::string> parse_query(std::string_view query) {
  std::map<std::string, std::string> out;
  if (query.empty()) return out;
  for (const auto& kv : split(query, '&')) {
    if (kv.empty()) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      out[percent_decode(kv)] = "";
    } else {
      out[percent_decode(std::string_view(kv).substr(0, eq))] = percent_decode(std::string_view(kv).substr(eq + 1));
    }
  }
  return out;
}

std::string sync_target_session(std::string_view target) {
  const auto path = target.substr(0, target.find('?'));
  const auto seg = split(path, '/');
  if (seg.size() == 4 && seg[0].empty() && seg[1] == "sessions" && seg[3] == "sync" && !seg[2].empty()) {
    return seg[2];
  }
  return {};
}

HttpResponse handle_http(SessionStore& store, const HttpRequest& req, const fs::path& static_dir) {
  const auto qpos = req.target.find('?');
  const std::string_view path = std::string_view(req.target).substr(0, qpos);
  const auto query = parse_query(qpos == std::string::npos ? std::string_view() : std::string_view(req.target).substr(qpos + 1));
  auto seg = split(path, '/');
  seg.erase(seg.begin());  // leading empty segment
  if (!seg.empty() && seg.back().empty()) seg.pop_back();

  try {
    if (seg.empty() || seg[0] != "sessions") {
      if (req.method != "GET") return error_response(405, "method not allowed");
      return static_file(static_dir, path);
    }
    if (seg.size() == 1) {
      if (req.method == "GET") {
        Json list = Json::array();
        for (const auto& s : store.list()) list.push_back(session_summary(*s));
        return json_response(list);
      }
      if (req.method == "POST") {
        ConfigDocument doc;
        try {
          doc = uploaded_document(req);
        } catch (const std::exception& e) {
          return error_response(400, e.what());
        }
        Report report;
        auto session = store.host(doc, report);
        if (!session) return json_response({{"error", "invalid document"}, {"report", report}}, 422);
        return json_response({{"id", session->id()}, {"token", session->token()}, {"report", report}}, 201);
      }
      return error_response(405, "method not allowed");
    }
    return session_route(store, req, seg, query);
  } catch (const HttpError& e) {
    return error_response(e.status, e.message);
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

}  // namespace drivelab
