#include "drivelab/obj.hpp"

#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "drivelab/json_io.hpp"

namespace drivelab {

namespace {

long resolve_index(long idx, std::size_t count, std::size_t line_no) {
  const long n = static_cast<long>(count);
  const long resolved = idx < 0 ? n + idx : idx - 1;
  if (idx == 0 || resolved < 0 || resolved >= n) {
    throw ParseError("obj line " + std::to_string(line_no) + ": index " + std::to_string(idx) +
                     " out of range");
  }
  return resolved;
}

}  // namespace

MeshAsset parse_obj(std::string_view text, std::string id, MeshRole role) {
  std::vector<Vec3> positions;
  std::vector<Vec2> texcoords;
  // Corners reference (position, texcoord or -1).
  std::vector<std::array<std::pair<long, long>, 3>> faces;

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z)) {
        throw ParseError("obj line " + std::to_string(line_no) + ": malformed vertex");
      }
      positions.push_back(p);
    } else if (tag == "vt") {
      Vec2 t;
      if (!(ls >> t.u >> t.v)) {
        throw ParseError("obj line " + std::to_string(line_no) + ": malformed texcoord");
      }
      texcoords.push_back(t);
    } else if (tag == "f") {
      std::vector<std::pair<long, long>> corners;
      std::string token;
      while (ls >> token) {
        long v = 0;
        long vt = -1;
        const auto s1 = token.find('/');
        try {
          v = resolve_index(std::stol(token.substr(0, s1)), positions.size(), line_no);
          if (s1 != std::string::npos) {
            const auto s2 = token.find('/', s1 + 1);
            const std::string t = token.substr(s1 + 1, s2 == std::string::npos ? s2 : s2 - s1 - 1);
            if (!t.empty()) vt = resolve_index(std::stol(t), texcoords.size(), line_no);
          }
        } catch (const std::logic_error&) {
          throw ParseError("obj line " + std::to_string(line_no) + ": malformed face '" + token +
                           "'");
        }
        corners.emplace_back(v, vt);
      }
      if (corners.size() < 3) {
        throw ParseError("obj line " + std::to_string(line_no) + ": face with fewer than 3 corners");
      }
      for (std::size_t k = 1; k + 1 < corners.size(); ++k) {
        faces.push_back({corners[0], corners[k], corners[k + 1]});
      }
    }
    // Other statements (vn, o, g, usemtl, s, ...) carry nothing we keep.
  }

  MeshAsset mesh;
  mesh.id = std::move(id);
  mesh.role = role;
  bool all_textured = !faces.empty();
  for (const auto& f : faces) {
    for (const auto& c : f) all_textured = all_textured && c.second >= 0;
  }
  if (!all_textured) {
    mesh.vertices = positions;
    for (const auto& f : faces) {
      mesh.triangles.push_back({static_cast<std::uint32_t>(f[0].first),
                                static_cast<std::uint32_t>(f[1].first),
                                static_cast<std::uint32_t>(f[2].first)});
    }
    return mesh;
  }
  std::map<std::pair<long, long>, std::uint32_t> remap;
  for (const auto& f : faces) {
    Triangle tri{};
    for (int k = 0; k < 3; ++k) {
      auto [it, inserted] = remap.try_emplace(f[k], static_cast<std::uint32_t>(mesh.vertices.size()));
      if (inserted) {
        mesh.vertices.push_back(positions[f[k].first]);
        mesh.uv.push_back(texcoords[f[k].second]);
      }
      tri[k] = it->second;
    }
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

MeshAsset load_obj(const std::filesystem::path& path, std::string id, MeshRole role) {
  return parse_obj(read_file(path), std::move(id), role);
}

}  // namespace drivelab
