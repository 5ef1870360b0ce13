#pragma once

#include "billiard/geometry.hpp"

#include <string>

namespace billiard {

struct SceneFile {
  Scene scene;
  std::string path;
  std::string raw;        // file bytes, hashed for provenance
  std::string scene_hash; // hex FNV-1a of raw
};

// Scene JSON: {"dim": 2, "obstacles": [{"center": [x, y], "radius": r}, ...]}
// Malformed JSON or schema violations raise fault::schema; geometric
// violations (bad radius, overlap) surface from make_scene.
SceneFile load_scene(const std::string& path);
SceneFile scene_from_string(const std::string& text, const std::string& path_label);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Deterministic JSON fragments: doubles through fmt17, strings escaped.
std::string json_str(const std::string& s);
std::string json_num(double v);

}  // namespace billiard
