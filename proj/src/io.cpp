#include "billiard/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace billiard {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(fault::io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) raise(fault::io, "read failure on " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(fault::io, "cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) raise(fault::io, "write failure on " + path);
}

std::string json_str(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

std::string json_num(double v) { return fmt17(v); }

SceneFile scene_from_string(const std::string& text, const std::string& path_label) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    raise(fault::schema, "scene " + path_label + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("dim") || !j.contains("obstacles"))
    raise(fault::schema, "scene " + path_label + ": expected {\"dim\", \"obstacles\"}");
  if (!j["dim"].is_number_integer())
    raise(fault::schema, "scene " + path_label + ": dim must be an integer");
  int dim = j["dim"].get<int>();
  if (!j["obstacles"].is_array() || j["obstacles"].empty())
    raise(fault::schema, "scene " + path_label + ": obstacles must be a non-empty array");
  std::vector<Obstacle> obs;
  for (const auto& item : j["obstacles"]) {
    if (!item.is_object() || !item.contains("center") || !item.contains("radius"))
      raise(fault::schema, "scene " + path_label + ": obstacle needs center and radius");
    const auto& c = item["center"];
    if (!c.is_array() || static_cast<int>(c.size()) != dim)
      raise(fault::schema, "scene " + path_label + ": center must have dim entries");
    Obstacle o;
    o.center = Vec(dim);
    for (int k = 0; k < dim; ++k) {
      if (!c[k].is_number())
        raise(fault::schema, "scene " + path_label + ": center entries must be numbers");
      o.center[k] = c[k].get<double>();
    }
    if (!item["radius"].is_number())
      raise(fault::schema, "scene " + path_label + ": radius must be a number");
    o.radius = item["radius"].get<double>();
    obs.push_back(std::move(o));
  }
  SceneFile f;
  f.scene = make_scene(dim, std::move(obs));
  f.path = path_label;
  f.raw = text;
  f.scene_hash = hex64(fnv1a64(text));
  return f;
}

SceneFile load_scene(const std::string& path) {
  return scene_from_string(read_file(path), path);
}

}  // namespace billiard
