#include "meshfit/obj_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace meshfit {

namespace {

void line(std::ofstream& os, const char* fmt, double a, double b, double c) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c);
  os << buf;
}

}  // namespace

void write_obj(const std::string& obj_path, const std::string& mtl_name,
               const std::string& texture_name, const ObjMesh& mesh) {
  (void)texture_name;
  std::ofstream os(obj_path);
  if (!os) throw IoError("write_obj: cannot open " + obj_path);
  os << "mtllib " << mtl_name << "\n";
  os << "o mesh\n";
  for (const Vec3& v : mesh.vertices)
    line(os, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
  for (const Vec2& t : mesh.uv) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "vt %.9g %.9g\n", t.x, 1.0 - t.y);
    os << buf;
  }
  os << "usemtl material0\n";
  for (const auto& f : mesh.faces)
    os << "f " << f[0] + 1 << "/" << f[0] + 1 << " " << f[1] + 1 << "/"
       << f[1] + 1 << " " << f[2] + 1 << "/" << f[2] + 1 << "\n";
  if (!os) throw IoError("write_obj: write failure on " + obj_path);
}

void write_mtl(const std::string& mtl_path, const std::string& texture_name) {
  std::ofstream os(mtl_path);
  if (!os) throw IoError("write_mtl: cannot open " + mtl_path);
  os << "newmtl material0\n"
     << "Ka 1 1 1\nKd 1 1 1\nKs 0 0 0\n"
     << "map_Kd " << texture_name << "\n";
}

ObjMesh read_obj(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("read_obj: cannot open " + path);

  std::vector<Vec3> vs;
  std::vector<Vec2> vts;
  struct Corner {
    int v, vt;
  };
  std::vector<std::array<Corner, 3>> raw_faces;

  std::string word;
  std::string rest;
  std::string file_line;
  while (std::getline(is, file_line)) {
    std::istringstream ls(file_line);
    if (!(ls >> word)) continue;
    if (word == "v") {
      Vec3 v;
      ls >> v.x >> v.y >> v.z;
      vs.push_back(v);
    } else if (word == "vt") {
      Vec2 t;
      ls >> t.x >> t.y;
      t.y = 1.0 - t.y;
      vts.push_back(t);
    } else if (word == "f") {
      std::array<Corner, 3> c;
      for (int k = 0; k < 3; ++k) {
        std::string tok;
        if (!(ls >> tok)) throw IoError("read_obj: short face in " + path);
        int v = 0, vt = 0;
        std::size_t slash = tok.find('/');
        v = std::atoi(tok.substr(0, slash).c_str());
        vt = slash == std::string::npos
                 ? v
                 : std::atoi(tok.substr(slash + 1).c_str());
        if (v < 1 || vt < 1)
          throw IoError("read_obj: unsupported face token '" + tok + "'");
        c[k] = {v - 1, vt - 1};
      }
      raw_faces.push_back(c);
    }
  }
  if (vs.empty()) throw IoError("read_obj: no vertices in " + path);
  if (vts.empty()) vts.assign(vs.size(), Vec2{});

  bool shared_index = vs.size() == vts.size();
  for (const auto& rf : raw_faces)
    for (const auto& c : rf) shared_index &= (c.v == c.vt);
  if (shared_index) {
    ObjMesh mesh;
    mesh.vertices = vs;
    mesh.uv = vts;
    for (const auto& rf : raw_faces) {
      for (const auto& c : rf)
        if (c.v >= static_cast<int>(vs.size()))
          throw IoError("read_obj: face index out of range in " + path);
      mesh.faces.push_back({rf[0].v, rf[1].v, rf[2].v});
    }
    return mesh;
  }

  // Split (position, uv) pairs into unique corners when the file indexes
  // them independently.
  ObjMesh mesh;
  std::map<std::pair<int, int>, int> remap;
  for (const auto& rf : raw_faces) {
    std::array<int, 3> f;
    for (int k = 0; k < 3; ++k) {
      auto key = std::make_pair(rf[k].v, rf[k].vt);
      auto it = remap.find(key);
      if (it == remap.end()) {
        if (rf[k].v >= static_cast<int>(vs.size()) ||
            rf[k].vt >= static_cast<int>(vts.size()))
          throw IoError("read_obj: face index out of range in " + path);
        mesh.vertices.push_back(vs[rf[k].v]);
        mesh.uv.push_back(vts[rf[k].vt]);
        it = remap.emplace(key, static_cast<int>(mesh.vertices.size()) - 1)
                 .first;
      }
      f[k] = it->second;
    }
    mesh.faces.push_back(f);
  }
  return mesh;
}

}  // namespace meshfit
