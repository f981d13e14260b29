#pragma once

#include <array>
#include <string>
#include <vector>

#include "meshfit/common.hpp"

namespace meshfit {

struct ObjMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec2> uv;  // mesh convention (v = 0 at the top texture row)
  std::vector<std::array<int, 3>> faces;
};

// Wavefront export: `v`, `vt`, `f v/vt` records with shared v/vt indexing,
// +Y up, CCW front faces. The vt record stores 1-v so external viewers see
// the texture PNG the usual way up; read_obj undoes the flip.
void write_obj(const std::string& obj_path, const std::string& mtl_name,
               const std::string& texture_name, const ObjMesh& mesh);
void write_mtl(const std::string& mtl_path, const std::string& texture_name);
ObjMesh read_obj(const std::string& path);

}  // namespace meshfit
