#pragma once

#include <lbo/mesh.hpp>

#include <iosfwd>
#include <string>

namespace lbo {

enum class MeshFormat { Auto, OFF, OBJ, PLY };

MeshFormat parse_mesh_format(const std::string& name);

/// Reads a triangle mesh. With MeshFormat::Auto the format is taken from the
/// file extension. Throws MeshError on parse or validation failure.
Mesh load_mesh(const std::string& path, MeshFormat format = MeshFormat::Auto);

Mesh read_off(std::istream& in);
/// Only `v` and `f` records are read; OBJ's 1-based (and negative relative)
/// indices are converted to 0-based. Polygons are rejected.
Mesh read_obj(std::istream& in);
/// ASCII PLY with a `vertex` element carrying x, y, z and a `face` element
/// carrying a vertex index list.
Mesh read_ply_ascii(std::istream& in);

void write_off(const Mesh& mesh, std::ostream& out);
void save_off(const Mesh& mesh, const std::string& path);

} // namespace lbo
