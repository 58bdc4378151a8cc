#pragma once

#include <filesystem>

#include "mvrecon/mesh.hpp"

namespace mvr {

enum class PlyFormat { ascii, binary_little_endian };

TriangleMesh load_obj(const std::filesystem::path& path);
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Reads ascii and binary_little_endian PLY. Vertex colors are picked up
/// from red/green/blue properties; 8-bit colors are mapped to [0,1].
TriangleMesh load_ply(const std::filesystem::path& path);

/// Positions and colors are written as float64, so a binary round trip
/// reproduces the mesh bit for bit.
void save_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
              PlyFormat format = PlyFormat::binary_little_endian);

/// Dispatch on extension (.obj / .ply); unknown extensions are I/O errors.
TriangleMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace mvr
