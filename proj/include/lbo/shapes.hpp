#pragma once

#include <lbo/mesh.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <vector>

// Procedural test shapes. All closed shapes are oriented with outward normals.
namespace lbo::shapes {

Mesh single_triangle(double side = 1.0);
/// Two triangles sharing one edge: 4 vertices, 5 edges, 1 interior.
Mesh strip();
Mesh regular_tetrahedron();
Mesh icosahedron();
/// Unit sphere by recursive 4-to-1 midpoint subdivision of the icosahedron
/// (10 * 4^level + 2 vertices).
Mesh icosphere(int level);
/// Unit sphere by flat frequency-n subdivision of icosahedron faces
/// (10 n^2 + 2 vertices).
Mesh geodesic_sphere(int frequency);
/// nx-by-ny vertex grid on [0,1]^2 in the z = 0 plane.
Mesh grid(int nx, int ny, double size = 1.0);
/// Open lateral surface of a cylinder around the z axis.
Mesh cylinder(double radius, double height, int rings, int segments);
Mesh torus(double major, double minor, int nu, int nv);

struct LabeledMesh {
    Mesh mesh;
    std::vector<int> labels;
};

/// Closed surface of revolution made of a sphere (label 0) sitting on a
/// capped cylinder (label 1).
LabeledMesh sphere_on_cylinder(int profile_points, int segments, double sphere_radius = 1.0,
                               double cylinder_radius = 0.6, double cylinder_length = 2.0);

/// Moves each vertex by a random offset of at most `amount` times the mean
/// edge length. Deterministic for a given seed.
Mesh jitter(const Mesh& mesh, double amount, std::uint64_t seed, bool project_to_unit_sphere = false);

Mesh transformed(const Mesh& mesh, const Eigen::Matrix3d& linear, const Eigen::Vector3d& translation);
Mesh scaled(const Mesh& mesh, double s);

} // namespace lbo::shapes
