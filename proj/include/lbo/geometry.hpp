#pragma once

#include <lbo/mesh.hpp>

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace lbo {

/// Intrinsic triangle described by its edge lengths. Corner c is opposite the
/// edge of length `length[c]`; corners are in the face's counterclockwise order.
struct Triangle {
    std::array<double, 3> length{};
    std::array<double, 3> angle{};
    std::array<double, 3> cot{};
    double area = 0.0;

    /// Throws std::domain_error when the lengths violate the triangle inequality.
    static Triangle from_lengths(double l0, double l1, double l2);

    /// d cot[a] / d length[b].
    std::array<std::array<double, 3>, 3> cot_jacobian() const;
    /// d area / d length[b].
    std::array<double, 3> area_gradient() const;

    /// Voronoi share of corner c: (cot[c+1] l[c+1]^2 + cot[c+2] l[c+2]^2) / 8.
    double voronoi(int c) const;
    /// d voronoi(c) / d length[b].
    std::array<std::array<double, 3>, 3> voronoi_jacobian() const;

    /// Planar layout: corner 0 at the origin, corner 1 on the +x axis, corner 2
    /// in the upper half plane.
    std::array<std::array<double, 2>, 3> layout() const;
    /// d layout()[corner][axis] / d length[b].
    std::array<std::array<std::array<double, 2>, 3>, 3> layout_jacobian() const;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One of the (at most two) triangles of an edge flap around edge (i, j).
struct FlapSide {
    int face = Mesh::kNone;
    int opposite = Mesh::kNone; ///< vertex k opposite edge ij
    double alpha = kNaN;        ///< angle at k
    double gamma = kNaN;        ///< angle at i
    double delta = kNaN;        ///< angle at j
    double area = kNaN;
};

struct EdgeFlap {
    int edge = Mesh::kNone;
    int i = Mesh::kNone;
    int j = Mesh::kNone;
    std::array<FlapSide, 2> side;

    bool interior() const { return side[1].face != Mesh::kNone; }
    int num_sides() const { return interior() ? 2 : 1; }
};

/// Flap topology for every edge; angle and area fields stay NaN.
std::vector<EdgeFlap> build_flaps(const Mesh& mesh);

/// Per-edge, per-face and per-vertex intrinsic quantities derived from edge
/// lengths alone.
struct GeometryCache {
    std::vector<double> length;             ///< per edge
    std::vector<Triangle> triangle;         ///< per face
    std::vector<EdgeFlap> flaps;            ///< per edge, geometry filled in
    std::vector<double> voronoi_raw;        ///< per vertex, may be <= 0 around obtuse triangles
    std::vector<double> voronoi;            ///< per vertex, clamped below at area_floor
    std::vector<char> clamped;              ///< per vertex: voronoi_raw < area_floor
    double area_floor = 0.0;                ///< 1e-8 * (mean edge length)^2

    double total_area() const;
};

/// Edge lengths of the embedding.
std::vector<double> embedding_lengths(const Mesh& mesh);

/// Builds the geometry from `edge_metric` (per-edge lengths) or, when empty,
/// from the embedding. Throws MeshError(TriangleInequality) naming the face.
GeometryCache geometry(const Mesh& mesh, std::optional<std::span<const double>> edge_metric = std::nullopt);

} // namespace lbo
