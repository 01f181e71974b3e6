#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace lbo {

using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Failure while reading or validating mesh input. `element()` is the index of
/// the offending vertex, edge, face or line (-1 when not applicable).
class MeshError : public std::runtime_error {
public:
    enum class Kind {
        Parse,
        NonManifoldEdge,
        InconsistentOrientation,
        DegenerateFace,
        IndexOutOfRange,
        IsolatedVertex,
        TriangleInequality,
    };

    MeshError(Kind kind, long element, const std::string& what)
        : std::runtime_error(what), m_kind(kind), m_element(element)
    {}

    Kind kind() const { return m_kind; }
    long element() const { return m_element; }

private:
    Kind m_kind;
    long m_element;
};

/// Oriented, edge-manifold triangle mesh with precomputed edge connectivity.
///
/// Edges are unordered vertex pairs stored as (lo, hi). For face f with corners
/// (v0, v1, v2), `face_edges(f)[c]` is the edge opposite corner c, i.e. the edge
/// joining corners c+1 and c+2 (mod 3). Immutable after construction.
class Mesh {
public:
    static constexpr int kNone = -1;

    /// Validates the input and builds connectivity; throws MeshError.
    Mesh(Positions positions, Faces faces);

    int num_vertices() const { return static_cast<int>(m_positions.rows()); }
    int num_faces() const { return static_cast<int>(m_faces.rows()); }
    int num_edges() const { return static_cast<int>(m_edges.size()); }

    const Positions& positions() const { return m_positions; }
    const Faces& faces() const { return m_faces; }
    Eigen::Vector3d position(int v) const { return m_positions.row(v).transpose(); }
    std::array<int, 3> face(int f) const { return {m_faces(f, 0), m_faces(f, 1), m_faces(f, 2)}; }

    const std::vector<std::array<int, 2>>& edges() const { return m_edges; }
    const std::array<int, 2>& edge(int e) const { return m_edges[e]; }
    /// Incident faces of an edge; the second slot is kNone on boundary edges.
    const std::array<int, 2>& edge_faces(int e) const { return m_edge_faces[e]; }
    bool is_boundary_edge(int e) const { return m_edge_faces[e][1] == kNone; }
    const std::array<int, 3>& face_edges(int f) const { return m_face_edges[f]; }

    /// Edge index joining vertices a and b, or kNone.
    int find_edge(int a, int b) const;

    int num_boundary_edges() const;
    int euler_characteristic() const { return num_vertices() - num_edges() + num_faces(); }

    /// Faces incident to each vertex.
    const std::vector<std::vector<int>>& vertex_faces() const { return m_vertex_faces; }

    /// Vertex-adjacency lists (sorted).
    std::vector<std::vector<int>> vertex_neighbors() const;

    /// Number of connected components over face adjacency (isolated vertices count).
    int num_components() const;

    double mean_edge_length() const;
    double surface_area() const;

private:
    static std::uint64_t key(int a, int b)
    {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
               static_cast<std::uint32_t>(b);
    }

    Positions m_positions;
    Faces m_faces;
    std::vector<std::array<int, 2>> m_edges;
    std::vector<std::array<int, 2>> m_edge_faces;
    std::vector<std::array<int, 3>> m_face_edges;
    std::vector<std::vector<int>> m_vertex_faces;
    std::unordered_map<std::uint64_t, int> m_edge_lookup;
};

} // namespace lbo
