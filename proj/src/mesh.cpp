#include <lbo/mesh.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace lbo {

Mesh::Mesh(Positions positions, Faces faces)
    : m_positions(std::move(positions))
    , m_faces(std::move(faces))
{
    const int nv = num_vertices();
    const int nf = num_faces();
    if (nf == 0) throw MeshError(MeshError::Kind::Parse, -1, "mesh has no faces");

    m_face_edges.resize(nf);
    m_vertex_faces.assign(nv, {});
    // Directed half-edges seen so far; a repeat means two faces traverse an
    // interior edge in the same direction.
    std::unordered_set<std::uint64_t> directed;
    directed.reserve(3 * static_cast<size_t>(nf));

    for (int f = 0; f < nf; ++f) {
        const auto c = face(f);
        for (int k = 0; k < 3; ++k) {
            if (c[k] < 0 || c[k] >= nv) {
                throw MeshError(MeshError::Kind::IndexOutOfRange, f,
                                "face " + std::to_string(f) + " references vertex " +
                                    std::to_string(c[k]) + " out of range");
            }
        }
        if (c[0] == c[1] || c[1] == c[2] || c[0] == c[2]) {
            throw MeshError(MeshError::Kind::DegenerateFace, f,
                            "face " + std::to_string(f) + " has repeated vertex indices");
        }
        for (int k = 0; k < 3; ++k) {
            const int a = c[(k + 1) % 3];
            const int b = c[(k + 2) % 3];
            if ((m_positions.row(a) - m_positions.row(b)).squaredNorm() == 0.0) {
                throw MeshError(MeshError::Kind::DegenerateFace, f,
                                "face " + std::to_string(f) + " has a zero-length edge");
            }
            const std::uint64_t dkey =
                (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
                static_cast<std::uint32_t>(b);

            int e;
            auto it = m_edge_lookup.find(key(a, b));
            if (it == m_edge_lookup.end()) {
                e = static_cast<int>(m_edges.size());
                m_edge_lookup.emplace(key(a, b), e);
                m_edges.push_back({std::min(a, b), std::max(a, b)});
                m_edge_faces.push_back({f, kNone});
            } else {
                e = it->second;
                if (m_edge_faces[e][1] != kNone) {
                    throw MeshError(MeshError::Kind::NonManifoldEdge, e,
                                    "non-manifold edge " + std::to_string(e) + " (" +
                                        std::to_string(m_edges[e][0]) + ", " +
                                        std::to_string(m_edges[e][1]) +
                                        ") has more than two incident faces");
                }
                m_edge_faces[e][1] = f;
            }
            if (!directed.insert(dkey).second) {
                throw MeshError(MeshError::Kind::InconsistentOrientation, e,
                                "inconsistent orientation at edge " + std::to_string(e) +
                                    " (face " + std::to_string(f) + ")");
            }
            m_face_edges[f][k] = e;
        }
        for (int k = 0; k < 3; ++k) m_vertex_faces[c[k]].push_back(f);
    }
}

int Mesh::find_edge(int a, int b) const
{
    auto it = m_edge_lookup.find(key(a, b));
    return it == m_edge_lookup.end() ? kNone : it->second;
}

int Mesh::num_boundary_edges() const
{
    int count = 0;
    for (const auto& ef : m_edge_faces) count += ef[1] == kNone;
    return count;
}

std::vector<std::vector<int>> Mesh::vertex_neighbors() const
{
    std::vector<std::vector<int>> nbrs(num_vertices());
    for (const auto& e : m_edges) {
        nbrs[e[0]].push_back(e[1]);
        nbrs[e[1]].push_back(e[0]);
    }
    for (auto& n : nbrs) std::sort(n.begin(), n.end());
    return nbrs;
}

int Mesh::num_components() const
{
    std::vector<int> parent(num_vertices());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : m_edges) parent[find(e[0])] = find(e[1]);
    int count = 0;
    for (int v = 0; v < num_vertices(); ++v) count += find(v) == v;
    return count;
}

double Mesh::mean_edge_length() const
{
    double sum = 0.0;
    for (const auto& e : m_edges) sum += (m_positions.row(e[0]) - m_positions.row(e[1])).norm();
    return sum / static_cast<double>(m_edges.size());
}

double Mesh::surface_area() const
{
    double area = 0.0;
    for (int f = 0; f < num_faces(); ++f) {
        const auto c = face(f);
        const Eigen::Vector3d a = position(c[1]) - position(c[0]);
        const Eigen::Vector3d b = position(c[2]) - position(c[0]);
        area += 0.5 * a.cross(b).norm();
    }
    return area;
}

} // namespace lbo
