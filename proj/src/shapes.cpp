#include <lbo/shapes.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <tuple>

namespace lbo::shapes {

namespace {

using Vec3 = Eigen::Vector3d;

Mesh from_lists(const std::vector<Vec3>& verts, const std::vector<std::array<int, 3>>& tris)
{
    Positions V(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
    Faces F(static_cast<Eigen::Index>(tris.size()), 3);
    for (size_t i = 0; i < tris.size(); ++i)
        F.row(static_cast<Eigen::Index>(i)) << tris[i][0], tris[i][1], tris[i][2];
    return Mesh(std::move(V), std::move(F));
}

/// Flips faces of a star-shaped closed surface so normals point away from the origin.
void orient_outward(const std::vector<Vec3>& verts, std::vector<std::array<int, 3>>& tris)
{
    for (auto& t : tris) {
        const Vec3 n = (verts[t[1]] - verts[t[0]]).cross(verts[t[2]] - verts[t[0]]);
        const Vec3 c = (verts[t[0]] + verts[t[1]] + verts[t[2]]) / 3.0;
        if (n.dot(c) < 0) std::swap(t[1], t[2]);
    }
}

void icosahedron_lists(std::vector<Vec3>& verts, std::vector<std::array<int, 3>>& tris)
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v.normalize();
    tris = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
            {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
            {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    orient_outward(verts, tris);
}

/// Closed surface of revolution about z from a profile (rho, z) whose first and
/// last samples lie on the axis.
Mesh revolve(const std::vector<Eigen::Vector2d>& profile, int segments)
{
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    const int n = static_cast<int>(profile.size());
    verts.emplace_back(0.0, 0.0, profile.front().y());
    for (int i = 1; i < n - 1; ++i) {
        for (int s = 0; s < segments; ++s) {
            const double phi = 2.0 * std::numbers::pi * s / segments;
            verts.emplace_back(profile[i].x() * std::cos(phi), profile[i].x() * std::sin(phi), profile[i].y());
        }
    }
    verts.emplace_back(0.0, 0.0, profile.back().y());
    const int top = static_cast<int>(verts.size()) - 1;
    auto ring = [&](int i, int s) { return 1 + (i - 1) * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) tris.push_back({0, ring(1, s + 1), ring(1, s)});
    for (int i = 1; i < n - 2; ++i) {
        for (int s = 0; s < segments; ++s) {
            tris.push_back({ring(i, s), ring(i, s + 1), ring(i + 1, s)});
            tris.push_back({ring(i, s + 1), ring(i + 1, s + 1), ring(i + 1, s)});
        }
    }
    for (int s = 0; s < segments; ++s) tris.push_back({top, ring(n - 2, s), ring(n - 2, s + 1)});

    // Outward orientation has positive enclosed signed volume.
    double volume = 0.0;
    for (const auto& tri : tris) volume += verts[tri[0]].dot(verts[tri[1]].cross(verts[tri[2]]));
    if (volume < 0)
        for (auto& tri : tris) std::swap(tri[1], tri[2]);
    return from_lists(verts, tris);
}

} // namespace

Mesh single_triangle(double side)
{
    return from_lists({{0, 0, 0}, {side, 0, 0}, {side / 2, side * std::sqrt(3.0) / 2, 0}}, {{0, 1, 2}});
}

Mesh strip()
{
    return from_lists({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}, {{0, 1, 2}, {1, 3, 2}});
}

Mesh regular_tetrahedron()
{
    std::vector<Vec3> verts{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    std::vector<std::array<int, 3>> tris{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    orient_outward(verts, tris);
    return from_lists(verts, tris);
}

Mesh icosahedron()
{
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    icosahedron_lists(verts, tris);
    return from_lists(verts, tris);
}

Mesh icosphere(int level)
{
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    icosahedron_lists(verts, tris);
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            verts.push_back((verts[a] + verts[b]).normalized());
            const int idx = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(4 * tris.size());
        for (const auto& t : tris) {
            const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }
    return from_lists(verts, tris);
}

Mesh geodesic_sphere(int n)
{
    std::vector<Vec3> corners;
    std::vector<std::array<int, 3>> base;
    icosahedron_lists(corners, base);

    std::vector<Vec3> verts(corners);
    std::map<std::tuple<int, int, int>, int> edge_points;
    auto edge_point = [&](int a, int b, int steps_from_a) {
        std::tuple<int, int, int> key = a < b ? std::make_tuple(a, b, steps_from_a)
                                              : std::make_tuple(b, a, n - steps_from_a);
        auto it = edge_points.find(key);
        if (it != edge_points.end()) return it->second;
        const double t = static_cast<double>(steps_from_a) / n;
        verts.push_back(((1 - t) * corners[a] + t * corners[b]).normalized());
        const int idx = static_cast<int>(verts.size()) - 1;
        edge_points.emplace(key, idx);
        return idx;
    };

    std::vector<std::array<int, 3>> tris;
    for (const auto& f : base) {
        // grid index (i, j): barycentric weights (n-i-j, i, j) over (f0, f1, f2)
        std::vector<std::vector<int>> id(n + 1, std::vector<int>(n + 1, -1));
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; i + j <= n; ++j) {
                const int w0 = n - i - j;
                int idx;
                if (i == 0 && j == 0) idx = f[0];
                else if (w0 == 0 && j == 0) idx = f[1];
                else if (w0 == 0 && i == 0) idx = f[2];
                else if (j == 0) idx = edge_point(f[0], f[1], i);
                else if (i == 0) idx = edge_point(f[0], f[2], j);
                else if (w0 == 0) idx = edge_point(f[1], f[2], j);
                else {
                    verts.push_back((w0 * corners[f[0]] + i * corners[f[1]] + j * corners[f[2]]).normalized());
                    idx = static_cast<int>(verts.size()) - 1;
                }
                id[i][j] = idx;
            }
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; i + j < n; ++j) {
                tris.push_back({id[i][j], id[i + 1][j], id[i][j + 1]});
                if (i + j < n - 1) tris.push_back({id[i + 1][j], id[i + 1][j + 1], id[i][j + 1]});
            }
        }
    }
    return from_lists(verts, tris);
}

Mesh grid(int nx, int ny, double size)
{
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) verts.emplace_back(size * i / (nx - 1), size * j / (ny - 1), 0.0);
    auto at = [&](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            tris.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            tris.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
    return from_lists(verts, tris);
}

Mesh cylinder(double radius, double height, int rings, int segments)
{
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    for (int r = 0; r < rings; ++r) {
        const double z = height * r / (rings - 1);
        for (int s = 0; s < segments; ++s) {
            // Staggered rings give a better-shaped triangulation.
            const double phi = 2.0 * std::numbers::pi * (s + 0.5 * (r % 2)) / segments;
            verts.emplace_back(radius * std::cos(phi), radius * std::sin(phi), z);
        }
    }
    auto at = [&](int r, int s) { return r * segments + (s % segments); };
    for (int r = 0; r + 1 < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            if (r % 2 == 0) {
                tris.push_back({at(r, s), at(r, s + 1), at(r + 1, s)});
                tris.push_back({at(r, s + 1), at(r + 1, s + 1), at(r + 1, s)});
            } else {
                tris.push_back({at(r, s), at(r, s + 1), at(r + 1, s + 1)});
                tris.push_back({at(r, s), at(r + 1, s + 1), at(r + 1, s)});
            }
        }
    }
    return from_lists(verts, tris);
}

Mesh torus(double major, double minor, int nu, int nv)
{
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    for (int i = 0; i < nu; ++i) {
        const double u = 2.0 * std::numbers::pi * i / nu;
        for (int j = 0; j < nv; ++j) {
            const double v = 2.0 * std::numbers::pi * j / nv;
            verts.emplace_back((major + minor * std::cos(v)) * std::cos(u),
                               (major + minor * std::cos(v)) * std::sin(u), minor * std::sin(v));
        }
    }
    auto at = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            tris.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            tris.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
    // Outward means away from the tube's core circle.
    const auto& t = tris[0];
    const Vec3 nrm = (verts[t[1]] - verts[t[0]]).cross(verts[t[2]] - verts[t[0]]);
    const Vec3 c = (verts[t[0]] + verts[t[1]] + verts[t[2]]) / 3.0;
    const Vec3 core = major * Vec3(c.x(), c.y(), 0.0).normalized();
    if (nrm.dot(c - core) < 0)
        for (auto& tri : tris) std::swap(tri[1], tri[2]);
    return from_lists(verts, tris);
}

LabeledMesh sphere_on_cylinder(int profile_points, int segments, double rs, double rc, double length)
{
    // Profile (rho, z) from the bottom pole: bottom disk, cylinder wall, then
    // the sphere from the junction circle to the top pole.
    const double zc = std::sqrt(rs * rs - rc * rc); // sphere centre; junction at z = 0
    const double phi_j = std::asin(rc / rs);         // polar angle of the junction from the bottom
    const double disk = rc, wall = length, arc = rs * (std::numbers::pi - phi_j);
    const double total = disk + wall + arc;

    std::vector<Eigen::Vector2d> profile;
    std::vector<int> profile_label;
    for (int i = 0; i < profile_points; ++i) {
        const double s = total * i / (profile_points - 1);
        if (s <= disk) {
            profile.emplace_back(s, -length);
            profile_label.push_back(1);
        } else if (s <= disk + wall) {
            profile.emplace_back(rc, -length + (s - disk));
            profile_label.push_back(1);
        } else {
            const double phi = phi_j + (s - disk - wall) / rs;
            profile.emplace_back(rs * std::sin(phi), zc - rs * std::cos(phi));
            profile_label.push_back(0);
        }
    }
    profile.back().x() = 0.0;

    Mesh mesh = revolve(profile, segments);
    std::vector<int> labels;
    labels.push_back(profile_label.front());
    for (int i = 1; i + 1 < profile_points; ++i)
        for (int s = 0; s < segments; ++s) labels.push_back(profile_label[i]);
    labels.push_back(profile_label.back());
    return {std::move(mesh), std::move(labels)};
}

Mesh jitter(const Mesh& mesh, double amount, std::uint64_t seed, bool project_to_unit_sphere)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double h = amount * mesh.mean_edge_length();
    Positions V = mesh.positions();
    for (Eigen::Index v = 0; v < V.rows(); ++v) {
        Eigen::RowVector3d d(uni(rng), uni(rng), uni(rng));
        V.row(v) += h * d;
        if (project_to_unit_sphere) V.row(v).normalize();
    }
    return Mesh(std::move(V), mesh.faces());
}

Mesh transformed(const Mesh& mesh, const Eigen::Matrix3d& linear, const Eigen::Vector3d& translation)
{
    Positions V = mesh.positions();
    for (Eigen::Index v = 0; v < V.rows(); ++v)
        V.row(v) = (linear * V.row(v).transpose() + translation).transpose();
    return Mesh(std::move(V), mesh.faces());
}

Mesh scaled(const Mesh& mesh, double s)
{
    return transformed(mesh, s * Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
}

} // namespace lbo::shapes
