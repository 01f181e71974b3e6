#include <lbo/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lbo {

Triangle Triangle::from_lengths(double l0, double l1, double l2)
{
    Triangle t;
    t.length = {l0, l1, l2};
    if (!(l0 > 0 && l1 > 0 && l2 > 0)) throw std::domain_error("non-positive edge length");

    // Kahan's form of Heron's formula, stable for needle triangles.
    std::array<double, 3> s = t.length;
    std::sort(s.begin(), s.end(), std::greater<>());
    const double a = s[0], b = s[1], c = s[2];
    const double disc = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if (!(disc > 0.0)) throw std::domain_error("triangle inequality violated");
    t.area = 0.25 * std::sqrt(disc);

    for (int k = 0; k < 3; ++k) {
        const double la = t.length[k];
        const double lb = t.length[(k + 1) % 3];
        const double lc = t.length[(k + 2) % 3];
        const double num = lb * lb + lc * lc - la * la; // 2 lb lc cos
        t.cot[k] = num / (4.0 * t.area);
        t.angle[k] = std::atan2(4.0 * t.area, num);
    }
    return t;
}

std::array<std::array<double, 3>, 3> Triangle::cot_jacobian() const
{
    std::array<std::array<double, 3>, 3> J{};
    const double inv2T = 1.0 / (2.0 * area);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            J[a][b] = a == b ? -length[a] * (1.0 + cot[a] * cot[a]) * inv2T
                             : length[b] * (1.0 - cot[a] * cot[b]) * inv2T;
        }
    }
    return J;
}

std::array<double, 3> Triangle::area_gradient() const
{
    return {0.5 * length[0] * cot[0], 0.5 * length[1] * cot[1], 0.5 * length[2] * cot[2]};
}

double Triangle::voronoi(int c) const
{
    const int c1 = (c + 1) % 3, c2 = (c + 2) % 3;
    return (cot[c1] * length[c1] * length[c1] + cot[c2] * length[c2] * length[c2]) / 8.0;
}

std::array<std::array<double, 3>, 3> Triangle::voronoi_jacobian() const
{
    const auto Jc = cot_jacobian();
    std::array<std::array<double, 3>, 3> J{};
    for (int c = 0; c < 3; ++c) {
        const int c1 = (c + 1) % 3, c2 = (c + 2) % 3;
        for (int b = 0; b < 3; ++b) {
            double v = Jc[c1][b] * length[c1] * length[c1] + Jc[c2][b] * length[c2] * length[c2];
            if (b == c1) v += 2.0 * cot[c1] * length[c1];
            if (b == c2) v += 2.0 * cot[c2] * length[c2];
            J[c][b] = v / 8.0;
        }
    }
    return J;
}

std::array<std::array<double, 2>, 3> Triangle::layout() const
{
    const double l0 = length[0], l1 = length[1], l2 = length[2];
    return {{{0.0, 0.0}, {l2, 0.0}, {(l1 * l1 + l2 * l2 - l0 * l0) / (2.0 * l2), 2.0 * area / l2}}};
}

std::array<std::array<std::array<double, 2>, 3>, 3> Triangle::layout_jacobian() const
{
    std::array<std::array<std::array<double, 2>, 3>, 3> J{}; // [corner][length b][axis]
    const double l0 = length[0], l1 = length[1], l2 = length[2];
    const auto P = layout();
    const auto dT = area_gradient();
    J[1][2][0] = 1.0;
    J[2][0][0] = -l0 / l2;
    J[2][1][0] = l1 / l2;
    J[2][2][0] = 1.0 - P[2][0] / l2;
    for (int b = 0; b < 3; ++b) J[2][b][1] = 2.0 * dT[b] / l2;
    J[2][2][1] -= P[2][1] / l2;
    return J;
}

std::vector<EdgeFlap> build_flaps(const Mesh& mesh)
{
    std::vector<EdgeFlap> flaps(mesh.num_edges());
    for (int e = 0; e < mesh.num_edges(); ++e) {
        auto& flap = flaps[e];
        flap.edge = e;
        flap.i = mesh.edge(e)[0];
        flap.j = mesh.edge(e)[1];
        const auto& ef = mesh.edge_faces(e);
        for (int s = 0; s < 2; ++s) {
            if (ef[s] == Mesh::kNone) continue;
            const auto& fe = mesh.face_edges(ef[s]);
            const int c = static_cast<int>(std::find(fe.begin(), fe.end(), e) - fe.begin());
            flap.side[s].face = ef[s];
            flap.side[s].opposite = mesh.face(ef[s])[c];
        }
    }
    return flaps;
}

double GeometryCache::total_area() const
{
    double a = 0.0;
    for (const auto& t : triangle) a += t.area;
    return a;
}

std::vector<double> embedding_lengths(const Mesh& mesh)
{
    std::vector<double> len(mesh.num_edges());
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto& ed = mesh.edge(e);
        len[e] = (mesh.position(ed[0]) - mesh.position(ed[1])).norm();
    }
    return len;
}

GeometryCache geometry(const Mesh& mesh, std::optional<std::span<const double>> edge_metric)
{
    GeometryCache g;
    if (edge_metric) {
        if (static_cast<int>(edge_metric->size()) != mesh.num_edges())
            throw std::invalid_argument("edge metric size does not match edge count");
        g.length.assign(edge_metric->begin(), edge_metric->end());
    } else {
        g.length = embedding_lengths(mesh);
    }

    const int nf = mesh.num_faces();
    g.triangle.resize(nf);
    for (int f = 0; f < nf; ++f) {
        const auto& fe = mesh.face_edges(f);
        try {
            g.triangle[f] = Triangle::from_lengths(g.length[fe[0]], g.length[fe[1]], g.length[fe[2]]);
        } catch (const std::domain_error& err) {
            throw MeshError(MeshError::Kind::TriangleInequality, f,
                            "face " + std::to_string(f) + ": " + err.what());
        }
    }

    g.flaps = build_flaps(mesh);
    for (auto& flap : g.flaps) {
        for (int s = 0; s < flap.num_sides(); ++s) {
            auto& side = flap.side[s];
            const auto c = mesh.face(side.face);
            const Triangle& t = g.triangle[side.face];
            for (int k = 0; k < 3; ++k) {
                if (c[k] == side.opposite) side.alpha = t.angle[k];
                else if (c[k] == flap.i) side.gamma = t.angle[k];
                else if (c[k] == flap.j) side.delta = t.angle[k];
            }
            side.area = t.area;
        }
    }

    double mean_len = 0.0;
    for (double l : g.length) mean_len += l;
    mean_len /= static_cast<double>(g.length.size());
    g.area_floor = 1e-8 * mean_len * mean_len;

    const int nv = mesh.num_vertices();
    g.voronoi_raw.assign(nv, 0.0);
    for (int f = 0; f < nf; ++f) {
        const auto c = mesh.face(f);
        for (int k = 0; k < 3; ++k) g.voronoi_raw[c[k]] += g.triangle[f].voronoi(k);
    }
    g.voronoi.resize(nv);
    g.clamped.resize(nv);
    for (int v = 0; v < nv; ++v) {
        g.clamped[v] = g.voronoi_raw[v] < g.area_floor;
        g.voronoi[v] = g.clamped[v] ? g.area_floor : g.voronoi_raw[v];
    }
    return g;
}

} // namespace lbo
