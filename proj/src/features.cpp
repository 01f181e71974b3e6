#include <lbo/features.hpp>

#include <cmath>
#include <numbers>

namespace lbo {

double shape_index(double k1, double k2, double flat_tol)
{
    if (k1 < k2) std::swap(k1, k2);
    const double sum = k1 + k2;
    const double diff = k1 - k2;
    if (diff <= flat_tol) {
        if (std::abs(sum) <= flat_tol) return 0.0;
        return sum > 0 ? -1.0 : 1.0;
    }
    return (2.0 / std::numbers::pi) * std::atan(sum / -diff);
}

double curvedness(double k1, double k2)
{
    return std::sqrt(0.5 * (k1 * k1 + k2 * k2));
}

IntrinsicFeatures intrinsic_features(const Mesh& mesh)
{
    return intrinsic_features(mesh, curvature_frames(mesh));
}

IntrinsicFeatures intrinsic_features(const Mesh& mesh, const CurvatureField& curvature)
{
    const int nv = mesh.num_vertices();
    const double flat_tol = 1e-8 / mesh.mean_edge_length();
    IntrinsicFeatures out;
    out.vertex_raw.kind = ElementKind::Vertex;
    out.vertex_raw.values.resize(nv, 4);
    for (int v = 0; v < nv; ++v) {
        const double k1 = curvature.vertex_curvatures[v](0);
        const double k2 = curvature.vertex_curvatures[v](1);
        out.vertex_raw.values.row(v) << 0.5 * (k1 + k2), k1 * k2, shape_index(k1, k2, flat_tol), curvedness(k1, k2);
    }

    out.vertex = out.vertex_raw;
    for (int c = 0; c < 4; ++c) {
        auto col = out.vertex.values.col(c);
        const double mean = col.mean();
        col.array() -= mean;
        const double var = col.squaredNorm() / nv;
        if (var > 0.0) col /= std::sqrt(var);
    }

    out.edge.kind = ElementKind::Edge;
    out.edge.values.resize(mesh.num_edges(), 4);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto& ed = mesh.edge(e);
        out.edge.values.row(e) = (out.vertex.values.row(ed[0]) + out.vertex.values.row(ed[1])) / 2.0;
    }
    out.face.kind = ElementKind::Face;
    out.face.values.resize(mesh.num_faces(), 4);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto c = mesh.face(f);
        out.face.values.row(f) =
            (out.vertex.values.row(c[0]) + out.vertex.values.row(c[1]) + out.vertex.values.row(c[2])) / 3.0;
    }
    return out;
}

Eigen::MatrixXd element_coordinates(const Mesh& mesh, ElementKind kind)
{
    const auto& P = mesh.positions();
    Eigen::MatrixXd X;
    switch (kind) {
    case ElementKind::Vertex:
        X = P;
        break;
    case ElementKind::Edge:
        X.resize(mesh.num_edges(), 3);
        for (int e = 0; e < mesh.num_edges(); ++e)
            X.row(e) = (P.row(mesh.edge(e)[0]) + P.row(mesh.edge(e)[1])) / 2.0;
        break;
    case ElementKind::Face:
        X.resize(mesh.num_faces(), 3);
        for (int f = 0; f < mesh.num_faces(); ++f) {
            const auto c = mesh.face(f);
            X.row(f) = (P.row(c[0]) + P.row(c[1]) + P.row(c[2])) / 3.0;
        }
        break;
    }
    return X;
}

} // namespace lbo
