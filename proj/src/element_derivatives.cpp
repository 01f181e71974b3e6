#include <lbo/sensitivity.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace lbo {

SparseSymmetric ElementDerivative::stiffness(const Mesh& mesh) const
{
    std::vector<double> w(mesh.num_edges(), 0.0);
    for (const auto& [e, v] : dW) w[e] += v;
    return stiffness_from_edge_weights(mesh, w);
}

Eigen::VectorXd ElementDerivative::mass(int num_vertices) const
{
    Eigen::VectorXd a = Eigen::VectorXd::Zero(num_vertices);
    for (const auto& [v, d] : dA) a(v) += d;
    return a;
}

double ElementDerivative::stiffness_form(const Mesh& mesh, const Eigen::VectorXd& x, const Eigen::VectorXd& y) const
{
    double s = 0.0;
    for (const auto& [e, w] : dW) {
        const auto [i, j] = mesh.edge(e);
        s += w * (x(i) - x(j)) * (y(i) - y(j));
    }
    return s;
}

Eigen::VectorXd ElementDerivative::apply_stiffness(const Mesh& mesh, const Eigen::VectorXd& x) const
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
    for (const auto& [e, w] : dW) {
        const auto [i, j] = mesh.edge(e);
        const double d = w * (x(i) - x(j));
        out(i) += d;
        out(j) -= d;
    }
    return out;
}

namespace {

void merge(std::vector<std::pair<int, double>>& entries)
{
    std::map<int, double> acc;
    for (const auto& [k, v] : entries) acc[k] += v;
    entries.clear();
    for (const auto& [k, v] : acc)
        if (v != 0.0) entries.emplace_back(k, v);
}

int local_index(const Mesh& mesh, int face, int edge)
{
    const auto& fe = mesh.face_edges(face);
    return static_cast<int>(std::find(fe.begin(), fe.end(), edge) - fe.begin());
}

using Jac3 = std::array<std::array<double, 3>, 3>;

Jac3 iso_weight_jacobian(const Triangle& t)
{
    Jac3 J = t.cot_jacobian();
    for (auto& row : J)
        for (double& v : row) v *= 0.5;
    return J;
}

void check_frames(const Mesh& mesh, std::span<const FaceFrame> frames, std::span<const FaceAniso> aniso)
{
    if (static_cast<int>(frames.size()) != mesh.num_faces() || static_cast<int>(aniso.size()) != mesh.num_faces())
        throw std::invalid_argument("anisotropic derivatives need one frame and one parameter set per face");
}

/// Adds d/d(length of `edge`) of the edge weights, given a per-face weight Jacobian.
template <class FaceJacobian>
void add_metric_stiffness(const Mesh& mesh, int edge, double scale, ElementDerivative& d, FaceJacobian&& jac)
{
    for (int f : mesh.edge_faces(edge)) {
        if (f == Mesh::kNone) continue;
        const int b = local_index(mesh, f, edge);
        const Jac3 J = jac(f);
        const auto& fe = mesh.face_edges(f);
        for (int c = 0; c < 3; ++c) d.dW.emplace_back(fe[c], scale * J[c][b]);
    }
}

void add_metric_mass(const Mesh& mesh, const GeometryCache& geom, int edge, double scale,
                     std::span<const double> vertex_log_weight, ElementDerivative& d)
{
    for (int f : mesh.edge_faces(edge)) {
        if (f == Mesh::kNone) continue;
        const int b = local_index(mesh, f, edge);
        const auto J = geom.triangle[f].voronoi_jacobian();
        const auto corners = mesh.face(f);
        for (int c = 0; c < 3; ++c) {
            const int v = corners[c];
            if (geom.clamped[v]) {
                d.clamped = true;
                continue;
            }
            const double w = vertex_log_weight.empty() ? 1.0 : std::exp(vertex_log_weight[v]);
            d.dA.emplace_back(v, scale * w * J[c][b]);
        }
    }
}

} // namespace

void ElementDerivative::compress()
{
    merge(dW);
    merge(dA);
}

int dot_sign(const Eigen::Vector3d& e_ki, const Eigen::Vector3d& e_kj, const Eigen::Vector3d& v)
{
    const double p = e_ki.cross(e_kj).dot(e_kj.cross(v));
    return p < 0.0 ? -1 : 1;
}

ElementDerivative mass_metric_derivative(const Mesh& mesh, const GeometryCache& geom, int edge,
                                         std::span<const double> vertex_log_weight)
{
    ElementDerivative d;
    add_metric_mass(mesh, geom, edge, 1.0, vertex_log_weight, d);
    d.compress();
    return d;
}

ElementDerivative stiffness_metric_derivative_iso(const Mesh& mesh, const GeometryCache& geom, int edge)
{
    ElementDerivative d;
    add_metric_stiffness(mesh, edge, 1.0, d, [&](int f) { return iso_weight_jacobian(geom.triangle[f]); });
    d.compress();
    return d;
}

ElementDerivative stiffness_metric_derivative_aniso(const Mesh& mesh, const GeometryCache& geom,
                                                    std::span<const FaceFrame> frames,
                                                    std::span<const FaceAniso> aniso, int edge)
{
    check_frames(mesh, frames, aniso);
    ElementDerivative d;
    add_metric_stiffness(mesh, edge, 1.0, d, [&](int f) {
        return aniso_face_terms(geom.triangle[f], frames[f].angle, aniso[f]).d_length;
    });
    d.compress();
    return d;
}

ElementDerivative stiffness_aniso_derivative(const Mesh& mesh, const GeometryCache& geom,
                                             std::span<const FaceFrame> frames, std::span<const FaceAniso> aniso,
                                             int face, ParamFamily which)
{
    check_frames(mesh, frames, aniso);
    if (which != ParamFamily::A1 && which != ParamFamily::A2)
        throw std::invalid_argument("stiffness_aniso_derivative takes A1 or A2");
    const auto t = aniso_face_terms(geom.triangle[face], frames[face].angle, aniso[face]);
    const auto& src = which == ParamFamily::A1 ? t.d_a1 : t.d_a2;
    ElementDerivative d;
    const auto& fe = mesh.face_edges(face);
    for (int c = 0; c < 3; ++c) d.dW.emplace_back(fe[c], src[c]);
    d.compress();
    return d;
}

ElementDerivative stiffness_rotation_derivative(const Mesh& mesh, const GeometryCache& geom,
                                                std::span<const FaceFrame> frames,
                                                std::span<const FaceAniso> aniso, int face)
{
    check_frames(mesh, frames, aniso);
    const auto t = aniso_face_terms(geom.triangle[face], frames[face].angle, aniso[face]);
    ElementDerivative d;
    const auto& fe = mesh.face_edges(face);
    for (int c = 0; c < 3; ++c) d.dW.emplace_back(fe[c], t.d_theta[c]);
    d.compress();
    return d;
}

ElementDerivative mass_weight_derivative(const Eigen::VectorXd& A, int vertex)
{
    ElementDerivative d;
    d.dA.emplace_back(vertex, A(vertex));
    return d;
}

ElementDerivative parameter_derivative(const Mesh& mesh, const ModifiedOperator& op, const OperatorParams& params,
                                       std::span<const FaceFrame> frames, ParamId id, bool straight_through)
{
    const bool aniso = op.mode == OperatorMode::Anisotropic;
    switch (id.family) {
    case ParamFamily::EdgeScale: {
        std::vector<double> tangent(mesh.num_edges(), 0.0);
        tangent[id.index] = op.target_length[id.index];
        const auto dlen = straight_through ? tangent : fix_metric_forward(op.fix, tangent);
        ElementDerivative d;
        d.projected = op.fix.edge_modified[id.index] != 0;
        for (int e = 0; e < mesh.num_edges(); ++e) {
            if (dlen[e] == 0.0) continue;
            if (aniso) {
                add_metric_stiffness(mesh, e, dlen[e], d, [&](int f) {
                    return aniso_face_terms(op.geom.triangle[f], frames[f].angle, params.face_aniso[f]).d_length;
                });
            } else {
                add_metric_stiffness(mesh, e, dlen[e], d, [&](int f) { return iso_weight_jacobian(op.geom.triangle[f]); });
            }
            add_metric_mass(mesh, op.geom, e, dlen[e], params.vertex_log_weight, d);
        }
        d.compress();
        return d;
    }
    case ParamFamily::A1:
    case ParamFamily::A2:
        if (!aniso) return {};
        return stiffness_aniso_derivative(mesh, op.geom, frames, params.face_aniso, id.index, id.family);
    case ParamFamily::Theta:
        if (!aniso) return {};
        return stiffness_rotation_derivative(mesh, op.geom, frames, params.face_aniso, id.index);
    case ParamFamily::VertexWeight:
        return mass_weight_derivative(op.ops.A, id.index);
    }
    return {};
}

ParamGradient ParamGradient::zeros(const Mesh& mesh)
{
    ParamGradient g;
    g.edge_log_scale.assign(mesh.num_edges(), 0.0);
    g.a1.assign(mesh.num_faces(), 0.0);
    g.a2.assign(mesh.num_faces(), 0.0);
    g.theta.assign(mesh.num_faces(), 0.0);
    g.vertex_log_weight.assign(mesh.num_vertices(), 0.0);
    return g;
}

ParamGradient operator_pullback(const Mesh& mesh, const ModifiedOperator& op, const OperatorParams& params,
                                std::span<const FaceFrame> frames, const OperatorCotangent& ct, bool straight_through)
{
    const bool aniso = op.mode == OperatorMode::Anisotropic;
    if (aniso) check_frames(mesh, frames, params.face_aniso);
    ParamGradient g = ParamGradient::zeros(mesh);
    std::vector<double> g_len(mesh.num_edges(), 0.0);

    for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto& fe = mesh.face_edges(f);
        const auto& tri = op.geom.triangle[f];
        Jac3 J;
        if (aniso) {
            const auto t = aniso_face_terms(tri, frames[f].angle, params.face_aniso[f]);
            J = t.d_length;
            for (int c = 0; c < 3; ++c) {
                const double ew = ct.edge_weight[fe[c]];
                g.a1[f] += ew * t.d_a1[c];
                g.a2[f] += ew * t.d_a2[c];
                g.theta[f] += ew * t.d_theta[c];
            }
        } else {
            J = iso_weight_jacobian(tri);
        }
        for (int c = 0; c < 3; ++c)
            for (int b = 0; b < 3; ++b) g_len[fe[b]] += ct.edge_weight[fe[c]] * J[c][b];

        const auto VJ = tri.voronoi_jacobian();
        const auto corners = mesh.face(f);
        for (int c = 0; c < 3; ++c) {
            const int v = corners[c];
            if (op.geom.clamped[v]) continue;
            const double s = ct.mass(v) * std::exp(params.vertex_log_weight[v]);
            for (int b = 0; b < 3; ++b) g_len[fe[b]] += s * VJ[c][b];
        }
    }

    for (int v = 0; v < mesh.num_vertices(); ++v) g.vertex_log_weight[v] = ct.mass(v) * op.ops.A(v);

    const auto g_target = straight_through ? g_len : fix_metric_backward(op.fix, g_len);
    for (int e = 0; e < mesh.num_edges(); ++e) g.edge_log_scale[e] = g_target[e] * op.target_length[e];
    return g;
}

void clip_gradients(ParamGradient& g, double max_norm)
{
    if (!(max_norm > 0.0)) throw std::invalid_argument("clip threshold must be positive");
    for (auto* family : {&g.edge_log_scale, &g.a1, &g.a2, &g.theta, &g.vertex_log_weight}) {
        double sq = 0.0;
        for (double x : *family) sq += x * x;
        const double norm = std::sqrt(sq);
        if (norm > max_norm) {
            const double s = max_norm / norm;
            for (double& x : *family) x *= s;
        }
    }
}

} // namespace lbo
