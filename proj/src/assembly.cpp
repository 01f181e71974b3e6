#include <lbo/assembly.hpp>
#include <lbo/sensitivity.hpp>

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace lbo {

OperatorParams OperatorParams::identity(const Mesh& mesh)
{
    OperatorParams p;
    p.edge_log_scale.assign(mesh.num_edges(), 0.0);
    p.face_aniso.assign(mesh.num_faces(), FaceAniso{});
    p.vertex_log_weight.assign(mesh.num_vertices(), 0.0);
    return p;
}

void OperatorParams::validate(const Mesh& mesh) const
{
    if (static_cast<int>(edge_log_scale.size()) != mesh.num_edges())
        throw std::invalid_argument("edge_log_scale has " + std::to_string(edge_log_scale.size()) +
                                    " entries, mesh has " + std::to_string(mesh.num_edges()) + " edges");
    if (static_cast<int>(face_aniso.size()) != mesh.num_faces())
        throw std::invalid_argument("face_aniso has " + std::to_string(face_aniso.size()) +
                                    " entries, mesh has " + std::to_string(mesh.num_faces()) + " faces");
    if (static_cast<int>(vertex_log_weight.size()) != mesh.num_vertices())
        throw std::invalid_argument("vertex_log_weight has " + std::to_string(vertex_log_weight.size()) +
                                    " entries, mesh has " + std::to_string(mesh.num_vertices()) + " vertices");
    for (size_t f = 0; f < face_aniso.size(); ++f) {
        const auto& a = face_aniso[f];
        if (!(a.a1 > 0.0) || !(a.a2 > 0.0))
            throw std::invalid_argument("face " + std::to_string(f) + ": conductivities must be positive");
        if (!std::isfinite(a.theta)) throw std::invalid_argument("face " + std::to_string(f) + ": theta is not finite");
    }
    for (double s : edge_log_scale)
        if (!std::isfinite(s)) throw std::invalid_argument("edge_log_scale contains a non-finite value");
    for (double s : vertex_log_weight)
        if (!std::isfinite(s)) throw std::invalid_argument("vertex_log_weight contains a non-finite value");
}

SparseSymmetric stiffness_from_edge_weights(const Mesh& mesh, std::span<const double> w)
{
    const int n = mesh.num_vertices();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n + 4 * mesh.num_edges());
    std::vector<double> diag(n, 0.0);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto [i, j] = mesh.edge(e);
        trip.emplace_back(i, j, w[e]);
        trip.emplace_back(j, i, w[e]);
        diag[i] -= w[e];
        diag[j] -= w[e];
    }
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, diag[i]);
    SparseSymmetric W(n, n);
    W.setFromTriplets(trip.begin(), trip.end());
    W.makeCompressed();
    return W;
}

std::vector<double> cotangent_edge_weights(const Mesh& mesh, const GeometryCache& geom)
{
    std::vector<double> w(mesh.num_edges(), 0.0);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto& fe = mesh.face_edges(f);
        const auto& t = geom.triangle[f];
        for (int c = 0; c < 3; ++c) w[fe[c]] += 0.5 * t.cot[c];
    }
    return w;
}

SparseSymmetric assemble_stiffness(const Mesh& mesh, const GeometryCache& geom)
{
    return stiffness_from_edge_weights(mesh, cotangent_edge_weights(mesh, geom));
}

Eigen::VectorXd assemble_mass(const GeometryCache& geom, std::span<const double> vertex_log_weight)
{
    const int n = static_cast<int>(geom.voronoi.size());
    Eigen::VectorXd A(n);
    for (int i = 0; i < n; ++i) A(i) = geom.voronoi[i];
    if (!vertex_log_weight.empty()) {
        if (static_cast<int>(vertex_log_weight.size()) != n)
            throw std::invalid_argument("vertex weight count does not match vertex count");
        for (int i = 0; i < n; ++i) A(i) *= std::exp(vertex_log_weight[i]);
    }
    return A;
}

Eigen::Matrix3d conductivity_tensor(const FaceFrame& frame, const FaceAniso& aniso)
{
    const double c = std::cos(aniso.theta), s = std::sin(aniso.theta);
    const Eigen::Vector3d u = c * frame.v_max + s * frame.v_min;
    const Eigen::Vector3d w = -s * frame.v_max + c * frame.v_min;
    return aniso.a1 * u * u.transpose() + aniso.a2 * w * w.transpose();
}

namespace {

using V2 = Eigen::Vector2d;

double cross2(const V2& a, const V2& b) { return a.x() * b.y() - a.y() * b.x(); }

Eigen::Vector3d lift(const V2& v) { return {v.x(), v.y(), 0.0}; }

} // namespace

AnisoFaceTerms aniso_face_terms(const Triangle& tri, double frame_angle, const FaceAniso& aniso)
{
    // w_c = e_kj^T H e_ki / (4T) with H = a2 I + (a1 - a2) u u^T, k = c.
    // The a2 I part is exactly cot_c / 2.
    AnisoFaceTerms out;
    const double psi = frame_angle + aniso.theta;
    const V2 u(std::cos(psi), std::sin(psi));
    const double da = aniso.a1 - aniso.a2;
    const double T = tri.area;

    const auto P = tri.layout();
    const auto dP = tri.layout_jacobian();
    const auto dcot = tri.cot_jacobian();
    const auto dT = tri.area_gradient();

    for (int c = 0; c < 3; ++c) {
        const int k = c, i = (c + 1) % 3, j = (c + 2) % 3;
        const V2 eki(P[i][0] - P[k][0], P[i][1] - P[k][1]);
        const V2 ekj(P[j][0] - P[k][0], P[j][1] - P[k][1]);
        const double ui = u.dot(eki), uj = u.dot(ekj);
        const double Q = uj * ui;
        const double q = Q / (4.0 * T);

        out.weight[c] = 0.5 * aniso.a2 * tri.cot[c] + da * q;
        out.d_a1[c] = q;
        out.d_a2[c] = 0.5 * tri.cot[c] - q;

        for (int b = 0; b < 3; ++b) {
            const V2 deki(dP[i][b][0] - dP[k][b][0], dP[i][b][1] - dP[k][b][1]);
            const V2 dekj(dP[j][b][0] - dP[k][b][0], dP[j][b][1] - dP[k][b][1]);
            const double dQ = u.dot(dekj) * ui + uj * u.dot(deki);
            const double dq = dQ / (4.0 * T) - Q * dT[b] / (4.0 * T * T);
            out.d_length[c][b] = 0.5 * aniso.a2 * dcot[c][b] + da * dq;
        }

        // d/dpsi (u.e) = u_perp . e = cross2(u, e); magnitudes from the cross
        // product, orientation from dot_sign on the counterclockwise chart.
        const double perp_j =
            -dot_sign(lift(eki), lift(ekj), lift(u)) * std::abs(cross2(u, ekj));
        const double perp_i = dot_sign(lift(ekj), lift(eki), lift(u)) * std::abs(cross2(u, eki));
        out.d_theta[c] = da * (perp_j * ui + uj * perp_i) / (4.0 * T);
    }
    return out;
}

std::vector<double> anisotropic_edge_weights(const Mesh& mesh, const GeometryCache& geom,
                                             std::span<const FaceFrame> frames, std::span<const FaceAniso> aniso)
{
    if (static_cast<int>(frames.size()) != mesh.num_faces() || static_cast<int>(aniso.size()) != mesh.num_faces())
        throw std::invalid_argument("anisotropic assembly needs one frame and one parameter set per face");
    std::vector<double> w(mesh.num_edges(), 0.0);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto terms = aniso_face_terms(geom.triangle[f], frames[f].angle, aniso[f]);
        const auto& fe = mesh.face_edges(f);
        for (int c = 0; c < 3; ++c) w[fe[c]] += terms.weight[c];
    }
    return w;
}

SparseSymmetric assemble_anisotropic_stiffness(const Mesh& mesh, const GeometryCache& geom,
                                               std::span<const FaceFrame> frames, std::span<const FaceAniso> aniso)
{
    return stiffness_from_edge_weights(mesh, anisotropic_edge_weights(mesh, geom, frames, aniso));
}

ModifiedOperator modified_operator(const Mesh& mesh, const OperatorParams& params, OperatorMode mode,
                                   std::span<const FaceFrame> frames, const OperatorOptions& options)
{
    params.validate(mesh);
    if (mode == OperatorMode::Anisotropic && static_cast<int>(frames.size()) != mesh.num_faces())
        throw std::invalid_argument("anisotropic mode needs one curvature frame per face");

    ModifiedOperator out;
    out.mode = mode;
    out.base_length = embedding_lengths(mesh);
    out.target_length.resize(out.base_length.size());
    for (size_t e = 0; e < out.base_length.size(); ++e)
        out.target_length[e] = out.base_length[e] * std::exp(params.edge_log_scale[e]);

    const double eps = options.metric_margin < 0.0 ? default_metric_margin(out.base_length) : options.metric_margin;
    out.fix = fix_metric(mesh, out.target_length, eps, options.metric_max_sweeps);
    out.geom = geometry(mesh, std::span<const double>(out.fix.lengths));

    out.ops.edge_weight = mode == OperatorMode::Isotropic
                              ? cotangent_edge_weights(mesh, out.geom)
                              : anisotropic_edge_weights(mesh, out.geom, frames, params.face_aniso);
    out.ops.W = stiffness_from_edge_weights(mesh, out.ops.edge_weight);
    out.ops.A = assemble_mass(out.geom, params.vertex_log_weight);
    return out;
}

void write_triplets(const SparseSymmetric& M, std::ostream& out)
{
    const auto old = out.precision(17);
    for (int col = 0; col < M.outerSize(); ++col)
        for (SparseSymmetric::InnerIterator it(M, col); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    out.precision(old);
}

void write_dense_csv(const SparseSymmetric& M, std::ostream& out)
{
    const Eigen::MatrixXd D(M);
    const auto old = out.precision(17);
    for (int r = 0; r < D.rows(); ++r) {
        for (int c = 0; c < D.cols(); ++c) out << (c ? "," : "") << D(r, c);
        out << '\n';
    }
    out.precision(old);
}

} // namespace lbo
