#include <lbo/curvature.hpp>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>

namespace lbo {

namespace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Smallest rotation taking unit vector a onto unit vector b.
Mat3 rotation_between(const Vec3& a, const Vec3& b)
{
    return Eigen::Quaterniond::FromTwoVectors(a, b).toRotationMatrix();
}

Vec3 face_normal(const Mesh& mesh, int f)
{
    const auto c = mesh.face(f);
    return (mesh.position(c[1]) - mesh.position(c[0])).cross(mesh.position(c[2]) - mesh.position(c[0]));
}

struct Tangent2 {
    Vec3 t, b;
};

Tangent2 face_basis(const Mesh& mesh, int f, const Vec3& n)
{
    const auto c = mesh.face(f);
    const Vec3 t = (mesh.position(c[1]) - mesh.position(c[0])).normalized();
    return {t, n.cross(t)};
}

Tangent2 any_basis(const Vec3& n)
{
    const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 t = (seed - seed.dot(n) * n).normalized();
    return {t, n.cross(t)};
}

Eigen::Matrix2d restrict(const Mat3& S, const Tangent2& tb)
{
    Eigen::Matrix2d m;
    m(0, 0) = tb.t.dot(S * tb.t);
    m(0, 1) = m(1, 0) = 0.5 * (tb.t.dot(S * tb.b) + tb.b.dot(S * tb.t));
    m(1, 1) = tb.b.dot(S * tb.b);
    return m;
}

/// Flips v so that its first component with magnitude above 1e-12 is positive.
Vec3 canonical_sign(const Vec3& v)
{
    for (int k = 0; k < 3; ++k) {
        if (std::abs(v[k]) > 1e-12) return v[k] > 0 ? v : Vec3(-v);
    }
    return v;
}

FaceFrame make_frame(const Vec3& n, const Tangent2& tb, const Vec3& dir_max, double k_min, double k_max)
{
    FaceFrame fr;
    fr.normal = n;
    Vec3 vM = dir_max - dir_max.dot(n) * n;
    vM = canonical_sign(vM.normalized());
    fr.v_max = vM;
    fr.v_min = n.cross(vM).normalized();
    fr.kappa_max = k_max;
    fr.kappa_min = k_min;
    fr.angle = std::atan2(vM.dot(tb.b), vM.dot(tb.t));
    return fr;
}

} // namespace

CurvatureField curvature_frames(const Mesh& mesh)
{
    const int nv = mesh.num_vertices();
    const int nf = mesh.num_faces();
    CurvatureField out;

    for (int v = 0; v < nv; ++v) {
        if (mesh.vertex_faces()[v].empty()) {
            throw MeshError(MeshError::Kind::IsolatedVertex, v,
                            "vertex " + std::to_string(v) + " has no incident face");
        }
    }

    std::vector<Vec3> fnormal(nf);
    std::vector<double> farea(nf);
    for (int f = 0; f < nf; ++f) {
        const Vec3 n = face_normal(mesh, f);
        farea[f] = 0.5 * n.norm();
        fnormal[f] = n.normalized();
    }

    // Vertex normals with Max's weights (exact for vertices on a sphere).
    out.vertex_normals.assign(nv, Vec3::Zero());
    for (int f = 0; f < nf; ++f) {
        const auto c = mesh.face(f);
        for (int k = 0; k < 3; ++k) {
            const Vec3 e1 = mesh.position(c[(k + 1) % 3]) - mesh.position(c[k]);
            const Vec3 e2 = mesh.position(c[(k + 2) % 3]) - mesh.position(c[k]);
            out.vertex_normals[c[k]] += e1.cross(e2) / (e1.squaredNorm() * e2.squaredNorm());
        }
    }
    for (auto& n : out.vertex_normals) n.normalize();

    // Per-face second fundamental form from normal differences along edges,
    // least squares in the face's tangent basis.
    std::vector<Mat3> face_tensor(nf);
    for (int f = 0; f < nf; ++f) {
        const auto c = mesh.face(f);
        const Tangent2 tb = face_basis(mesh, f, fnormal[f]);
        Eigen::Matrix<double, 6, 3> A = Eigen::Matrix<double, 6, 3>::Zero();
        Eigen::Matrix<double, 6, 1> rhs;
        for (int k = 0; k < 3; ++k) {
            const int a = c[k], b = c[(k + 1) % 3];
            const Vec3 e = mesh.position(b) - mesh.position(a);
            const Vec3 dn = out.vertex_normals[b] - out.vertex_normals[a];
            const double eu = e.dot(tb.t), ev = e.dot(tb.b);
            A.row(2 * k) << eu, ev, 0.0;
            A.row(2 * k + 1) << 0.0, eu, ev;
            rhs(2 * k) = dn.dot(tb.t);
            rhs(2 * k + 1) = dn.dot(tb.b);
        }
        const Eigen::Vector3d lmn = A.colPivHouseholderQr().solve(rhs);
        face_tensor[f] = lmn(0) * tb.t * tb.t.transpose() +
                         lmn(1) * (tb.t * tb.b.transpose() + tb.b * tb.t.transpose()) +
                         lmn(2) * tb.b * tb.b.transpose();
    }

    // Area-weighted average of incident face tensors, rotated into each vertex's tangent plane.
    std::vector<Mat3> vertex_tensor(nv, Mat3::Zero());
    std::vector<double> weight(nv, 0.0);
    for (int f = 0; f < nf; ++f) {
        const auto c = mesh.face(f);
        for (int k = 0; k < 3; ++k) {
            const Mat3 R = rotation_between(fnormal[f], out.vertex_normals[c[k]]);
            vertex_tensor[c[k]] += farea[f] * R * face_tensor[f] * R.transpose();
            weight[c[k]] += farea[f];
        }
    }
    out.vertex_curvatures.resize(nv);
    for (int v = 0; v < nv; ++v) {
        vertex_tensor[v] /= weight[v];
        const Tangent2 tb = any_basis(out.vertex_normals[v]);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(restrict(vertex_tensor[v], tb));
        out.vertex_curvatures[v] = Eigen::Vector2d(es.eigenvalues()(1), es.eigenvalues()(0));
    }

    const double umbilic_tol = 1e-8 / mesh.mean_edge_length();
    out.faces.resize(nf);
    for (int f = 0; f < nf; ++f) {
        const auto c = mesh.face(f);
        Mat3 S = Mat3::Zero();
        for (int k = 0; k < 3; ++k) {
            const Mat3 R = rotation_between(out.vertex_normals[c[k]], fnormal[f]);
            S += R * vertex_tensor[c[k]] * R.transpose() / 3.0;
        }
        const Tangent2 tb = face_basis(mesh, f, fnormal[f]);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(restrict(S, tb));
        const Eigen::Vector2d kap = es.eigenvalues(); // ascending
        const Eigen::Matrix2d dirs = es.eigenvectors();
        const int imax = std::abs(kap(1)) >= std::abs(kap(0)) ? 1 : 0;
        const int imin = 1 - imax;
        Vec3 dir_max;
        if (std::abs(kap(1) - kap(0)) <= umbilic_tol) {
            dir_max = any_basis(fnormal[f]).t;
        } else {
            dir_max = dirs(0, imax) * tb.t + dirs(1, imax) * tb.b;
        }
        out.faces[f] = make_frame(fnormal[f], tb, dir_max, kap(imin), kap(imax));
    }
    return out;
}

} // namespace lbo
